//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs every criterion by default; `cargo test --test acceptance -- 1,4,10`
//! selects a subset. Criterion 7 is a known failure (the step geometry
//! converges faster than its expected band); its plane-wave rejection part
//! must still hold.

use pmlbie::cli::acceptance::{line, run_criterion, Status, CRITERIA};
use pmlbie::quadrature::ALPERT6_TABLE;
use std::path::PathBuf;
use std::process::ExitCode;

const KNOWN_FAILURES: [u32; 1] = [7];

/// `(mantissa digits, decimal exponent)` of a number written either as
/// `4.00488 41949 26570 E-03` or `4.004884194926570e-3`.
fn normalize(s: &str) -> Option<(String, i32)> {
    let s: String = s.chars().filter(|c| !c.is_whitespace() && *c != '$').collect();
    let (m, e) = s.split_once(['e', 'E'])?;
    let (int, frac) = m.split_once('.')?;
    Some((format!("{int}{frac}"), e.parse().ok()?))
}

/// Rows `k & δ_k & γ_k` of the sixth-order rule from the LaTeX source.
fn published_rows(text: &str) -> Vec<(String, String)> {
    let Some(start) = text.find("\\label{table:alpt:6th}") else { return vec![] };
    let Some(begin) = text[..start].rfind("\\begin{table}") else { return vec![] };
    text[begin..start]
        .lines()
        .filter_map(|l| {
            let cells: Vec<&str> = l.split('&').map(str::trim).collect();
            if cells.len() != 3 || cells[0].parse::<u32>().is_err() {
                return None;
            }
            let last = cells[2].trim_end_matches("\\hline").trim().trim_end_matches("\\\\").trim();
            Some((cells[1].to_string(), last.to_string()))
        })
        .collect()
}

/// Compares the tabulated rule digit for digit against the published table.
fn table_transcription() -> (Status, String) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../paper.md");
    let Ok(text) = std::fs::read_to_string(&path) else {
        return (Status::Incomplete, format!("{} not found; skipped", path.display()));
    };
    let rows = published_rows(&text);
    if rows.len() != ALPERT6_TABLE.len() {
        return (Status::Fail, format!("found {} published rows, expected {}", rows.len(), ALPERT6_TABLE.len()));
    }
    let mut bad = Vec::new();
    for (k, ((pd, pg), (d, g))) in rows.iter().zip(ALPERT6_TABLE.iter()).enumerate() {
        for (name, published, ours) in [("δ", pd.as_str(), *d), ("γ", pg.as_str(), *g)] {
            let (a, b) = (normalize(published), normalize(ours));
            if a.is_none() || a != b {
                bad.push(format!("{name}_{} published {published} vs {ours}", k + 1));
            }
        }
    }
    if bad.is_empty() {
        (Status::Pass, "10 values match digit for digit".into())
    } else {
        (Status::Fail, bad.join("; "))
    }
}

fn main() -> ExitCode {
    let ids: Vec<u32> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .flat_map(|a| a.split(',').filter_map(|s| s.trim().parse().ok()).collect::<Vec<_>>())
        .collect();
    let ids: Vec<u32> = if ids.is_empty() { CRITERIA.iter().map(|c| c.0).collect() } else { ids };

    let mut unexpected = Vec::new();
    let mut passed = 0;
    for &id in &ids {
        let o = run_criterion(id);
        println!("{}", line(&o));
        match o.status {
            Status::Pass => passed += 1,
            Status::Fail if KNOWN_FAILURES.contains(&id) => {
                let rejected = o.detail.contains("fails in this case");
                println!(
                    "{}  7b plane-wave incidence on the step is rejected with a diagnostic",
                    if rejected { "PASS" } else { "FAIL" }
                );
                if !rejected {
                    unexpected.push(id);
                }
            }
            _ => unexpected.push(id),
        }
        if id == 10 {
            let (status, detail) = table_transcription();
            println!("{} 10b Alpert table transcription: {detail}", status.label());
            if status == Status::Fail {
                unexpected.push(id);
            }
        }
    }
    println!("passed = {passed}/{}", ids.len());
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
