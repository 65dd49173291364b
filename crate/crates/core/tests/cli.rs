use pmlbie::cli::config::{ReferenceKind, RunConfig};
use pmlbie::cli::presets::{preset, PRESETS};
use pmlbie::cli::{run, ConfigError, EXIT_CONFIG, EXIT_OK};
use std::path::Path;

fn run_args(args: &[&str]) -> i32 {
    run(std::iter::once("pmlbie").chain(args.iter().copied()))
}

/// The flat preset shrunk so a solve takes a fraction of a second.
fn small_flat() -> RunConfig {
    let mut cfg = preset("flat").unwrap();
    cfg.discretization.interface_counts = vec![50, 50];
    if let Some(g) = cfg.output.grid.as_mut() {
        g.n1 = 11;
        g.n2 = 11;
    }
    cfg
}

fn write_config(dir: &Path, cfg: &RunConfig) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, cfg.to_toml().unwrap()).unwrap();
    path.display().to_string()
}

#[test]
fn presets_have_the_expected_shapes() {
    let segs = [("flat", 2), ("semicircles", 4), ("obstacle", 21), ("step", 3)];
    for (name, n) in segs {
        let cfg = preset(name).unwrap();
        assert_eq!(cfg.geometry.interface.len(), n, "{name}");
        assert_eq!(cfg.discretization.interface_counts.len(), n, "{name}");
        assert_eq!(cfg.discretization.alpert_order, 6);
        cfg.validate().unwrap();
    }
    assert_eq!(PRESETS.len(), segs.len());
    let ob = preset("obstacle").unwrap();
    assert_eq!(ob.medium.n_ob, Some(2.0));
    assert_eq!(ob.geometry.obstacle.as_ref().map(Vec::len), Some(3));
    assert!(preset("nonesuch").is_err());
}

#[test]
fn configurations_round_trip_through_toml() {
    for name in PRESETS {
        let cfg = preset(name).unwrap();
        let text = cfg.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg, "{name}");
    }
}

#[test]
fn unknown_fields_are_rejected() {
    let text = preset("flat").unwrap().to_toml().unwrap().replace("[pml]\n", "[pml]\nsigma0 = 3.0\n");
    assert!(matches!(RunConfig::from_toml(&text), Err(ConfigError::Parse(_))));
}

#[test]
fn unsupported_quadrature_orders_are_rejected() {
    let mut cfg = preset("flat").unwrap();
    cfg.discretization.alpert_order = 10;
    let text = cfg.to_toml().unwrap();
    assert!(matches!(RunConfig::from_toml(&text), Err(ConfigError::Invalid(_))));
}

#[test]
fn oracle_reference_requires_a_flat_interface() {
    let mut cfg = preset("semicircles").unwrap();
    cfg.incidence.retain(|i| i.label().starts_with("point"));
    cfg.convergence.as_mut().unwrap().reference = ReferenceKind::Oracle;
    let err = RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap_err();
    assert!(err.to_string().contains("self"), "{err}");
}

#[test]
fn plane_waves_on_the_step_are_a_configuration_error() {
    let mut cfg = preset("step").unwrap();
    cfg.incidence = vec![pmlbie::cli::config::IncidenceConfig::Plane { alpha: 1.0 }];
    let err = RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap_err();
    assert!(err.to_string().contains("fails in this case"), "{err}");
}

#[test]
fn solve_writes_outputs_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), &small_flat());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let code = run_args(&["solve", "--config", &config, "--out", out.to_str().unwrap(), "--threads", "1"]);
        assert_eq!(code, EXIT_OK);
    }
    for file in ["densities_0.csv", "field_0.csv", "diagnostics.txt", "effective_config.toml"] {
        let x = std::fs::read(a.join(file)).unwrap();
        let y = std::fs::read(b.join(file)).unwrap();
        assert!(!x.is_empty(), "{file}");
        assert_eq!(x, y, "{file} differs between runs");
    }
    let header = std::fs::read_to_string(a.join("densities_0.csv")).unwrap();
    assert!(header.starts_with("node,x1,x2,re_u1,im_u1,re_phi1,im_phi1,re_u2,im_u2,re_phi2,im_phi2"));
    assert_eq!(header.lines().count(), 101);

    // the effective configuration reproduces the run
    let effective = a.join("effective_config.toml");
    assert_eq!(RunConfig::load(&effective).unwrap(), small_flat());
    let c = tmp.path().join("c");
    let code = run_args(&["solve", "--config", effective.to_str().unwrap(), "--out", c.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(std::fs::read(a.join("densities_0.csv")).unwrap(), std::fs::read(c.join("densities_0.csv")).unwrap());
}

#[test]
fn convergence_verb_writes_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_flat();
    let conv = cfg.convergence.as_mut().unwrap();
    conv.n_sweep.truncate(3);
    let config = write_config(tmp.path(), &cfg);
    let out = tmp.path().join("conv");
    assert_eq!(run_args(&["convergence", "--config", &config, "--out", out.to_str().unwrap(), "--norm", "l2"]), EXIT_OK);
    let csv = std::fs::read_to_string(out.join("convergence_0.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4, "{csv}");
    assert!(out.join("convergence_0.txt").exists());
}

#[test]
fn configuration_problems_exit_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let out = out.to_str().unwrap();
    assert_eq!(run_args(&["solve", "--config", "/nonexistent/run.toml", "--out", out]), EXIT_CONFIG);
    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "name = 3").unwrap();
    assert_eq!(run_args(&["solve", "--config", bad.to_str().unwrap(), "--out", out]), EXIT_CONFIG);
    assert_eq!(run_args(&["solve", "--preset", "nonesuch", "--out", out]), EXIT_CONFIG);
    assert_eq!(run_args(&["solve"]), EXIT_CONFIG);
    assert_eq!(run_args(&["frobnicate"]), EXIT_CONFIG);
    assert_eq!(run_args(&["--help"]), EXIT_OK);
}

#[test]
fn validate_runs_selected_criteria() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("v");
    assert_eq!(run_args(&["validate", "--only", "8,10", "--out", out.to_str().unwrap()]), EXIT_OK);
    let report = std::fs::read_to_string(out.join("acceptance.txt")).unwrap();
    assert!(report.contains("PASS  8") && report.contains("PASS 10"), "{report}");
    assert!(report.contains("passed = 2/2"));
}
