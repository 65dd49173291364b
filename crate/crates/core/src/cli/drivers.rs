//! Experiment drivers: single solves with CSV output, N- and S-sweeps.

use super::config::{Counts, Norm, ReferenceKind, RunConfig};
use super::ConfigError;
use crate::geometry::{LocalPos, Point};
use crate::oracle::{layered_green, OracleError};
use crate::quadrature::{loglog_slope, trig_interp};
use crate::solver::{reference_field, Branch, Incidence, Prepared, SolveResult, SolverError};
use crate::{Mesh, C64};
use log::info;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DriverError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("i/o error on {0}: {1}")]
    Io(String, String),
}

/// Physical nodes of a coarse mesh on the interface, used as comparison points.
#[derive(Debug, Clone)]
pub struct ReferenceSet {
    pub points: Vec<Point<f64>>,
    locals: Vec<(usize, LocalPos<f64>)>,
}

impl ReferenceSet {
    pub fn new(cfg: &RunConfig, counts: &[usize]) -> Result<Self, ConfigError> {
        let mesh = cfg.interface_mesh(counts)?;
        let profile = cfg.profile(cfg.pml.s)?;
        let mut points = Vec::new();
        let mut locals = Vec::new();
        for q in &mesh.nodes {
            if profile.is_physical(q.x) {
                points.push(q.x);
                locals.push((q.segment, q.local));
            }
        }
        Ok(Self { points, locals })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `u^tot` at the set from a solution on `mesh`: the scattered trace by
    /// trigonometric interpolation in the mesh parameter plus the exact
    /// upper reference field.
    pub fn sample(&self, mesh: &Mesh, prepared: &Prepared<'_>, result: &SolveResult) -> Result<Vec<C64>, DriverError> {
        let medium = &prepared.problem.medium;
        self.points
            .iter()
            .zip(&self.locals)
            .map(|(x, &(seg, local))| {
                let u = mesh.param_of_local(seg, local).u();
                let us = trig_interp(&result.u1, u).map_err(|e| ConfigError::Invalid(e.to_string()))?;
                let xt = [C64::new(x[0], 0.0), C64::new(x[1], 0.0)];
                let u0 = reference_field(&xt, medium, &result.incidence, Branch::Upper)?.0;
                Ok(us + u0)
            })
            .collect()
    }
}

/// Relative error of `a` against `b`.
pub fn relative_error(a: &[C64], b: &[C64], norm: Norm) -> f64 {
    match norm {
        Norm::Sup => {
            let num = a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            let den = b.iter().map(|y| y.norm()).fold(0.0, f64::max);
            num / den
        }
        Norm::L2 => {
            let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
            let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
            (num / den).sqrt()
        }
    }
}

/// Longest prefix over which the error keeps falling at least like
/// `x^{-min_order}`; the rest is treated as a plateau. Returns inclusive
/// index bounds.
pub fn decaying_window(points: &[(f64, f64)], min_order: f64) -> [usize; 2] {
    let mut end = 0;
    for i in 1..points.len() {
        let (x0, e0) = points[i - 1];
        let (x1, e1) = points[i];
        if e1 <= e0 * (x0 / x1).powf(min_order) {
            end = i;
        } else {
            break;
        }
    }
    let min_end = usize::from(points.len() > 1);
    [0, end.max(min_end)]
}

/// True when the errors fall strictly until their minimum and stay within a
/// factor 10 of it afterwards (a plateau, not a blow-up).
pub fn monotone_until_plateau(errors: &[f64]) -> bool {
    let Some((imin, &emin)) = errors.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)) else {
        return false;
    };
    errors[..=imin].windows(2).all(|w| w[1] < w[0]) && errors[imin..].iter().all(|&e| e <= 10.0 * emin)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepVariable {
    N,
    S,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub incidence: String,
    pub variable: SweepVariable,
    pub reference: String,
    pub norm: Norm,
    /// `(N or S, error)`.
    pub points: Vec<(f64, f64)>,
    pub window: [usize; 2],
    /// Log-log slope over the window.
    pub slope: f64,
    /// Log-log slope over all points.
    pub slope_all: f64,
    pub monotone_until_plateau: bool,
}

impl ConvergenceReport {
    fn new(incidence: String, variable: SweepVariable, reference: String, norm: Norm, points: Vec<(f64, f64)>, window: Option<[usize; 2]>) -> Self {
        let window = window.unwrap_or_else(|| decaying_window(&points, 2.0));
        let end = window[1].min(points.len().saturating_sub(1));
        let slope = loglog_slope(&points[window[0]..=end]);
        let slope_all = loglog_slope(&points);
        let errors: Vec<f64> = points.iter().map(|p| p.1).collect();
        Self { incidence, variable, reference, norm, window, slope, slope_all, monotone_until_plateau: monotone_until_plateau(&errors), points }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(match self.variable {
            SweepVariable::N => "n,error\n",
            SweepVariable::S => "s,error\n",
        });
        for (x, e) in &self.points {
            let _ = writeln!(s, "{x},{e:.6e}");
        }
        s
    }

    pub fn summary(&self) -> String {
        format!(
            "incidence = {}\nvariable = {:?}\nreference = {}\nnorm = {:?}\nwindow = {:?}\nslope = {:.4}\nslope_all = {:.4}\nmonotone_until_plateau = {}\n",
            self.incidence, self.variable, self.reference, self.norm, self.window, self.slope, self.slope_all, self.monotone_until_plateau
        )
    }
}

fn oracle_values(cfg: &RunConfig, set: &ReferenceSet, inc: &Incidence) -> Result<Vec<C64>, DriverError> {
    cfg.check_oracle_applicable()?;
    let Incidence::PointSource { x: src } = *inc else {
        unreachable!("checked by check_oracle_applicable")
    };
    let medium = cfg.medium()?;
    set.points.par_iter().map(|x| Ok(layered_green(*x, src, &medium)?)).collect()
}

/// Solves every incidence at one discretization and samples `u^tot` on the
/// reference set.
pub fn sampled_run(cfg: &RunConfig, counts: &Counts, s: f64, set: &ReferenceSet) -> Result<Vec<Vec<C64>>, DriverError> {
    let t = std::time::Instant::now();
    let problem = cfg.problem(counts, s)?;
    let prepared = problem.prepare()?;
    let mut out = Vec::new();
    for inc in cfg.incidences() {
        let r = prepared.solve(&inc)?;
        out.push(set.sample(&problem.interface, &prepared, &r)?);
    }
    info!("N = {} (interface {}), S = {s}: {:.2?}", counts.total(), counts.interface_total(), t.elapsed());
    Ok(out)
}

/// N-sweep; the reference is the oracle or the last sweep entry.
pub fn convergence(cfg: &RunConfig, norm: Option<Norm>) -> Result<Vec<ConvergenceReport>, DriverError> {
    let conv = cfg.convergence.as_ref().ok_or_else(|| ConfigError::Invalid("missing [convergence] block".into()))?;
    if conv.n_sweep.is_empty() {
        return Err(ConfigError::Invalid("convergence.n_sweep is empty".into()).into());
    }
    let norm = norm.unwrap_or(conv.norm);
    let set = ReferenceSet::new(cfg, &conv.reference_set)?;
    let incs = cfg.incidences();
    let mut runs: Vec<Vec<Vec<C64>>> = Vec::new();
    for counts in &conv.n_sweep {
        runs.push(sampled_run(cfg, counts, cfg.pml.s, &set)?);
    }
    let (refs, label, sweep_len): (Vec<Vec<C64>>, String, usize) = match conv.reference {
        ReferenceKind::Oracle => {
            let r = incs.iter().map(|inc| oracle_values(cfg, &set, inc)).collect::<Result<_, _>>()?;
            (r, "layered Green's function".into(), conv.n_sweep.len())
        }
        ReferenceKind::SelfRef => {
            if conv.n_sweep.len() < 2 {
                return Err(ConfigError::Invalid("self reference needs at least two sweep entries".into()).into());
            }
            let last = conv.n_sweep.last().expect("nonempty");
            (runs.pop().expect("nonempty"), format!("self, N = {}", last.total()), conv.n_sweep.len() - 1)
        }
    };
    Ok(incs
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let points = (0..sweep_len)
                .map(|j| (conv.n_sweep[j].interface_total() as f64, relative_error(&runs[j][i], &refs[i], norm)))
                .collect();
            ConvergenceReport::new(cfg.incidence[i].label(), SweepVariable::N, label.clone(), norm, points, conv.window)
        })
        .collect())
}

/// S-sweep at the main counts; the reference is the oracle or the largest S.
pub fn pml_sweep(cfg: &RunConfig, norm: Option<Norm>) -> Result<Vec<ConvergenceReport>, DriverError> {
    let conv = cfg.convergence.as_ref().ok_or_else(|| ConfigError::Invalid("missing [convergence] block".into()))?;
    if conv.s_sweep.is_empty() {
        return Err(ConfigError::Invalid("convergence.s_sweep is empty".into()).into());
    }
    let norm = norm.unwrap_or(conv.norm);
    let set = ReferenceSet::new(cfg, &conv.reference_set)?;
    let incs = cfg.incidences();
    let counts = cfg.counts();
    let mut runs = Vec::new();
    for &s in &conv.s_sweep {
        runs.push(sampled_run(cfg, &counts, s, &set)?);
    }
    let (refs, label, sweep_len): (Vec<Vec<C64>>, String, usize) = match conv.reference {
        ReferenceKind::Oracle => {
            let r = incs.iter().map(|inc| oracle_values(cfg, &set, inc)).collect::<Result<_, _>>()?;
            (r, "layered Green's function".into(), conv.s_sweep.len())
        }
        ReferenceKind::SelfRef => {
            if conv.s_sweep.len() < 2 {
                return Err(ConfigError::Invalid("self reference needs at least two sweep entries".into()).into());
            }
            (runs.pop().expect("nonempty"), format!("self, S = {}", conv.s_sweep.last().expect("nonempty")), conv.s_sweep.len() - 1)
        }
    };
    Ok(incs
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let points = (0..sweep_len).map(|j| (conv.s_sweep[j], relative_error(&runs[j][i], &refs[i], norm))).collect();
            ConvergenceReport::new(cfg.incidence[i].label(), SweepVariable::S, label.clone(), norm, points, Some([0, sweep_len - 1]))
        })
        .collect())
}

/// One row of the field grid; `None` marks a skipped point.
pub type GridRow = (f64, f64, Option<C64>);

pub struct SolveOutput {
    pub results: Vec<SolveResult>,
    pub grids: Vec<Vec<GridRow>>,
    pub diagnostics: String,
}

/// Field on the configured grid; points in the PML, near a boundary or at
/// the source are skipped.
pub fn field_grid(prepared: &Prepared<'_>, result: &SolveResult, cfg: &RunConfig) -> Result<Vec<GridRow>, DriverError> {
    let Some(g) = &cfg.output.grid else {
        return Ok(Vec::new());
    };
    let sc = cfg.scale();
    let coord = |lo: f64, hi: f64, n: usize, i: usize| if n == 1 { lo * sc } else { (lo + (hi - lo) * i as f64 / (n - 1) as f64) * sc };
    let pts: Vec<(f64, f64)> = (0..g.n2).flat_map(|j| (0..g.n1).map(move |i| (i, j))).map(|(i, j)| (coord(g.x1[0], g.x1[1], g.n1, i), coord(g.x2[0], g.x2[1], g.n2, j))).collect();
    let src = match result.incidence {
        Incidence::PointSource { x } => Some(x),
        Incidence::PlaneWave { .. } => None,
    };
    pts.par_iter()
        .map(|&(x1, x2)| {
            if let Some(s) = src {
                if (x1 - s[0]).hypot(x2 - s[1]) < 1e-12 {
                    return Ok((x1, x2, None));
                }
            }
            match prepared.evaluate_field(result, [x1, x2]) {
                Ok(v) => Ok((x1, x2, Some(v))),
                Err(SolverError::NearBoundary { .. }) | Err(SolverError::OutsidePhysical(..)) => Ok((x1, x2, None)),
                Err(e) => Err(e.into()),
            }
        })
        .collect()
}

pub fn solve(cfg: &RunConfig) -> Result<SolveOutput, DriverError> {
    let problem = cfg.problem(&cfg.counts(), cfg.pml.s)?;
    let prepared = problem.prepare()?;
    let mut results = Vec::new();
    let mut grids = Vec::new();
    let mut d = String::new();
    let _ = writeln!(d, "name = {}", cfg.name);
    let _ = writeln!(d, "interface_nodes = {}", problem.interface.n);
    if let Some(ob) = &problem.obstacle {
        let _ = writeln!(d, "obstacle_nodes = {}", ob.n);
    }
    let _ = writeln!(d, "cond_ntd1 = {:.3e}", prepared.n1.cond_estimate);
    let _ = writeln!(d, "cond_ntd2 = {:.3e}", prepared.n2.cond_estimate);
    if let Some(n) = &prepared.n_ob {
        let _ = writeln!(d, "cond_ntd_ob = {:.3e}", n.cond_estimate);
    }
    let _ = writeln!(d, "d_min = {:.6e}", problem.d_min());
    for (i, inc) in cfg.incidences().iter().enumerate() {
        let r = prepared.solve(inc)?;
        let grid = field_grid(&prepared, &r, cfg)?;
        let _ = writeln!(d, "incidence.{i} = {}", cfg.incidence[i].label());
        let _ = writeln!(d, "incidence.{i}.cond_reduced = {:.3e}", r.diagnostics.cond_reduced);
        let _ = writeln!(d, "incidence.{i}.residual = {:.3e}", r.diagnostics.residual);
        let _ = writeln!(d, "incidence.{i}.pml_decay = {:.3e}", r.diagnostics.pml_decay);
        let skipped = grid.iter().filter(|r| r.2.is_none()).count();
        let _ = writeln!(d, "incidence.{i}.grid_points = {}", grid.len());
        let _ = writeln!(d, "incidence.{i}.grid_skipped = {skipped}");
        results.push(r);
        grids.push(grid);
    }
    Ok(SolveOutput { results, grids, diagnostics: d })
}

pub fn densities_csv(mesh: &Mesh, r: &SolveResult) -> String {
    let mut s = String::from("node,x1,x2,re_u1,im_u1,re_phi1,im_phi1,re_u2,im_u2,re_phi2,im_phi2\n");
    for (j, q) in mesh.nodes.iter().enumerate() {
        let _ = writeln!(
            s,
            "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            j + 1,
            q.x[0],
            q.x[1],
            r.u1[j].re,
            r.u1[j].im,
            r.phi1[j].re,
            r.phi1[j].im,
            r.u2[j].re,
            r.u2[j].im,
            r.phi2[j].re,
            r.phi2[j].im
        );
    }
    s
}

pub fn obstacle_csv(mesh: &Mesh, r: &SolveResult) -> Option<String> {
    let o = r.obstacle.as_ref()?;
    let mut s = String::from("node,x1,x2,re_u1,im_u1,re_psi1,im_psi1,re_uob,im_uob,re_psiob,im_psiob\n");
    for (j, q) in mesh.nodes.iter().enumerate() {
        let _ = writeln!(
            s,
            "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            j + 1,
            q.x[0],
            q.x[1],
            o.u1[j].re,
            o.u1[j].im,
            o.psi1[j].re,
            o.psi1[j].im,
            o.u_ob[j].re,
            o.u_ob[j].im,
            o.psi_ob[j].re,
            o.psi_ob[j].im
        );
    }
    Some(s)
}

pub fn grid_csv(rows: &[GridRow]) -> String {
    let mut s = String::from("x1,x2,re_u,im_u,status\n");
    for (x1, x2, v) in rows {
        match v {
            Some(v) => {
                let _ = writeln!(s, "{x1:.17e},{x2:.17e},{:.17e},{:.17e},ok", v.re, v.im);
            }
            None => {
                let _ = writeln!(s, "{x1:.17e},{x2:.17e},,,skipped");
            }
        }
    }
    s
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), DriverError> {
    let p = dir.join(name);
    std::fs::write(&p, text).map_err(|e| DriverError::Io(p.display().to_string(), e.to_string()))
}

/// Writes the effective config, densities, field grids and diagnostics.
pub fn write_solve(cfg: &RunConfig, out: &SolveOutput, dir: &Path) -> Result<(), DriverError> {
    std::fs::create_dir_all(dir).map_err(|e| DriverError::Io(dir.display().to_string(), e.to_string()))?;
    write(dir, "effective_config.toml", &cfg.to_toml()?)?;
    let problem = cfg.problem(&cfg.counts(), cfg.pml.s)?;
    for (i, r) in out.results.iter().enumerate() {
        write(dir, &format!("densities_{i}.csv"), &densities_csv(&problem.interface, r))?;
        if let Some(text) = problem.obstacle.as_ref().and_then(|ob| obstacle_csv(ob, r)) {
            write(dir, &format!("obstacle_densities_{i}.csv"), &text)?;
        }
        if !out.grids[i].is_empty() {
            write(dir, &format!("field_{i}.csv"), &grid_csv(&out.grids[i]))?;
        }
    }
    write(dir, "diagnostics.txt", &out.diagnostics)
}

/// Writes one CSV and one summary per report.
pub fn write_reports(cfg: &RunConfig, reports: &[ConvergenceReport], dir: &Path, stem: &str) -> Result<(), DriverError> {
    std::fs::create_dir_all(dir).map_err(|e| DriverError::Io(dir.display().to_string(), e.to_string()))?;
    write(dir, "effective_config.toml", &cfg.to_toml()?)?;
    for (i, r) in reports.iter().enumerate() {
        write(dir, &format!("{stem}_{i}.csv"), &r.to_csv())?;
        write(dir, &format!("{stem}_{i}.txt"), &r.summary())?;
    }
    Ok(())
}
