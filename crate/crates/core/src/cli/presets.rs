//! Built-in configurations of the four worked examples.

use super::config::*;
use super::ConfigError;
use crate::geometry::{shapes, SegmentKind};
use crate::solver::Polarization;
use crate::Curve;

pub const PRESETS: [&str; 4] = ["flat", "semicircles", "obstacle", "step"];

/// Segment list of a curve.
pub fn segments_of(curve: &Curve) -> Vec<SegmentConfig> {
    curve
        .segments
        .iter()
        .map(|s| match s.kind {
            SegmentKind::Line { start, end, .. } => SegmentConfig::Line { start, end },
            SegmentKind::Arc { start, end, center, sense, .. } => SegmentConfig::Arc { start, end, center, ccw: sense > 0.0 },
        })
        .collect()
}

fn counts(per: usize, m: usize) -> Counts {
    Counts { interface: vec![per; m], obstacle: None }
}

fn base(name: &str, interface: &Curve, n2: f64, pml_a1: f64, per: usize) -> RunConfig {
    RunConfig {
        name: name.into(),
        geometry: GeometryConfig { unit: LengthUnit::Absolute, interface: segments_of(interface), obstacle: None, artificial_corners: vec![] },
        medium: MediumConfig { n1: 1.0, n2, n_ob: None, polarization: Polarization::TM, wavelength: 1.0 },
        incidence: vec![],
        pml: PmlConfig { a1: pml_a1, thickness: 1.0, s: 1.0, p_tilde: 8 },
        discretization: DiscretizationConfig {
            interface_counts: vec![per; interface.segments.len()],
            obstacle_counts: None,
            p: 6,
            alpert_order: 6,
        },
        convergence: None,
        output: OutputConfig::default(),
    }
}

/// Preset by name, see [`PRESETS`].
pub fn preset(name: &str) -> Result<RunConfig, ConfigError> {
    let geo = |e: crate::geometry::GeometryError| ConfigError::Invalid(e.to_string());
    let cfg = match name {
        "flat" => {
            let mut c = base(name, &shapes::flat(2.0).map_err(geo)?, 2.0, 1.0, 200);
            c.incidence = vec![IncidenceConfig::Point { x: [0.0, 0.1] }];
            c.convergence = Some(ConvergenceConfig {
                reference_set: vec![10, 10],
                reference: ReferenceKind::Oracle,
                n_sweep: vec![
                    Counts { interface: vec![24, 26], obstacle: None },
                    counts(50, 2),
                    counts(100, 2),
                    counts(200, 2),
                ],
                s_sweep: vec![0.1, 0.2, 0.4, 0.8, 1.0],
                norm: Norm::Sup,
                window: None,
            });
            c.output.grid = Some(GridConfig { x1: [-1.0, 1.0], x2: [-1.0, 1.0], n1: 101, n2: 101 });
            c
        }
        "semicircles" => {
            let mut c = base(name, &shapes::semicircles(3.5).map_err(geo)?, 2.0, 2.5, 400);
            c.incidence = vec![
                IncidenceConfig::Plane { alpha: std::f64::consts::FRAC_PI_3 },
                IncidenceConfig::Point { x: [1.0, 1.0] },
            ];
            c.convergence = Some(ConvergenceConfig {
                reference_set: vec![40; 4],
                reference: ReferenceKind::SelfRef,
                n_sweep: vec![counts(50, 4), counts(100, 4), counts(200, 4), counts(400, 4)],
                s_sweep: vec![0.1, 0.2, 0.4, 0.8, 1.0, 1.5, 2.0],
                norm: Norm::Sup,
                window: None,
            });
            c.output.grid = Some(GridConfig { x1: [-2.5, 2.5], x2: [-2.5, 2.5], n1: 101, n2: 101 });
            c
        }
        "obstacle" => {
            let mut c = base(name, &shapes::notched(6.5).map_err(geo)?, 3.0, 5.5, 150);
            c.geometry.obstacle = Some(segments_of(&shapes::drop([0.0, 1.5], 0.5).map_err(geo)?));
            c.medium.n_ob = Some(2.0);
            c.discretization.obstacle_counts = Some(vec![180, 440, 180]);
            c.incidence = vec![
                IncidenceConfig::Plane { alpha: std::f64::consts::FRAC_PI_3 },
                IncidenceConfig::Point { x: [3.0, 1.0] },
            ];
            let ob = Some(vec![180, 440, 180]);
            c.convergence = Some(ConvergenceConfig {
                reference_set: vec![40; 21],
                reference: ReferenceKind::SelfRef,
                n_sweep: [40, 60, 80, 100, 150]
                    .iter()
                    .map(|&p| Counts { interface: vec![p; 21], obstacle: ob.clone() })
                    .collect(),
                s_sweep: vec![],
                norm: Norm::Sup,
                window: None,
            });
            c.output.grid = Some(GridConfig { x1: [-5.5, 5.5], x2: [-5.5, 5.5], n1: 111, n2: 111 });
            c
        }
        "step" => {
            let mut c = base(name, &shapes::step(2.0).map_err(geo)?, 2.0, 1.0, 800);
            c.incidence = vec![IncidenceConfig::Point { x: [0.0, 1.1] }];
            c.convergence = Some(ConvergenceConfig {
                reference_set: vec![40; 3],
                reference: ReferenceKind::SelfRef,
                n_sweep: vec![counts(50, 3), counts(100, 3), counts(200, 3), counts(400, 3), counts(800, 3)],
                s_sweep: vec![],
                norm: Norm::Sup,
                window: None,
            });
            c.output.grid = Some(GridConfig { x1: [-1.0, 1.0], x2: [-3.0, 3.0], n1: 81, n2: 241 });
            c
        }
        other => return Err(ConfigError::Invalid(format!("unknown preset {other:?}; expected one of {PRESETS:?}"))),
    };
    cfg.validate()?;
    Ok(cfg)
}
