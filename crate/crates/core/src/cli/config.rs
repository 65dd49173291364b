//! Run configuration (TOML).
//!
//! ```toml
//! name = "flat"
//!
//! [geometry]
//! unit = "absolute"            # or "wavelength": coordinates are multiples of λ
//! interface = [
//!   { type = "line", start = [-2.0, 0.0], end = [0.0, 0.0] },
//!   { type = "line", start = [0.0, 0.0], end = [2.0, 0.0] },
//! ]
//! # obstacle = [ { type = "arc", start = [..], end = [..], center = [..], ccw = true }, .. ]
//! # artificial_corners = [1.5]  # arclengths along the interface
//!
//! [medium]
//! n1 = 1.0
//! n2 = 2.0
//! polarization = "TM"
//! wavelength = 1.0
//!
//! [[incidence]]
//! kind = "point"
//! x = [0.0, 0.1]
//!
//! [pml]
//! a1 = 1.0
//! thickness = 1.0
//! s = 1.0
//! p_tilde = 8
//!
//! [discretization]
//! interface_counts = [200, 200]
//! p = 6
//! alpert_order = 6
//!
//! [convergence]
//! reference_set = [10, 10]
//! reference = "oracle"
//! n_sweep = [ { interface = [24, 26] }, { interface = [50, 50] } ]
//! s_sweep = [0.1, 0.2, 0.4, 0.8, 1.0]
//!
//! [output]
//! grid = { x1 = [-1.0, 1.0], x2 = [-1.0, 1.0], n1 = 101, n2 = 101 }
//! ```

use super::ConfigError;
use crate::geometry::{PiecewiseCurve, SmoothSegment};
use crate::pml::PmlProfile;
use crate::solver::{Incidence, LayeredMedium, Polarization, Problem};
use crate::{Curve, Mesh};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthUnit {
    #[default]
    Absolute,
    Wavelength,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum SegmentConfig {
    Line { start: [f64; 2], end: [f64; 2] },
    Arc { start: [f64; 2], end: [f64; 2], center: [f64; 2], ccw: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    #[serde(default)]
    pub unit: LengthUnit,
    pub interface: Vec<SegmentConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obstacle: Option<Vec<SegmentConfig>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub artificial_corners: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumConfig {
    pub n1: f64,
    pub n2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_ob: Option<f64>,
    pub polarization: Polarization,
    pub wavelength: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum IncidenceConfig {
    Plane { alpha: f64 },
    Point { x: [f64; 2] },
}

impl IncidenceConfig {
    pub fn incidence(&self, scale: f64) -> Incidence {
        match *self {
            Self::Plane { alpha } => Incidence::PlaneWave { alpha },
            Self::Point { x } => Incidence::PointSource { x: [x[0] * scale, x[1] * scale] },
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Self::Plane { alpha } => format!("plane(alpha={alpha})"),
            Self::Point { x } => format!("point({}, {})", x[0], x[1]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmlConfig {
    pub a1: f64,
    pub thickness: f64,
    pub s: f64,
    pub p_tilde: u32,
}

fn default_p() -> u32 {
    6
}

fn default_alpert() -> u32 {
    6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizationConfig {
    pub interface_counts: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obstacle_counts: Option<Vec<usize>>,
    #[serde(default = "default_p")]
    pub p: u32,
    #[serde(default = "default_alpert")]
    pub alpert_order: u32,
}

/// Node counts of one sweep entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Counts {
    pub interface: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obstacle: Option<Vec<usize>>,
}

impl Counts {
    pub fn total(&self) -> usize {
        self.interface.iter().sum::<usize>() + self.obstacle.iter().flatten().sum::<usize>()
    }

    pub fn interface_total(&self) -> usize {
        self.interface.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceKind {
    /// Layered Green's function (flat interface, point source only).
    Oracle,
    /// Largest sweep value.
    #[default]
    #[serde(rename = "self")]
    SelfRef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    #[default]
    Sup,
    L2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    /// Per-segment counts of the mesh whose physical nodes form the
    /// comparison set.
    pub reference_set: Vec<usize>,
    #[serde(default)]
    pub reference: ReferenceKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub n_sweep: Vec<Counts>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub s_sweep: Vec<f64>,
    #[serde(default)]
    pub norm: Norm,
    /// Inclusive index range of sweep entries for the slope fit; the
    /// decaying window is detected automatically when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x1: [f64; 2],
    pub x2: [f64; 2],
    pub n1: usize,
    pub n2: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    pub geometry: GeometryConfig,
    pub medium: MediumConfig,
    pub incidence: Vec<IncidenceConfig>,
    pub pml: PmlConfig,
    pub discretization: DiscretizationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

fn build_curve(segs: &[SegmentConfig], scale: f64, closed: bool) -> Result<Curve, ConfigError> {
    let sc = |p: [f64; 2]| [p[0] * scale, p[1] * scale];
    let segments = segs
        .iter()
        .map(|s| match *s {
            SegmentConfig::Line { start, end } => SmoothSegment::line(sc(start), sc(end)),
            SegmentConfig::Arc { start, end, center, ccw } => SmoothSegment::arc(sc(start), sc(end), sc(center), ccw),
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| ConfigError::Invalid(format!("geometry: {e}")))?;
    PiecewiseCurve::new(segments, closed).map_err(|e| ConfigError::Invalid(format!("geometry: {e}")))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(path.display().to_string(), e.to_string()))?;
        Self::from_toml(&text)
    }

    /// Effective configuration, re-ingestible by [`Self::from_toml`].
    pub fn to_toml(&self) -> Result<String, ConfigError> {
        toml::to_string_pretty(self).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    /// Coordinate scale to absolute units.
    pub fn scale(&self) -> f64 {
        match self.geometry.unit {
            LengthUnit::Absolute => 1.0,
            LengthUnit::Wavelength => self.medium.wavelength,
        }
    }

    pub fn k0(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.medium.wavelength
    }

    pub fn medium(&self) -> Result<LayeredMedium, ConfigError> {
        let m = &self.medium;
        let mut lm = LayeredMedium::new(m.n1, m.n2, self.k0(), m.polarization).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if let Some(n_ob) = m.n_ob {
            lm = lm.with_obstacle(n_ob).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        Ok(lm)
    }

    pub fn incidences(&self) -> Vec<Incidence> {
        self.incidence.iter().map(|i| i.incidence(self.scale())).collect()
    }

    pub fn interface_curve(&self) -> Result<Curve, ConfigError> {
        let mut c = build_curve(&self.geometry.interface, self.scale(), false)?;
        let mut corners = self.geometry.artificial_corners.clone();
        corners.sort_by(|a, b| b.total_cmp(a));
        for s in corners {
            c = c.with_artificial_corner(s * self.scale()).map_err(|e| ConfigError::Invalid(format!("artificial corner: {e}")))?;
        }
        Ok(c)
    }

    pub fn obstacle_curve(&self) -> Result<Option<Curve>, ConfigError> {
        self.geometry.obstacle.as_ref().map(|o| build_curve(o, self.scale(), true)).transpose()
    }

    pub fn profile(&self, s: f64) -> Result<crate::Profile, ConfigError> {
        let sc = self.scale();
        PmlProfile::new(self.pml.a1 * sc, self.pml.thickness * sc, s, self.pml.p_tilde).map_err(ConfigError::Invalid)
    }

    /// Counts of the main run.
    pub fn counts(&self) -> Counts {
        Counts { interface: self.discretization.interface_counts.clone(), obstacle: self.discretization.obstacle_counts.clone() }
    }

    pub fn interface_mesh(&self, counts: &[usize]) -> Result<Mesh, ConfigError> {
        Mesh::new(self.interface_curve()?, counts, self.discretization.p).map_err(|e| ConfigError::Invalid(format!("interface mesh: {e}")))
    }

    /// Problem at the given counts and absorbing magnitude.
    pub fn problem(&self, counts: &Counts, s: f64) -> Result<Problem, ConfigError> {
        let interface = self.interface_mesh(&counts.interface)?;
        let obstacle = match (self.obstacle_curve()?, &counts.obstacle) {
            (Some(c), Some(n)) => Some(Mesh::new(c, n, self.discretization.p).map_err(|e| ConfigError::Invalid(format!("obstacle mesh: {e}")))?),
            (None, None) => None,
            _ => return Err(ConfigError::Invalid("obstacle geometry and obstacle counts must be given together".into())),
        };
        Problem::new(interface, obstacle, self.profile(s)?, self.medium()?).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// The layered Green's function reference needs a flat interface, no
    /// obstacle and point sources only.
    pub fn check_oracle_applicable(&self) -> Result<(), ConfigError> {
        let flat = self.interface_curve()?.segments.iter().all(|s| {
            matches!(s.kind, crate::geometry::SegmentKind::Line { .. }) && s.start()[1] == 0.0 && s.end()[1] == 0.0
        });
        let points = self.incidence.iter().all(|i| matches!(i, IncidenceConfig::Point { .. }));
        if flat && points && self.geometry.obstacle.is_none() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(
                "the layered Green's function oracle needs a flat interface, no obstacle and point sources; use reference = \"self\"".into(),
            ))
        }
    }

    /// Schema-level checks beyond what serde enforces.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if !(self.medium.wavelength > 0.0) {
            return bad(format!("wavelength {} must be positive", self.medium.wavelength));
        }
        if self.discretization.alpert_order != 6 {
            return bad(format!("alpert_order {} unsupported; only 6 is tabulated", self.discretization.alpert_order));
        }
        if self.incidence.is_empty() {
            return bad("at least one [[incidence]] entry is required".into());
        }
        if self.medium.n_ob.is_some() != self.geometry.obstacle.is_some() {
            return bad("medium.n_ob and geometry.obstacle must be given together".into());
        }
        let curve = self.interface_curve()?;
        if self.discretization.interface_counts.len() != curve.segments.len() {
            return bad(format!(
                "{} interface counts for {} interface segments",
                self.discretization.interface_counts.len(),
                curve.segments.len()
            ));
        }
        let problem = self.problem(&self.counts(), self.pml.s)?;
        for inc in self.incidences() {
            problem.check_incidence(&inc).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        if let Some(c) = &self.convergence {
            if c.n_sweep.windows(2).any(|w| w[0].total() >= w[1].total()) {
                return bad("n_sweep must be sorted by increasing node count".into());
            }
            if c.s_sweep.windows(2).any(|w| w[0] >= w[1]) {
                return bad("s_sweep must be sorted ascending".into());
            }
            if c.reference_set.len() != curve.segments.len() {
                return bad("reference_set needs one count per interface segment".into());
            }
            if c.reference == ReferenceKind::Oracle {
                self.check_oracle_applicable()?;
            }
        }
        if let Some(g) = &self.output.grid {
            if g.n1 < 1 || g.n2 < 1 || !(g.x1[0] <= g.x1[1]) || !(g.x2[0] <= g.x2[1]) {
                return bad("output.grid extents or resolution invalid".into());
            }
        }
        Ok(())
    }
}
