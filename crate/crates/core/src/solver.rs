//! Reference fields, jump data, the transmission solves and field evaluation.
//!
//! Scattered fields are `u^s_j = u^tot − u₀^{(j)}` where `u₀^{(1)}` and
//! `u₀^{(2)}` are the upper and lower branches of the flat-interface solution,
//! each continued analytically into the whole perturbed subdomain. Densities
//! on `Γ_AB` are taken along the right normal of the `A → B` traversal
//! (pointing into `Ω₂`); on an obstacle boundary (traversed counterclockwise)
//! along the obstacle's outward normal.

use crate::geometry::Point;
use crate::kernels::{sample_sk, KernelError, StretchedSample};
use crate::ntd::{ntd_matrix, BoundaryPart, Factorized, NtdError, NtdMatrix, PartKind, SubdomainBoundary};
use crate::pml::StretchedPoint;
use crate::special_fn::{hankel01, sqrt_nonneg_re, SpecialFnError};
use crate::{Mesh, Profile, C64};
use faer::Mat;
use log::{info, warn};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("unsupported incidence: {0}")]
    UnsupportedIncidence(String),
    #[error("invalid problem: {0}")]
    Problem(String),
    #[error("point ({0}, {1}) lies inside the PML; fields are only evaluated in the physical box")]
    OutsidePhysical(f64, f64),
    #[error("point ({x}, {y}) is {distance:.3e} from the boundary, closer than d_min = {d_min:.3e}")]
    NearBoundary { x: f64, y: f64, distance: f64, d_min: f64 },
    #[error("field evaluated at the source point")]
    AtSource,
    #[error("transmission residual {0:.3e} above tolerance")]
    Residual(f64),
    #[error(transparent)]
    Ntd(#[from] NtdError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    SpecialFn(#[from] SpecialFnError),
}

/// Relative residual accepted for the block transmission system.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Near-boundary exclusion in units of the largest physical mesh spacing.
pub const D_MIN_SPACINGS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Polarization {
    TE,
    TM,
}

/// Two homogeneous half-spaces and an optional obstacle medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayeredMedium {
    pub n1: f64,
    pub n2: f64,
    pub n_ob: Option<f64>,
    /// Free-space wavenumber `2π/λ`.
    pub k0: f64,
    pub polarization: Polarization,
}

impl LayeredMedium {
    pub fn new(n1: f64, n2: f64, k0: f64, polarization: Polarization) -> Result<Self, SolverError> {
        if !(n1 > 0.0 && n2 > 0.0 && k0 > 0.0) {
            return Err(SolverError::Problem(format!("n1 = {n1}, n2 = {n2}, k0 = {k0}")));
        }
        Ok(Self { n1, n2, n_ob: None, k0, polarization })
    }

    pub fn with_obstacle(mut self, n_ob: f64) -> Result<Self, SolverError> {
        if !(n_ob > 0.0) {
            return Err(SolverError::Problem(format!("n_ob = {n_ob}")));
        }
        self.n_ob = Some(n_ob);
        Ok(self)
    }

    /// `η = 1` (TE) or `1/n²` (TM).
    pub fn eta(&self, n: f64) -> f64 {
        match self.polarization {
            Polarization::TE => 1.0,
            Polarization::TM => 1.0 / (n * n),
        }
    }

    pub fn eta1(&self) -> f64 {
        self.eta(self.n1)
    }

    pub fn eta2(&self) -> f64 {
        self.eta(self.n2)
    }

    pub fn k1(&self) -> f64 {
        self.k0 * self.n1
    }

    pub fn k2(&self) -> f64 {
        self.k0 * self.n2
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Incidence {
    /// `e^{ik₁(x₁cos α − x₂ sin α)}`, `α ∈ (0, π)`.
    PlaneWave { alpha: f64 },
    /// `(i/4)H₀(k₁|x − x*|)` with `x*` in `Ω₁`.
    PointSource { x: Point<f64> },
}

/// Which branch of the reference field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Upper,
    Lower,
}

/// Value and gradient with respect to the stretched coordinates.
pub type FieldValue = (C64, [C64; 2]);

/// `(k*, T)` for a plane wave at angle `α`.
pub fn plane_coefficients(medium: &LayeredMedium, alpha: f64) -> Result<(C64, C64), SolverError> {
    if !(alpha > 0.0 && alpha < std::f64::consts::PI) || alpha.sin() < 1e-12 {
        return Err(SolverError::UnsupportedIncidence(format!(
            "plane-wave angle {alpha} is grazing or outside (0, π)"
        )));
    }
    let (c, s) = (alpha.cos(), alpha.sin());
    let kstar = sqrt_nonneg_re(C64::new(medium.n2 * medium.n2 - medium.n1 * medium.n1 * c * c, 0.0)) * medium.k0;
    let ratio = medium.eta2() / medium.eta1();
    let t = C64::new(2.0, 0.0) / (C64::new(1.0, 0.0) + kstar * ratio / (medium.k1() * s));
    Ok((kstar, t))
}

/// `e^{iθ} − 1` without cancellation for small `θ`.
fn expm1_i(theta: C64) -> C64 {
    let h = (theta * 0.5).sin();
    C64::new(0.0, 1.0) * theta.sin() - h * h * 2.0
}

/// Flat-interface plane-wave solution at a (possibly stretched) point.
///
/// Both branches share the factor `e^{ik₁x̃₁cos α}` and carry their
/// `x̃₂`-dependence through `e^{iθ} − 1`, so on `x̃₂ = 0` the traces agree
/// to the last bit.
pub fn reference_plane(x: &StretchedPoint<f64>, medium: &LayeredMedium, alpha: f64, branch: Branch) -> Result<FieldValue, SolverError> {
    let (kstar, t) = plane_coefficients(medium, alpha)?;
    let (c, s) = (alpha.cos(), alpha.sin());
    let k1 = medium.k1();
    let i = C64::new(0.0, 1.0);
    let e = (i * k1 * c * x[0]).exp();
    Ok(match branch {
        Branch::Upper => {
            let a = x[1] * (k1 * s);
            let (ep, em) = (expm1_i(a), expm1_i(-a));
            let u = e * (t + em + (t - 1.0) * ep);
            let d2 = i * k1 * s * e * ((t - 2.0) + (t - 1.0) * ep - em);
            (u, [i * k1 * c * u, d2])
        }
        Branch::Lower => {
            let u = e * (t + t * expm1_i(-(kstar * x[1])));
            (u, [i * k1 * c * u, -i * kstar * u])
        }
    })
}

/// Plane-wave jumps `(u⁺ − u⁻, η₁∇u⁺ − η₂∇u⁻)` between the two branches,
/// with the flat-interface transmission identity cancelled analytically.
pub fn plane_jump(x: &StretchedPoint<f64>, medium: &LayeredMedium, alpha: f64) -> Result<FieldValue, SolverError> {
    let (kstar, t) = plane_coefficients(medium, alpha)?;
    let (c, s) = (alpha.cos(), alpha.sin());
    let (k1, e1, e2) = (medium.k1(), medium.eta1(), medium.eta2());
    let i = C64::new(0.0, 1.0);
    let e = (i * k1 * c * x[0]).exp();
    let a = x[1] * (k1 * s);
    let (ep, em, el) = (expm1_i(a), expm1_i(-a), expm1_i(-(kstar * x[1])));
    let u1 = e * (t + em + (t - 1.0) * ep);
    let u2 = e * (t + t * el);
    let du = e * (em + (t - 1.0) * ep - t * el);
    let d2 = i * e * ((t - 1.0) * ep * (e1 * k1 * s) - em * (e1 * k1 * s) + kstar * t * el * e2);
    Ok((du, [i * k1 * c * (u1 * e1 - u2 * e2), d2]))
}

/// Incident cylindrical wave in `Ω₁`; zero in `Ω₂`.
pub fn reference_point(x: &StretchedPoint<f64>, medium: &LayeredMedium, source: Point<f64>, branch: Branch) -> Result<FieldValue, SolverError> {
    let zero = C64::new(0.0, 0.0);
    if branch == Branch::Lower {
        return Ok((zero, [zero, zero]));
    }
    let d = [x[0] - source[0], x[1] - source[1]];
    let r = sqrt_nonneg_re(d[0] * d[0] + d[1] * d[1]);
    if r.norm() == 0.0 {
        return Err(SolverError::AtSource);
    }
    let k1 = medium.k1();
    let (h0, h1) = hankel01(r * k1)?;
    let q = C64::new(0.0, 0.25);
    let dh = -q * k1 * h1 / r;
    Ok((q * h0, [dh * d[0], dh * d[1]]))
}

/// Reference field of either incidence.
pub fn reference_field(x: &StretchedPoint<f64>, medium: &LayeredMedium, inc: &Incidence, branch: Branch) -> Result<FieldValue, SolverError> {
    match *inc {
        Incidence::PlaneWave { alpha } => reference_plane(x, medium, alpha, branch),
        Incidence::PointSource { x: src } => reference_point(x, medium, src, branch),
    }
}

/// `|x'| ∂_{ν_c} f = x̃₂' ∂_{x̃₁} f − x̃₁' ∂_{x̃₂} f` with `x̃' = w' τ̃`.
pub fn scaled_conormal(sample: &StretchedSample<f64>, grad: &[C64; 2]) -> C64 {
    let xp = [sample.taut[0] * sample.wprime, sample.taut[1] * sample.wprime];
    xp[1] * grad[0] - xp[0] * grad[1]
}

fn samples(mesh: &Mesh, profile: Option<&Profile>) -> Vec<StretchedSample<f64>> {
    let ctx = crate::kernels::KernelContext::new(mesh, profile, 1.0);
    (1..=mesh.n as i64).map(|j| *ctx.node(j)).collect()
}

/// `(b₁, b₂)` on the interface nodes.
pub fn jump_data(mesh: &Mesh, profile: &Profile, medium: &LayeredMedium, inc: &Incidence) -> Result<(Vec<C64>, Vec<C64>), SolverError> {
    let (e1, e2) = (medium.eta1(), medium.eta2());
    let mut b1 = Vec::with_capacity(mesh.n);
    let mut b2 = Vec::with_capacity(mesh.n);
    for s in samples(mesh, Some(profile)) {
        if let Incidence::PlaneWave { alpha } = *inc {
            let (du, dg) = plane_jump(&s.xt, medium, alpha)?;
            b1.push(-du);
            b2.push(-scaled_conormal(&s, &dg));
            continue;
        }
        let (u1, g1) = reference_field(&s.xt, medium, inc, Branch::Upper)?;
        let (u2, g2) = reference_field(&s.xt, medium, inc, Branch::Lower)?;
        b1.push(-(u1 - u2));
        b2.push(-(scaled_conormal(&s, &g1) * e1 - scaled_conormal(&s, &g2) * e2));
    }
    Ok((b1, b2))
}

/// `(d₁, d₂)` on the obstacle nodes: `d₁ = −u₀`, `d₂ = −η₁|x'|∂_n u₀`.
pub fn obstacle_jump_data(mesh: &Mesh, medium: &LayeredMedium, inc: &Incidence) -> Result<(Vec<C64>, Vec<C64>), SolverError> {
    let e1 = medium.eta1();
    let mut d1 = Vec::with_capacity(mesh.n);
    let mut d2 = Vec::with_capacity(mesh.n);
    for s in samples(mesh, None) {
        let (u, g) = reference_field(&s.xt, medium, inc, Branch::Upper)?;
        d1.push(-u);
        d2.push(-scaled_conormal(&s, &g) * e1);
    }
    Ok((d1, d2))
}

/// Densities on a closed obstacle boundary.
#[derive(Debug, Clone)]
pub struct ObstacleDensities {
    /// Scattered-field trace and density from the `Ω₁` side.
    pub u1: Vec<C64>,
    pub psi1: Vec<C64>,
    /// Total-field trace and density inside the obstacle.
    pub u_ob: Vec<C64>,
    pub psi_ob: Vec<C64>,
}

#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    /// Condition estimate of the reduced transmission matrix.
    pub cond_reduced: f64,
    /// Largest relative residual of the block transmission equations.
    pub residual: f64,
    /// `max|φ|` over the outermost tenth of the PML divided by `max|φ|`.
    pub pml_decay: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub incidence: Incidence,
    pub u1: Vec<C64>,
    pub u2: Vec<C64>,
    pub phi1: Vec<C64>,
    pub phi2: Vec<C64>,
    pub obstacle: Option<ObstacleDensities>,
    pub diagnostics: Diagnostics,
}

fn sup(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn rel_residual(r: &[C64], scale: &[&[C64]]) -> f64 {
    let s = scale.iter().map(|v| sup(v)).fold(0.0, f64::max);
    let rn = sup(r);
    if s == 0.0 {
        rn
    } else {
        rn / s
    }
}

/// Solves the two-subdomain system
/// `N₁φ₁ − N₂φ₂ = b₁`, `η₁φ₁ − η₂φ₂ = b₂`.
pub fn solve_transmission(
    n1: &NtdMatrix,
    n2: &NtdMatrix,
    b1: &[C64],
    b2: &[C64],
    eta1: f64,
    eta2: f64,
) -> Result<(Vec<C64>, Vec<C64>, Vec<C64>, Vec<C64>, Diagnostics), SolverError> {
    let n = n1.size();
    if n2.size() != n || b1.len() != n || b2.len() != n {
        return Err(SolverError::Problem("matrix and data sizes differ".into()));
    }
    let ratio = eta1 / eta2;
    let a = Mat::from_fn(n, n, |i, j| n1.matrix[(i, j)] - n2.matrix[(i, j)] * ratio);
    let n2b2 = n2.apply(b2);
    let rhs: Vec<C64> = (0..n).map(|i| b1[i] - n2b2[i] / eta2).collect();
    let fac = Factorized::new(&a).map_err(SolverError::from)?;
    let phi1 = fac.solve_vec(&rhs);
    let phi2: Vec<C64> = (0..n).map(|i| (phi1[i] * eta1 - b2[i]) / eta2).collect();
    let u1 = n1.apply(&phi1);
    let u2 = n2.apply(&phi2);
    let r1: Vec<C64> = (0..n).map(|i| u1[i] - u2[i] - b1[i]).collect();
    let r2: Vec<C64> = (0..n).map(|i| phi1[i] * eta1 - phi2[i] * eta2 - b2[i]).collect();
    let residual = rel_residual(&r1, &[&u1, &u2, b1]).max(rel_residual(&r2, &[&phi1, &phi2, b2]));
    if residual > RESIDUAL_TOL {
        return Err(SolverError::Residual(residual));
    }
    let diag = Diagnostics { cond_reduced: fac.cond_estimate, residual, pml_decay: 0.0 };
    Ok((phi1, phi2, u1, u2, diag))
}

/// Obstacle-coupled system. `n1` is the block NtD of `Ω₁` on `Γ_AB ∪ Γ_ob`,
/// `n2` that of `Ω₂` on `Γ_AB` and `n_ob` the obstacle interior one.
#[allow(clippy::too_many_arguments)]
pub fn solve_with_obstacle(
    n1: &NtdMatrix,
    n2: &NtdMatrix,
    n_ob: &NtdMatrix,
    b: (&[C64], &[C64]),
    d: (&[C64], &[C64]),
    eta1: f64,
    eta2: f64,
    eta_ob: f64,
) -> Result<(SolveResult, Diagnostics), SolverError> {
    let na = n2.size();
    let no = n_ob.size();
    let n = na + no;
    if n1.size() != n || b.0.len() != na || d.0.len() != no {
        return Err(SolverError::Problem("block sizes differ".into()));
    }
    let (r2, r_ob) = (eta1 / eta2, eta1 / eta_ob);
    let a = Mat::from_fn(n, n, |i, j| {
        let mut v = n1.matrix[(i, j)];
        if i < na && j < na {
            v -= n2.matrix[(i, j)] * r2;
        } else if i >= na && j >= na {
            v -= n_ob.matrix[(i - na, j - na)] * r_ob;
        }
        v
    });
    let n2b2 = n2.apply(b.1);
    let nod2 = n_ob.apply(d.1);
    let mut rhs: Vec<C64> = (0..na).map(|i| b.0[i] - n2b2[i] / eta2).collect();
    rhs.extend((0..no).map(|i| d.0[i] - nod2[i] / eta_ob));
    let fac = Factorized::new(&a).map_err(SolverError::from)?;
    let x = fac.solve_vec(&rhs);
    let (phi1, psi1) = (x[..na].to_vec(), x[na..].to_vec());
    let phi2: Vec<C64> = (0..na).map(|i| (phi1[i] * eta1 - b.1[i]) / eta2).collect();
    let psi_ob: Vec<C64> = (0..no).map(|i| (psi1[i] * eta1 - d.1[i]) / eta_ob).collect();
    let u1_all = n1.apply(&x);
    let (u1, u1_ob) = (u1_all[..na].to_vec(), u1_all[na..].to_vec());
    let u2 = n2.apply(&phi2);
    let u_ob = n_ob.apply(&psi_ob);
    let res_a: Vec<C64> = (0..na).map(|i| u1[i] - u2[i] - b.0[i]).collect();
    let res_o: Vec<C64> = (0..no).map(|i| u1_ob[i] - u_ob[i] - d.0[i]).collect();
    let residual = rel_residual(&res_a, &[&u1, &u2, b.0]).max(rel_residual(&res_o, &[&u1_ob, &u_ob, d.0]));
    if residual > RESIDUAL_TOL {
        return Err(SolverError::Residual(residual));
    }
    let diag = Diagnostics { cond_reduced: fac.cond_estimate, residual, pml_decay: 0.0 };
    let result = SolveResult {
        incidence: Incidence::PlaneWave { alpha: f64::NAN },
        u1,
        u2,
        phi1,
        phi2,
        obstacle: Some(ObstacleDensities { u1: u1_ob, psi1, u_ob, psi_ob }),
        diagnostics: diag.clone(),
    };
    Ok((result, diag))
}

/// Which subdomain a point belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Upper,
    Lower,
    Obstacle,
}

/// Crossings of the upward vertical ray from `x` with a polyline.
fn upward_crossings(poly: &[Point<f64>], x: Point<f64>) -> usize {
    poly.windows(2)
        .filter(|e| {
            let (a, b) = (e[0], e[1]);
            if (a[0] > x[0]) == (b[0] > x[0]) {
                return false;
            }
            let t = (x[0] - a[0]) / (b[0] - a[0]);
            a[1] + t * (b[1] - a[1]) > x[1]
        })
        .count()
}

fn polyline(mesh: &Mesh) -> Vec<Point<f64>> {
    let mut pts = vec![mesh.curve.endpoint_a()];
    pts.extend(mesh.nodes.iter().map(|p| p.x));
    if mesh.curve.closed {
        pts.push(mesh.nodes[mesh.n - 1].x);
    }
    pts
}

/// Largest node spacing inside the physical box.
fn physical_spacing(mesh: &Mesh, profile: &Profile) -> f64 {
    let pts = polyline(mesh);
    pts.windows(2)
        .filter(|e| profile.is_physical(e[0]) || profile.is_physical(e[1]))
        .map(|e| (e[1][0] - e[0][0]).hypot(e[1][1] - e[0][1]))
        .fold(0.0, f64::max)
}

fn min_distance(mesh: &Mesh, x: Point<f64>) -> f64 {
    mesh.nodes.iter().map(|p| (p.x[0] - x[0]).hypot(p.x[1] - x[1])).fold(f64::INFINITY, f64::min)
}

/// Scattering configuration: truncated interface, optional obstacle, PML.
#[derive(Debug, Clone)]
pub struct Problem {
    pub interface: Mesh,
    pub obstacle: Option<Mesh>,
    pub profile: Profile,
    pub medium: LayeredMedium,
}

impl Problem {
    pub fn new(interface: Mesh, obstacle: Option<Mesh>, profile: Profile, medium: LayeredMedium) -> Result<Self, SolverError> {
        if interface.curve.closed {
            return Err(SolverError::Problem("interface curve must be open".into()));
        }
        let (a, b) = (interface.curve.endpoint_a(), interface.curve.endpoint_b());
        if !(a[0] < -profile.a1() && b[0] > profile.a1()) {
            return Err(SolverError::Problem("interface endpoints must lie inside the PML".into()));
        }
        let p = Self { interface, obstacle, profile, medium };
        if let Some(ob) = &p.obstacle {
            if !ob.curve.closed {
                return Err(SolverError::Problem("obstacle boundary must be closed".into()));
            }
            if medium.n_ob.is_none() {
                return Err(SolverError::Problem("obstacle without an index".into()));
            }
            let line = polyline(&p.interface);
            for q in &ob.nodes {
                if !p.profile.is_physical(q.x) {
                    return Err(SolverError::Problem("obstacle leaves the physical box".into()));
                }
                if upward_crossings(&line, q.x) % 2 == 1 {
                    return Err(SolverError::Problem("obstacle intersects or lies below the interface".into()));
                }
            }
        }
        Ok(p)
    }

    /// Rejects incidences the reference field cannot represent.
    pub fn check_incidence(&self, inc: &Incidence) -> Result<(), SolverError> {
        match *inc {
            Incidence::PlaneWave { alpha } => {
                let (a, b) = (self.interface.curve.endpoint_a(), self.interface.curve.endpoint_b());
                if a[1] != 0.0 || b[1] != 0.0 {
                    return Err(SolverError::UnsupportedIncidence(
                        "plane-wave incidence needs the interface at x2 = 0 on both far sides; with unequal \
                         elevations at infinity the flat reference solution does not exist and the method \
                         fails in this case (use a point source)"
                            .into(),
                    ));
                }
                plane_coefficients(&self.medium, alpha)?;
            }
            Incidence::PointSource { x } => {
                if self.region(x)? != Region::Upper {
                    return Err(SolverError::UnsupportedIncidence("point source must lie in the upper medium".into()));
                }
                let lambda = 2.0 * std::f64::consts::PI / self.medium.k0;
                if self.profile.a1() - x[0].abs() < lambda {
                    warn!("point source within one wavelength of the PML");
                }
            }
        }
        Ok(())
    }

    /// Subdomain of a physical point.
    pub fn region(&self, x: Point<f64>) -> Result<Region, SolverError> {
        if !self.profile.is_physical(x) {
            return Err(SolverError::OutsidePhysical(x[0], x[1]));
        }
        if let Some(ob) = &self.obstacle {
            if upward_crossings(&polyline(ob), x) % 2 == 1 {
                return Ok(Region::Obstacle);
            }
        }
        Ok(if upward_crossings(&polyline(&self.interface), x) % 2 == 1 { Region::Lower } else { Region::Upper })
    }

    /// `d_min` for field evaluation.
    pub fn d_min(&self) -> f64 {
        let mut h = physical_spacing(&self.interface, &self.profile);
        if let Some(ob) = &self.obstacle {
            h = h.max(physical_spacing(ob, &self.profile));
        }
        D_MIN_SPACINGS * h
    }

    fn boundaries(&self) -> Result<(SubdomainBoundary<'_>, SubdomainBoundary<'_>, Option<SubdomainBoundary<'_>>), SolverError> {
        let m = &self.medium;
        let gamma = |orientation| BoundaryPart { mesh: &self.interface, profile: Some(&self.profile), orientation, kind: PartKind::Interface };
        let mut parts1 = vec![gamma(1.0)];
        let mut ob_domain = None;
        if let Some(ob) = &self.obstacle {
            parts1.push(BoundaryPart { mesh: ob, profile: None, orientation: -1.0, kind: PartKind::Closed });
            let n_ob = m.n_ob.expect("checked in Problem::new");
            ob_domain = Some(SubdomainBoundary::new(
                vec![BoundaryPart { mesh: ob, profile: None, orientation: 1.0, kind: PartKind::Closed }],
                m.k0,
                n_ob,
                m.eta(n_ob),
            )?);
        }
        let d1 = SubdomainBoundary::new(parts1, m.k0, m.n1, m.eta1())?;
        let d2 = SubdomainBoundary::new(vec![gamma(-1.0)], m.k0, m.n2, m.eta2())?;
        Ok((d1, d2, ob_domain))
    }

    /// Builds the NtD matrices, which are independent of the incidence.
    pub fn prepare(&self) -> Result<Prepared<'_>, SolverError> {
        let (d1, d2, dob) = self.boundaries()?;
        let t = std::time::Instant::now();
        let n1 = ntd_matrix(&d1)?;
        let n2 = ntd_matrix(&d2)?;
        let n_ob = dob.map(|d| ntd_matrix(&d)).transpose()?;
        info!("NtD matrices ready in {:.2?}", t.elapsed());
        let interface_samples = samples(&self.interface, Some(&self.profile));
        let obstacle_samples = self.obstacle.as_ref().map(|ob| samples(ob, None));
        Ok(Prepared { problem: self, n1, n2, n_ob, interface_samples, obstacle_samples })
    }

    /// Convenience: prepare and solve one incidence.
    pub fn solve(&self, inc: &Incidence) -> Result<SolveResult, SolverError> {
        self.prepare()?.solve(inc)
    }
}

/// Problem with its NtD matrices.
#[derive(Debug, Clone)]
pub struct Prepared<'p> {
    pub problem: &'p Problem,
    pub n1: NtdMatrix,
    pub n2: NtdMatrix,
    pub n_ob: Option<NtdMatrix>,
    interface_samples: Vec<StretchedSample<f64>>,
    obstacle_samples: Option<Vec<StretchedSample<f64>>>,
}

impl Prepared<'_> {
    pub fn solve(&self, inc: &Incidence) -> Result<SolveResult, SolverError> {
        let p = self.problem;
        p.check_incidence(inc)?;
        let m = &p.medium;
        let (b1, b2) = jump_data(&p.interface, &p.profile, m, inc)?;
        let mut result = match (&p.obstacle, &self.n_ob) {
            (Some(ob), Some(n_ob)) => {
                let (d1, d2) = obstacle_jump_data(ob, m, inc)?;
                let eta_ob = m.eta(m.n_ob.expect("checked"));
                solve_with_obstacle(&self.n1, &self.n2, n_ob, (&b1, &b2), (&d1, &d2), m.eta1(), m.eta2(), eta_ob)?.0
            }
            _ => {
                let (phi1, phi2, u1, u2, diagnostics) = solve_transmission(&self.n1, &self.n2, &b1, &b2, m.eta1(), m.eta2())?;
                SolveResult { incidence: *inc, u1, u2, phi1, phi2, obstacle: None, diagnostics }
            }
        };
        result.incidence = *inc;
        result.diagnostics.pml_decay = pml_decay(&p.interface, &p.profile, &result.phi1, &result.phi2);
        if result.diagnostics.pml_decay > 1e-5 {
            warn!(
                "densities decay only to {:.2e} of their maximum in the outer PML; consider a larger S or T",
                result.diagnostics.pml_decay
            );
        }
        let ends = endpoint_ratio(&result.phi1, &result.phi2);
        if ends > 1e-6 {
            warn!("interface densities reach {ends:.2e} of their maximum near the truncation endpoints");
        }
        Ok(result)
    }

    /// Total field at a physical point away from the boundaries.
    pub fn evaluate_field(&self, result: &SolveResult, x: Point<f64>) -> Result<C64, SolverError> {
        let p = self.problem;
        let region = p.region(x)?;
        let d_min = p.d_min();
        let mut dist = min_distance(&p.interface, x);
        if let Some(ob) = &p.obstacle {
            dist = dist.min(min_distance(ob, x));
        }
        if dist <= d_min {
            return Err(SolverError::NearBoundary { x: x[0], y: x[1], distance: dist, d_min });
        }
        let m = &p.medium;
        let xt: StretchedPoint<f64> = [C64::new(x[0], 0.0), C64::new(x[1], 0.0)];
        let obs = self.obstacle_samples.as_deref();
        let mut terms: Vec<(&[StretchedSample<f64>], f64, &[C64], &[C64])> = Vec::new();
        let k = match region {
            Region::Upper => {
                terms.push((&self.interface_samples, 1.0, &result.phi1, &result.u1));
                if let (Some(ob), Some(o)) = (obs, &result.obstacle) {
                    terms.push((ob, -1.0, &o.psi1, &o.u1));
                }
                m.k1()
            }
            Region::Lower => {
                terms.push((&self.interface_samples, -1.0, &result.phi2, &result.u2));
                m.k2()
            }
            Region::Obstacle => {
                let (ob, o) = (obs.expect("region"), result.obstacle.as_ref().expect("obstacle densities"));
                terms.push((ob, 1.0, &o.psi_ob, &o.u_ob));
                m.k0 * m.n_ob.expect("checked")
            }
        };
        let mut us = C64::new(0.0, 0.0);
        for (ss, sign, phi, u) in terms {
            let h = 1.0 / ss.len() as f64;
            let mut acc = C64::new(0.0, 0.0);
            for (j, s) in ss.iter().enumerate() {
                let (sk, kk) = sample_sk(&xt, s, k)?;
                acc += sk * phi[j] - kk * u[j];
            }
            us += acc * (sign * h * 0.5);
        }
        Ok(match region {
            Region::Upper => us + reference_field(&xt, m, &result.incidence, Branch::Upper)?.0,
            Region::Lower => us + reference_field(&xt, m, &result.incidence, Branch::Lower)?.0,
            Region::Obstacle => us,
        })
    }

    /// Total-field trace from the upper side at interface nodes.
    pub fn interface_total(&self, result: &SolveResult) -> Result<Vec<C64>, SolverError> {
        let p = self.problem;
        self.interface_samples
            .iter()
            .zip(&result.u1)
            .map(|(s, u)| Ok(*u + reference_field(&s.xt, &p.medium, &result.incidence, Branch::Upper)?.0))
            .collect()
    }
}

/// `max|φ|` over the 5% of interface nodes nearest A or B, relative to
/// `max|φ|` over all nodes.
pub fn endpoint_ratio(phi1: &[C64], phi2: &[C64]) -> f64 {
    let n = phi1.len();
    let k = n.div_ceil(40);
    let v = |j: usize| phi1[j].norm().max(phi2[j].norm());
    let ends = (0..k).chain(n - k..n).map(v).fold(0.0, f64::max);
    let all = (0..n).map(v).fold(0.0, f64::max);
    if all == 0.0 {
        0.0
    } else {
        ends / all
    }
}

/// `max|φ|` over the outermost tenth (by count, ordered by `|x1|`) of the
/// interface nodes inside the PML, relative to `max|φ|` over all nodes, for
/// both densities.
pub fn pml_decay(mesh: &Mesh, profile: &Profile, phi1: &[C64], phi2: &[C64]) -> f64 {
    let pml: Vec<usize> = (0..mesh.n).filter(|&j| !profile.is_physical(mesh.nodes[j].x)).collect();
    let take = pml.len().div_ceil(10);
    let mut by_depth = pml;
    by_depth.sort_by(|&a, &b| mesh.nodes[b].x[0].abs().total_cmp(&mesh.nodes[a].x[0].abs()));
    let v = |j: usize| phi1[j].norm().max(phi2[j].norm());
    let outer = by_depth[..take].iter().map(|&j| v(j)).fold(0.0, f64::max);
    let all = (0..mesh.n).map(v).fold(0.0, f64::max);
    if all == 0.0 {
        0.0
    } else {
        outer / all
    }
}
