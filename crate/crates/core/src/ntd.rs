//! Assembly of the discretized single- and double-layer operators, the
//! diagonal `K̃₀[1]` term and the scaled Neumann-to-Dirichlet matrix of one
//! subdomain.
//!
//! A subdomain boundary consists of one or more parts (the truncated interface
//! `Γ_AB` and closed obstacle curves). Densities on every part are the scaled
//! derivatives `φ = |x'| ∂_{ν_c} ũ` along the part's right normal `ν` (the
//! right-hand normal of its traversal direction). A part's `orientation` is
//! `+1` when `ν` points out of the subdomain and `−1` otherwise; the sign is
//! folded into the assembled operators, so that for every subdomain
//!
//! `(K − H) ũ = S φ`,   `N = (K − H)⁻¹ S`.
//!
//! With the kernels `S = (i/2)H₀(k dist)` and `K = −(ik/2)(κ/dist)H₁(k dist)`
//! the self blocks are Alpert rows; blocks between disjoint parts are plain
//! trapezoidal sums.

use crate::geometry::{Param, Point};
use crate::kernels::{sample_sk, KernelContext, KernelError};
use crate::quadrature::{AlpertRule, AlpertStencils, QuadratureError};
use crate::{Mesh, Profile, C64};
use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::Mat;
use log::{debug, info};
use rayon::prelude::*;
use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NtdError {
    #[error("numerically singular system (1-norm condition estimate {cond:.3e})")]
    Singular { cond: f64 },
    #[error("invalid boundary: {0}")]
    Boundary(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("matrix dump failed: {0}")]
    Io(#[from] std::io::Error),
}

/// Condition estimates above this are reported as singular.
pub const SINGULAR_COND: f64 = 1e13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartKind {
    /// Open truncated interface `Γ_AB` with ends inside the PML.
    Interface,
    /// Closed curve (obstacle boundary).
    Closed,
}

/// One curve of a subdomain boundary.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryPart<'a> {
    pub mesh: &'a Mesh,
    /// Stretching applied to this part; `None` on the real geometry.
    pub profile: Option<&'a Profile>,
    /// `+1` if the right normal points out of the subdomain, else `−1`.
    pub orientation: f64,
    pub kind: PartKind,
}

/// Boundary of one homogeneous subdomain.
#[derive(Debug, Clone)]
pub struct SubdomainBoundary<'a> {
    pub parts: Vec<BoundaryPart<'a>>,
    /// Free-space wavenumber.
    pub k0: f64,
    /// Refractive index.
    pub index: f64,
    /// Transmission weight `η`.
    pub eta: f64,
}

impl<'a> SubdomainBoundary<'a> {
    pub fn new(parts: Vec<BoundaryPart<'a>>, k0: f64, index: f64, eta: f64) -> Result<Self, NtdError> {
        if parts.is_empty() {
            return Err(NtdError::Boundary("no boundary parts".into()));
        }
        for p in &parts {
            if p.orientation.abs() != 1.0 {
                return Err(NtdError::Boundary(format!("orientation {} is not ±1", p.orientation)));
            }
            let closed = p.mesh.curve.closed;
            if closed != (p.kind == PartKind::Closed) {
                return Err(NtdError::Boundary("part kind does not match curve closure".into()));
            }
            if p.kind == PartKind::Interface && p.profile.is_none() {
                return Err(NtdError::Boundary("interface part needs an absorbing profile".into()));
            }
        }
        if !(k0 > 0.0 && index > 0.0 && eta > 0.0) {
            return Err(NtdError::Boundary(format!("k0 = {k0}, n = {index}, eta = {eta}")));
        }
        Ok(Self { parts, k0, index, eta })
    }

    /// Wavenumber `k₀ n`.
    pub fn k(&self) -> f64 {
        self.k0 * self.index
    }

    /// Start index of each part in the stacked unknown vector, plus the total.
    pub fn offsets(&self) -> Vec<usize> {
        let mut out = vec![0];
        for p in &self.parts {
            out.push(out.last().unwrap() + p.mesh.n);
        }
        out
    }

    pub fn size(&self) -> usize {
        *self.offsets().last().unwrap()
    }

    fn contexts(&self) -> Vec<KernelContext<'a, f64>> {
        let k = self.k();
        self.parts.iter().map(|p| KernelContext::new(p.mesh, p.profile, k)).collect()
    }
}

/// Which operator to return from [`assemble_operator`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operator {
    S,
    K,
}

/// Assembled operators with orientation signs folded in.
#[derive(Debug, Clone)]
pub struct Operators {
    pub s: Mat<C64>,
    pub k: Mat<C64>,
    /// Diagonal `H_ll`.
    pub h: Vec<C64>,
}

/// How the diagonal `K̃₀[1]` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum K0Path {
    /// Angle formula plus the discrete Laplace double layer over `Γ_AB`
    /// inside the physical box; `−1` in the PML.
    Truncated,
    /// `−θ*/π` from the local interior angle.
    Exact,
}

/// Counterclockwise angle from `u` to `v` in `[0, 2π)`.
fn ccw_angle(u: Point<f64>, v: Point<f64>) -> f64 {
    let a = v[1].atan2(v[0]) - u[1].atan2(u[0]);
    a.rem_euclid(2.0 * PI)
}

/// `∠A x B` seen from the left of the traversal (`orientation = +1`) or the
/// right.
fn subtended_angle(mesh: &Mesh, x: Point<f64>, orientation: f64) -> f64 {
    let a = mesh.curve.endpoint_a();
    let b = mesh.curve.endpoint_b();
    let left = ccw_angle([b[0] - x[0], b[1] - x[1]], [a[0] - x[0], a[1] - x[1]]);
    if orientation > 0.0 {
        left
    } else {
        2.0 * PI - left
    }
}

/// Interior angle at node `l` on the side selected by `orientation`.
fn local_angle(mesh: &Mesh, l: i64, orientation: f64) -> f64 {
    use crate::geometry::Side;
    let before = mesh.eval(Param::node(l), Side::Before).tau;
    let after = mesh.eval(Param::node(l), Side::After).tau;
    let mut left = ccw_angle(after, [-before[0], -before[1]]);
    if left < 1e-14 {
        left = 2.0 * PI;
    }
    if orientation > 0.0 {
        left
    } else {
        2.0 * PI - left
    }
}

/// `K₀[1]` of the part at row `l` by the Alpert rule on the real geometry,
/// with respect to the part's right normal.
pub fn laplace_double_layer_of_one(mesh: &Mesh, stencils: &AlpertStencils, l: usize) -> Result<C64, KernelError> {
    let ctx = KernelContext::laplace(mesh);
    laplace_row_sum(&ctx, stencils, l)
}

fn laplace_row_sum(ctx: &KernelContext<'_, f64>, stencils: &AlpertStencils, l: usize) -> Result<C64, KernelError> {
    let lp = Param::node(l as i64);
    stencils.apply_to_one(l, |node, frac| ctx.kernel_k0(lp, Param::new(node, frac)))
}

/// Diagonal entry `H_ll` for row `l` (1-based) of part `part`.
pub fn k0_diag(boundary: &SubdomainBoundary<'_>, part: usize, l: usize, path: K0Path) -> Result<C64, NtdError> {
    let stencils = AlpertStencils::new(&AlpertRule::order6(), boundary.parts[part].mesh.n)?;
    let lap = KernelContext::laplace(boundary.parts[part].mesh);
    k0_diag_with(boundary, part, l, path, &stencils, &lap)
}

fn k0_diag_with(
    boundary: &SubdomainBoundary<'_>,
    part: usize,
    l: usize,
    path: K0Path,
    stencils: &AlpertStencils,
    lap: &KernelContext<'_, f64>,
) -> Result<C64, NtdError> {
    let p = &boundary.parts[part];
    let mesh = p.mesh;
    let x = mesh.nodes[l - 1].x;
    let s = p.orientation;
    let own = match (p.kind, path) {
        (PartKind::Interface, K0Path::Truncated) => {
            let profile = p.profile.expect("checked in SubdomainBoundary::new");
            let a1 = profile.a1();
            if x[0].abs() <= a1 {
                if x[0].abs() == a1 {
                    debug!("node {l} sits on a PML entrance; using the physical-part formula");
                }
                let theta = subtended_angle(mesh, x, s);
                C64::new(-theta / PI, 0.0) + laplace_row_sum(lap, stencils, l)? * s
            } else {
                C64::new(-1.0, 0.0)
            }
        }
        (PartKind::Closed, K0Path::Truncated) => laplace_row_sum(lap, stencils, l)? * s,
        (kind, K0Path::Exact) => {
            let theta = if kind == PartKind::Interface && l == mesh.n { PI } else { local_angle(mesh, l as i64, s) };
            return Ok(C64::new(-theta / PI, 0.0));
        }
    };
    // An interface bounding the subdomain contributes −2 at points off it; a
    // closed curve contributes nothing at points outside it.
    let others: f64 = boundary
        .parts
        .iter()
        .enumerate()
        .filter(|(q, o)| *q != part && o.kind == PartKind::Interface)
        .map(|_| -2.0)
        .sum();
    Ok(own + others)
}

/// Assembles `S`, `K` (orientation folded in) and the diagonal `H`.
pub fn assemble(boundary: &SubdomainBoundary<'_>) -> Result<Operators, NtdError> {
    assemble_with(boundary, K0Path::Truncated)
}

pub fn assemble_with(boundary: &SubdomainBoundary<'_>, path: K0Path) -> Result<Operators, NtdError> {
    let rule = AlpertRule::order6();
    let offsets = boundary.offsets();
    let n = *offsets.last().unwrap();
    let ctxs = boundary.contexts();
    let stencils: Vec<AlpertStencils> = boundary
        .parts
        .iter()
        .map(|p| AlpertStencils::new(&rule, p.mesh.n))
        .collect::<Result<_, _>>()?;
    let laps: Vec<_> = boundary.parts.iter().map(|p| KernelContext::laplace(p.mesh)).collect();
    let k = boundary.k();

    // row index → (part, local row)
    let locate = |row: usize| -> (usize, usize) {
        let p = offsets.partition_point(|&o| o <= row) - 1;
        (p, row - offsets[p] + 1)
    };

    let mut sbuf = vec![C64::new(0.0, 0.0); n * n];
    let mut kbuf = vec![C64::new(0.0, 0.0); n * n];
    let h: Vec<C64> = (0..n)
        .into_par_iter()
        .map(|row| {
            let (p, l) = locate(row);
            k0_diag_with(boundary, p, l, path, &stencils[p], &laps[p])
        })
        .collect::<Result<_, _>>()?;

    sbuf.par_chunks_mut(n)
        .zip(kbuf.par_chunks_mut(n))
        .enumerate()
        .try_for_each(|(row, (srow, krow))| -> Result<(), NtdError> {
            let (p, l) = locate(row);
            for (q, part) in boundary.parts.iter().enumerate() {
                let (lo, hi) = (offsets[q], offsets[q + 1]);
                let (sq, kq) = (&mut srow[lo..hi], &mut krow[lo..hi]);
                if q == p {
                    let ctx = &ctxs[p];
                    let lp = Param::node(l as i64);
                    stencils[p].rows::<2, KernelError, _>(
                        l,
                        |node, frac| {
                            let (s, kk) = ctx.kernel_sk(lp, Param::new(node, frac))?;
                            Ok([s, kk])
                        },
                        [&mut *sq, &mut *kq],
                    )?;
                } else {
                    let x = ctxs[p].node(l as i64).xt;
                    let hq = 1.0 / part.mesh.n as f64;
                    for j in 0..part.mesh.n {
                        let (s, kk) = sample_sk(&x, ctxs[q].node(j as i64 + 1), k)?;
                        sq[j] = s * hq;
                        kq[j] = kk * hq;
                    }
                }
                let sign = part.orientation;
                if sign != 1.0 {
                    sq.iter_mut().for_each(|v| *v *= sign);
                    kq.iter_mut().for_each(|v| *v *= sign);
                }
            }
            Ok(())
        })?;

    let s = Mat::from_fn(n, n, |i, j| sbuf[i * n + j]);
    drop(sbuf);
    let kmat = Mat::from_fn(n, n, |i, j| kbuf[i * n + j]);
    Ok(Operators { s, k: kmat, h })
}

/// One assembled operator.
pub fn assemble_operator(boundary: &SubdomainBoundary<'_>, which: Operator) -> Result<Mat<C64>, NtdError> {
    let ops = assemble(boundary)?;
    Ok(match which {
        Operator::S => ops.s,
        Operator::K => ops.k,
    })
}

/// Dense LU factorization with a 1-norm condition estimate.
pub struct Factorized {
    lu: PartialPivLu<C64>,
    pub cond_estimate: f64,
}

impl Factorized {
    pub fn new(a: &Mat<C64>) -> Result<Self, NtdError> {
        let lu = a.partial_piv_lu();
        let norm_a = norm1(a);
        let inv = inverse_norm1_estimate(&lu, a.nrows());
        let cond = norm_a * inv;
        if !cond.is_finite() || cond > SINGULAR_COND {
            return Err(NtdError::Singular { cond });
        }
        Ok(Self { lu, cond_estimate: cond })
    }

    pub fn solve(&self, rhs: &Mat<C64>) -> Mat<C64> {
        self.lu.solve(rhs)
    }

    pub fn solve_vec(&self, rhs: &[C64]) -> Vec<C64> {
        let b = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        let x = self.lu.solve(&b);
        (0..rhs.len()).map(|i| x[(i, 0)]).collect()
    }
}

/// Maximum absolute column sum.
pub fn norm1(a: &Mat<C64>) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Hager–Higham estimate of `‖A⁻¹‖₁` from an existing factorization.
fn inverse_norm1_estimate(lu: &PartialPivLu<C64>, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let col = |v: &[C64]| Mat::from_fn(n, 1, |i, _| v[i]);
    let mut x = vec![C64::new(1.0 / n as f64, 0.0); n];
    let mut est = 0.0;
    let mut last = usize::MAX;
    for _ in 0..5 {
        let y = lu.solve(&col(&x));
        let y: Vec<C64> = (0..n).map(|i| y[(i, 0)]).collect();
        let new_est: f64 = y.iter().map(|v| v.norm()).sum();
        if !new_est.is_finite() {
            return f64::INFINITY;
        }
        if new_est <= est {
            break;
        }
        est = new_est;
        let xi: Vec<C64> = y
            .iter()
            .map(|v| if v.norm() > 0.0 { v / v.norm() } else { C64::new(1.0, 0.0) })
            .collect();
        let z = lu.solve_adjoint(&col(&xi));
        let z: Vec<C64> = (0..n).map(|i| z[(i, 0)]).collect();
        let (j, zmax) = z
            .iter()
            .enumerate()
            .map(|(i, v)| (i, v.norm()))
            .fold((0, -1.0), |acc, c| if c.1 > acc.1 { c } else { acc });
        let ztx: f64 = z.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum();
        if zmax <= ztx || j == last {
            break;
        }
        last = j;
        x = vec![C64::new(0.0, 0.0); n];
        x[j] = C64::new(1.0, 0.0);
    }
    // Higham's alternating-sign test vector guards against underestimates.
    let alt: Vec<C64> = (0..n)
        .map(|i| {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            C64::new(s * (1.0 + i as f64 / (n as f64 - 1.0).max(1.0)), 0.0)
        })
        .collect();
    let y = lu.solve(&col(&alt));
    let alt_est = 2.0 * (0..n).map(|i| y[(i, 0)].norm()).sum::<f64>() / (3.0 * n as f64);
    est.max(alt_est)
}

/// Scaled PML Neumann-to-Dirichlet matrix of one subdomain.
#[derive(Debug, Clone)]
pub struct NtdMatrix {
    pub matrix: Mat<C64>,
    /// 1-norm condition estimate of `K − H`.
    pub cond_estimate: f64,
    /// Part offsets in the stacked unknown vector.
    pub offsets: Vec<usize>,
}

impl NtdMatrix {
    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, phi: &[C64]) -> Vec<C64> {
        let n = self.size();
        assert_eq!(phi.len(), n, "density length");
        let mut out = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            let v = phi[j];
            if v == C64::new(0.0, 0.0) {
                continue;
            }
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.matrix[(i, j)] * v;
            }
        }
        out
    }
}

/// `N = (K − H)⁻¹ S`.
pub fn ntd_matrix(boundary: &SubdomainBoundary<'_>) -> Result<NtdMatrix, NtdError> {
    let ops = assemble(boundary)?;
    ntd_from_operators(ops, boundary.offsets())
}

pub fn ntd_from_operators(ops: Operators, offsets: Vec<usize>) -> Result<NtdMatrix, NtdError> {
    let Operators { s, mut k, h } = ops;
    for (i, hv) in h.iter().enumerate() {
        k[(i, i)] -= *hv;
    }
    let fac = Factorized::new(&k)?;
    drop(k);
    info!("NtD matrix of size {}: condition estimate {:.3e}", s.nrows(), fac.cond_estimate);
    let matrix = fac.solve(&s);
    Ok(NtdMatrix { matrix, cond_estimate: fac.cond_estimate, offsets })
}

/// Writes `a` as `b"PMLBIEM1"`, rows and columns as little-endian `u64`, then
/// row-major `(re, im)` pairs of little-endian `f64`.
pub fn dump_matrix(path: &Path, a: &Mat<C64>) -> Result<(), NtdError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(b"PMLBIEM1")?;
    f.write_all(&(a.nrows() as u64).to_le_bytes())?;
    f.write_all(&(a.ncols() as u64).to_le_bytes())?;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            f.write_all(&a[(i, j)].re.to_le_bytes())?;
            f.write_all(&a[(i, j)].im.to_le_bytes())?;
        }
    }
    f.flush()?;
    Ok(())
}

/// Reads a matrix written by [`dump_matrix`].
pub fn load_matrix(path: &Path) -> Result<Mat<C64>, NtdError> {
    let bytes = std::fs::read(path)?;
    let bad = || NtdError::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, "not a matrix dump"));
    if bytes.len() < 24 || &bytes[..8] != b"PMLBIEM1" {
        return Err(bad());
    }
    let word = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap()) as usize;
    let (r, c) = (word(8), word(16));
    if bytes.len() != 24 + 16 * r * c {
        return Err(bad());
    }
    let f = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    Ok(Mat::from_fn(r, c, |i, j| {
        let o = 24 + 16 * (i * c + j);
        C64::new(f(o), f(o + 8))
    }))
}

/// `−(1/π) ∫_{θ₁}^{θ₂} [(x̃₁ − x̃₁°) x̃₂' − x̃₁'(x̃₂ − x̃₂°)] / (x̃ − x̃°)² dt` over
/// the circle `x° + ε(cos t, sin t)` in stretched coordinates; its `ε → 0`
/// limit is `K̃₀[1](x°)`.
pub fn k0_circle_integral(profile: &Profile, x0: Point<f64>, eps: f64, theta1: f64, theta2: f64) -> C64 {
    let (gx, gw) = crate::quadrature::gauss_legendre::<f64>(32).expect("32-point rule");
    let xt0 = profile.stretch(x0);
    let panels = 16;
    let width = (theta2 - theta1) / panels as f64;
    let mut acc = C64::new(0.0, 0.0);
    for q in 0..panels {
        let lo = theta1 + width * q as f64;
        for (&t, &w) in gx.iter().zip(&gw) {
            let t = lo + width * t;
            let x = [x0[0] + eps * t.cos(), x0[1] + eps * t.sin()];
            let xt = profile.stretch(x);
            let d = [xt[0] - xt0[0], xt[1] - xt0[1]];
            let dx = profile.stretched_tangent(x, [-t.sin(), t.cos()]);
            let dx = [dx[0] * eps, dx[1] * eps];
            let num = d[0] * dx[1] - dx[0] * d[1];
            acc += num / (d[0] * d[0] + d[1] * d[1]) * (w * width);
        }
    }
    -acc / PI
}

/// Linear extrapolation to `ε = 0` of [`k0_circle_integral`] from the two
/// smallest radii, returning `(limit, values)`.
pub fn k0_epsilon_limit(profile: &Profile, x0: Point<f64>, radii: &[f64], theta1: f64, theta2: f64) -> (C64, Vec<C64>) {
    let vals: Vec<C64> = radii.iter().map(|&e| k0_circle_integral(profile, x0, e, theta1, theta2)).collect();
    let m = vals.len();
    if m < 2 {
        return (vals.first().copied().unwrap_or_default(), vals);
    }
    let (e1, e2) = (radii[m - 2], radii[m - 1]);
    let (v1, v2) = (vals[m - 2], vals[m - 1]);
    let lim = v2 + (v2 - v1) * (e2 / (e1 - e2));
    (lim, vals)
}
