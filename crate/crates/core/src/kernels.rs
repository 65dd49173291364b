//! Complexified differences `x̃(t) − x̃(t_l)`, the numerator `κ̄` and the
//! Nyström kernels `S`, `K` and the Laplace double-layer kernel `K₀`.
//!
//! Two evaluation paths exist. The naive path subtracts cached stretched
//! coordinates. The stabilized path never subtracts positions: along the
//! parameter interval from `t_l` to `t` it splits at every junction and
//! integrates on each smooth piece
//!
//! - `D = ∫ τ̃ ds` (the coordinate difference),
//! - `I = ∫ τ̃' ds` (the tangent change),
//! - `E = ∫ τ̃'(s) ∧ (x̃(s) − x̃(s_start)) ds` (nested),
//!
//! with 16-point Gauss rules, where `τ̃ = dx̃/ds`. Piece lengths come from
//! integrating `w'` over exact node-unit offsets. With pieces `1..m` in path
//! order and tangent jumps `J` at the junctions,
//!
//! `κ̄ = Σ_j [E_j + (Σ_{i>j} I_i + Σ_{jumps after j} J) ∧ D_j]`.
//!
//! The stabilized path is taken when `|Δu| < near` node units, or when
//! `|Δu| < reach` and `t_l` is within `halo` nodes of a junction.

use crate::geometry::{wedge, CurvePoint, GradedMesh, LocalPos, Param, Point, Side};
use crate::pml::{PmlProfile, StretchedPoint};
use crate::quadrature::gauss_legendre;
use crate::scalar::{ci, cx, czero, Real};
use crate::special_fn::{hankel01, sqrt_nonneg_re, SpecialFnError};
use num_complex::Complex;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("kernel evaluated at coincident points (row {row}, u = {u})")]
    Coincident { row: i64, u: f64 },
    #[error("non-finite kernel value (row {row}, u = {u})")]
    NonFinite { row: i64, u: f64 },
    #[error(transparent)]
    SpecialFn(#[from] SpecialFnError),
}

type C2<T> = [Complex<T>; 2];

#[inline]
fn cwedge<T: Real>(a: C2<T>, b: C2<T>) -> Complex<T> {
    a[1] * b[0] - a[0] * b[1]
}

#[inline]
fn cadd<T: Real>(a: C2<T>, b: C2<T>) -> C2<T> {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
fn cscale<T: Real>(a: C2<T>, s: T) -> C2<T> {
    [a[0] * s, a[1] * s]
}

/// Stretched geometry at one mesh position.
#[derive(Debug, Clone, Copy)]
pub struct StretchedSample<T> {
    pub x: Point<T>,
    pub xt: StretchedPoint<T>,
    pub taut: C2<T>,
    pub dtaut: C2<T>,
    pub wprime: T,
}

/// Difference vector and `κ̄` for a pair of mesh positions.
#[derive(Debug, Clone, Copy)]
pub struct PairGeometry<T> {
    pub delta: C2<T>,
    pub kappa_bar: Complex<T>,
    pub wprime: T,
}

impl<T: Real> PairGeometry<T> {
    pub fn dist(&self) -> Complex<T> {
        sqrt_nonneg_re(self.delta[0] * self.delta[0] + self.delta[1] * self.delta[1])
    }

    pub fn kappa(&self) -> Complex<T> {
        self.kappa_bar * self.wprime
    }
}

/// Smooth piece of a stabilization path inside one segment.
#[derive(Debug, Clone, Copy)]
struct Piece<T> {
    seg: usize,
    a0: T,
    b0: T,
    /// Signed node-unit extent.
    da: T,
}

/// Kernel evaluation context on one mesh.
#[derive(Debug, Clone)]
pub struct KernelContext<'a, T> {
    pub mesh: &'a GradedMesh<T>,
    /// `None` evaluates on the real geometry.
    pub profile: Option<&'a PmlProfile<T>>,
    /// Wavenumber `k₀ n`.
    pub k: T,
    /// Parameter distance (node units) below which the stabilized path is used.
    pub near: T,
    /// Junction halo (node units).
    pub halo: T,
    /// Parameter distance reached by the stabilized path inside the halo.
    pub reach: T,
    gl_x: Vec<T>,
    gl_w: Vec<T>,
    cache: Vec<StretchedSample<T>>,
    corners: Vec<i64>,
}

impl<'a, T: Real> KernelContext<'a, T> {
    pub fn new(mesh: &'a GradedMesh<T>, profile: Option<&'a PmlProfile<T>>, k: T) -> Self {
        let (gl_x, gl_w) = gauss_legendre::<T>(16).expect("16-point rule");
        let mut ctx = Self {
            mesh,
            profile,
            k,
            near: T::of(10.0),
            halo: T::of(5.0),
            reach: T::of(15.0),
            gl_x,
            gl_w,
            cache: Vec::new(),
            corners: mesh.corner_nodes(),
        };
        ctx.cache = mesh.nodes.iter().map(|p| ctx.stretch_point(p)).collect();
        ctx
    }

    /// Laplace context on the real geometry.
    pub fn laplace(mesh: &'a GradedMesh<T>) -> Self {
        Self::new(mesh, None, T::zero())
    }

    fn stretch_point(&self, p: &CurvePoint<T>) -> StretchedSample<T> {
        let (xt, taut, dtaut) = match self.profile {
            Some(pr) => (pr.stretch(p.x), pr.stretched_tangent(p.x, p.tau), pr.stretched_dtau(p.x, p.tau, p.dtau)),
            None => (real2(p.x), real2(p.tau), real2(p.dtau)),
        };
        StretchedSample { x: p.x, xt, taut, dtaut, wprime: p.wprime }
    }

    fn tangents_at(&self, seg: usize, pos: LocalPos<T>) -> (C2<T>, C2<T>) {
        let sp = self.mesh.curve.segments[seg].eval(pos);
        match self.profile {
            Some(pr) => (pr.stretched_tangent(sp.x, sp.tau), pr.stretched_dtau(sp.x, sp.tau, sp.dtau)),
            None => (real2(sp.tau), real2(sp.dtau)),
        }
    }

    /// Cached data at node `j ∈ 1..=N`.
    pub fn node(&self, j: i64) -> &StretchedSample<T> {
        &self.cache[(j - 1) as usize]
    }

    /// Stretched geometry at any mesh position.
    pub fn sample(&self, p: Param<T>, side: Side) -> StretchedSample<T> {
        let n = self.mesh.n as i64;
        if p.frac == T::zero() && p.node >= 1 && p.node <= n && side == Side::Before {
            return self.cache[(p.node - 1) as usize];
        }
        let cp = self.mesh.eval(p, side);
        self.stretch_point(&cp)
    }

    /// Signed parameter difference `u_p − u_l` in node units; for closed curves
    /// the shorter way around.
    pub fn param_gap(&self, l: Param<T>, p: Param<T>) -> (i64, T) {
        let n = self.mesh.n as i64;
        let l = self.mesh.normalize(l);
        let p = self.mesh.normalize(p);
        let mut dn = p.node - l.node;
        let df = p.frac - l.frac;
        if self.mesh.curve.closed {
            let half = T::of_int(n) / T::of(2.0);
            while T::of_int(dn) + df > half {
                dn -= n;
            }
            while T::of_int(dn) + df < -half {
                dn += n;
            }
        }
        (dn, df)
    }

    fn corner_distance(&self, l: Param<T>) -> T {
        let n = self.mesh.n as i64;
        let u = self.mesh.normalize(l);
        let mut best = T::infinity();
        for &c in &self.corners {
            let mut d = (T::of_int(u.node - c) + u.frac).abs();
            if self.mesh.curve.closed {
                d = d.min(T::of_int(n) - d);
            }
            best = best.min(d);
        }
        best
    }

    pub fn use_stabilized(&self, l: Param<T>, p: Param<T>) -> bool {
        let (dn, df) = self.param_gap(l, p);
        let gap = (T::of_int(dn) + df).abs();
        gap < self.near || (gap < self.reach && self.corner_distance(l) < self.halo)
    }

    /// `(x̃(p) − x̃(l), κ̄)` by direct subtraction.
    pub fn naive_pair(&self, l: Param<T>, p: Param<T>) -> PairGeometry<T> {
        let sl = self.sample(l, Side::Before);
        let sp = self.sample(p, Side::Before);
        let delta = [sp.xt[0] - sl.xt[0], sp.xt[1] - sl.xt[1]];
        PairGeometry { delta, kappa_bar: cwedge(sp.taut, delta), wprime: sp.wprime }
    }

    fn pieces(&self, l: Param<T>, p: Param<T>) -> (Vec<Piece<T>>, Vec<C2<T>>, i32) {
        let (dn, df) = self.param_gap(l, p);
        let total = T::of_int(dn) + df;
        let dir: i32 = if total < T::zero() { -1 } else { 1 };
        let side = if dir > 0 { Side::After } else { Side::Before };
        let target = Param::new(l.node + dn, l.frac + df);
        let mut cur = l;
        let mut pieces = Vec::new();
        let mut jumps = Vec::new();
        let m = self.mesh.counts.len();
        for _ in 0..=(2 * m + 2) {
            let norm = self.mesh.normalize(cur);
            let shift = cur.node - norm.node;
            let (seg, a, b) = self.mesh.locate(norm, side);
            let remaining = (T::of_int(target.node - cur.node) + (target.frac - cur.frac)) * T::of_int(dir as i64);
            let room = if dir > 0 { b } else { a };
            let d = T::of_int(dir as i64);
            if remaining <= room {
                pieces.push(Piece { seg, a0: a, b0: b, da: d * remaining });
                break;
            }
            pieces.push(Piece { seg, a0: a, b0: b, da: d * room });
            let junction = if dir > 0 { self.mesh.offsets[seg + 1] } else { self.mesh.offsets[seg] } + shift;
            cur = Param::node(junction);
            let before = self.sample_side(cur, Side::Before);
            let after = self.sample_side(cur, Side::After);
            let mut j = if dir > 0 { sub2(after, before) } else { sub2(before, after) };
            let tiny = T::of(64.0) * T::epsilon();
            if j[0].norm() < tiny && j[1].norm() < tiny {
                j = [czero(), czero()];
            }
            jumps.push(j);
        }
        (pieces, jumps, dir)
    }

    fn sample_side(&self, p: Param<T>, side: Side) -> C2<T> {
        let cp = self.mesh.eval(p, side);
        self.tangents_at(cp.segment, cp.local).0
    }

    /// Arclength of a piece from `∫ w'` over its node-unit extent.
    fn piece_length(&self, pc: &Piece<T>) -> T {
        let nseg = T::of_int(self.mesh.counts[pc.seg] as i64);
        let len = self.mesh.curve.segments[pc.seg].length;
        let span = pc.da.abs();
        if span == T::zero() {
            return T::zero();
        }
        let sub = (span / T::of(2.0)).ceil().to_i64().unwrap_or(1).max(1);
        let step = pc.da / T::of_int(sub);
        let mut acc = T::zero();
        for q in 0..sub {
            let lo = step * T::of_int(q);
            for (&x, &w) in self.gl_x.iter().zip(&self.gl_w) {
                let off = lo + step * x;
                let g = crate::geometry::grading_local(pc.a0 + off, pc.b0 - off, nseg, self.mesh.p);
                acc = acc + w * g.df;
            }
        }
        acc * span / T::of_int(sub) * len * T::of(2.0) / nseg
    }

    /// `(D, I, E)` on one piece.
    fn piece_integrals(&self, pc: &Piece<T>, dir: i32) -> (C2<T>, C2<T>, Complex<T>) {
        let ell = self.piece_length(pc);
        let zero2 = [czero::<T>(), czero()];
        if ell == T::zero() {
            return (zero2, zero2, czero());
        }
        let (start, _) = self.mesh.local_grading(pc.seg, pc.a0, pc.b0);
        let seglen = self.mesh.curve.segments[pc.seg].length;
        let sgn = T::of_int(dir as i64);
        let at = |sigma: T| -> LocalPos<T> {
            match start {
                LocalPos::FromStart(s0) => LocalPos::FromStart((s0 + sgn * sigma).max(T::zero()).min(seglen)),
                LocalPos::FromEnd(e0) => LocalPos::FromEnd((e0 - sgn * sigma).max(T::zero()).min(seglen)),
            }
        };
        let mut d_total = zero2;
        let mut i_total = zero2;
        let mut e_total = czero::<T>();
        for (&xo, &wo) in self.gl_x.iter().zip(&self.gl_w) {
            let so = ell * xo;
            let (tau_o, dtau_o) = self.tangents_at(pc.seg, at(so));
            d_total = cadd(d_total, cscale(tau_o, wo));
            i_total = cadd(i_total, cscale(dtau_o, wo));
            let mut inner = zero2;
            for (&xi, &wi) in self.gl_x.iter().zip(&self.gl_w) {
                let (t, _) = self.tangents_at(pc.seg, at(so * xi));
                inner = cadd(inner, cscale(t, wi));
            }
            let d_partial = cscale(inner, so * sgn);
            e_total = e_total + cwedge(dtau_o, d_partial) * wo;
        }
        let f = ell * sgn;
        (cscale(d_total, f), cscale(i_total, f), e_total * f)
    }

    /// Stabilized `(x̃(p) − x̃(l), κ̄)`.
    pub fn stable_pair(&self, l: Param<T>, p: Param<T>) -> PairGeometry<T> {
        let wprime = self.sample(p, Side::Before).wprime;
        let (pieces, jumps, dir) = self.pieces(l, p);
        let ints: Vec<_> = pieces.iter().map(|pc| self.piece_integrals(pc, dir)).collect();
        let m = ints.len();
        let mut delta = [czero::<T>(), czero()];
        let mut kappa = czero::<T>();
        // tail = Σ_{i>j} I_i + jumps after piece j, accumulated backwards
        let mut tail = [czero::<T>(), czero()];
        for j in (0..m).rev() {
            let (d, _, e) = ints[j];
            if j + 1 < m {
                tail = cadd(tail, jumps[j]);
                tail = cadd(tail, ints[j + 1].1);
            }
            kappa = kappa + e + cwedge(tail, d);
            delta = cadd(delta, d);
        }
        PairGeometry { delta, kappa_bar: kappa, wprime }
    }

    /// `x̃_axis(p) − x̃_axis(l)` by the stabilized path (`axis ∈ {1, 2}`).
    pub fn stable_delta(&self, l: Param<T>, p: Param<T>, axis: usize) -> Complex<T> {
        self.stable_pair(l, p).delta[axis - 1]
    }

    pub fn stable_dist(&self, l: Param<T>, p: Param<T>) -> Complex<T> {
        self.stable_pair(l, p).dist()
    }

    pub fn stable_kappa_bar(&self, l: Param<T>, p: Param<T>) -> Complex<T> {
        self.stable_pair(l, p).kappa_bar
    }

    /// Pair geometry through whichever path the thresholds select.
    pub fn pair(&self, l: Param<T>, p: Param<T>) -> PairGeometry<T> {
        if self.use_stabilized(l, p) {
            self.stable_pair(l, p)
        } else {
            self.naive_pair(l, p)
        }
    }

    fn checked_dist(&self, l: Param<T>, p: Param<T>, g: &PairGeometry<T>) -> Result<Complex<T>, KernelError> {
        let r = g.dist();
        if r.re == T::zero() && r.im == T::zero() {
            return Err(KernelError::Coincident { row: l.node, u: p.u().f64() });
        }
        Ok(r)
    }

    /// `(S, K)` with `S = (i/2) H₀(k dist)` and `K = −(ik/2)(κ/dist) H₁(k dist)`.
    pub fn kernel_sk(&self, l: Param<T>, p: Param<T>) -> Result<(Complex<T>, Complex<T>), KernelError> {
        let g = self.pair(l, p);
        let r = self.checked_dist(l, p, &g)?;
        let (h0, h1) = hankel01(r * self.k)?;
        let half_i = ci::<T>() * T::of(0.5);
        let s = half_i * h0;
        let k = -half_i * self.k * g.kappa() / r * h1;
        if !(s.re.is_finite() && s.im.is_finite() && k.re.is_finite() && k.im.is_finite()) {
            return Err(KernelError::NonFinite { row: l.node, u: p.u().f64() });
        }
        Ok((s, k))
    }

    pub fn kernel_s(&self, l: Param<T>, p: Param<T>) -> Result<Complex<T>, KernelError> {
        Ok(self.kernel_sk(l, p)?.0)
    }

    pub fn kernel_k(&self, l: Param<T>, p: Param<T>) -> Result<Complex<T>, KernelError> {
        Ok(self.kernel_sk(l, p)?.1)
    }

    /// Laplace double-layer kernel `−(1/π) κ/dist²`.
    pub fn kernel_k0(&self, l: Param<T>, p: Param<T>) -> Result<Complex<T>, KernelError> {
        let g = self.pair(l, p);
        let r2 = g.delta[0] * g.delta[0] + g.delta[1] * g.delta[1];
        if r2.re == T::zero() && r2.im == T::zero() {
            return Err(KernelError::Coincident { row: l.node, u: p.u().f64() });
        }
        Ok(-g.kappa() / r2 / T::PI())
    }
}

#[inline]
fn real2<T: Real>(x: Point<T>) -> C2<T> {
    [cx(x[0], T::zero()), cx(x[1], T::zero())]
}

#[inline]
fn sub2<T: Real>(a: C2<T>, b: C2<T>) -> C2<T> {
    [a[0] - b[0], a[1] - b[1]]
}

/// `(S, K)` for a target `x̃` off the source curve and a source sample `y`,
/// with `κ = w'(y) τ̃(y) ∧ (ỹ − x̃)`. Used for cross blocks between disjoint
/// curves and for field evaluation.
pub fn sample_sk<T: Real>(
    xt: &StretchedPoint<T>,
    y: &StretchedSample<T>,
    k: T,
) -> Result<(Complex<T>, Complex<T>), KernelError> {
    let delta = [y.xt[0] - xt[0], y.xt[1] - xt[1]];
    let r = sqrt_nonneg_re(delta[0] * delta[0] + delta[1] * delta[1]);
    if r.re == T::zero() && r.im == T::zero() {
        return Err(KernelError::Coincident { row: -1, u: f64::NAN });
    }
    let (h0, h1) = hankel01(r * k)?;
    let half_i = ci::<T>() * T::of(0.5);
    let kappa = cwedge(y.taut, delta) * y.wprime;
    Ok((half_i * h0, -half_i * k * kappa / r * h1))
}

/// `κ̄` of a real pair of plane points for a unit tangent, `τ ∧ (y − x)`.
pub fn kappa_bar_real<T: Real>(tau: Point<T>, x: Point<T>, y: Point<T>) -> T {
    wedge(tau, [y[0] - x[0], y[1] - x[1]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{PiecewiseCurve, SmoothSegment};

    fn semicircles(per: usize) -> GradedMesh<f64> {
        let c = PiecewiseCurve::open(vec![
            SmoothSegment::line([-3.5, 0.0], [-2.0, 0.0]).unwrap(),
            SmoothSegment::arc([-2.0, 0.0], [0.0, 0.0], [-1.0, 0.0], false).unwrap(),
            SmoothSegment::arc([0.0, 0.0], [2.0, 0.0], [1.0, 0.0], true).unwrap(),
            SmoothSegment::line([2.0, 0.0], [3.5, 0.0]).unwrap(),
        ])
        .unwrap();
        GradedMesh::uniform_counts(c, per, 6).unwrap()
    }

    #[test]
    fn zero_gap_and_flat_segment() {
        let c = PiecewiseCurve::open(vec![SmoothSegment::line([-2.0, 0.0], [2.0, 0.0]).unwrap()]).unwrap();
        let m = GradedMesh::new(c, &[16], 6).unwrap();
        let ctx = KernelContext::laplace(&m);
        let l = Param::node(4);
        assert_eq!(ctx.stable_delta(l, l, 1), cx(0.0, 0.0));
        let p = Param::node(12);
        let d = ctx.stable_dist(l, p);
        let want = m.arclength(p) - m.arclength(l);
        assert!((d - cx(want, 0.0)).norm() < 1e-13 * want);
        assert_eq!(ctx.stable_kappa_bar(l, Param::new(6, 0.3)), cx(0.0, 0.0));
    }

    #[test]
    fn stabilized_matches_naive_on_smooth_pairs() {
        let m = semicircles(40);
        let pr = PmlProfile::new(2.5, 1.0, 1.0, 8).unwrap();
        let ctx = KernelContext::new(&m, Some(&pr), 2.0 * std::f64::consts::PI);
        for &(l, du) in &[(60i64, 3.4f64), (70, -7.25), (150, 5.0), (10, 2.5), (55, 9.0)] {
            let lp = Param::node(l);
            let p = Param::new(l + du.floor() as i64, du - du.floor());
            let a = ctx.stable_pair(lp, p);
            let b = ctx.naive_pair(lp, p);
            for ax in 0..2 {
                assert!((a.delta[ax] - b.delta[ax]).norm() <= 1e-12 * a.dist().norm(), "{l} {du}");
            }
            let scale = a.dist().norm();
            assert!((a.kappa_bar - b.kappa_bar).norm() <= 1e-11 * scale, "{l} {du}");
        }
    }

    #[test]
    fn corner_straddling_pair_matches_naive() {
        let m = semicircles(40);
        let ctx = KernelContext::laplace(&m);
        let corner = m.offsets[1];
        let l = Param::node(corner - 3);
        let p = Param::new(corner + 4, 0.5);
        let a = ctx.stable_pair(l, p);
        let b = ctx.naive_pair(l, p);
        assert!((a.kappa_bar - b.kappa_bar).norm() < 1e-10 * a.dist().norm());
        assert!((a.dist() - b.dist()).norm() < 1e-12 * a.dist().norm());
    }

    #[test]
    fn circle_kappa_closed_form() {
        let c = PiecewiseCurve::closed(vec![
            SmoothSegment::arc([1.0, 0.0], [-1.0, 0.0], [0.0, 0.0], true).unwrap(),
            SmoothSegment::arc([-1.0, 0.0], [1.0, 0.0], [0.0, 0.0], true).unwrap(),
        ])
        .unwrap();
        let m = GradedMesh::new(c, &[32, 32], 6).unwrap();
        let ctx = KernelContext::laplace(&m);
        for &(l, du) in &[(5i64, 1.7f64), (20, -3.2), (31, 2.0), (64, 4.5), (2, -6.6)] {
            let lp = Param::node(l);
            let p = Param::new(l + du.floor() as i64, du - du.floor());
            let gap = m.arclength(m.normalize(p)) - m.arclength(lp);
            let ds = gap - (gap / (2.0 * std::f64::consts::PI)).round() * 2.0 * std::f64::consts::PI;
            // τ(s) ∧ (x(s) − x(s_l)) = 2 sin²(Δs/2) on the unit circle traversed counterclockwise
            let want = 2.0 * (ds / 2.0).sin().powi(2);
            let got = ctx.stable_kappa_bar(lp, p);
            assert!((got.re - want).abs() < 1e-10 * want.max(1e-3) && got.im.abs() < 1e-14, "{l} {du}: {got} vs {want}");
        }
    }

    #[test]
    fn kernel_reductions() {
        let c = PiecewiseCurve::open(vec![SmoothSegment::line([-2.0, 0.0], [2.0, 0.0]).unwrap()]).unwrap();
        let m = GradedMesh::new(c, &[64], 6).unwrap();
        let k = 2.0 * std::f64::consts::PI;
        let ctx = KernelContext::new(&m, None, k);
        let (s, kk) = ctx.kernel_sk(Param::node(10), Param::node(40)).unwrap();
        let d = m.arclength(Param::node(40)) - m.arclength(Param::node(10));
        let (h0, _) = hankel01(cx(k * d, 0.0)).unwrap();
        assert!((s - h0 * cx(0.0, 0.5)).norm() < 1e-14);
        assert_eq!(kk, cx(0.0, 0.0));
        assert!(ctx.kernel_s(Param::node(10), Param::node(10)).is_err());
    }
}
