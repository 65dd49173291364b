//! Independent reference solutions.
//!
//! - [`layered_green`]: total field of a point source above a flat interface,
//!   from its Sommerfeld (spectral) representation.
//! - [`highprec_hankel`]: `H₀⁽¹⁾` and `H₁⁽¹⁾` from the ascending series in
//!   320-bit arithmetic.

use crate::solver::LayeredMedium;
use crate::special_fn::sqrt_nonneg_re;
use crate::C64;
use thiserror::Error;
use astro_float::{BigFloat, Consts, RoundingMode, Sign};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("argument out of range: {0}")]
    Range(String),
    #[error("Sommerfeld integral did not converge: {0}")]
    NoConvergence(String),
}

/// Working precision of the Hankel oracle in bits.
pub const HP_PRECISION: usize = 320;
/// Largest supported `|z|`.
pub const HP_MAX_RADIUS: f64 = 50.0;

const RM: RoundingMode = RoundingMode::ToEven;

#[derive(Clone)]
struct Cb {
    re: BigFloat,
    im: BigFloat,
}

impl Cb {
    fn real(x: BigFloat) -> Self {
        Self { re: x, im: BigFloat::from_f64(0.0, HP_PRECISION) }
    }
    fn from_c64(z: C64) -> Self {
        Self { re: BigFloat::from_f64(z.re, HP_PRECISION), im: BigFloat::from_f64(z.im, HP_PRECISION) }
    }
    fn add(&self, o: &Self) -> Self {
        Self { re: self.re.add(&o.re, HP_PRECISION, RM), im: self.im.add(&o.im, HP_PRECISION, RM) }
    }
    fn sub(&self, o: &Self) -> Self {
        Self { re: self.re.sub(&o.re, HP_PRECISION, RM), im: self.im.sub(&o.im, HP_PRECISION, RM) }
    }
    fn mul(&self, o: &Self) -> Self {
        let p = HP_PRECISION;
        let re = self.re.mul(&o.re, p, RM).sub(&self.im.mul(&o.im, p, RM), p, RM);
        let im = self.re.mul(&o.im, p, RM).add(&self.im.mul(&o.re, p, RM), p, RM);
        Self { re, im }
    }
    fn scale(&self, s: &BigFloat) -> Self {
        Self { re: self.re.mul(s, HP_PRECISION, RM), im: self.im.mul(s, HP_PRECISION, RM) }
    }
    fn div_real(&self, s: &BigFloat) -> Self {
        Self { re: self.re.div(s, HP_PRECISION, RM), im: self.im.div(s, HP_PRECISION, RM) }
    }
    fn recip(&self) -> Self {
        let p = HP_PRECISION;
        let d = self.re.mul(&self.re, p, RM).add(&self.im.mul(&self.im, p, RM), p, RM);
        Self { re: self.re.div(&d, p, RM), im: self.im.neg().div(&d, p, RM) }
    }
    /// Multiplication by `i`.
    fn times_i(&self) -> Self {
        Self { re: self.im.neg(), im: self.re.clone() }
    }
    fn norm_f64(&self) -> f64 {
        to_f64(&self.re).hypot(to_f64(&self.im))
    }
    fn to_c64(&self) -> C64 {
        C64::new(to_f64(&self.re), to_f64(&self.im))
    }
}

/// Nearest `f64`, from the two leading mantissa words.
fn to_f64(x: &BigFloat) -> f64 {
    match x.as_raw_parts() {
        Some((m, _, sign, e, _)) => {
            if x.is_zero() || m.is_empty() {
                return 0.0;
            }
            let top = m[m.len() - 1] as f64;
            let next = if m.len() > 1 { m[m.len() - 2] as f64 } else { 0.0 };
            let e = e as i32;
            let v = top * 2f64.powi(e - 64) + next * 2f64.powi(e - 128);
            if sign == Sign::Neg {
                -v
            } else {
                v
            }
        }
        None => f64::NAN,
    }
}

fn consts() -> Consts {
    Consts::new().expect("constant cache")
}

/// Principal `ln z` for `Im z >= 0`, `z != 0`.
fn cln(z: &Cb, cc: &mut Consts) -> Cb {
    let p = HP_PRECISION;
    let r2 = z.re.mul(&z.re, p, RM).add(&z.im.mul(&z.im, p, RM), p, RM);
    let half = BigFloat::from_f64(0.5, p);
    let re = r2.ln(p, RM, cc).mul(&half, p, RM);
    let pi = cc.pi(p, RM);
    let im = if z.re.is_zero() {
        pi.mul(&half, p, RM)
    } else {
        let a = z.im.div(&z.re, p, RM).atan(p, RM, cc);
        if z.re.is_negative() {
            a.add(&pi, p, RM)
        } else {
            a
        }
    };
    Cb { re, im }
}

/// `(J₀, J₁, Y₀, Y₁)` from the ascending series at [`HP_PRECISION`] bits.
fn series_jy(z: &Cb, cc: &mut Consts) -> (Cb, Cb, Cb, Cb) {
    let p = HP_PRECISION;
    let bf = |x: f64| BigFloat::from_f64(x, p);
    let zero = Cb::real(bf(0.0));
    let half_z = z.div_real(&bf(2.0));
    let q = {
        let s = half_z.mul(&half_z);
        Cb { re: s.re.neg(), im: s.im.neg() }
    };
    let mut t = Cb::real(bf(1.0));
    let mut u = half_z.clone();
    let (mut j0, mut j1) = (t.clone(), u.clone());
    let mut s0 = zero;
    let mut s1 = u.clone();
    let mut h = bf(0.0);
    let eps = 2f64.powi(-(p as i32) + 8);
    for m in 1..2000 {
        let mf = m as f64;
        t = t.mul(&q).div_real(&bf(mf * mf));
        u = u.mul(&q).div_real(&bf(mf * (mf + 1.0)));
        h = h.add(&bf(1.0).div(&bf(mf), p, RM), p, RM);
        let h_next = h.add(&bf(1.0).div(&bf(mf + 1.0), p, RM), p, RM);
        j0 = j0.add(&t);
        j1 = j1.add(&u);
        s0 = s0.add(&t.scale(&h));
        s1 = s1.add(&u.scale(&h.add(&h_next, p, RM)));
        if mf > 2.0 * half_z.norm_f64() && t.norm_f64() < eps && u.norm_f64() < eps {
            break;
        }
    }
    let pi = cc.pi(p, RM);
    let two_pi = bf(2.0).div(&pi, p, RM);
    let mut lg = cln(&half_z, cc);
    // Euler–Mascheroni constant to 100 digits
    let gamma = BigFloat::parse(
        "0.5772156649015328606065120900824024310421593359399235988057672348848677267776646709369470632917467495", astro_float::Radix::Dec, p, RM, cc);
    lg.re = lg.re.add(&gamma, p, RM);
    let y0 = lg.mul(&j0).sub(&s0).scale(&two_pi);
    let y1 = lg
        .mul(&j1)
        .scale(&two_pi)
        .sub(&z.recip().scale(&two_pi))
        .sub(&s1.div_real(&pi));
    (j0, j1, y0, y1)
}

/// `H_ν⁽¹⁾(z) = J_ν(z) + iY_ν(z)` for `ν ∈ {0, 1}`, `0 < |z| <= 50`,
/// `Im z >= 0`, from the ascending series evaluated at [`HP_PRECISION`] bits
/// and rounded to `f64`.
pub fn highprec_hankel(order: u32, z: C64) -> Result<C64, OracleError> {
    let (h0, h1) = highprec_hankel01(z)?;
    match order {
        0 => Ok(h0),
        1 => Ok(h1),
        _ => Err(OracleError::Range(format!("order {order}"))),
    }
}

/// `(H₀⁽¹⁾(z), H₁⁽¹⁾(z))`, see [`highprec_hankel`].
pub fn highprec_hankel01(z: C64) -> Result<(C64, C64), OracleError> {
    let r = z.norm();
    if r == 0.0 || !(r <= HP_MAX_RADIUS) {
        return Err(OracleError::Range(format!("|z| = {r} outside (0, {HP_MAX_RADIUS}]")));
    }
    if z.im < 0.0 {
        return Err(OracleError::Range("lower half-plane".into()));
    }
    let mut cc = consts();
    let zb = Cb::from_c64(z);
    let (j0, j1, y0, y1) = series_jy(&zb, &mut cc);
    Ok((j0.add(&y0.times_i()).to_c64(), j1.add(&y1.times_i()).to_c64()))
}

/// Contour and accuracy settings of the spectral integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SommerfeldConfig {
    /// Maximum depth of the contour below the real axis, relative to the
    /// smaller wavenumber.
    pub depth: f64,
    /// Contour half-width in multiples of `k₀ max(n₁, n₂)`; the real axis is
    /// followed beyond it.
    pub contour_width: f64,
    /// Minimum truncation in multiples of `k₀ max(n₁, n₂)`.
    pub min_truncation: f64,
    /// Initial panels on the deformed part.
    pub panels: usize,
    /// Relative tolerance of the adaptive refinement.
    pub rtol: f64,
    /// Cap on the number of accepted panels.
    pub max_panels: usize,
}

impl Default for SommerfeldConfig {
    fn default() -> Self {
        Self { depth: 0.25, contour_width: 1.5, min_truncation: 10.0, panels: 32, rtol: 1e-12, max_panels: 200_000 }
    }
}

impl SommerfeldConfig {
    /// Twice the truncation and panel counts, for self-convergence checks.
    pub fn refined(&self) -> Self {
        Self { min_truncation: self.min_truncation * 2.0, panels: self.panels * 2, rtol: self.rtol / 4.0, ..*self }
    }
}

struct Gl16 {
    x: Vec<f64>,
    w: Vec<f64>,
}

fn gl16() -> &'static Gl16 {
    static CELL: std::sync::OnceLock<Gl16> = std::sync::OnceLock::new();
    CELL.get_or_init(|| {
        let (x, w) = crate::quadrature::gauss_legendre::<f64>(16).expect("16-point rule");
        Gl16 { x, w }
    })
}

fn panel<F: Fn(f64) -> [C64; 2]>(f: &F, a: f64, b: f64) -> [C64; 2] {
    let g = gl16();
    let mut acc = [C64::new(0.0, 0.0); 2];
    for (&x, &w) in g.x.iter().zip(&g.w) {
        let v = f(a + (b - a) * x);
        acc[0] += v[0] * w;
        acc[1] += v[1] * w;
    }
    [acc[0] * (b - a), acc[1] * (b - a)]
}

/// Adaptive bisection until halves agree with the whole to `tol`.
fn adaptive<F: Fn(f64) -> [C64; 2]>(f: &F, a: f64, b: f64, tol: f64, budget: &mut usize) -> Result<[C64; 2], OracleError> {
    let mut stack = vec![(a, b, panel(f, a, b), 0u32)];
    let mut acc = [C64::new(0.0, 0.0); 2];
    while let Some((lo, hi, whole, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = panel(f, lo, mid);
        let right = panel(f, mid, hi);
        let diff = (left[0] + right[0] - whole[0]).norm().max((left[1] + right[1] - whole[1]).norm());
        let local_tol = tol * ((hi - lo) / (b - a)).max(1e-3);
        if diff <= local_tol || depth > 45 {
            if depth > 45 {
                return Err(OracleError::NoConvergence(format!("panel [{lo}, {hi}] did not settle")));
            }
            acc[0] += left[0] + right[0];
            acc[1] += left[1] + right[1];
            if *budget == 0 {
                return Err(OracleError::NoConvergence("panel budget exhausted".into()));
            }
            *budget -= 1;
        } else {
            stack.push((mid, hi, right, depth + 1));
            stack.push((lo, mid, left, depth + 1));
        }
    }
    Ok(acc)
}

/// `(u, ∂u/∂x₂)` of the point-source total field at `x` for a source at
/// `xs` (`xs₂ > 0`) above the interface `x₂ = 0`.
///
/// With `βⱼ = sqrt(kⱼ² − ξ²)`, `R = (η₁β₁ − η₂β₂)/(η₁β₁ + η₂β₂)` and
/// `T = 1 + R`,
///
/// - `x₂ >= 0`: `u = (i/4)H₀(k₁r) + R∞(i/4)H₀(k₁r') + (i/4π)∫ (R − R∞) e^{iβ₁(x₂+xs₂)} e^{iξΔ}/β₁ dξ`,
/// - `x₂ < 0`: `u = (i/4π)∫ T e^{iβ₁xs₂ − iβ₂x₂} e^{iξΔ}/β₁ dξ`,
///
/// where `r'` is the distance to the mirror source and `R∞ = (η₁ − η₂)/(η₁ + η₂)`.
/// The integrand is even in `ξ`; the half-line integral runs on
/// `ξ = s − i d sin(π s/s_max)`, `0 <= s <= s_max`, then along the real axis.
pub fn layered_green_grad(x: [f64; 2], xs: [f64; 2], medium: &LayeredMedium, cfg: &SommerfeldConfig) -> Result<(C64, C64), OracleError> {
    if !(xs[1] > 0.0) {
        return Err(OracleError::Range("source must lie above the interface".into()));
    }
    if x == xs {
        return Err(OracleError::Range("field point equals the source".into()));
    }
    let (k1, k2) = (medium.k1(), medium.k2());
    let (e1, e2) = (medium.eta1(), medium.eta2());
    let kmax = k1.max(k2);
    let dx = (x[0] - xs[0]).abs();
    let upper = x[1] >= 0.0;
    let r_inf = (e1 - e2) / (e1 + e2);
    let i = C64::new(0.0, 1.0);
    // decay rate of the integrand along the real axis
    let decay = if upper { x[1] + xs[1] } else { xs[1] - x[1] };

    let s_max = cfg.contour_width * kmax;
    let depth = (cfg.depth * k1.min(k2)).min(1.0 / (1.0 + dx));
    let integrand = |xi: C64| -> [C64; 2] {
        let b1 = sqrt_nonneg_re(C64::new(k1 * k1, 0.0) - xi * xi);
        let b2 = sqrt_nonneg_re(C64::new(k2 * k2, 0.0) - xi * xi);
        let den = b1 * e1 + b2 * e2;
        let r = (b1 * e1 - b2 * e2) / den;
        let osc = (xi * dx).cos() * 2.0;
        if upper {
            let e = (i * b1 * (x[1] + xs[1])).exp() * (r - r_inf) * osc / b1;
            [e, e * i * b1]
        } else {
            let t = b1 * e1 * 2.0 / den;
            let e = (i * b1 * xs[1] - i * b2 * x[1]).exp() * t * osc / b1;
            [e, -e * i * b2]
        }
    };
    let on_contour = |s: f64| -> [C64; 2] {
        let arg = std::f64::consts::PI * s / s_max;
        let xi = C64::new(s, -depth * arg.sin());
        let dxi = C64::new(1.0, -depth * std::f64::consts::PI / s_max * arg.cos());
        let v = integrand(xi);
        [v[0] * dxi, v[1] * dxi]
    };
    let on_axis = |s: f64| integrand(C64::new(s, 0.0));

    let mut budget = cfg.max_panels;
    // scale estimate from a coarse pass
    let mut coarse = [C64::new(0.0, 0.0); 2];
    let w = s_max / cfg.panels as f64;
    for p in 0..cfg.panels {
        let v = panel(&on_contour, w * p as f64, w * (p + 1) as f64);
        coarse[0] += v[0];
        coarse[1] += v[1];
    }
    let direct = direct_terms(x, xs, k1, r_inf, upper)?;
    let scale = (coarse[0].norm() / (4.0 * std::f64::consts::PI)).max(direct.0.norm()).max(1e-300);
    let tol = cfg.rtol * scale * 4.0 * std::f64::consts::PI;

    let mut total = [C64::new(0.0, 0.0); 2];
    for p in 0..cfg.panels {
        let v = adaptive(&on_contour, w * p as f64, w * (p + 1) as f64, tol / cfg.panels as f64, &mut budget)?;
        total[0] += v[0];
        total[1] += v[1];
    }
    let truncation = cfg.min_truncation * kmax;
    let mut lo = s_max;
    let width = s_max;
    loop {
        let hi = lo + width;
        let v = adaptive(&on_axis, lo, hi, tol / cfg.panels as f64, &mut budget)?;
        total[0] += v[0];
        total[1] += v[1];
        lo = hi;
        let envelope = (-decay * lo).exp() / lo * (1.0 + kmax) * width;
        if lo >= truncation && envelope < tol * 1e-2 && v[0].norm() < tol {
            break;
        }
        if lo > 1e4 * kmax {
            return Err(OracleError::NoConvergence(format!("tail still {:.3e} at ξ = {lo:.3e}", v[0].norm())));
        }
    }
    let f = i / (4.0 * std::f64::consts::PI);
    Ok((direct.0 + total[0] * f, direct.1 + total[1] * f))
}

/// Incident plus mirror-source terms (upper half) in double-double.
fn direct_terms(x: [f64; 2], xs: [f64; 2], k1: f64, r_inf: f64, upper: bool) -> Result<(C64, C64), OracleError> {
    if !upper {
        return Ok((C64::new(0.0, 0.0), C64::new(0.0, 0.0)));
    }
    let q = C64::new(0.0, 0.25);
    let term = |y2: f64| -> Result<(C64, C64), OracleError> {
        let d = [x[0] - xs[0], x[1] - y2];
        let r = d[0].hypot(d[1]);
        let (h0, h1) = highprec_hankel01(C64::new(k1 * r, 0.0))?;
        Ok((q * h0, -q * k1 * h1 * d[1] / r))
    };
    let (u, du) = term(xs[1])?;
    let (ui, dui) = term(-xs[1])?;
    Ok((u + ui * r_inf, du + dui * r_inf))
}

/// Point-source total field `u^tot(x)` above or below a flat interface.
pub fn layered_green(x: [f64; 2], xs: [f64; 2], medium: &LayeredMedium) -> Result<C64, OracleError> {
    layered_green_with(x, xs, medium, &SommerfeldConfig::default())
}

/// [`layered_green`] with explicit settings; fails unless the refined
/// settings reproduce the value to `1e-9` relative.
pub fn layered_green_with(x: [f64; 2], xs: [f64; 2], medium: &LayeredMedium, cfg: &SommerfeldConfig) -> Result<C64, OracleError> {
    let a = layered_green_grad(x, xs, medium, cfg)?.0;
    let b = layered_green_grad(x, xs, medium, &cfg.refined())?.0;
    let rel = (a - b).norm() / b.norm().max(1e-300);
    if rel > 1e-9 {
        return Err(OracleError::NoConvergence(format!("refinement changed the value by {rel:.2e}")));
    }
    Ok(b)
}

/// Pair geometry on the real curve from [`HP_PRECISION`]-bit evaluation of
/// the grading map and the exact line/arc parametrization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairOracle {
    /// `x(p) − x(l)`.
    pub delta: [f64; 2],
    /// `|x(p) − x(l)|`.
    pub dist: f64,
    /// `τ(p) ∧ (x(p) − x(l))`.
    pub kappa_bar: f64,
}

struct HpSample {
    x: [BigFloat; 2],
    tau: [BigFloat; 2],
}

fn atan2_hp(y: &BigFloat, x: &BigFloat, cc: &mut Consts) -> BigFloat {
    let p = HP_PRECISION;
    let pi = cc.pi(p, RM);
    if x.is_zero() {
        let h = pi.mul(&BigFloat::from_f64(0.5, p), p, RM);
        return if y.is_negative() { h.neg() } else { h };
    }
    let a = y.div(x, p, RM).atan(p, RM, cc);
    match (x.is_negative(), y.is_negative()) {
        (false, _) => a,
        (true, false) => a.add(&pi, p, RM),
        (true, true) => a.sub(&pi, p, RM),
    }
}

fn hp_sample(
    mesh: &crate::Mesh,
    q: crate::geometry::Param<f64>,
    side: crate::geometry::Side,
    cc: &mut Consts,
) -> Result<HpSample, OracleError> {
    use crate::geometry::SegmentKind;
    let p = HP_PRECISION;
    let bf = |x: f64| BigFloat::from_f64(x, p);
    let n = mesh.n as i64;
    if q.node < 0 || q.node > n || (q.node == n && q.frac > 0.0) {
        return Err(OracleError::Range(format!("mesh position {} outside [0, {n}]", q.u())));
    }
    let (seg, _, _) = mesh.locate(q, side);
    let nseg = bf(mesh.counts[seg] as f64);
    let a = bf((q.node - mesh.offsets[seg]) as f64).add(&bf(q.frac), p, RM);
    let b = nseg.sub(&a, p, RM);
    let pg = mesh.p as f64;
    let ca = bf(0.5).sub(&bf(1.0).div(&bf(pg), p, RM), p, RM);
    let two = bf(2.0);
    let xi = a.sub(&b, p, RM).div(&nseg, p, RM);
    let xi2 = xi.mul(&xi, p, RM);
    let caxi2 = ca.mul(&xi2, p, RM);
    let caxi = ca.mul(&xi, p, RM);
    let w2 = two.mul(&a, p, RM).div(&nseg, p, RM).mul(&caxi2.sub(&caxi, p, RM).add(&bf(0.5), p, RM), p, RM);
    let w1 = two.mul(&b, p, RM).div(&nseg, p, RM).mul(&caxi2.add(&caxi, p, RM).add(&bf(0.5), p, RM), p, RM);
    let pow = |x: &BigFloat| (1..mesh.p).fold(x.clone(), |acc, _| acc.mul(x, p, RM));
    let (w1p, w2p) = (pow(&w1), pow(&w2));
    let f = w2p.div(&w1p.add(&w2p, p, RM), p, RM);
    match mesh.curve.segments[seg].kind {
        SegmentKind::Line { start, end, .. } => {
            let d = [bf(end[0] - start[0]), bf(end[1] - start[1])];
            let len = d[0].mul(&d[0], p, RM).add(&d[1].mul(&d[1], p, RM), p, RM).sqrt(p, RM);
            let x = [0, 1].map(|i| bf(start[i]).add(&d[i].mul(&f, p, RM), p, RM));
            let tau = [0, 1].map(|i| d[i].div(&len, p, RM));
            Ok(HpSample { x, tau })
        }
        SegmentKind::Arc { start, end, center, sense, .. } => {
            let c = [bf(center[0]), bf(center[1])];
            let rel = |q: [f64; 2]| [bf(q[0]).sub(&c[0], p, RM), bf(q[1]).sub(&c[1], p, RM)];
            let (r0, r1) = (rel(start), rel(end));
            let radius = r0[0].mul(&r0[0], p, RM).add(&r0[1].mul(&r0[1], p, RM), p, RM).sqrt(p, RM);
            let t0 = atan2_hp(&r0[1], &r0[0], cc);
            let mut t1 = atan2_hp(&r1[1], &r1[0], cc);
            let two_pi = cc.pi(p, RM).mul(&two, p, RM);
            let ccw = sense > 0.0;
            let sweep = t1.sub(&t0, p, RM);
            if ccw && (sweep.is_negative() || sweep.is_zero()) {
                t1 = t1.add(&two_pi, p, RM);
            } else if !ccw && !sweep.is_negative() {
                t1 = t1.sub(&two_pi, p, RM);
            }
            let theta = t0.add(&t1.sub(&t0, p, RM).mul(&f, p, RM), p, RM);
            let (cs, sn) = (theta.cos(p, RM, cc), theta.sin(p, RM, cc));
            let x = [c[0].add(&radius.mul(&cs, p, RM), p, RM), c[1].add(&radius.mul(&sn, p, RM), p, RM)];
            let tau = if ccw { [sn.neg(), cs] } else { [sn, cs.neg()] };
            Ok(HpSample { x, tau })
        }
    }
}

/// High-precision `x(p) − x(l)`, distance and `κ̄` on the unstretched curve,
/// for mesh positions `l, p ∈ [0, N]` of an open mesh. At a junction the
/// tangent is the one-sided limit from the side of `l`.
pub fn corner_pair_oracle(
    mesh: &crate::Mesh,
    l: crate::geometry::Param<f64>,
    q: crate::geometry::Param<f64>,
) -> Result<PairOracle, OracleError> {
    let p = HP_PRECISION;
    let mut cc = consts();
    use crate::geometry::Side;
    let toward = if q.u() > l.u() { Side::Before } else { Side::After };
    let sl = hp_sample(mesh, l, Side::Before, &mut cc)?;
    let sq = hp_sample(mesh, q, toward, &mut cc)?;
    let d = [sq.x[0].sub(&sl.x[0], p, RM), sq.x[1].sub(&sl.x[1], p, RM)];
    let dist = d[0].mul(&d[0], p, RM).add(&d[1].mul(&d[1], p, RM), p, RM).sqrt(p, RM);
    let kb = sq.tau[1].mul(&d[0], p, RM).sub(&sq.tau[0].mul(&d[1], p, RM), p, RM);
    Ok(PairOracle { delta: [to_f64(&d[0]), to_f64(&d[1])], dist: to_f64(&dist), kappa_bar: to_f64(&kb) })
}
