//! Gauss rules, the sixth-order Alpert hybrid Gauss-trapezoidal rule for
//! periodic integrands with a logarithmic diagonal singularity, and
//! trigonometric interpolation on the uniform parameter grid.

use crate::scalar::{czero, Real};
use num_complex::Complex;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("unsupported Gauss order {0} (expected 1..=64)")]
    UnsupportedOrder(usize),
    #[error("mesh too coarse for the Alpert rule: N = {n}, need at least {min}")]
    MeshTooCoarse { n: usize, min: usize },
    #[error("trigonometric interpolation needs an even, nonzero node count (got {0})")]
    OddNodeCount(usize),
    #[error("Alpert table mismatch at entry {0}")]
    TableMismatch(usize),
}

/// Nodes and weights of a quadrature rule on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct GaussRule<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> GaussRule<T> {
    pub fn new(n: usize) -> Result<Self, QuadratureError> {
        let (nodes, weights) = gauss_legendre(n)?;
        Ok(Self { nodes, weights })
    }

    /// `∫_a^b f` (oriented: `b < a` gives the negated integral).
    #[inline]
    pub fn integrate<V, F>(&self, a: T, b: T, mut f: F) -> V
    where
        V: std::ops::Add<Output = V> + std::ops::Mul<T, Output = V> + Default,
        F: FnMut(T) -> V,
    {
        let len = b - a;
        let mut acc = V::default();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + f(a + len * x) * (w * len);
        }
        acc
    }
}

/// Gauss–Legendre nodes and weights mapped to `[0, 1]`, computed by Newton
/// iteration on the three-term recurrence in the target precision.
pub fn gauss_legendre<T: Real>(n: usize) -> Result<(Vec<T>, Vec<T>), QuadratureError> {
    if n == 0 || n > 64 {
        return Err(QuadratureError::UnsupportedOrder(n));
    }
    let one = T::one();
    let half = T::of(0.5);
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let guess = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut x = T::of(guess);
        let mut dp = T::one();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x = x - dx;
            if dx.abs() <= T::epsilon() * T::of(2.0) {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = T::of(2.0) / ((one - x * x) * dp * dp);
        nodes[i] = half * (one - x);
        nodes[n - 1 - i] = half * (one + x);
        weights[i] = half * w;
        weights[n - 1 - i] = half * w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = half;
    }
    Ok((nodes, weights))
}

fn legendre_with_derivative<T: Real>(n: usize, x: T) -> (T, T) {
    let one = T::one();
    let mut p0 = one;
    let mut p1 = x;
    for k in 2..=n {
        let kf = T::of_int(k as i64);
        let p2 = ((T::of(2.0) * kf - one) * x * p1 - (kf - one) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = T::of_int(n as i64);
    let dp = nf * (x * p1 - p0) / (x * x - one);
    (p1, dp)
}

/// Gauss–Hermite rule for `∫ e^{-y²} f(y) dy` over the real line (nodes in
/// descending order).
pub fn gauss_hermite<T: Real>(m: usize) -> (Vec<T>, Vec<T>) {
    let mut x = vec![T::zero(); m];
    let mut w = vec![T::zero(); m];
    let pim4 = T::one() / T::PI().sqrt().sqrt();
    let mf = T::of_int(m as i64);
    let half_count = m.div_ceil(2);
    let mut z = T::zero();
    for i in 0..half_count {
        z = match i {
            0 => {
                let base = T::of(2.0) * mf + T::one();
                base.sqrt() - T::of(1.85575) * base.powf(T::of(-1.0 / 6.0))
            }
            1 => z - T::of(1.14) * mf.powf(T::of(0.426)) / z,
            2 => T::of(1.86) * z - T::of(0.86) * x[0],
            3 => T::of(1.91) * z - T::of(0.91) * x[1],
            _ => T::of(2.0) * z - x[i - 2],
        };
        let mut pp = T::one();
        for _ in 0..200 {
            let mut p1 = pim4;
            let mut p2 = T::zero();
            for j in 1..=m {
                let jf = T::of_int(j as i64);
                let p3 = p2;
                p2 = p1;
                p1 = z * (T::of(2.0) / jf).sqrt() * p2 - ((jf - T::one()) / jf).sqrt() * p3;
            }
            pp = (T::of(2.0) * mf).sqrt() * p2;
            let dz = p1 / pp;
            z = z - dz;
            if dz.abs() <= T::epsilon() * z.abs().max(T::one()) {
                break;
            }
        }
        x[i] = z;
        x[m - 1 - i] = -z;
        w[i] = T::of(2.0) / (pp * pp);
        w[m - 1 - i] = w[i];
    }
    (x, w)
}

/// The sixth-order table as printed in the literature, kept verbatim so the
/// runtime values can be checked digit for digit.
pub const ALPERT6_TABLE: [(&str, &str); 5] = [
    ("4.004884194926570e-3", "1.671879691147102e-2"),
    ("7.745655373336686e-2", "1.636958371447360e-1"),
    ("3.972849993523248e-1", "4.981856569770637e-1"),
    ("1.075673352915104e0", "8.372266245578912e-1"),
    ("2.003796927111872e0", "9.841730844088381e-1"),
];

/// FNV-1a digest of the concatenated table strings, recorded when the table
/// was transcribed.
pub const ALPERT6_CHECKSUM: u64 = 0xcab3f3d54d866f4e;

/// FNV-1a digest of a table in the layout of [`ALPERT6_TABLE`].
pub fn alpert_table_digest(table: &[(&str, &str); 5]) -> u64 {
    fnv1a(table)
}

const fn fnv1a(table: &[(&str, &str); 5]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    let mut i = 0;
    while i < 5 {
        let mut s = 0;
        while s < 2 {
            let bytes = if s == 0 { table[i].0.as_bytes() } else { table[i].1.as_bytes() };
            let mut b = 0;
            while b < bytes.len() {
                h ^= bytes[b] as u64;
                h = h.wrapping_mul(0x100000001b3);
                b += 1;
            }
            h ^= b'|' as u64;
            h = h.wrapping_mul(0x100000001b3);
            s += 1;
        }
        i += 1;
    }
    h
}

/// Hybrid Gauss-trapezoidal rule: `K1` off-grid node pairs at `t_l ± δ_k h`
/// with weights `γ_k h`, and a trapezoidal body over offsets `K2..=N-K2`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlpertRule {
    pub order: u32,
    pub k1: usize,
    pub k2: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl AlpertRule {
    pub fn order6() -> Self {
        let nodes = ALPERT6_TABLE.iter().map(|(d, _)| d.parse().unwrap()).collect();
        let weights = ALPERT6_TABLE.iter().map(|(_, g)| g.parse().unwrap()).collect();
        Self { order: 6, k1: 5, k2: 3, nodes, weights }
    }

    /// Copy with weight `k` scaled by `1 + rel`; a tamper hook for the
    /// integrity check.
    pub fn with_perturbed_weight(&self, k: usize, rel: f64) -> Self {
        let mut r = self.clone();
        r.weights[k] *= 1.0 + rel;
        r
    }

    /// Checks the runtime values against the verbatim table and its digest.
    pub fn verify(&self) -> Result<(), QuadratureError> {
        if fnv1a(&ALPERT6_TABLE) != ALPERT6_CHECKSUM {
            return Err(QuadratureError::TableMismatch(usize::MAX));
        }
        if self.nodes.len() != 5 || self.weights.len() != 5 {
            return Err(QuadratureError::TableMismatch(0));
        }
        for (k, (d, g)) in ALPERT6_TABLE.iter().enumerate() {
            let same = |x: f64, s: &str| format!("{x:.15e}") == canonical(s);
            if !same(self.nodes[k], d) || !same(self.weights[k], g) {
                return Err(QuadratureError::TableMismatch(k));
            }
        }
        Ok(())
    }

    pub fn min_nodes(&self) -> usize {
        2 * self.k2 + 1
    }
}

fn canonical(s: &str) -> String {
    let x: f64 = s.parse().unwrap();
    format!("{x:.15e}")
}

/// Cardinal function `L(t) = sin(Nπt)/(N tan(πt))` at `t = (d + δ)/N` for
/// integer `d`, evaluated without forming `Nπt`.
fn cardinal(n: usize, d: i64, delta: f64) -> f64 {
    if delta == 0.0 {
        return if d.rem_euclid(n as i64) == 0 { 1.0 } else { 0.0 };
    }
    let sign = if d.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let nf = n as f64;
    sign * (std::f64::consts::PI * delta).sin()
        / (nf * (std::f64::consts::PI * (d as f64 + delta) / nf).tan())
}

/// Trigonometric interpolation of periodic node values. `values[j]` belongs to
/// node number `j + 1`; `u` is the evaluation point in node units (`u = N t`).
pub fn trig_interp<T: Real>(values: &[Complex<T>], u: T) -> Result<Complex<T>, QuadratureError> {
    let n = values.len();
    if n == 0 || n % 2 == 1 {
        return Err(QuadratureError::OddNodeCount(n));
    }
    let m = u.round();
    let delta = u - m;
    let m = m.to_i64().unwrap_or(0);
    let idx = |node: i64| ((node - 1).rem_euclid(n as i64)) as usize;
    if delta == T::zero() {
        return Ok(values[idx(m)]);
    }
    let nf = T::of_int(n as i64);
    let s = (T::PI() * delta).sin();
    let mut acc = czero::<T>();
    for (j, v) in values.iter().enumerate() {
        let d = m - (j as i64 + 1);
        let sign = if d.rem_euclid(2) == 0 { T::one() } else { -T::one() };
        let l = sign * s / (nf * (T::PI() * (T::of_int(d) + delta) / nf).tan());
        acc = acc + *v * l;
    }
    Ok(acc)
}

/// Interpolation weights `L((d + δ_k)/N)` and `L((d - δ_k)/N)` for every
/// residue `d = (l - j) mod N`, shared by all rows of one mesh size.
#[derive(Debug, Clone)]
pub struct AlpertStencils {
    pub n: usize,
    pub rule: AlpertRule,
    plus: Vec<Vec<f64>>,
    minus: Vec<Vec<f64>>,
}

impl AlpertStencils {
    pub fn new(rule: &AlpertRule, n: usize) -> Result<Self, QuadratureError> {
        if n < rule.min_nodes() {
            return Err(QuadratureError::MeshTooCoarse { n, min: rule.min_nodes() });
        }
        if n % 2 == 1 {
            return Err(QuadratureError::OddNodeCount(n));
        }
        let table = |sgn: f64| -> Vec<Vec<f64>> {
            rule.nodes
                .iter()
                .map(|&d| (0..n as i64).map(|r| cardinal(n, r, sgn * d)).collect())
                .collect()
        };
        Ok(Self { n, rule: rule.clone(), plus: table(1.0), minus: table(-1.0) })
    }

    /// Accumulates into `row` the discretization of `∫_0^1 k(t_l, t) f(t) dt`
    /// acting on node values of `f`. `kernel(node, frac)` evaluates the kernel
    /// at `t = (node + frac)/N`; `frac = 0` marks a grid node.
    pub fn row<E, F>(&self, l: usize, mut kernel: F, row: &mut [Complex<f64>]) -> Result<(), E>
    where
        F: FnMut(i64, f64) -> Result<Complex<f64>, E>,
    {
        self.rows::<1, E, _>(l, |n, f| Ok([kernel(n, f)?]), [row])
    }

    /// [`Self::row`] for `M` kernels sharing each evaluation point.
    pub fn rows<const M: usize, E, F>(&self, l: usize, mut kernel: F, rows: [&mut [Complex<f64>]; M]) -> Result<(), E>
    where
        F: FnMut(i64, f64) -> Result<[Complex<f64>; M], E>,
    {
        let n = self.n;
        let h = 1.0 / n as f64;
        let l = l as i64;
        let mut rows = rows;
        for k in 0..self.rule.k1 {
            let delta = self.rule.nodes[k];
            let wgt = self.rule.weights[k] * h;
            let kp = kernel(l, delta)?;
            let km = kernel(l, -delta)?;
            let (tp, tm) = (&self.plus[k], &self.minus[k]);
            for (m, row) in rows.iter_mut().enumerate() {
                debug_assert_eq!(row.len(), n);
                let (a, b) = (kp[m] * wgt, km[m] * wgt);
                for (j, r) in row.iter_mut().enumerate() {
                    let d = (l - (j as i64 + 1)).rem_euclid(n as i64) as usize;
                    *r += a * tp[d] + b * tm[d];
                }
            }
        }
        let k2 = self.rule.k2 as i64;
        for off in k2..=(n as i64 - k2) {
            let node = (l - 1 + off).rem_euclid(n as i64) + 1;
            let v = kernel(node, 0.0)?;
            for (m, row) in rows.iter_mut().enumerate() {
                row[(node - 1) as usize] += v[m] * h;
            }
        }
        Ok(())
    }

    /// The rule applied to the constant density 1, without interpolation
    /// (cardinal functions sum to one).
    pub fn apply_to_one<E, F>(&self, l: usize, mut kernel: F) -> Result<Complex<f64>, E>
    where
        F: FnMut(i64, f64) -> Result<Complex<f64>, E>,
    {
        let n = self.n as i64;
        let h = 1.0 / n as f64;
        let l = l as i64;
        let mut acc = Complex::new(0.0, 0.0);
        for k in 0..self.rule.k1 {
            let delta = self.rule.nodes[k];
            acc += (kernel(l, delta)? + kernel(l, -delta)?) * (self.rule.weights[k] * h);
        }
        for off in self.rule.k2 as i64..=(n - self.rule.k2 as i64) {
            acc += kernel((l - 1 + off).rem_euclid(n) + 1, 0.0)? * h;
        }
        Ok(acc)
    }
}

/// Least-squares slope of `log10(err)` against `log10(x)`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, e)| *x > 0.0 && *e > 0.0)
        .map(|(x, e)| (x.log10(), e.log10()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn gauss_legendre_small_orders() {
        let (x, w) = gauss_legendre::<f64>(1).unwrap();
        assert_eq!((x[0], w[0]), (0.5, 1.0));
        let (x, w) = gauss_legendre::<f64>(2).unwrap();
        let r = 0.5 / 3f64.sqrt();
        assert!((x[0] - (0.5 - r)).abs() < 1e-16 && (x[1] - (0.5 + r)).abs() < 1e-16);
        assert!((w[0] - 0.5).abs() < 1e-15 && (w[1] - 0.5).abs() < 1e-15);
        let (x, w) = gauss_legendre::<f64>(4).unwrap();
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(6)).sum();
        assert!((v - 1.0 / 7.0).abs() < 1e-15);
        assert!(gauss_legendre::<f64>(0).is_err());
        assert!(gauss_legendre::<f64>(65).is_err());
    }

    #[test]
    fn gauss_legendre_high_order_exactness() {
        for n in [16usize, 20, 64] {
            let (x, w) = gauss_legendre::<f64>(n).unwrap();
            let deg = 2 * n - 1;
            let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert!((v - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14, "n={n}");
        }
    }

    #[test]
    fn gauss_hermite_moments() {
        let (x, w) = gauss_hermite::<f64>(40);
        let m0: f64 = w.iter().sum();
        let m2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        let sp = std::f64::consts::PI.sqrt();
        assert!((m0 - sp).abs() < 1e-13);
        assert!((m2 - sp / 2.0).abs() < 1e-13);
    }

    #[test]
    fn alpert_table_verifies_and_sums() {
        let rule = AlpertRule::order6();
        rule.verify().unwrap();
        let s: f64 = rule.weights.iter().sum();
        assert!((s - 2.5).abs() < 1e-14);
        assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
        let mut bad = rule.clone();
        bad.weights[2] += 1e-15;
        assert_eq!(bad.verify(), Err(QuadratureError::TableMismatch(2)));
    }

    #[test]
    fn trig_interp_examples() {
        let n = 16;
        let vals: Vec<Complex64> = (1..=n)
            .map(|j| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / n as f64))
            .collect();
        let tau = 0.123;
        let got = trig_interp(&vals, tau * n as f64).unwrap();
        let want = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * tau);
        assert!((got - want).norm() < 1e-13);
        assert_eq!(trig_interp(&vals, 5.0).unwrap(), vals[4]);
        let c = vec![Complex64::new(2.0, -1.0); n];
        assert!((trig_interp(&c, 3.7).unwrap() - c[0]).norm() < 1e-14);
        assert!(trig_interp(&vals[..15], 1.5).is_err());
    }

    #[test]
    fn alpert_row_integrates_constants() {
        let rule = AlpertRule::order6();
        let n = 32;
        let st = AlpertStencils::new(&rule, n).unwrap();
        let mut row = vec![Complex64::new(0.0, 0.0); n];
        st.row::<(), _>(7, |_, _| Ok(Complex64::new(1.0, 0.0)), &mut row).unwrap();
        let s: Complex64 = row.iter().sum();
        assert!((s - 1.0).norm() < 1e-13);
        assert!(AlpertStencils::new(&rule, 6).is_err());
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [10.0, 20.0, 40.0].iter().map(|&n: &f64| (n, n.powi(-6))).collect();
        assert!((loglog_slope(&pts) + 6.0).abs() < 1e-12);
    }
}
