//! Absorbing profile, complex coordinate stretching `x ↦ x̃`, the complexified
//! distance `ρ` and the PML-transformed fundamental solutions.
//!
//! On `a ≤ |x| ≤ a + T` the profile is `σ(x) = 2ST·f(ξ)` with
//! `ξ = (2|x| − (2a + T))/T` and `f` the same rational cubic blend as the mesh
//! grading, of order `p̃`. Hence `σ` rises from `0` to `2ST`, all derivatives
//! up to order `p̃ − 1` vanish at the entrance, and the accumulated stretch at
//! the outer edge is `Im x̃(a + T) = ST²`. Beyond `a + T` the profile is held
//! constant.

use crate::geometry::{grading_local, Point};
use crate::quadrature::gauss_legendre;
use crate::scalar::{cx, Real};
use crate::special_fn::{hankel01, log_principal, sqrt_nonneg_re, SpecialFnError};
use num_complex::Complex;

/// One-dimensional absorbing profile along a coordinate axis.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisProfile<T> {
    /// Half-width of the unstretched box.
    pub a: T,
    /// Layer thickness.
    pub thickness: T,
    /// Absorbing magnitude.
    pub s: T,
    /// Smoothness order `p̃` at the entrance.
    pub p_tilde: u32,
    panels: usize,
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> AxisProfile<T> {
    pub fn new(a: T, thickness: T, s: T, p_tilde: u32) -> Result<Self, String> {
        Self::with_rule(a, thickness, s, p_tilde, 20, 4)
    }

    /// `order`-point Gauss rule on each of `panels` equal panels of the layer.
    pub fn with_rule(a: T, thickness: T, s: T, p_tilde: u32, order: usize, panels: usize) -> Result<Self, String> {
        if !(a > T::zero()) || !(thickness > T::zero()) || !(s >= T::zero()) || p_tilde < 2 || panels == 0 {
            return Err(format!(
                "invalid PML profile: a = {}, T = {}, S = {}, p = {p_tilde}",
                a.f64(),
                thickness.f64(),
                s.f64()
            ));
        }
        let (nodes, weights) = gauss_legendre::<T>(order).map_err(|e| e.to_string())?;
        Ok(Self { a, thickness, s, p_tilde, panels, nodes, weights })
    }

    /// Blend value and `dσ/d|x|` inside the layer.
    fn blend(&self, r: T) -> (T, T) {
        let two = T::of(2.0);
        let amp = two * self.s * self.thickness;
        if r <= self.a {
            return (T::zero(), T::zero());
        }
        if r >= self.a + self.thickness {
            return (amp, T::zero());
        }
        let g = grading_local(r - self.a, self.a + self.thickness - r, self.thickness, self.p_tilde);
        (amp * g.f, amp * g.df * two / self.thickness)
    }

    /// `σ(x)`; even in `x`.
    pub fn sigma(&self, x: T) -> T {
        self.blend(x.abs()).0
    }

    /// `dσ/dx`; odd in `x`.
    pub fn dsigma(&self, x: T) -> T {
        let d = self.blend(x.abs()).1;
        if x < T::zero() {
            -d
        } else {
            d
        }
    }

    /// `∫_0^x σ`, odd in `x`.
    pub fn integral(&self, x: T) -> T {
        let r = x.abs();
        if r <= self.a {
            return T::zero();
        }
        let top = r.min(self.a + self.thickness);
        let width = self.thickness / T::of_int(self.panels as i64);
        let mut acc = T::zero();
        let mut lo = self.a;
        while lo < top {
            let hi = (lo + width).min(top);
            let len = hi - lo;
            for (&t, &w) in self.nodes.iter().zip(&self.weights) {
                acc = acc + w * len * self.sigma(lo + len * t);
            }
            if hi >= top {
                break;
            }
            lo = lo + width;
        }
        if r > self.a + self.thickness {
            acc = acc + T::of(2.0) * self.s * self.thickness * (r - self.a - self.thickness);
        }
        if x < T::zero() {
            -acc
        } else {
            acc
        }
    }
}

/// Stretching profile: the horizontal layer is always present, the vertical
/// one is optional and off by default.
#[derive(Debug, Clone, PartialEq)]
pub struct PmlProfile<T> {
    pub x1: AxisProfile<T>,
    pub x2: Option<AxisProfile<T>>,
}

/// Complexified coordinates `(x̃₁, x̃₂)`.
pub type StretchedPoint<T> = [Complex<T>; 2];

impl<T: Real> PmlProfile<T> {
    /// Horizontal layer on `a1 ≤ |x1| ≤ a1 + T`.
    pub fn new(a1: T, thickness: T, s: T, p_tilde: u32) -> Result<Self, String> {
        Ok(Self { x1: AxisProfile::new(a1, thickness, s, p_tilde)?, x2: None })
    }

    pub fn with_vertical(mut self, vertical: AxisProfile<T>) -> Self {
        self.x2 = Some(vertical);
        self
    }

    pub fn a1(&self) -> T {
        self.x1.a
    }

    pub fn sigma1(&self, x1: T) -> T {
        self.x1.sigma(x1)
    }

    fn axis(&self, l: usize) -> Option<&AxisProfile<T>> {
        if l == 0 {
            Some(&self.x1)
        } else {
            self.x2.as_ref()
        }
    }

    /// `α_l = 1 + iσ_l(x_l)`.
    pub fn alpha(&self, x: Point<T>) -> [Complex<T>; 2] {
        let mut out = [cx(T::one(), T::zero()); 2];
        for l in 0..2 {
            if let Some(ax) = self.axis(l) {
                out[l] = cx(T::one(), ax.sigma(x[l]));
            }
        }
        out
    }

    /// True when `x` lies in the unstretched box.
    pub fn is_physical(&self, x: Point<T>) -> bool {
        (0..2).all(|l| self.axis(l).map_or(true, |ax| x[l].abs() <= ax.a))
    }

    /// `x̃_l = x_l + i∫_0^{x_l} σ_l`.
    pub fn stretch(&self, x: Point<T>) -> StretchedPoint<T> {
        let mut out = [cx(x[0], T::zero()), cx(x[1], T::zero())];
        for l in 0..2 {
            if let Some(ax) = self.axis(l) {
                out[l].im = ax.integral(x[l]);
            }
        }
        out
    }

    /// `dx̃/ds` from the physical tangent.
    pub fn stretched_tangent(&self, x: Point<T>, tau: Point<T>) -> [Complex<T>; 2] {
        let a = self.alpha(x);
        [a[0] * tau[0], a[1] * tau[1]]
    }

    /// `d²x̃/ds² = α x'' + iσ'(x)(x')²` per axis.
    pub fn stretched_dtau(&self, x: Point<T>, tau: Point<T>, dtau: Point<T>) -> [Complex<T>; 2] {
        let a = self.alpha(x);
        let mut out = [a[0] * dtau[0], a[1] * dtau[1]];
        for l in 0..2 {
            if let Some(ax) = self.axis(l) {
                out[l].im = out[l].im + ax.dsigma(x[l]) * tau[l] * tau[l];
            }
        }
        out
    }
}

/// Complexified distance `ρ = sqrt((x̃₁−ỹ₁)² + (x̃₂−ỹ₂)²)` with `Re ρ ≥ 0`.
pub fn rho<T: Real>(xs: &StretchedPoint<T>, ys: &StretchedPoint<T>) -> Complex<T> {
    rho_from_delta([xs[0] - ys[0], xs[1] - ys[1]])
}

/// `ρ` from precomputed coordinate differences.
#[inline]
pub fn rho_from_delta<T: Real>(d: [Complex<T>; 2]) -> Complex<T> {
    sqrt_nonneg_re(d[0] * d[0] + d[1] * d[1])
}

/// `G̃ = (i/4) H₀(kρ)`.
pub fn green_helmholtz<T: Real>(xs: &StretchedPoint<T>, ys: &StretchedPoint<T>, k: T) -> Result<Complex<T>, SpecialFnError> {
    let r = rho(xs, ys);
    if r.re == T::zero() && r.im == T::zero() {
        return Err(SpecialFnError::Domain("Green's function at coincident points"));
    }
    let (h0, _) = hankel01(r * k)?;
    Ok(h0 * cx(T::zero(), T::of(0.25)))
}

/// `G̃₀ = −(1/2π) log ρ`.
pub fn green_laplace<T: Real>(xs: &StretchedPoint<T>, ys: &StretchedPoint<T>) -> Result<Complex<T>, SpecialFnError> {
    let r = rho(xs, ys);
    let l = log_principal(r)?;
    Ok(l * (-T::one() / (T::of(2.0) * T::PI())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile() -> PmlProfile<f64> {
        PmlProfile::new(1.0, 1.0, 1.0, 8).unwrap()
    }

    #[test]
    fn sigma_values() {
        let p = profile();
        assert_eq!(p.sigma1(0.0), 0.0);
        assert_eq!(p.sigma1(1.0), 0.0);
        assert!((p.sigma1(2.0) - 2.0).abs() < 1e-15);
        assert!((p.sigma1(1.5) - 1.0).abs() < 1e-15);
        assert_eq!(p.sigma1(-1.3), p.sigma1(1.3));
    }

    #[test]
    fn stretch_values() {
        let p = profile();
        let x = p.stretch([0.5, 0.0]);
        assert_eq!(x, [cx(0.5, 0.0), cx(0.0, 0.0)]);
        let x = p.stretch([2.0, 0.0]);
        assert!((x[0].im - 1.0).abs() < 1e-14);
        let y = p.stretch([-1.7, 0.0]);
        let z = p.stretch([1.7, 0.0]);
        assert_eq!(y[0].im, -z[0].im);
    }

    #[test]
    fn rho_values() {
        let p = profile();
        let a = p.stretch([0.0, 0.0]);
        assert_eq!(rho(&a, &a), cx(0.0, 0.0));
        let b = p.stretch([3.0 * 0.1, 4.0 * 0.1]);
        assert!((rho(&a, &b) - cx(0.5, 0.0)).norm() < 1e-15);
        let x = p.stretch([0.5, 0.0]);
        let y = p.stretch([2.0, 0.0]);
        let r = rho(&x, &y);
        assert!((r - cx(1.5, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn laplace_green_unit_value() {
        let p = profile();
        let a = p.stretch([0.0, 0.0]);
        let b = p.stretch([0.0, std::f64::consts::E * 0.3]);
        let c = p.stretch([0.0, 0.3]);
        let g = green_laplace(&a, &b).unwrap() - green_laplace(&a, &c).unwrap();
        assert!((g.re + 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-15);
        assert!(green_laplace(&a, &a).is_err());
        assert!(green_helmholtz(&a, &a, 1.0).is_err());
    }
}
