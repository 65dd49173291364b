use pmlbie::geometry::{grading_w, shapes, GradedMesh, Param, PiecewiseCurve, Side, SmoothSegment};
use pmlbie::kernels::KernelContext;
use pmlbie::oracle::corner_pair_oracle;
use pmlbie::pml::{green_helmholtz, rho, PmlProfile};
use pmlbie::special_fn::{bessel_j01, hankel01, sqrt_nonneg_re};
use pmlbie::C64;
use proptest::prelude::*;
use std::f64::consts::PI;
use twofloat::TwoFloat;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

fn semicircles(per: usize) -> GradedMesh<f64> {
    GradedMesh::new(shapes::semicircles(3.5).unwrap(), &[per; 4], 6).unwrap()
}

/// The semicircle interface rebuilt over an arbitrary scalar.
fn semicircles_generic<T: pmlbie::Real>(per: usize) -> GradedMesh<T> {
    let p = |x: f64, y: f64| [T::of(x), T::of(y)];
    let curve = PiecewiseCurve::open(vec![
        SmoothSegment::line(p(-3.5, 0.0), p(-2.0, 0.0)).unwrap(),
        SmoothSegment::arc(p(-2.0, 0.0), p(0.0, 0.0), p(-1.0, 0.0), false).unwrap(),
        SmoothSegment::arc(p(0.0, 0.0), p(2.0, 0.0), p(1.0, 0.0), true).unwrap(),
        SmoothSegment::line(p(2.0, 0.0), p(3.5, 0.0)).unwrap(),
    ])
    .unwrap();
    GradedMesh::new(curve, &[per; 4], 6).unwrap()
}

proptest! {
    #[test]
    fn sqrt_has_nonnegative_real_part(re in -1e3f64..1e3, im in -1e3f64..1e3) {
        let z = C64::new(re, im);
        let w = sqrt_nonneg_re(z);
        prop_assert!(w.re >= 0.0);
        prop_assert!((w * w - z).norm() <= 4.0 * f64::EPSILON * z.norm());
    }

    #[test]
    fn hankel_wronskian(x in 0.01f64..40.0) {
        let (h0, h1) = hankel01(C64::new(x, 0.0)).unwrap();
        let w = h1.re * h0.im - h0.re * h1.im;
        let want = 2.0 / (PI * x);
        prop_assert!((w - want).abs() <= 1e-12 * want.max(1.0), "W = {w}, want {want}");
    }

    #[test]
    fn ascending_series_agrees_with_hankel_real_part(x in 0.01f64..8.0) {
        let (j0, j1) = bessel_j01(C64::new(x, 0.0));
        let (h0, h1) = hankel01(C64::new(x, 0.0)).unwrap();
        prop_assert!((j0 - h0.re).norm() <= 1e-13);
        prop_assert!((j1 - h1.re).norm() <= 1e-13);
    }

    #[test]
    fn hankel_small_argument_expansion(r in 1e-8f64..1e-4, theta in 0.0f64..PI) {
        let z = C64::from_polar(r, theta);
        let (h0, h1) = hankel01(z).unwrap();
        let i = C64::new(0.0, 1.0);
        let want0 = C64::new(1.0, 0.0) + i * (2.0 / PI) * ((z / 2.0).ln() + EULER_GAMMA);
        prop_assert!((h0 - want0).norm() <= 1e-7 * want0.norm());
        let want1 = -i * 2.0 / (PI * z);
        prop_assert!((h1 - want1).norm() <= 1e-7 * want1.norm());
    }

    #[test]
    fn grading_derivative_matches_central_differences(t in 0.02f64..0.98, len in 0.5f64..5.0, p in 2u32..9) {
        let h = 1e-6;
        let (_, dw) = grading_w(t, 0.0, 1.0, 0.0, len, p).unwrap();
        let fd = (grading_w(t + h, 0.0, 1.0, 0.0, len, p).unwrap().0 - grading_w(t - h, 0.0, 1.0, 0.0, len, p).unwrap().0) / (2.0 * h);
        prop_assert!((dw - fd).abs() <= 1e-7 * dw.abs().max(1.0), "w' = {dw}, fd = {fd}");
        prop_assert!(dw >= 0.0);
    }

    #[test]
    fn grading_is_monotone_and_symmetric(t in 0.0f64..1.0, p in 2u32..9) {
        let (s, _) = grading_w(t, 0.0, 1.0, 0.0, 1.0, p).unwrap();
        let (r, _) = grading_w(1.0 - t, 0.0, 1.0, 0.0, 1.0, p).unwrap();
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert!((s + r - 1.0).abs() <= 1e-15);
        let (s2, _) = grading_w((t + 1e-3).min(1.0), 0.0, 1.0, 0.0, 1.0, p).unwrap();
        prop_assert!(s2 >= s);
    }

    #[test]
    fn grading_in_single_precision_tracks_double(t in 0.05f64..0.95, p in 2u32..9) {
        let (s64, d64) = grading_w(t, 0.0, 1.0, 0.0, 2.0, p).unwrap();
        let (s32, d32) = grading_w(t as f32, 0.0, 1.0, 0.0, 2.0, p).unwrap();
        prop_assert!((s32 as f64 - s64).abs() <= 1e-5);
        prop_assert!((d32 as f64 - d64).abs() <= 1e-4 * d64.max(1.0));
    }

    #[test]
    fn complexified_distance_has_nonnegative_real_part(
        x in prop::array::uniform2(-4.0f64..4.0),
        y in prop::array::uniform2(-4.0f64..4.0),
        s in 0.1f64..3.0,
    ) {
        let profile = PmlProfile::new(2.0, 1.0, s, 8).unwrap();
        let r = rho(&profile.stretch(x), &profile.stretch(y));
        prop_assert!(r.re >= 0.0);
    }

    #[test]
    fn stretched_green_function_is_free_space_in_the_physical_box(
        x in prop::array::uniform2(-1.9f64..1.9),
        y in prop::array::uniform2(-1.9f64..1.9),
    ) {
        let d = (x[0] - y[0]).hypot(x[1] - y[1]);
        prop_assume!(d > 1e-6);
        let k = 2.0 * PI;
        let profile = PmlProfile::new(2.0, 1.0, 1.0, 8).unwrap();
        let g = green_helmholtz(&profile.stretch(x), &profile.stretch(y), k).unwrap();
        let want = C64::new(0.0, 0.25) * hankel01(C64::new(k * d, 0.0)).unwrap().0;
        prop_assert!((g - want).norm() <= 1e-14 * want.norm());
    }

    #[test]
    fn vanishing_stretch_recovers_free_space(x1 in 2.0f64..3.0, y1 in -3.0f64..-2.0, x2 in -1.0f64..1.0) {
        let k = 2.0 * PI;
        let profile = PmlProfile::new(2.0, 1.0, 1e-12, 8).unwrap();
        let (x, y) = ([x1, x2], [y1, 0.3]);
        let g = green_helmholtz(&profile.stretch(x), &profile.stretch(y), k).unwrap();
        let d = (x[0] - y[0]).hypot(x[1] - y[1]);
        let want = C64::new(0.0, 0.25) * hankel01(C64::new(k * d, 0.0)).unwrap().0;
        prop_assert!((g - want).norm() <= 1e-9 * want.norm());
    }

    #[test]
    fn single_layer_kernel_is_symmetric(l in 1i64..400, q in 1i64..400) {
        prop_assume!(l != q);
        let mesh = semicircles(100);
        let profile = PmlProfile::new(2.5, 1.0, 1.0, 8).unwrap();
        let ctx = KernelContext::new(&mesh, Some(&profile), 4.0 * PI);
        let a = ctx.kernel_s(Param::node(l), Param::node(q)).unwrap();
        let b = ctx.kernel_s(Param::node(q), Param::node(l)).unwrap();
        prop_assert!((a - b).norm() <= 1e-12 * a.norm());
    }

    #[test]
    fn stabilized_pairs_agree_with_direct_subtraction_away_from_cancellation(
        seg in 0usize..4,
        frac in 0.3f64..0.7,
        gap in 2.0f64..9.0,
        sign in prop::bool::ANY,
    ) {
        let mesh = semicircles(100);
        let profile = PmlProfile::new(2.5, 1.0, 1.0, 8).unwrap();
        let ctx = KernelContext::new(&mesh, Some(&profile), 4.0 * PI);
        let l: Param<f64> = Param::node((seg * 100) as i64 + (frac * 100.0) as i64);
        let u = l.u() + if sign { gap } else { -gap };
        let p = Param::new(u.floor() as i64, u - u.floor());
        let (a, b) = (ctx.stable_pair(l, p), ctx.naive_pair(l, p));
        let d = a.dist().norm();
        for axis in 0..2 {
            prop_assert!((a.delta[axis] - b.delta[axis]).norm() <= 1e-12 * d.max(1e-3));
        }
        prop_assert!((a.kappa_bar - b.kappa_bar).norm() <= 1e-9 * d);
    }

    #[test]
    fn stabilized_pairs_match_the_high_precision_oracle(
        seg in 0usize..4,
        frac in 0.2f64..0.8,
        gap in 1e-3f64..3.0,
        sign in prop::bool::ANY,
    ) {
        let mesh = semicircles(40);
        let ctx = KernelContext::new(&mesh, None, 2.0 * PI);
        let l: Param<f64> = Param::node((seg * 40) as i64 + (frac * 40.0) as i64);
        let u = l.u() + if sign { gap } else { -gap };
        let p = Param::new(u.floor() as i64, u - u.floor());
        let got = ctx.stable_pair(l, p);
        let want = corner_pair_oracle(&mesh, l, p).unwrap();
        let d = want.dist;
        for axis in 0..2 {
            prop_assert!((got.delta[axis] - want.delta[axis]).norm() <= 1e-14 * d, "axis {axis}: {} vs {}", got.delta[axis], want.delta[axis]);
        }
        prop_assert!((got.kappa_bar - want.kappa_bar).norm() <= 1e-13 * d, "κ̄ {} vs {}", got.kappa_bar, want.kappa_bar);
    }
}

/// The generic geometry instantiates over double-double; its elementary
/// functions are not accurate to full double-double precision, so only
/// agreement with `f64` to a few ulps is checked.
#[test]
fn double_double_mesh_samples_agree_with_double() {
    let mesh = semicircles_generic::<f64>(40);
    let mesh2 = semicircles_generic::<TwoFloat>(40);
    for j in [1i64, 17, 40, 63, 80, 111, 160] {
        let a = mesh.eval(Param::node(j), Side::Before);
        let b = mesh2.eval(Param::node(j), Side::Before);
        for axis in 0..2 {
            assert!((a.x[axis] - f64::from(b.x[axis])).abs() <= 2e-15 * 3.5, "node {j} x {} {:?}", a.x[axis], b.x[axis]);
            assert!((a.tau[axis] - f64::from(b.tau[axis])).abs() <= 2e-15, "node {j} tau {} {:?}", a.tau[axis], b.tau[axis]);
        }
        assert!((a.wprime - f64::from(b.wprime)).abs() <= 1e-15 * a.wprime.max(1.0));
    }
}
