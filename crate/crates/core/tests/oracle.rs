use pmlbie::geometry::{shapes, GradedMesh, Param};
use pmlbie::oracle::*;
use pmlbie::solver::{LayeredMedium, Polarization};
use pmlbie::special_fn::hankel01;
use pmlbie::C64;
use std::f64::consts::PI;

fn medium(n1: f64, n2: f64, pol: Polarization) -> LayeredMedium {
    LayeredMedium::new(n1, n2, 2.0 * PI, pol).unwrap()
}

fn free(k: f64, x: [f64; 2], xs: [f64; 2]) -> C64 {
    let r = (x[0] - xs[0]).hypot(x[1] - xs[1]);
    C64::new(0.0, 0.25) * hankel01(C64::new(k * r, 0.0)).unwrap().0
}

#[test]
fn highprec_hankel_tabulated_values() {
    // J0, Y0, J1, Y1 at 1 from standard tables
    let h0 = highprec_hankel(0, C64::new(1.0, 0.0)).unwrap();
    let h1 = highprec_hankel(1, C64::new(1.0, 0.0)).unwrap();
    assert!((h0 - C64::new(0.765_197_686_557_966_6, 0.088_256_964_215_676_96)).norm() < 1e-15);
    assert!((h1 - C64::new(0.440_050_585_744_933_5, -0.781_212_821_300_288_7)).norm() < 1e-15);
}

#[test]
fn highprec_hankel_matches_production() {
    for z in [C64::new(1e-6, 0.0), C64::new(1.0, 0.0), C64::new(10.0, 0.0), C64::new(3.0, 4.0), C64::new(20.0, 15.0)] {
        let (a0, a1) = highprec_hankel01(z).unwrap();
        let (b0, b1) = hankel01(z).unwrap();
        assert!((a0 - b0).norm() <= 1e-13 * a0.norm(), "H0 at {z}");
        assert!((a1 - b1).norm() <= 1e-13 * a1.norm(), "H1 at {z}");
    }
}

#[test]
fn highprec_hankel_small_argument_asymptotics() {
    let z = 1e-6;
    let h0 = highprec_hankel(0, C64::new(z, 0.0)).unwrap();
    let gamma = 0.577_215_664_901_532_9;
    let y0 = 2.0 / PI * ((z / 2.0f64).ln() + gamma);
    assert!((h0.re - 1.0).abs() < 1e-12);
    assert!((h0.im - y0).abs() < 1e-10);
}

#[test]
fn highprec_hankel_rejects_out_of_range() {
    assert!(highprec_hankel(0, C64::new(0.0, 0.0)).is_err());
    assert!(highprec_hankel(0, C64::new(HP_MAX_RADIUS + 1.0, 0.0)).is_err());
    assert!(highprec_hankel(0, C64::new(1.0, -0.5)).is_err());
    assert!(highprec_hankel(2, C64::new(1.0, 0.0)).is_err());
}

#[test]
fn layered_green_without_contrast_is_free_space() {
    let m = medium(1.0, 1.0, Polarization::TM);
    let xs = [0.0, 0.1];
    for x in [[0.5, 0.3], [1.0, -0.5], [-0.7, 0.0], [2.0, -1.0]] {
        let g = layered_green(x, xs, &m).unwrap();
        let want = free(m.k1(), x, xs);
        assert!((g - want).norm() <= 1e-10 * want.norm(), "x = {x:?}");
    }
}

#[test]
fn layered_green_is_reciprocal_in_the_upper_medium() {
    let m = medium(1.0, 2.0, Polarization::TM);
    let (a, b) = ([0.5, 0.3], [-0.2, 0.1]);
    let g1 = layered_green(a, b, &m).unwrap();
    let g2 = layered_green(b, a, &m).unwrap();
    assert!((g1 - g2).norm() <= 1e-10 * g1.norm());
}

#[test]
fn layered_green_is_stable_under_refinement() {
    let m = medium(1.0, 2.0, Polarization::TM);
    let cfg = SommerfeldConfig::default();
    for x in [[0.5, 0.3], [0.4, -0.3], [1.0, 0.0]] {
        let a = layered_green_grad(x, [0.0, 0.1], &m, &cfg).unwrap().0;
        let b = layered_green_grad(x, [0.0, 0.1], &m, &cfg.refined()).unwrap().0;
        assert!((a - b).norm() <= 1e-10 * b.norm(), "x = {x:?}");
    }
}

#[test]
fn layered_green_satisfies_transmission_conditions() {
    for pol in [Polarization::TE, Polarization::TM] {
        let m = medium(1.0, 2.0, pol);
        let cfg = SommerfeldConfig::default();
        for x1 in [0.0, 0.37, -1.2] {
            let (up, dup) = layered_green_grad([x1, 1e-12], [0.0, 0.1], &m, &cfg).unwrap();
            let (lo, dlo) = layered_green_grad([x1, -1e-12], [0.0, 0.1], &m, &cfg).unwrap();
            assert!((up - lo).norm() <= 1e-8 * up.norm(), "{pol:?} trace at {x1}");
            let flux = dup * m.eta1() - dlo * m.eta2();
            assert!(flux.norm() <= 1e-8 * (dup * m.eta1()).norm(), "{pol:?} flux at {x1}");
        }
    }
}

#[test]
fn layered_green_solves_helmholtz_below_the_interface() {
    let m = medium(1.0, 2.0, Polarization::TM);
    let (x, xs, h) = ([0.3, -0.4], [0.0, 0.1], 2e-3);
    let u = |dx: f64, dy: f64| layered_green([x[0] + dx, x[1] + dy], xs, &m).unwrap();
    let c = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];
    let mut lap = C64::new(0.0, 0.0);
    for (i, w) in c.iter().enumerate() {
        let o = (i as f64 - 2.0) * h;
        lap += (u(o, 0.0) + u(0.0, o)) * (*w / (h * h));
    }
    let u0 = u(0.0, 0.0);
    let k2 = m.k2() * m.k2();
    let res = (lap + u0 * k2).norm() / (u0.norm() * k2);
    assert!(res < 1e-5, "relative residual {res:e}");
}

#[test]
fn layered_green_rejects_points_on_the_source() {
    let m = medium(1.0, 2.0, Polarization::TM);
    assert!(layered_green([0.0, 0.1], [0.0, 0.1], &m).is_err());
}

#[test]
fn corner_pair_oracle_on_a_line_is_exact() {
    let mesh = GradedMesh::new(shapes::flat(2.0).unwrap(), &[20, 20], 6).unwrap();
    let l = Param::node(20);
    let p = Param::new(21, 0.25);
    let o = corner_pair_oracle(&mesh, l, p).unwrap();
    let xp = mesh.eval(p, pmlbie::geometry::Side::Before).x;
    assert_eq!(o.delta[1], 0.0);
    assert_eq!(o.kappa_bar, 0.0);
    assert!((o.delta[0] - xp[0]).abs() <= 1e-15 * xp[0].abs());
    assert!(corner_pair_oracle(&mesh, l, Param::node(41)).is_err());
}

#[test]
fn corner_pair_oracle_on_an_arc_matches_the_chord() {
    let mesh = GradedMesh::new(shapes::semicircles(3.5).unwrap(), &[40; 4], 6).unwrap();
    let (l, p) = (Param::node(60), Param::new(63, 0.5));
    let o = corner_pair_oracle(&mesh, l, p).unwrap();
    let side = pmlbie::geometry::Side::Before;
    let (xl, cp) = (mesh.eval(l, side).x, mesh.eval(p, side));
    let d = [cp.x[0] - xl[0], cp.x[1] - xl[1]];
    assert!((o.dist - d[0].hypot(d[1])).abs() <= 1e-13);
    // on the unit circle τ(p) ∧ (x(p) − x(l)) = ±(1 − cos θ) with |chord| = 2 sin(θ/2)
    let half = (o.dist / 2.0).asin();
    assert!((o.kappa_bar.abs() - 2.0 * half.sin().powi(2)).abs() <= 1e-13);
}
