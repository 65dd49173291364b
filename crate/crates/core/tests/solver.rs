use pmlbie::cli::config::Counts;
use pmlbie::cli::presets::preset;
use pmlbie::oracle::layered_green;
use pmlbie::solver::*;
use pmlbie::special_fn::hankel01;
use pmlbie::C64;
use std::f64::consts::PI;

fn medium(n1: f64, n2: f64, pol: Polarization) -> LayeredMedium {
    LayeredMedium::new(n1, n2, 2.0 * PI, pol).unwrap()
}

fn real(x: [f64; 2]) -> [C64; 2] {
    [C64::new(x[0], 0.0), C64::new(x[1], 0.0)]
}

/// Transmission coefficient of the magnetic (TM) or electric (TE) field from
/// the normal wavenumbers `k₁z = k₁ sin α`, `k₂z = √(k₂² − k₁²cos²α)`.
fn fresnel(n1: f64, n2: f64, alpha: f64, pol: Polarization) -> C64 {
    let k0 = 2.0 * PI;
    let k1z = C64::new(k0 * n1 * alpha.sin(), 0.0);
    let k2z = C64::new((k0 * n2).powi(2) - (k0 * n1 * alpha.cos()).powi(2), 0.0).sqrt();
    match pol {
        Polarization::TE => k1z * 2.0 / (k1z + k2z),
        Polarization::TM => k1z * (2.0 * n2 * n2) / (k1z * n2 * n2 + k2z * n1 * n1),
    }
}

#[test]
fn transmission_coefficient_matches_fresnel() {
    for pol in [Polarization::TE, Polarization::TM] {
        for (n1, n2) in [(1.0, 2.0), (1.0, 1.5), (2.0, 1.0), (1.3, 1.3)] {
            for alpha in [0.2, PI / 6.0, 1.0, PI / 2.0, 2.5] {
                let (_, t) = plane_coefficients(&medium(n1, n2, pol), alpha).unwrap();
                let want = fresnel(n1, n2, alpha, pol);
                assert!((t - want).norm() <= 1e-13 * want.norm(), "{pol:?} n = ({n1}, {n2}) α = {alpha}: {t} vs {want}");
            }
        }
    }
}

#[test]
fn transmission_coefficient_special_cases() {
    let (_, t) = plane_coefficients(&medium(1.0, 1.0, Polarization::TM), 0.7).unwrap();
    assert!((t - 1.0).norm() < 1e-15);
    let (_, t) = plane_coefficients(&medium(1.0, 2.0, Polarization::TM), PI / 2.0).unwrap();
    assert!((t - 4.0 / 3.0).norm() < 1e-15);
    let (_, t) = plane_coefficients(&medium(1.0, 2.0, Polarization::TE), PI / 2.0).unwrap();
    assert!((t - 2.0 / 3.0).norm() < 1e-15);
}

#[test]
fn grazing_and_outgoing_angles_are_rejected() {
    let m = medium(1.0, 2.0, Polarization::TE);
    for alpha in [0.0, PI, -0.3, 4.0] {
        assert!(plane_coefficients(&m, alpha).is_err(), "α = {alpha}");
    }
}

#[test]
fn plane_jump_equals_branch_difference_off_the_interface() {
    for pol in [Polarization::TE, Polarization::TM] {
        let m = medium(1.0, 2.0, pol);
        for x in [[C64::new(0.3, 0.0), C64::new(0.2, 0.0)], [C64::new(2.3, 0.4), C64::new(-0.05, 0.0)]] {
            let (u1, g1) = reference_plane(&x, &m, 1.1, Branch::Upper).unwrap();
            let (u2, g2) = reference_plane(&x, &m, 1.1, Branch::Lower).unwrap();
            let (du, dg) = plane_jump(&x, &m, 1.1).unwrap();
            let scale = u1.norm().max(u2.norm());
            assert!((du - (u1 - u2)).norm() <= 1e-13 * scale);
            for a in 0..2 {
                let want = g1[a] * m.eta1() - g2[a] * m.eta2();
                let gs = (g1[a] * m.eta1()).norm().max((g2[a] * m.eta2()).norm());
                assert!((dg[a] - want).norm() <= 1e-13 * gs, "{pol:?} axis {a}");
            }
        }
    }
}

#[test]
fn plane_jump_vanishes_on_a_flat_interface() {
    for pol in [Polarization::TE, Polarization::TM] {
        let m = medium(1.0, 2.0, pol);
        for x1 in [C64::new(-0.4, 0.0), C64::new(1.7, 0.9)] {
            let (du, dg) = plane_jump(&[x1, C64::new(0.0, 0.0)], &m, PI / 3.0).unwrap();
            assert_eq!(du, C64::new(0.0, 0.0));
            assert_eq!(dg[1], C64::new(0.0, 0.0));
        }
    }
}

#[test]
fn reference_plane_gradient_matches_finite_differences() {
    let m = medium(1.0, 2.0, Polarization::TM);
    let h = 1e-5;
    for (branch, x) in [(Branch::Upper, [0.3, 0.4]), (Branch::Lower, [-0.2, -0.3])] {
        let (_, g) = reference_plane(&real(x), &m, 0.9, branch).unwrap();
        for a in 0..2 {
            let (mut xp, mut xm) = (x, x);
            xp[a] += h;
            xm[a] -= h;
            let fd = (reference_plane(&real(xp), &m, 0.9, branch).unwrap().0 - reference_plane(&real(xm), &m, 0.9, branch).unwrap().0) / (2.0 * h);
            assert!((fd - g[a]).norm() <= 1e-7 * g[a].norm().max(1.0), "{branch:?} axis {a}");
        }
    }
}

#[test]
fn point_source_reference_is_the_free_space_kernel() {
    let m = medium(1.0, 2.0, Polarization::TE);
    let (u, _) = reference_point(&real([0.5, 0.5]), &m, [0.0, 0.1], Branch::Upper).unwrap();
    let r = 0.5f64.hypot(0.4);
    let want = C64::new(0.0, 0.25) * hankel01(C64::new(m.k1() * r, 0.0)).unwrap().0;
    assert!((u - want).norm() < 1e-15);
    let (u, g) = reference_point(&real([0.5, -0.5]), &m, [0.0, 0.1], Branch::Lower).unwrap();
    assert_eq!((u, g), (C64::new(0.0, 0.0), [C64::new(0.0, 0.0); 2]));
    assert!(reference_point(&real([0.0, 0.1]), &m, [0.0, 0.1], Branch::Upper).is_err());
}

#[test]
fn plane_waves_are_rejected_on_the_step() {
    let cfg = preset("step").unwrap();
    let p = cfg.problem(&Counts { interface: vec![20; 3], obstacle: None }, 1.0).unwrap();
    let err = p.check_incidence(&Incidence::PlaneWave { alpha: PI / 3.0 }).unwrap_err().to_string();
    assert!(err.contains("fails in this case"), "{err}");
    assert!(p.check_incidence(&Incidence::PointSource { x: [0.0, 1.1] }).is_ok());
}

#[test]
fn point_sources_must_lie_in_the_upper_medium() {
    let cfg = preset("semicircles").unwrap();
    let p = cfg.problem(&Counts { interface: vec![20; 4], obstacle: None }, 1.0).unwrap();
    assert_eq!(p.region([-1.0, 0.5]).unwrap(), Region::Lower);
    assert_eq!(p.region([1.0, -0.5]).unwrap(), Region::Upper);
    assert!(p.region([3.0, 0.0]).is_err());
    assert!(p.check_incidence(&Incidence::PointSource { x: [-1.0, 0.5] }).is_err());
    assert!(p.check_incidence(&Incidence::PointSource { x: [1.0, -0.5] }).is_ok());
}

#[test]
fn problems_need_endpoints_inside_the_pml() {
    let cfg = preset("flat").unwrap();
    let mesh = cfg.interface_mesh(&[20, 20]).unwrap();
    let narrow = pmlbie::Profile::new(2.5, 1.0, 1.0, 8).unwrap();
    assert!(Problem::new(mesh, None, narrow, cfg.medium().unwrap()).is_err());
}

#[test]
fn flat_interface_plane_waves_produce_no_scattering() {
    let cfg = preset("flat").unwrap();
    let p = cfg.problem(&Counts { interface: vec![50, 50], obstacle: None }, 1.0).unwrap();
    let prepared = p.prepare().unwrap();
    for alpha in [0.4, PI / 2.0, 2.2] {
        let r = prepared.solve(&Incidence::PlaneWave { alpha }).unwrap();
        let worst = [&r.u1, &r.u2, &r.phi1, &r.phi2].iter().flat_map(|v| v.iter()).map(|z| z.norm()).fold(0.0, f64::max);
        assert!(worst <= 1e-12, "α = {alpha}: {worst:e}");
    }
}

#[test]
fn flat_interface_field_matches_the_layered_green_function() {
    let cfg = preset("flat").unwrap();
    let p = cfg.problem(&Counts { interface: vec![200, 200], obstacle: None }, 1.0).unwrap();
    let prepared = p.prepare().unwrap();
    let r = prepared.solve(&Incidence::PointSource { x: [0.0, 0.1] }).unwrap();
    assert!(r.diagnostics.residual <= RESIDUAL_TOL);
    assert!(r.diagnostics.pml_decay <= 1e-5, "decay {:e}", r.diagnostics.pml_decay);
    for x in [[0.3, 0.5], [-0.6, 0.2], [0.2, -0.4], [-0.5, -0.7]] {
        let got = prepared.evaluate_field(&r, x).unwrap();
        let want = layered_green(x, [0.0, 0.1], &p.medium).unwrap();
        assert!((got - want).norm() <= 1e-6 * want.norm(), "x = {x:?}: {got} vs {want}");
    }
    assert!(matches!(prepared.evaluate_field(&r, [0.3, 1e-3]), Err(SolverError::NearBoundary { .. })));
}

#[test]
fn flat_interface_solutions_are_reciprocal() {
    let cfg = preset("flat").unwrap();
    let p = cfg.problem(&Counts { interface: vec![200, 200], obstacle: None }, 1.0).unwrap();
    let prepared = p.prepare().unwrap();
    let (a, b) = ([0.3, 0.2], [-0.4, 0.5]);
    let ra = prepared.solve(&Incidence::PointSource { x: a }).unwrap();
    let rb = prepared.solve(&Incidence::PointSource { x: b }).unwrap();
    let gab = prepared.evaluate_field(&ra, b).unwrap();
    let gba = prepared.evaluate_field(&rb, a).unwrap();
    assert!((gab - gba).norm() <= 1e-6 * gab.norm(), "{gab} vs {gba}");
}

#[test]
fn index_matched_semicircles_reproduce_the_incident_field() {
    let mut cfg = preset("semicircles").unwrap();
    cfg.medium.n2 = cfg.medium.n1;
    let p = cfg.problem(&Counts { interface: vec![100; 4], obstacle: None }, 1.0).unwrap();
    let prepared = p.prepare().unwrap();
    let src = [1.0, 1.0];
    let r = prepared.solve(&Incidence::PointSource { x: src }).unwrap();
    let k = p.medium.k1();
    for x in [[-1.0, 0.4], [1.0, -0.6], [0.5, 1.5], [-1.5, -1.0]] {
        let got = prepared.evaluate_field(&r, x).unwrap();
        let d = (x[0] - src[0]).hypot(x[1] - src[1]);
        let want = C64::new(0.0, 0.25) * hankel01(C64::new(k * d, 0.0)).unwrap().0;
        assert!((got - want).norm() <= 1e-6 * want.norm(), "x = {x:?}: {got} vs {want}");
    }
}
