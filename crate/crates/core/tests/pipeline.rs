mod common;

use gaussinv::corner::{self, CornerScenario, SiContext};
use gaussinv::invariant::{commutation_residual, design_protocol, invariance_residual, jdot_consistency, JdotSign};
use gaussinv::linalg::{Matrix, Vector};
use gaussinv::schedule::validate_boundaries;
use gaussinv::{Error, TimeGrid};

#[test]
fn corner_endpoints_match_the_traps() {
    let c = CornerScenario::new(10.0, 3.0).unwrap();
    let (setup, p) = corner::corner_protocol(&c, 256).unwrap();
    let report = validate_boundaries(&setup.shape, &setup.path, &setup.initial, &setup.target).unwrap();
    assert!(report.all_pass(), "{report:?}");
    let first = &p.points[0];
    let last = p.points.last().unwrap();
    assert!((&first.curvature - Matrix::from_diagonal(&Vector::from_row_slice(&[1.0, 100.0]))).norm() < 1e-10);
    assert!((&last.curvature - Matrix::from_diagonal(&Vector::from_row_slice(&[100.0, 1.0]))).norm() < 1e-10);
    // F(0) = m M(0) L(0) = (0, 100 r)
    assert!((&first.force - Vector::from_row_slice(&[0.0, 100.0])).norm() < 1e-10);
}

#[test]
fn isotropic_corner_is_pure_transport() {
    let c = CornerScenario::new(1.0, 4.0).unwrap();
    let setup = corner::build_scenario(&c).unwrap();
    let s0 = setup.shape.eval(0.0).unwrap();
    let s1 = setup.shape.eval(4.0).unwrap();
    assert_eq!(s0.r, s1.r);
}

#[test]
fn commutation_at_ends_but_not_mid_flight() {
    let c = CornerScenario::new(10.0, 3.0).unwrap();
    let (_, p) = corner::corner_protocol(&c, 64).unwrap();
    for pt in [&p.points[0], p.points.last().unwrap()] {
        let res = commutation_residual(&pt.invariant, &pt.hamiltonian(1.0).unwrap()).unwrap();
        assert!(res.quadratic < 1e-10 && res.linear < 1e-10, "{res:?}");
    }
    let mid = &p.points[32];
    let res = commutation_residual(&mid.invariant, &mid.hamiltonian(1.0).unwrap()).unwrap();
    assert!(res.quadratic > 1e-3, "{res:?}");
}

#[test]
fn corrupted_curvature_spikes_locally() {
    let c = CornerScenario::new(2.0, 5.0).unwrap();
    let (_, mut p) = corner::corner_protocol(&c, 400).unwrap();
    let clean = invariance_residual(&p).unwrap();
    p.points[200].curvature *= 1.01;
    let dirty = invariance_residual(&p).unwrap();
    assert_eq!(dirty.argmax_quadratic(), Some(200));
    assert!(dirty.max_quadratic() > 100.0 * clean.max_quadratic());
    // neighbours see only the unchanged invariant
    assert_eq!(dirty.quadratic[198], clean.quadratic[198]);
}

#[test]
fn dimensionless_protocol_is_scale_invariant() {
    let a = CornerScenario::new(10.0, 3.0).unwrap();
    let b = CornerScenario { omega_r: 20.0, omega_t: 2.0, duration: 1.5, ..a.clone() };
    let (_, pa) = corner::corner_protocol(&a, 128).unwrap();
    let (_, pb) = corner::corner_protocol(&b, 128).unwrap();
    for (x, y) in pa.points.iter().zip(&pb.points) {
        assert!((&x.curvature - &y.curvature / 4.0).amax() < 1e-12 * x.curvature.amax());
        assert!((&x.force - &y.force / 4.0).amax() < 1e-12 * x.force.amax().max(1.0));
        let (cx, cy) = (
            corner::trap_center(&x.curvature, &x.force, 1.0).unwrap(),
            corner::trap_center(&y.curvature, &y.force, 1.0).unwrap(),
        );
        assert!((cx - cy).amax() < 1e-12);
    }
    let si = SiContext::default();
    let fa = corner::max_field(&pa, &a, &si).unwrap();
    let fb = corner::max_field(&pb, &b, &si).unwrap();
    assert!((fa.field - fb.field).abs() < 1e-10 * fa.field);
}

#[test]
fn field_maximum_sits_at_an_endpoint() {
    let si = SiContext::default();
    for ratio in [2.0, 10.0] {
        for duration in [3.0, 5.0, 10.0] {
            let c = CornerScenario::new(ratio, duration).unwrap();
            let (_, p) = corner::corner_protocol(&c, 2048).unwrap();
            let f = corner::max_field(&p, &c, &si).unwrap();
            assert!(f.index == 0 || f.index == 2048, "ratio {ratio} T {duration}: max at {}", f.time);
        }
    }
}

#[test]
fn fast_protocol_leaves_the_arc() {
    let c = CornerScenario::new(10.0, 3.0).unwrap();
    let (_, p) = corner::corner_protocol(&c, 512).unwrap();
    let centers = corner::trap_centers(&p);
    assert!((centers[0].as_ref().unwrap() - &p.points[0].path.l).norm() < 1e-12);
    assert!((centers[512].as_ref().unwrap() - &p.points[512].path.l).norm() < 1e-12);
    assert!(corner::max_center_deviation(&p) > 0.1);
}

#[test]
fn jdot_follows_one_ordering() {
    let c = CornerScenario::new(2.0, 5.0).unwrap();
    let setup = corner::build_scenario(&c).unwrap();
    let report = jdot_consistency(&setup.shape, c.grid(1000).unwrap()).unwrap();
    assert_eq!(report.matching, JdotSign::CurvatureFirst);
    assert_eq!(report.initial_norm, 0.0);
    assert!(report.residual() < 1e-3 * report.other_residual());
}

#[test]
fn losing_positivity_names_the_time() {
    let c = CornerScenario { bump: Some(Matrix::from_row_slice(2, 2, &[-100.0, 0.0, 0.0, -100.0])), ..CornerScenario::new(2.0, 3.0).unwrap() };
    let setup = corner::build_scenario(&c).unwrap();
    let err = design_protocol(&setup.shape, &setup.path, 1.0, TimeGrid::over(3.0, 64).unwrap()).unwrap_err();
    assert!(matches!(err, Error::NotPositiveDefinite { what: "R", .. }));
    assert!(err.to_string().starts_with("R not positive definite at t="), "{err}");
}
