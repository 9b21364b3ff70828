mod common;

use bimcc::geometry::{apply_transform, weighted_rigid_fit, NeighborIndex, Point3, RigidTransform};
use bimcc::registration::{
    bimcc_icp, bimcc_objective, build_bidirectional_pairs, combined_error, correntropy_weights, icp_classic,
    pair_residuals, IcpConfig, KernelSchedule,
};
use common::*;
use proptest::prelude::*;
use rand::Rng;

fn clean_instance(seed: u64, n: usize, max_deg: f64) -> (bimcc::geometry::PointCloud, bimcc::geometry::PointCloud) {
    let mut r = rng(seed);
    let x = cloud(random_points(&mut r, n, 10.0));
    let t = random_transform(&mut r, max_deg, 2.0);
    let y = apply_transform(&t, &x);
    (x, y)
}

#[test]
fn icp_error_trace_never_increases() {
    for seed in 0..50 {
        let (x, y) = clean_instance(seed, 80, 30.0);
        let res = icp_classic(&x, &y, &RigidTransform::identity(), &IcpConfig::default()).unwrap();
        for w in res.trace.windows(2) {
            assert!(
                w[1].error <= w[0].error + 1e-12,
                "seed {seed}: {} -> {}",
                w[0].error,
                w[1].error
            );
        }
    }
}

#[test]
fn fixed_sigma_step_never_lowers_objective() {
    for seed in 0..50u64 {
        let mut r = rng(1000 + seed);
        let x = cloud(random_points(&mut r, 60, 10.0));
        let mut y_pts = apply_transform(&random_transform(&mut r, 25.0, 2.0), &x).into_points();
        for p in y_pts.iter_mut().take(15) {
            *p = random_points(&mut r, 1, 15.0)[0];
        }
        let y = cloud(y_pts);
        let pose = random_transform(&mut r, 10.0, 1.0);
        let sigma = r.random_range(0.5..20.0);
        let pairs = build_bidirectional_pairs(
            &x,
            &y,
            &pose,
            &NeighborIndex::new(y.points()).unwrap(),
            &NeighborIndex::new(x.points()).unwrap(),
        )
        .unwrap();
        let before = bimcc_objective(&pairs, &pose, sigma).unwrap();
        let moved: Vec<Point3> = pairs.a.iter().map(|a| pose.apply_point(a)).collect();
        let weights = correntropy_weights(&pair_residuals(&pairs, &pose), sigma).unwrap();
        let step = weighted_rigid_fit(&moved, &pairs.b, &weights).unwrap();
        let after = bimcc_objective(&pairs, &step.compose(&pose), sigma).unwrap();
        assert!(after >= before - 1e-12, "seed {seed}: {before} -> {after}");
    }
}

#[test]
fn weights_and_kernel_values_in_unit_interval() {
    let mut r = rng(7);
    let x = cloud(random_points(&mut r, 100, 10.0));
    let mut y_pts = apply_transform(&random_transform(&mut r, 20.0, 2.0), &x).into_points();
    for p in y_pts.iter_mut().take(30) {
        *p = random_points(&mut r, 1, 1e4)[0];
    }
    let y = cloud(y_pts);
    let cfg = IcpConfig { keep_residuals: true, ..IcpConfig::default() };
    let res = bimcc_icp(&x, &y, &RigidTransform::identity(), &cfg, &KernelSchedule::default()).unwrap();
    for rec in &res.trace {
        let sigma = rec.sigma.unwrap();
        let residuals: Vec<Point3> = rec.residual_sq.iter().map(|r2| Point3::new(r2.sqrt(), 0.0, 0.0)).collect();
        for w in correntropy_weights(&residuals, sigma).unwrap() {
            assert!(w > 0.0 && w <= 1.0);
        }
    }
}

#[test]
fn inverse_runs_cancel() {
    let sched = KernelSchedule::default();
    for seed in 0..10 {
        let (x, y) = clean_instance(300 + seed, 200, 15.0);
        let fwd = bimcc_icp(&x, &y, &RigidTransform::identity(), &IcpConfig::default(), &sched).unwrap();
        let bwd = bimcc_icp(&y, &x, &RigidTransform::identity(), &IcpConfig::default(), &sched).unwrap();
        let round = bwd.transform.compose(&fwd.transform);
        assert!(round.rotation_angle_deg() < 0.5, "seed {seed}: {}", round.rotation_angle_deg());
        assert!(round.translation().norm() < 0.01 * x.bounding_box_diagonal());
    }
}

#[test]
fn identical_inputs_give_identical_traces() {
    let (x, y) = clean_instance(11, 150, 20.0);
    let run = || bimcc_icp(&x, &y, &RigidTransform::identity(), &IcpConfig::default(), &KernelSchedule::default()).unwrap();
    let (a, b) = (run(), run());
    assert_eq!(a, b);
    for (ra, rb) in a.trace.iter().zip(&b.trace) {
        assert_eq!(ra.objective.unwrap().to_bits(), rb.objective.unwrap().to_bits());
    }
}

#[test]
fn combined_error_recomputes_from_trace() {
    let (x, y) = clean_instance(12, 120, 20.0);
    let cfg = IcpConfig { keep_residuals: true, ..IcpConfig::default() };
    let res = bimcc_icp(&x, &y, &RigidTransform::identity(), &cfg, &KernelSchedule::default()).unwrap();
    assert!(!res.trace.is_empty());
    for rec in &res.trace {
        let recomputed = combined_error(&rec.residual_sq, rec.sigma.unwrap()).unwrap();
        assert_eq!(recomputed, rec.combined.unwrap());
        let mse = rec.residual_sq.iter().sum::<f64>() / rec.residual_sq.len() as f64;
        assert_eq!(mse, rec.error);
    }
}

#[test]
fn self_registration_is_identity_with_unit_objective() {
    let x = cloud(random_points(&mut rng(13), 50, 10.0));
    let res = bimcc_icp(&x, &x, &RigidTransform::identity(), &IcpConfig::default(), &KernelSchedule::default()).unwrap();
    assert!(res.converged);
    assert!(max_abs_diff(&res.transform, &RigidTransform::identity()) < 1e-9);
    assert_eq!(res.trace.last().unwrap().objective, Some(1.0));
}

#[test]
fn single_iteration_cap() {
    let (x, y) = clean_instance(14, 80, 20.0);
    let cfg = IcpConfig { max_iterations: 1, ..IcpConfig::default() };
    let b = bimcc_icp(&x, &y, &RigidTransform::identity(), &cfg, &KernelSchedule::default()).unwrap();
    let i = icp_classic(&x, &y, &RigidTransform::identity(), &cfg).unwrap();
    assert_eq!((b.trace.len(), b.converged), (1, false));
    assert_eq!((i.trace.len(), i.converged), (1, false));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fit_output_is_a_proper_rotation(seed in any::<u64>(), n in 3usize..30) {
        let mut r = rng(seed);
        let src = random_points(&mut r, n, 50.0);
        let dst = random_points(&mut r, n, 50.0);
        let w: Vec<f64> = (0..n).map(|_| r.random_range(1e-6..1.0)).collect();
        if let Ok(t) = weighted_rigid_fit(&src, &dst, &w) {
            let (ortho, det) = rotation_defects(&t);
            prop_assert!(ortho <= 1e-9 && det <= 1e-9);
        }
    }

    #[test]
    fn transform_inverse_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let c = cloud(random_points(&mut r, 20, 100.0));
        let t = random_transform(&mut r, 180.0, 100.0);
        let back = apply_transform(&t.inverse(), &apply_transform(&t, &c));
        for (p, q) in c.points().iter().zip(back.points()) {
            prop_assert!((p - q).abs().max() <= 1e-9);
        }
    }

    #[test]
    fn weights_positive_and_bounded(norms in prop::collection::vec(0.0f64..1e8, 1..50), sigma in 1e-3f64..1e3) {
        let res: Vec<Point3> = norms.iter().map(|n| Point3::new(*n, 0.0, 0.0)).collect();
        for w in correntropy_weights(&res, sigma).unwrap() {
            prop_assert!(w > 0.0 && w <= 1.0);
        }
    }
}
