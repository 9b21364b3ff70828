use super::{IcpConfig, KernelSchedule, RegistrationResult, SigmaRule, TraceRecord};
use crate::error::{Error, Result};
use crate::geometry::{weighted_rigid_fit, NeighborIndex, Point3, PointCloud, RigidTransform};

/// Forward and backward correspondences folded into one pair list.
///
/// The first `forward_count` pairs are `(x_i, y_c(i))` for every source
/// point; the remainder are `(x_d(j), y_j)` for every target point. Source
/// coordinates are stored untransformed.
#[derive(Debug, Clone, PartialEq)]
pub struct BidirectionalPairs {
    pub a: Vec<Point3>,
    pub b: Vec<Point3>,
    pub forward_count: usize,
    /// `c(i)`: target index paired with source point `i`.
    pub forward_index: Vec<usize>,
    /// `d(j)`: source index paired with target point `j`.
    pub backward_index: Vec<usize>,
}

impl BidirectionalPairs {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }
}

/// Pairs every source point with its nearest target point and every target
/// point with its nearest source point, both in the pose `current`.
///
/// `idx_source` indexes the untransformed source; backward queries pull the
/// target point back through `current⁻¹`, which finds the same neighbour as
/// querying the moved source because rigid motions preserve distances.
pub fn build_bidirectional_pairs(
    source: &PointCloud,
    target: &PointCloud,
    current: &RigidTransform,
    idx_target: &NeighborIndex,
    idx_source: &NeighborIndex,
) -> Result<BidirectionalPairs> {
    source.ensure_non_empty()?;
    target.ensure_non_empty()?;
    if idx_target.len() != target.len() || idx_source.len() != source.len() {
        return Err(Error::DimensionMismatch(format!(
            "indexes cover {}/{} points, clouds have {}/{}",
            idx_source.len(),
            idx_target.len(),
            source.len(),
            target.len()
        )));
    }
    let n = source.len() + target.len();
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    let mut forward_index = Vec::with_capacity(source.len());
    let mut backward_index = Vec::with_capacity(target.len());

    for x in source.points() {
        let (j, _) = idx_target.nearest(&current.apply_point(x))?;
        forward_index.push(j);
        a.push(*x);
        b.push(target.points()[j]);
    }
    let inverse = current.inverse();
    for y in target.points() {
        let (i, _) = idx_source.nearest(&inverse.apply_point(y))?;
        backward_index.push(i);
        a.push(source.points()[i]);
        b.push(*y);
    }
    Ok(BidirectionalPairs {
        a,
        b,
        forward_count: source.len(),
        forward_index,
        backward_index,
    })
}

/// `R aᵢ + t − bᵢ` for every pair, forward and backward alike.
pub fn pair_residuals(pairs: &BidirectionalPairs, t: &RigidTransform) -> Vec<Point3> {
    pairs
        .a
        .iter()
        .zip(&pairs.b)
        .map(|(a, b)| t.apply_point(a) - b)
        .collect()
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidSigma(sigma))
    }
}

#[inline]
fn kernel(r_sq: f64, sigma: f64) -> f64 {
    // Clamped so far outliers keep a strictly positive weight.
    (-r_sq / (2.0 * sigma * sigma)).exp().max(f64::MIN_POSITIVE)
}

/// Gaussian kernel weights `exp(−‖r‖²/2σ²)`, each in `(0, 1]`.
pub fn correntropy_weights(residuals: &[Point3], sigma: f64) -> Result<Vec<f64>> {
    check_sigma(sigma)?;
    Ok(residuals
        .iter()
        .map(|r| kernel(r.norm_squared(), sigma))
        .collect())
}

/// Mean kernel value over all forward and backward pairs, in `(0, 1]`.
pub fn bimcc_objective(pairs: &BidirectionalPairs, t: &RigidTransform, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    if pairs.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let sum: f64 = pairs
        .a
        .iter()
        .zip(&pairs.b)
        .map(|(a, b)| kernel((t.apply_point(a) - b).norm_squared(), sigma))
        .sum();
    Ok(sum / pairs.len() as f64)
}

/// Sum of kernel values over forward and backward residuals, given their
/// squared norms. Recorded per iteration as a diagnostic.
pub fn combined_error(residual_sq: &[f64], sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    Ok(residual_sq.iter().map(|&r2| kernel(r2, sigma)).sum())
}

/// Kernel width for the given iteration.
///
/// Iteration 0 uses `sigma_init_scale × median residual norm` (the floor when
/// that median is zero); later iterations use `max(sigma_floor, eta × RMS
/// residual norm)`. Under [`SigmaRule::WeightedRms`] each squared norm is
/// weighted by its kernel value at `sigma_prev`. With no residuals the
/// previous width is kept.
pub fn sigma_schedule(
    residuals: &[Point3],
    iteration: usize,
    sched: &KernelSchedule,
    sigma_prev: f64,
) -> f64 {
    if residuals.is_empty() {
        return if sigma_prev > 0.0 { sigma_prev } else { sched.sigma_floor };
    }
    if iteration == 0 {
        let mut norms: Vec<f64> = residuals.iter().map(|r| r.norm()).collect();
        norms.sort_by(f64::total_cmp);
        let mid = norms.len() / 2;
        let median = if norms.len().is_multiple_of(2) {
            0.5 * (norms[mid - 1] + norms[mid])
        } else {
            norms[mid]
        };
        let sigma = sched.sigma_init_scale * median;
        if sigma > 0.0 {
            sigma
        } else {
            sched.sigma_floor
        }
    } else {
        let mean_sq = match sched.rule {
            SigmaRule::WeightedRms if sigma_prev > 0.0 && sigma_prev.is_finite() => {
                let (num, den) = residuals.iter().fold((0.0, 0.0), |(num, den), r| {
                    let r2 = r.norm_squared();
                    let w = kernel(r2, sigma_prev);
                    (num + w * r2, den + w)
                });
                num / den
            }
            _ => residuals.iter().map(|r| r.norm_squared()).sum::<f64>() / residuals.len() as f64,
        };
        (sched.eta * mean_sq.sqrt()).max(sched.sigma_floor)
    }
}

/// ICP driven by the bidirectional maximum correntropy criterion.
///
/// Each iteration re-pairs both directions in the current pose, weights the
/// pairs with the Gaussian kernel at the current width, solves the weighted
/// rigid fit for an incremental motion and composes it onto the running
/// estimate (`R_k = R*·R_{k−1}`, `t_k = R*·t_{k−1} + t*`). Convergence is
/// judged on the objective; the first iteration compares against the
/// objective of the initial pose.
pub fn bimcc_icp(
    source: &PointCloud,
    target: &PointCloud,
    init: &RigidTransform,
    cfg: &IcpConfig,
    sched: &KernelSchedule,
) -> Result<RegistrationResult> {
    cfg.validate()?;
    sched.validate()?;
    source.ensure_non_empty()?;
    target.ensure_non_empty()?;
    if source.len() < 3 {
        return Err(Error::InsufficientPairs(source.len()));
    }
    if target.len() < 3 {
        return Err(Error::InsufficientPairs(target.len()));
    }
    let idx_source = NeighborIndex::new(source.points())?;
    let idx_target = NeighborIndex::new(target.points())?;

    let mut current = *init;
    let mut sigma: Option<f64> = None;
    let mut previous: Option<f64> = None;
    let mut trace = Vec::new();
    let mut converged = false;

    for iteration in 1..=cfg.max_iterations {
        let pairs = build_bidirectional_pairs(source, target, &current, &idx_target, &idx_source)?;
        let residuals = pair_residuals(&pairs, &current);
        let sigma_k = *sigma.get_or_insert_with(|| sigma_schedule(&residuals, 0, sched, 0.0));
        let reference = match previous {
            Some(p) => p,
            None => bimcc_objective(&pairs, &current, sigma_k)?,
        };

        let mut next = current;
        for _ in 0..cfg.inner_iters {
            let moved: Vec<Point3> = pairs.a.iter().map(|a| next.apply_point(a)).collect();
            let weights: Vec<f64> = moved
                .iter()
                .zip(&pairs.b)
                .map(|(m, b)| kernel((m - b).norm_squared(), sigma_k))
                .collect();
            let step = weighted_rigid_fit(&moved, &pairs.b, &weights)?;
            next = step.compose(&next);
        }
        current = next;

        let after = pair_residuals(&pairs, &current);
        let residual_sq: Vec<f64> = after.iter().map(|r| r.norm_squared()).collect();
        let objective = bimcc_objective(&pairs, &current, sigma_k)?;
        let combined = combined_error(&residual_sq, sigma_k)?;
        let mse = residual_sq.iter().sum::<f64>() / residual_sq.len() as f64;
        trace.push(TraceRecord {
            iteration,
            error: mse,
            objective: Some(objective),
            combined: Some(combined),
            sigma: Some(sigma_k),
            residual_sq: if cfg.keep_residuals { residual_sq } else { Vec::new() },
        });

        sigma = Some(sigma_schedule(&after, iteration, sched, sigma_k));
        previous = Some(objective);
        if (objective - reference).abs() < cfg.epsilon {
            converged = true;
            break;
        }
    }

    Ok(RegistrationResult {
        transform: current,
        iterations: trace.len(),
        converged,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::apply_transform;
    use nalgebra::Vector3;

    fn cloud(points: &[[f64; 3]]) -> PointCloud {
        PointCloud::new(points.iter().map(|p| Point3::from(*p)).collect()).unwrap()
    }

    fn pairs_for(x: &PointCloud, y: &PointCloud, t: &RigidTransform) -> BidirectionalPairs {
        let ix = NeighborIndex::new(x.points()).unwrap();
        let iy = NeighborIndex::new(y.points()).unwrap();
        build_bidirectional_pairs(x, y, t, &iy, &ix).unwrap()
    }

    #[test]
    fn self_pairs() {
        let x = cloud(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 2.0, 0.0]]);
        let p = pairs_for(&x, &x, &RigidTransform::identity());
        assert_eq!(p.len(), 6);
        assert_eq!(p.forward_count, 3);
        assert_eq!(p.a, p.b);
    }

    #[test]
    fn hand_enumerated_pairs() {
        let x = cloud(&[[0.0, 0.0, 0.0]]);
        let y = cloud(&[[5.0, 0.0, 0.0], [100.0, 0.0, 0.0]]);
        let p = pairs_for(&x, &y, &RigidTransform::identity());
        assert_eq!(p.len(), 3);
        assert_eq!(p.forward_count, 1);
        let o = Point3::zeros();
        assert_eq!(p.a, vec![o, o, o]);
        assert_eq!(
            p.b,
            vec![Point3::new(5.0, 0.0, 0.0), Point3::new(5.0, 0.0, 0.0), Point3::new(100.0, 0.0, 0.0)]
        );
        assert_eq!(p.forward_index, vec![0]);
        assert_eq!(p.backward_index, vec![0, 0]);
    }

    #[test]
    fn pair_counts() {
        let x = cloud(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]);
        let y = cloud(&[[0.0, 1.0, 0.0], [1.0, 1.0, 0.0], [2.0, 1.0, 0.0]]);
        let p = pairs_for(&x, &y, &RigidTransform::identity());
        assert_eq!((p.forward_count, p.len()), (2, 5));
    }

    #[test]
    fn backward_pairs_use_current_pose() {
        let x = cloud(&[[0.0, 0.0, 0.0], [10.0, 0.0, 0.0]]);
        let y = cloud(&[[10.0, 0.0, 0.0]]);
        let shift = RigidTransform::from_axis_angle(Vector3::z(), 0.0, Vector3::new(10.0, 0.0, 0.0));
        let p = pairs_for(&x, &y, &shift);
        // Moved x0 sits on y0, so the backward pair stores untransformed x0.
        assert_eq!(p.backward_index, vec![0]);
        assert_eq!(p.a[2], Point3::zeros());
    }

    fn single_pair(a: Point3, b: Point3) -> BidirectionalPairs {
        BidirectionalPairs {
            a: vec![a],
            b: vec![b],
            forward_count: 1,
            forward_index: vec![0],
            backward_index: vec![],
        }
    }

    #[test]
    fn residuals() {
        let id = RigidTransform::identity();
        let p = single_pair(Point3::x(), Point3::x());
        assert_eq!(pair_residuals(&p, &id), vec![Point3::zeros()]);
        let p = single_pair(Point3::x(), Point3::zeros());
        assert_eq!(pair_residuals(&p, &id), vec![Point3::x()]);
        let rz = RigidTransform::from_axis_angle(Vector3::z(), 90.0, Vector3::zeros());
        let p = single_pair(Point3::x(), Point3::y());
        assert!(pair_residuals(&p, &rz)[0].norm() < 1e-15);
    }

    #[test]
    fn kernel_weights() {
        let sigma = 2.5;
        let w = correntropy_weights(
            &[Point3::zeros(), Point3::new(0.0, sigma, 0.0), Point3::new(10.0 * sigma, 0.0, 0.0)],
            sigma,
        )
        .unwrap();
        assert_eq!(w[0], 1.0);
        assert!((w[1] - 0.606_530_659_712_633_4).abs() < 1e-12);
        assert!(w[2] < 1e-21 && w[2] > 0.0);
        assert!((w[2] - (-50.0f64).exp()).abs() < 1e-30);
        assert!(matches!(correntropy_weights(&[], 0.0), Err(Error::InvalidSigma(_))));
        assert!(matches!(correntropy_weights(&[], -1.0), Err(Error::InvalidSigma(_))));
        // Far beyond exp underflow the weight stays positive.
        let far = correntropy_weights(&[Point3::new(1e6, 0.0, 0.0)], 1.0).unwrap();
        assert!(far[0] > 0.0);
    }

    #[test]
    fn objective_values() {
        let sigma = 1.5;
        let id = RigidTransform::identity();
        let perfect = BidirectionalPairs {
            a: vec![Point3::x(), Point3::y()],
            b: vec![Point3::x(), Point3::y()],
            forward_count: 1,
            forward_index: vec![0],
            backward_index: vec![0],
        };
        assert_eq!(bimcc_objective(&perfect, &id, sigma).unwrap(), 1.0);

        let at_sigma = BidirectionalPairs {
            a: vec![Point3::zeros(), Point3::zeros()],
            b: vec![Point3::new(sigma, 0.0, 0.0), Point3::new(0.0, 0.0, -sigma)],
            ..perfect.clone()
        };
        let v = bimcc_objective(&at_sigma, &id, sigma).unwrap();
        assert!((v - (-0.5f64).exp()).abs() < 1e-12);

        let half = BidirectionalPairs {
            a: vec![Point3::zeros(), Point3::zeros()],
            b: vec![Point3::zeros(), Point3::new(10.0 * sigma, 0.0, 0.0)],
            ..perfect.clone()
        };
        let v = bimcc_objective(&half, &id, sigma).unwrap();
        assert!((v - (1.0 + (-50.0f64).exp()) / 2.0).abs() < 1e-15);
        assert!(matches!(bimcc_objective(&half, &id, 0.0), Err(Error::InvalidSigma(_))));
    }

    #[test]
    fn weighted_rule_discounts_far_residuals() {
        let sched = KernelSchedule::default();
        let r = [Point3::new(3.0, 0.0, 0.0), Point3::new(0.0, 4.0, 0.0)];
        // A very wide previous kernel weights both equally.
        let wide = sigma_schedule(&r, 1, &sched, 1e9);
        assert!((wide - 2.0 * 12.5f64.sqrt()).abs() < 1e-9);
        let w3 = (-9.0f64 / 8.0).exp();
        let w4 = (-16.0f64 / 8.0).exp();
        let expected = 2.0 * ((9.0 * w3 + 16.0 * w4) / (w3 + w4)).sqrt();
        assert!((sigma_schedule(&r, 1, &sched, 2.0) - expected).abs() < 1e-12);
        assert!(sigma_schedule(&r, 1, &sched, 2.0) < wide);
        assert_eq!(sigma_schedule(&[Point3::zeros(); 2], 2, &sched, 1.0), sched.sigma_floor);
    }

    #[test]
    fn sigma_rules() {
        let sched = KernelSchedule { rule: SigmaRule::Rms, ..KernelSchedule::default() };
        assert_eq!(sigma_schedule(&[Point3::zeros(); 4], 3, &sched, 5.0), sched.sigma_floor);
        let s = sigma_schedule(&[Point3::new(3.0, 0.0, 0.0), Point3::new(0.0, 4.0, 0.0)], 1, &sched, 5.0);
        assert!((s - 2.0 * 12.5f64.sqrt()).abs() < 1e-12);
        assert!((s - 7.0711).abs() < 1e-4);
        let init = sigma_schedule(
            &[Point3::new(1.0, 0.0, 0.0), Point3::new(2.0, 0.0, 0.0), Point3::new(0.0, 0.0, 9.0)],
            0,
            &sched,
            0.0,
        );
        assert_eq!(init, 6.0);
        assert_eq!(sigma_schedule(&[Point3::zeros(); 3], 0, &sched, 0.0), sched.sigma_floor);
        assert_eq!(sigma_schedule(&[], 4, &sched, 2.0), 2.0);
    }

    fn blob(n: usize) -> PointCloud {
        let pts = (0..n)
            .map(|i| {
                let t = i as f64 / n as f64;
                let z = 1.0 - 2.0 * t;
                let r = (1.0 - z * z).sqrt();
                let phi = i as f64 * 2.399963;
                Point3::new(12.0 * r * phi.cos(), 7.0 * r * phi.sin(), 4.0 * z)
            })
            .collect();
        PointCloud::new(pts).unwrap()
    }

    #[test]
    fn identical_clouds_stay_put() {
        let c = blob(150);
        let r = bimcc_icp(&c, &c, &RigidTransform::identity(), &IcpConfig::default(), &KernelSchedule::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.trace.last().unwrap().objective, Some(1.0));
        assert!((r.transform.rotation() - nalgebra::Matrix3::identity()).norm() < 1e-12);
        assert!(r.transform.translation().norm() < 1e-12);
    }

    #[test]
    fn recovers_small_motion() {
        let src = blob(300);
        let truth = RigidTransform::from_axis_angle(Vector3::new(-0.2, 0.4, 1.0), 10.0, Vector3::new(1.0, -0.5, 0.3));
        let dst = apply_transform(&truth, &src);
        let r = bimcc_icp(&src, &dst, &RigidTransform::identity(), &IcpConfig::default(), &KernelSchedule::default()).unwrap();
        let err = truth.inverse().compose(&r.transform);
        assert!(err.rotation_angle_deg() < 0.01, "{}", err.rotation_angle_deg());
        assert!(err.translation().norm() < 1e-3);
    }

    #[test]
    fn single_iteration_cap() {
        let src = blob(100);
        let dst = apply_transform(&RigidTransform::from_axis_angle(Vector3::z(), 25.0, Vector3::zeros()), &src);
        let cfg = IcpConfig { max_iterations: 1, ..Default::default() };
        let r = bimcc_icp(&src, &dst, &RigidTransform::identity(), &cfg, &KernelSchedule::default()).unwrap();
        assert_eq!(r.trace.len(), 1);
        assert_eq!(r.iterations, 1);
        assert!(!r.converged);
    }
}
