use nalgebra::{Matrix3, Vector3};

use super::{Point3, RigidTransform};
use crate::error::{Error, Result};

/// Second singular value below this fraction of the first means the
/// cross-covariance is rank one and the rotation about that axis is free.
const RANK_TOLERANCE: f64 = 1e-12;

/// Weighted Kabsch: the `R`, `t` minimising `Σ wᵢ ‖R sᵢ + t − tᵢ‖²`.
///
/// Weights only matter relative to each other, so they are rescaled by their
/// maximum before accumulation; this keeps kernel weights far below one
/// (e.g. `exp(-300)`) from losing precision.
pub fn weighted_rigid_fit(
    source: &[Point3],
    target: &[Point3],
    weights: &[f64],
) -> Result<RigidTransform> {
    if source.len() != target.len() || source.len() != weights.len() {
        return Err(Error::LengthMismatch {
            source_len: source.len(),
            target_len: target.len(),
            weights_len: weights.len(),
        });
    }
    if source.len() < 3 {
        return Err(Error::InsufficientPairs(source.len()));
    }
    if let Some(index) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::InvalidWeight { index });
    }

    let w_max = weights.iter().copied().fold(0.0, f64::max);
    let mut w_sum = 0.0;
    let mut src_c = Vector3::zeros();
    let mut dst_c = Vector3::zeros();
    for ((s, t), w) in source.iter().zip(target).zip(weights) {
        let w = w / w_max;
        w_sum += w;
        src_c += s * w;
        dst_c += t * w;
    }
    src_c /= w_sum;
    dst_c /= w_sum;

    let mut cross = Matrix3::zeros();
    for ((s, t), w) in source.iter().zip(target).zip(weights) {
        cross += ((s - src_c) * (w / w_max)) * (t - dst_c).transpose();
    }

    let svd = cross.svd(true, true);
    let mut sv = [svd.singular_values[0], svd.singular_values[1], svd.singular_values[2]];
    sv.sort_by(|a, b| b.total_cmp(a));
    if sv[0].is_nan() || sv[0] <= 0.0 || sv[1] <= RANK_TOLERANCE * sv[0] {
        return Err(Error::DegenerateConfiguration);
    }
    let u = svd.u.ok_or(Error::DegenerateConfiguration)?;
    let v = svd.v_t.ok_or(Error::DegenerateConfiguration)?.transpose();
    let d = (v * u.transpose()).determinant().signum();
    let rotation = v * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * u.transpose();
    let translation = dst_c - rotation * src_c;
    RigidTransform::new(rotation, translation)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tetra() -> Vec<Point3> {
        vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(3.0, 0.0, 0.0),
            Point3::new(0.0, 2.0, 0.0),
            Point3::new(0.0, 0.0, 1.5),
        ]
    }

    #[test]
    fn identity_for_identical_sets() {
        let p = tetra();
        let t = weighted_rigid_fit(&p, &p, &[1.0; 4]).unwrap();
        assert!((t.rotation() - Matrix3::identity()).norm() < 1e-12);
        assert!(t.translation().norm() < 1e-12);
    }

    #[test]
    fn recovers_known_motion() {
        let truth = RigidTransform::from_axis_angle(Vector3::z(), 90.0, Vector3::new(1.0, 2.0, 3.0));
        let src = tetra();
        let dst: Vec<_> = src.iter().map(|p| truth.apply_point(p)).collect();
        let t = weighted_rigid_fit(&src, &dst, &[1.0; 4]).unwrap();
        for (s, d) in src.iter().zip(&dst) {
            assert!((t.apply_point(s) - d).norm() < 1e-9);
        }
    }

    #[test]
    fn negligible_weight_outlier_is_ignored() {
        let truth = RigidTransform::from_axis_angle(Vector3::new(1.0, 1.0, 0.0), 35.0, Vector3::new(-4.0, 0.5, 2.0));
        let mut src = tetra();
        let mut dst: Vec<_> = src.iter().map(|p| truth.apply_point(p)).collect();
        let clean = weighted_rigid_fit(&src, &dst, &[1.0; 4]).unwrap();
        src.push(Point3::new(1.0, 1.0, 1.0));
        dst.push(Point3::new(500.0, -300.0, 90.0));
        let t = weighted_rigid_fit(&src, &dst, &[1.0, 1.0, 1.0, 1.0, 1e-12]).unwrap();
        assert!((t.rotation() - clean.rotation()).norm() < 1e-6);
        assert!((t.translation() - clean.translation()).norm() < 1e-6);
        assert!((t.rotation() - truth.rotation()).norm() < 1e-6);
    }

    #[test]
    fn coplanar_points_give_proper_rotation() {
        let src = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(1.0, 1.0, 0.0),
        ];
        let truth = RigidTransform::from_axis_angle(Vector3::new(0.2, -1.0, 0.4), 120.0, Vector3::new(0.0, 1.0, 0.0));
        let dst: Vec<_> = src.iter().map(|p| truth.apply_point(p)).collect();
        let t = weighted_rigid_fit(&src, &dst, &[1.0; 4]).unwrap();
        assert!((t.rotation().determinant() - 1.0).abs() < 1e-9);
        assert!((t.rotation() - truth.rotation()).norm() < 1e-9);
    }

    #[test]
    fn error_paths() {
        let p = tetra();
        assert!(matches!(
            weighted_rigid_fit(&p[..2], &p[..2], &[1.0, 1.0]),
            Err(Error::InsufficientPairs(2))
        ));
        assert!(matches!(
            weighted_rigid_fit(&p, &p[..3], &[1.0; 4]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            weighted_rigid_fit(&p, &p, &[1.0, 0.0, 1.0, 1.0]),
            Err(Error::InvalidWeight { index: 1 })
        ));
        let line: Vec<_> = (0..5).map(|i| Point3::new(i as f64, 0.0, 0.0)).collect();
        assert!(matches!(
            weighted_rigid_fit(&line, &line, &[1.0; 5]),
            Err(Error::DegenerateConfiguration)
        ));
        let same = vec![Point3::new(1.0, 2.0, 3.0); 4];
        assert!(matches!(
            weighted_rigid_fit(&same, &same, &[1.0; 4]),
            Err(Error::DegenerateConfiguration)
        ));
    }
}
