use serde::Serialize;

use crate::geometry::{rotation_angle, PointCloud, RigidTransform};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    /// Geodesic angle between estimated and true rotation, degrees.
    pub rotation_error_deg: f64,
    pub translation_error_mm: f64,
    /// RMS distance between source points mapped by the estimate and by the truth.
    pub rmse_mm: f64,
    pub iterations: usize,
    pub wall_time_ms: f64,
}

/// Compares an estimated motion against the ground truth. The rotation error
/// is `arccos((tr(R_estᵀ R_true) − 1)/2)` in degrees. `iterations` and
/// `wall_time_ms` are left at zero for the caller to fill in.
pub fn error_report(estimated: &RigidTransform, truth: &RigidTransform, source: &PointCloud) -> ErrorReport {
    let rel = estimated.rotation().transpose() * truth.rotation();
    let rotation_error_deg = rotation_angle(&rel).to_degrees();
    let translation_error_mm = (estimated.translation() - truth.translation()).norm();
    let rmse_mm = if source.is_empty() {
        0.0
    } else {
        let sum: f64 = source
            .points()
            .iter()
            .map(|p| (estimated.apply_point(p) - truth.apply_point(p)).norm_squared())
            .sum();
        (sum / source.len() as f64).sqrt()
    };
    ErrorReport {
        rotation_error_deg,
        translation_error_mm,
        rmse_mm,
        iterations: 0,
        wall_time_ms: 0.0,
    }
}
