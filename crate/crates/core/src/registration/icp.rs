use super::{IcpConfig, RegistrationResult, TraceRecord};
use crate::error::{Error, Result};
use crate::geometry::{weighted_rigid_fit, NeighborIndex, PointCloud, RigidTransform};

/// Classic point-to-point ICP: forward nearest-neighbour pairs, unweighted
/// rigid fit, mean squared pair distance as the error.
///
/// The first iteration's change is measured against the error of the initial
/// pairs before any fit, so a run that starts aligned converges after one
/// iteration.
pub fn icp_classic(
    source: &PointCloud,
    target: &PointCloud,
    init: &RigidTransform,
    cfg: &IcpConfig,
) -> Result<RegistrationResult> {
    cfg.validate()?;
    source.ensure_non_empty()?;
    target.ensure_non_empty()?;
    if source.len() < 3 {
        return Err(Error::InsufficientPairs(source.len()));
    }
    let index = NeighborIndex::new(target.points())?;
    let ones = vec![1.0; source.len()];

    let mut current = *init;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut previous: Option<f64> = None;

    for iteration in 1..=cfg.max_iterations {
        let moved: Vec<_> = source.points().iter().map(|p| current.apply_point(p)).collect();
        let mut matched = Vec::with_capacity(moved.len());
        let mut before = 0.0;
        for p in &moved {
            let (j, d) = index.nearest(p)?;
            matched.push(target.points()[j]);
            before += d * d;
        }
        let reference = previous.unwrap_or(before / moved.len() as f64);

        let step = weighted_rigid_fit(&moved, &matched, &ones)?;
        current = step.compose(&current);

        let residual_sq: Vec<f64> = moved
            .iter()
            .zip(&matched)
            .map(|(p, q)| (step.apply_point(p) - q).norm_squared())
            .collect();
        let error = residual_sq.iter().sum::<f64>() / residual_sq.len() as f64;
        trace.push(TraceRecord {
            iteration,
            error,
            objective: None,
            combined: None,
            sigma: None,
            residual_sq: if cfg.keep_residuals { residual_sq } else { Vec::new() },
        });
        previous = Some(error);
        if (error - reference).abs() < cfg.epsilon {
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
