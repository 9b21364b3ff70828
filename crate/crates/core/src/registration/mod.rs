//! Point-to-point ICP and bidirectional maximum-correntropy ICP (BiMCC).
//!
//! Both solvers share the same outer loop shape: pair points by exact nearest
//! neighbour in the current pose, solve a (weighted) rigid fit, record the
//! iteration, and stop once the monitored value changes by less than
//! `epsilon`. Classic ICP monitors the mean squared pair distance; BiMCC
//! monitors the correntropy objective, which it maximises.

mod bimcc;
mod config;
mod icp;

pub use bimcc::{
    bimcc_icp, bimcc_objective, build_bidirectional_pairs, combined_error, correntropy_weights,
    pair_residuals, sigma_schedule, BidirectionalPairs,
};
pub use config::{IcpConfig, KernelSchedule, SigmaRule};
pub use icp::icp_classic;

use serde::Serialize;

use crate::geometry::RigidTransform;

/// One row of a registration trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    /// 1-based iteration number.
    pub iteration: usize,
    /// Mean squared pair distance after this iteration's fit (mm²).
    pub error: f64,
    /// Correntropy objective after the fit; BiMCC only.
    pub objective: Option<f64>,
    /// Sum of kernel values over all pairs after the fit; BiMCC only.
    pub combined: Option<f64>,
    /// Kernel width used for this iteration's weights; BiMCC only.
    pub sigma: Option<f64>,
    /// Squared residual norms after the fit, kept when
    /// [`IcpConfig::keep_residuals`] is set.
    #[serde(skip)]
    pub residual_sq: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegistrationResult {
    pub transform: RigidTransform,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TraceRecord>,
}

impl RegistrationResult {
    /// Value of the monitored quantity at the last iteration.
    pub fn final_error(&self) -> f64 {
        self.trace.last().map(|r| r.error).unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Icp,
    Bimcc,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Icp => "icp",
            Algorithm::Bimcc => "bimcc",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "icp" => Ok(Algorithm::Icp),
            "bimcc" => Ok(Algorithm::Bimcc),
            other => Err(format!("unknown algorithm '{other}', expected icp or bimcc")),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Runs the chosen solver with default kernel schedule where needed.
pub fn register(
    algorithm: Algorithm,
    source: &crate::geometry::PointCloud,
    target: &crate::geometry::PointCloud,
    init: &RigidTransform,
    cfg: &IcpConfig,
    sched: &KernelSchedule,
) -> crate::Result<RegistrationResult> {
    match algorithm {
        Algorithm::Icp => icp_classic(source, target, init, cfg),
        Algorithm::Bimcc => bimcc_icp(source, target, init, cfg, sched),
    }
}
