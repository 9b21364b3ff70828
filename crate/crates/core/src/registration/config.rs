use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct IcpConfig {
    pub max_iterations: usize,
    /// Stop once the monitored value changes by less than this between
    /// iterations (mm² for ICP, objective units for BiMCC).
    pub epsilon: f64,
    /// Reweight/refit passes per BiMCC iteration with correspondences frozen.
    pub inner_iters: usize,
    /// Keep per-iteration squared residuals in the trace.
    pub keep_residuals: bool,
}

impl Default for IcpConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            epsilon: 1e-8,
            inner_iters: 1,
            keep_residuals: false,
        }
    }
}

impl IcpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be finite and non-negative, got {}",
                self.epsilon
            )));
        }
        if self.inner_iters < 1 {
            return Err(Error::InvalidConfig("inner_iters must be at least 1".into()));
        }
        Ok(())
    }
}

/// How later kernel widths summarise the residuals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SigmaRule {
    /// Plain RMS residual norm over all pairs.
    Rms,
    /// RMS residual norm weighted by the kernel values at the previous
    /// width, so pairs the kernel already rejects stop inflating the width.
    #[default]
    WeightedRms,
}

impl std::str::FromStr for SigmaRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "rms" => Ok(SigmaRule::Rms),
            "weighted_rms" | "weighted-rms" => Ok(SigmaRule::WeightedRms),
            other => Err(format!("unknown sigma rule '{other}', expected rms or weighted_rms")),
        }
    }
}

/// Kernel width schedule for BiMCC.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSchedule {
    /// Initial width as a multiple of the median initial pair distance.
    pub sigma_init_scale: f64,
    /// Lower bound on the width, mm.
    pub sigma_floor: f64,
    /// Later widths are `eta` times the RMS residual norm.
    pub eta: f64,
    pub rule: SigmaRule,
}

impl Default for KernelSchedule {
    fn default() -> Self {
        Self {
            sigma_init_scale: 3.0,
            sigma_floor: 1e-3,
            eta: 2.0,
            rule: SigmaRule::WeightedRms,
        }
    }
}

impl KernelSchedule {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma_init_scale", self.sigma_init_scale),
            ("sigma_floor", self.sigma_floor),
            ("eta", self.eta),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}
