use serde::{Deserialize, Serialize};

use super::{
    aggregate_cost, gaussian_smooth, gradient_field, lr_consistency, matching_cost, matching_cost_right,
    select_disparity, wls_fill, DisparityMap, GrayImage,
};
use crate::error::{Error, Result};

/// Stereo matching parameters. Window sizes are side lengths in pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StereoConfig {
    pub d_max: usize,
    pub cost_window: usize,
    pub agg_window: usize,
    /// Largest tolerated left/right disagreement, in disparities.
    pub lr_tau: f64,
    pub gaussian_sigma: f64,
    pub wls_radius: usize,
    /// Spatial falloff of the fill weights `exp(−dist²/λ)`.
    pub wls_lambda: f64,
}

impl StereoConfig {
    pub fn new(d_max: usize) -> Self {
        Self {
            d_max,
            cost_window: 5,
            agg_window: 5,
            lr_tau: 1.0,
            gaussian_sigma: 1.0,
            wls_radius: 7,
            wls_lambda: 10.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.d_max == 0 {
            return bad("d_max must be positive");
        }
        if self.cost_window.is_multiple_of(2) || self.agg_window.is_multiple_of(2) {
            return bad("window sizes must be odd");
        }
        if !(self.lr_tau >= 0.0 && self.lr_tau.is_finite()) {
            return bad("lr_tau must be non-negative");
        }
        if !(self.gaussian_sigma > 0.0 && self.gaussian_sigma.is_finite()) {
            return bad("gaussian_sigma must be positive");
        }
        if self.wls_radius == 0 {
            return bad("wls_radius must be positive");
        }
        if !(self.wls_lambda > 0.0 && self.wls_lambda.is_finite()) {
            return bad("wls_lambda must be positive");
        }
        Ok(())
    }
}

/// Which post-processing stages to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageOptions {
    pub fill: bool,
    pub smooth: bool,
}

impl Default for StageOptions {
    fn default() -> Self {
        Self { fill: true, smooth: true }
    }
}

/// Intermediate maps of one pipeline run.
#[derive(Debug, Clone)]
pub struct PipelineStages {
    pub left_raw: DisparityMap,
    pub right_raw: DisparityMap,
    /// Left map after the consistency check.
    pub checked: DisparityMap,
    pub filled: Option<DisparityMap>,
    pub output: DisparityMap,
}

/// Runs the pipeline and keeps every intermediate map.
pub fn stereo_pipeline_stages(
    left: &GrayImage,
    right: &GrayImage,
    cfg: &StereoConfig,
    opts: StageOptions,
) -> Result<PipelineStages> {
    cfg.validate()?;
    if (left.width(), left.height()) != (right.width(), right.height()) {
        return Err(Error::DimensionMismatch(format!(
            "left is {}x{}, right is {}x{}",
            left.width(),
            left.height(),
            right.width(),
            right.height()
        )));
    }
    let (gl, gr) = (gradient_field(left)?, gradient_field(right)?);
    let left_raw = select_disparity(&aggregate_cost(&matching_cost(&gl, &gr, cfg)?, cfg));
    let right_raw = select_disparity(&aggregate_cost(&matching_cost_right(&gl, &gr, cfg)?, cfg));
    let checked = lr_consistency(&left_raw, &right_raw, cfg.lr_tau)?;
    let filled = if opts.fill { Some(wls_fill(&checked, cfg)?) } else { None };
    let base = filled.as_ref().unwrap_or(&checked);
    let output = if opts.smooth { gaussian_smooth(base, cfg.gaussian_sigma)? } else { base.clone() };
    Ok(PipelineStages { left_raw, right_raw, checked, filled, output })
}

/// Full pipeline: gradients, cost, aggregation, winner-take-all in both
/// directions, consistency check, occlusion fill and smoothing.
pub fn stereo_pipeline(left: &GrayImage, right: &GrayImage, cfg: &StereoConfig) -> Result<DisparityMap> {
    Ok(stereo_pipeline_stages(left, right, cfg, StageOptions::default())?.output)
}
