//! Gradient-based stereo matching: sum-of-gradient-difference cost, box
//! aggregation, winner-take-all selection in both directions, left-right
//! consistency, weighted least-squares occlusion filling and Gaussian
//! smoothing. Also the projected-contour similarity score.
//!
//! Disparities are non-negative with the left image as reference: left pixel
//! `x` matches right pixel `x − d`.

mod cost;
mod disparity;
mod fill;
mod image;
mod pipeline;
mod similarity;
mod smooth;

pub use cost::{aggregate_cost, matching_cost, matching_cost_right, select_disparity, CostVolume};
pub use disparity::{lr_consistency, DisparityMap};
pub use fill::wls_fill;
pub use image::{gradient_field, GradientField, GrayImage};
pub use pipeline::{stereo_pipeline, stereo_pipeline_stages, PipelineStages, StageOptions, StereoConfig};
pub use similarity::{shape_similarity, ContourPoint};
pub use smooth::{gaussian_kernel, gaussian_smooth, Smooth};

/// Mean over a `(2r+1)²` window with replicated borders, computed as a
/// horizontal pass followed by a vertical pass.
pub(crate) fn box_mean(values: &[f64], width: usize, height: usize, radius: usize) -> Vec<f64> {
    let side = (2 * radius + 1) as f64;
    let mut horiz = vec![0.0; values.len()];
    for y in 0..height {
        let row = &values[y * width..(y + 1) * width];
        for x in 0..width {
            let mut sum = 0.0;
            for k in -(radius as isize)..=(radius as isize) {
                sum += row[clamp_index(x as isize + k, width)];
            }
            horiz[y * width + x] = sum / side;
        }
    }
    let mut out = vec![0.0; values.len()];
    for y in 0..height {
        for x in 0..width {
            let mut sum = 0.0;
            for k in -(radius as isize)..=(radius as isize) {
                sum += horiz[clamp_index(y as isize + k, height) * width + x];
            }
            out[y * width + x] = sum / side;
        }
    }
    out
}

#[inline]
pub(crate) fn clamp_index(i: isize, len: usize) -> usize {
    i.clamp(0, len as isize - 1) as usize
}
