//! Browser bindings for the demo page. Each export returns JSON. The
//! `*_json` functions do the work and are plain Rust so they can be tested
//! natively; the `#[wasm_bindgen]` wrappers only convert errors.

use bimcc::bench::{corrupt, generate_cloud, generate_stereogram, CorruptionSpec, SceneSpec, Shape};
use bimcc::geometry::{apply_transform, rotation_angle, Point3, RigidTransform};
use bimcc::registration::{register, Algorithm, IcpConfig, KernelSchedule};
use bimcc::stereo::{stereo_pipeline_stages, DisparityMap, GrayImage, StageOptions, StereoConfig};
use nalgebra::Vector3;
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct RunSummary {
    algorithm: &'static str,
    rotation_error_deg: f64,
    translation_error_mm: f64,
    iterations: usize,
    converged: bool,
    /// Source mapped by the estimated transform.
    aligned: Vec<[f64; 3]>,
    /// Mean squared pair distance per iteration.
    trace: Vec<f64>,
}

#[derive(Serialize)]
struct RegistrationDemo {
    source: Vec<[f64; 3]>,
    target: Vec<[f64; 3]>,
    /// Which target points are outliers.
    outlier: Vec<bool>,
    runs: Vec<RunSummary>,
}

fn coords(points: &[Point3]) -> Vec<[f64; 3]> {
    points.iter().map(|p| [p.x, p.y, p.z]).collect()
}

/// Builds a corrupted scene and registers it with both ICP and BiMCC.
pub fn registration_demo_json(
    shape: &str,
    n: usize,
    rotation_deg: f64,
    noise_mm: f64,
    outliers: f64,
    overlap: f64,
    seed: u64,
) -> Result<String, String> {
    let shape: Shape = shape.parse()?;
    let scene = SceneSpec {
        shape,
        n_points: n,
        scale_mm: 50.0,
        seed,
    };
    let source = generate_cloud(&scene).map_err(|e| e.to_string())?;
    let diag = source.bounding_box_diagonal();
    let axis = Vector3::new(1.0, 2.0, 0.5);
    let truth = RigidTransform::from_axis_angle(axis, rotation_deg, Vector3::new(0.06, -0.04, 0.05) * diag);
    let scene_out = corrupt(
        &source,
        &CorruptionSpec {
            true_transform: truth,
            noise_sigma_mm: noise_mm,
            outlier_fraction: outliers,
            overlap_fraction: overlap,
            seed: seed.wrapping_add(1),
        },
    )
    .map_err(|e| e.to_string())?;

    let mut runs = Vec::new();
    for algorithm in [Algorithm::Icp, Algorithm::Bimcc] {
        let res = register(
            algorithm,
            &source,
            &scene_out.target,
            &RigidTransform::identity(),
            &IcpConfig::default(),
            &KernelSchedule::default(),
        )
        .map_err(|e| e.to_string())?;
        let t = &res.transform;
        runs.push(RunSummary {
            algorithm: algorithm.name(),
            rotation_error_deg: rotation_angle(&(t.rotation().transpose() * truth.rotation())).to_degrees(),
            translation_error_mm: (t.translation() - truth.translation()).norm(),
            iterations: res.iterations,
            converged: res.converged,
            aligned: coords(apply_transform(t, &source).points()),
            trace: res.trace.iter().map(|r| r.error).collect(),
        });
    }
    let demo = RegistrationDemo {
        source: coords(source.points()),
        target: coords(scene_out.target.points()),
        outlier: scene_out.origin.iter().map(Option::is_none).collect(),
        runs,
    };
    serde_json::to_string(&demo).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct StereoDemo {
    width: usize,
    height: usize,
    d_max: usize,
    left: Vec<u8>,
    right: Vec<u8>,
    truth: Vec<f64>,
    occluded: Vec<bool>,
    /// Raw left winner-take-all disparities.
    raw: Vec<f64>,
    /// After the consistency check; `null` where invalid.
    checked: Vec<Option<f64>>,
    output: Vec<Option<f64>>,
    occluded_flagged: usize,
    occluded_total: usize,
    within_one: f64,
}

fn gray_bytes(img: &GrayImage) -> Vec<u8> {
    img.pixels().iter().map(|p| (p * 255.0).round() as u8).collect()
}

fn masked(d: &DisparityMap) -> Vec<Option<f64>> {
    d.d.iter().zip(&d.valid).map(|(v, ok)| ok.then_some(*v)).collect()
}

/// Runs the stereo pipeline on a random-dot pair whose disparity steps from
/// `d_left` to `d_right` at column `step`.
#[allow(clippy::too_many_arguments)]
pub fn stereo_demo_json(
    width: usize,
    height: usize,
    step: usize,
    d_left: i64,
    d_right: i64,
    seed: u64,
    fill: bool,
    smooth: bool,
) -> Result<String, String> {
    let field: Vec<i64> = (0..width * height).map(|i| if i % width < step { d_left } else { d_right }).collect();
    let s = generate_stereogram(width, height, &field, seed).map_err(|e| e.to_string())?;
    let d_max = (d_left.max(d_right) as usize + 2).max(1);
    let cfg = StereoConfig::new(d_max);
    let st = stereo_pipeline_stages(&s.left, &s.right, &cfg, StageOptions { fill, smooth }).map_err(|e| e.to_string())?;
    let occluded_total = s.occlusion.iter().filter(|o| **o).count();
    let occluded_flagged = (0..field.len()).filter(|&i| s.occlusion[i] && !st.checked.valid[i]).count();
    let scored: Vec<bool> = (0..field.len())
        .filter(|&i| st.output.valid[i])
        .map(|i| (st.output.d[i] - field[i] as f64).abs() <= 1.0)
        .collect();
    let within_one = scored.iter().filter(|b| **b).count() as f64 / scored.len().max(1) as f64;
    let demo = StereoDemo {
        width,
        height,
        d_max,
        left: gray_bytes(&s.left),
        right: gray_bytes(&s.right),
        truth: s.gt.d.clone(),
        occluded: s.occlusion.clone(),
        raw: st.left_raw.d.clone(),
        checked: masked(&st.checked),
        output: masked(&st.output),
        occluded_flagged,
        occluded_total,
        within_one,
    };
    serde_json::to_string(&demo).map_err(|e| e.to_string())
}

/// Correntropy weight `exp(−r²/2σ²)` sampled at `samples` residual norms
/// evenly spaced over `[0, max_residual]`.
pub fn kernel_curve(sigma: f64, max_residual: f64, samples: usize) -> Result<Vec<f64>, String> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(format!("sigma must be positive, got {sigma}"));
    }
    if samples < 2 || !(max_residual > 0.0 && max_residual.is_finite()) {
        return Err("need at least two samples over a positive range".into());
    }
    let residuals: Vec<Point3> = (0..samples)
        .map(|i| Point3::new(max_residual * i as f64 / (samples - 1) as f64, 0.0, 0.0))
        .collect();
    bimcc::registration::correntropy_weights(&residuals, sigma).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn registration_demo(
    shape: &str,
    n: usize,
    rotation_deg: f64,
    noise_mm: f64,
    outliers: f64,
    overlap: f64,
    seed: u64,
) -> Result<String, JsError> {
    registration_demo_json(shape, n, rotation_deg, noise_mm, outliers, overlap, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn stereo_demo(
    width: usize,
    height: usize,
    step: usize,
    d_left: i64,
    d_right: i64,
    seed: u64,
    fill: bool,
    smooth: bool,
) -> Result<String, JsError> {
    stereo_demo_json(width, height, step, d_left, d_right, seed, fill, smooth).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn correntropy_curve(sigma: f64, max_residual: f64, samples: usize) -> Result<Vec<f64>, JsError> {
    kernel_curve(sigma, max_residual, samples).map_err(|e| JsError::new(&e))
}
