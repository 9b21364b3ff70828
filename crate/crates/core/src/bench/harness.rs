use std::io::Write;
use std::time::Instant;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{corrupt, error_report, generate_cloud, CorruptionSpec, ErrorReport, SceneSpec, Shape};
use crate::error::Result;
use crate::geometry::RigidTransform;
use crate::registration::{register, Algorithm, IcpConfig, KernelSchedule};

/// Ground-truth motion for a benchmark cell.
#[derive(Debug, Clone, PartialEq)]
pub enum TransformSpec {
    Fixed(RigidTransform),
    /// Rotation of `rotation_deg` about a random axis plus a translation of
    /// `translation_frac` × the source bounding-box diagonal in a random
    /// direction, drawn per repeat.
    Random {
        rotation_deg: f64,
        translation_frac: f64,
    },
}

/// One grid cell. The scene seed is replaced per repeat.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchCell {
    pub scene: SceneSpec,
    pub transform: TransformSpec,
    pub noise_sigma_mm: f64,
    pub outlier_fraction: f64,
    pub overlap_fraction: f64,
    pub algorithms: Vec<Algorithm>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub cell: usize,
    pub repeat: usize,
    pub scene: Shape,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub noise_mm: f64,
    pub outlier_frac: f64,
    pub overlap: f64,
    pub converged: bool,
    pub report: ErrorReport,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for `(cell, repeat)`: the base seed xor-ed with a mix of the indices.
pub fn derive_seed(base: u64, cell: usize, repeat: usize) -> u64 {
    splitmix64(base ^ splitmix64(((cell as u64) << 32) ^ repeat as u64))
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        );
        let n = v.norm();
        if n > 1e-9 {
            return v / n;
        }
    }
}

impl TransformSpec {
    fn resolve(&self, seed: u64, diagonal: f64) -> RigidTransform {
        match self {
            TransformSpec::Fixed(t) => *t,
            TransformSpec::Random {
                rotation_deg,
                translation_frac,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let axis = random_unit(&mut rng);
                let dir = random_unit(&mut rng);
                RigidTransform::from_axis_angle(axis, *rotation_deg, dir * (translation_frac * diagonal))
            }
        }
    }
}

/// Runs every `(cell, repeat, algorithm)` combination. Both algorithms of a
/// repeat see the same scene. Rows are ordered by cell, repeat, then the
/// cell's algorithm order regardless of how the work was scheduled.
pub fn run_benchmark(
    grid: &[BenchCell],
    repeats: usize,
    base_seed: u64,
    cfg: &IcpConfig,
    sched: &KernelSchedule,
) -> Result<Vec<BenchRow>> {
    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|c| (0..repeats).map(move |r| (c, r)))
        .collect();
    let per_job: Vec<Result<Vec<BenchRow>>> = jobs
        .par_iter()
        .map(|&(c, r)| run_one(&grid[c], c, r, derive_seed(base_seed, c, r), cfg, sched))
        .collect();
    let mut rows = Vec::new();
    for job in per_job {
        rows.extend(job?);
    }
    Ok(rows)
}

fn run_one(
    cell: &BenchCell,
    cell_index: usize,
    repeat: usize,
    seed: u64,
    cfg: &IcpConfig,
    sched: &KernelSchedule,
) -> Result<Vec<BenchRow>> {
    let scene = SceneSpec {
        seed: splitmix64(seed ^ 1),
        ..cell.scene.clone()
    };
    let source = generate_cloud(&scene)?;
    let truth = cell
        .transform
        .resolve(splitmix64(seed ^ 2), source.bounding_box_diagonal());
    let corrupted = corrupt(
        &source,
        &CorruptionSpec {
            true_transform: truth,
            noise_sigma_mm: cell.noise_sigma_mm,
            outlier_fraction: cell.outlier_fraction,
            overlap_fraction: cell.overlap_fraction,
            seed: splitmix64(seed ^ 3),
        },
    )?;

    cell.algorithms
        .iter()
        .map(|&algorithm| {
            let start = Instant::now();
            let result = register(
                algorithm,
                &source,
                &corrupted.target,
                &RigidTransform::identity(),
                cfg,
                sched,
            )?;
            let elapsed = start.elapsed().as_secs_f64() * 1e3;
            let mut report = error_report(&result.transform, &truth, &source);
            report.iterations = result.iterations;
            report.wall_time_ms = elapsed;
            Ok(BenchRow {
                cell: cell_index,
                repeat,
                scene: cell.scene.shape,
                algorithm,
                seed,
                noise_mm: cell.noise_sigma_mm,
                outlier_frac: cell.outlier_fraction,
                overlap: cell.overlap_fraction,
                converged: result.converged,
                report,
            })
        })
        .collect()
}

/// Three cells on a 500-point sphere of radius 50 mm with a 20° rotation and
/// a translation of 10% of the diagonal: clean, 30% outliers with 0.5 mm
/// noise, and 70% overlap with 10% outliers.
pub fn default_grid() -> Vec<BenchCell> {
    let scene = SceneSpec {
        shape: Shape::SphereSurface,
        n_points: 500,
        scale_mm: 50.0,
        seed: 0,
    };
    let transform = TransformSpec::Random {
        rotation_deg: 20.0,
        translation_frac: 0.1,
    };
    let algorithms = vec![Algorithm::Icp, Algorithm::Bimcc];
    [(0.0, 0.0, 1.0), (0.5, 0.3, 1.0), (0.5, 0.1, 0.7)]
        .into_iter()
        .map(|(noise, outliers, overlap)| BenchCell {
            scene: scene.clone(),
            transform: transform.clone(),
            noise_sigma_mm: noise,
            outlier_fraction: outliers,
            overlap_fraction: overlap,
            algorithms: algorithms.clone(),
        })
        .collect()
}

pub const CSV_HEADER: &str =
    "scene,algorithm,seed,noise_mm,outlier_frac,overlap,rot_err_deg,trans_err_mm,rmse_mm,iters,ms";

/// Writes the benchmark table. The `ms` column holds wall time only when
/// `timing` is set and `0` otherwise, so untimed tables are reproducible.
pub fn write_csv<W: Write>(mut out: W, rows: &[BenchRow], timing: bool) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.scene.name(),
            r.algorithm,
            r.seed,
            fmt_sig(r.noise_mm),
            fmt_sig(r.outlier_frac),
            fmt_sig(r.overlap),
            fmt_sig(r.report.rotation_error_deg),
            fmt_sig(r.report.translation_error_mm),
            fmt_sig(r.report.rmse_mm),
            r.report.iterations,
            fmt_sig(if timing { r.report.wall_time_ms } else { 0.0 }),
        )?;
    }
    Ok(())
}

/// `%g`-style formatting with 6 significant digits.
pub fn fmt_sig(v: f64) -> String {
    const DIGITS: i32 = 6;
    if v == 0.0 || !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v == 0.0 { "0".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    // Exponent after rounding to the requested precision.
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-4..DIGITS).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        format!("{mantissa}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
