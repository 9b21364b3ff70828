//! Command line front end: registration, stereo, benchmark and synthetic
//! data generation.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 non-convergence under
//! `--strict`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use bimcc::bench::{
    corrupt, default_grid, generate_cloud, generate_stereogram, run_benchmark, write_csv, CorruptionSpec, SceneSpec,
    Shape,
};
use bimcc::geometry::RigidTransform;
use bimcc::io::{
    parse_euler_transform, parse_grid, read_pgm, read_ply, write_atomic, write_disparity, write_pgm, write_ply,
    KeyValues, TransformRecord,
};
use bimcc::registration::{register, Algorithm, IcpConfig, KernelSchedule, SigmaRule};
use bimcc::stereo::{stereo_pipeline_stages, StageOptions, StereoConfig};

#[derive(Parser)]
#[command(name = "bimcc", version, about = "Robust point-cloud registration and stereo disparity tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Align a source cloud to a target cloud.
    Register(RegisterArgs),
    /// Compute a disparity map from a rectified grayscale pair.
    Stereo(StereoArgs),
    /// Run the ICP vs BiMCC benchmark grid and write a CSV table.
    Bench(BenchArgs),
    /// Generate a synthetic source/target pair with its true transform.
    Gen(GenArgs),
    /// Generate a random-dot stereo pair with known disparity.
    Stereogram(StereogramArgs),
}

#[derive(Args)]
struct RegisterArgs {
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    target: PathBuf,
    /// icp or bimcc [default: bimcc]
    #[arg(long)]
    algo: Option<Algorithm>,
    /// [default: 100]
    #[arg(long)]
    max_iters: Option<usize>,
    /// [default: 1e-8]
    #[arg(long, allow_negative_numbers = true)]
    epsilon: Option<f64>,
    /// Initial kernel width as a multiple of the median pair distance [default: 3]
    #[arg(long, allow_negative_numbers = true)]
    sigma_scale: Option<f64>,
    /// [default: 2]
    #[arg(long, allow_negative_numbers = true)]
    eta: Option<f64>,
    /// [default: 0.001]
    #[arg(long, allow_negative_numbers = true)]
    sigma_floor: Option<f64>,
    /// rms or weighted_rms [default: weighted_rms]
    #[arg(long)]
    sigma_rule: Option<SigmaRule>,
    /// Reweighting passes per iteration [default: 1]
    #[arg(long)]
    inner_iters: Option<usize>,
    /// Output transform record (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Per-iteration trace (CSV).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Exit with status 3 when the solver hits the iteration limit.
    #[arg(long)]
    strict: bool,
    /// key = value file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct StereoArgs {
    #[arg(long)]
    left: PathBuf,
    #[arg(long)]
    right: PathBuf,
    #[arg(long)]
    dmax: Option<usize>,
    /// [default: 5]
    #[arg(long)]
    cost_window: Option<usize>,
    /// [default: 5]
    #[arg(long)]
    agg_window: Option<usize>,
    /// [default: 1]
    #[arg(long, allow_negative_numbers = true)]
    lr_tau: Option<f64>,
    /// Gaussian smoothing sigma in pixels [default: 1]
    #[arg(long)]
    sigma: Option<f64>,
    /// [default: 7]
    #[arg(long)]
    wls_radius: Option<usize>,
    /// [default: 10]
    #[arg(long)]
    wls_lambda: Option<f64>,
    /// Disparity-to-gray factor for the PGM output [default: 255/dmax]
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long)]
    no_fill: bool,
    #[arg(long)]
    no_smooth: bool,
    /// Scaled disparity image (PGM).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Raw disparities, one row per line, `nan` where invalid.
    #[arg(long)]
    raw: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Grid file (key = value); the built-in three-cell grid when omitted.
    #[arg(long)]
    grid: Option<PathBuf>,
    /// [default: 20]
    #[arg(long)]
    repeats: Option<usize>,
    /// [default: 2024]
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// Record wall time in the ms column (makes output non-reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct GenArgs {
    /// sphere_surface, cube_grid or helix [default: sphere_surface]
    #[arg(long)]
    shape: Option<Shape>,
    /// [default: 500]
    #[arg(long)]
    n: Option<usize>,
    /// [default: 50]
    #[arg(long)]
    scale: Option<f64>,
    /// [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// "rx,ry,rz,tx,ty,tz", degrees and mm [default: identity]
    #[arg(long, allow_hyphen_values = true)]
    transform: Option<String>,
    /// Gaussian noise sigma, mm [default: 0]
    #[arg(long, allow_negative_numbers = true)]
    noise: Option<f64>,
    /// Fraction of target points replaced by uniform outliers [default: 0]
    #[arg(long)]
    outliers: Option<f64>,
    /// Fraction of the source kept in the target [default: 1]
    #[arg(long)]
    overlap: Option<f64>,
    #[arg(long)]
    out_source: PathBuf,
    #[arg(long)]
    out_target: PathBuf,
    #[arg(long)]
    out_truth: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct StereogramArgs {
    #[arg(long, default_value_t = 128)]
    width: usize,
    #[arg(long, default_value_t = 128)]
    height: usize,
    /// Constant disparity.
    #[arg(long, conflicts_with = "step")]
    disparity: Option<i64>,
    /// "column,left_d,right_d": disparity step at a column.
    #[arg(long)]
    step: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_left: PathBuf,
    #[arg(long)]
    out_right: PathBuf,
    /// Ground-truth disparities as text.
    #[arg(long)]
    out_gt: Option<PathBuf>,
}

/// A failure with its exit status.
struct Fail {
    code: u8,
    message: String,
}

impl From<bimcc::Error> for Fail {
    fn from(e: bimcc::Error) -> Self {
        usage(e.to_string())
    }
}

fn usage(message: impl Into<String>) -> Fail {
    Fail {
        code: 2,
        message: message.into(),
    }
}

type Outcome = Result<ExitCode, Fail>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Register(a) => cmd_register(a),
        Command::Stereo(a) => cmd_stereo(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Stereogram(a) => cmd_stereogram(a),
    };
    match outcome {
        Ok(code) => code,
        Err(f) => {
            eprintln!("bimcc: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_config(path: &Option<PathBuf>, known: &[&str]) -> Result<KeyValues, Fail> {
    match path {
        None => Ok(KeyValues::default()),
        Some(p) => {
            let kv = KeyValues::load(p)?;
            kv.check_known(known)?;
            Ok(kv)
        }
    }
}

/// Flag value, else config file value, else default.
fn pick<T: FromStr>(flag: Option<T>, kv: &KeyValues, key: &str, default: T) -> Result<T, Fail>
where
    T::Err: std::fmt::Display,
{
    match flag {
        Some(v) => Ok(v),
        None => Ok(kv.get_parsed(key)?.unwrap_or(default)),
    }
}

fn require(ok: bool, flag: &str, detail: String) -> Result<(), Fail> {
    if ok {
        Ok(())
    } else {
        Err(usage(format!("invalid value for --{flag}: {detail}")))
    }
}

fn positive(flag: &str, v: f64) -> Result<(), Fail> {
    require(v > 0.0 && v.is_finite(), flag, format!("{v} must be positive"))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn cmd_register(a: RegisterArgs) -> Outcome {
    let kv = load_config(
        &a.config,
        &["algo", "max_iters", "epsilon", "sigma_scale", "eta", "sigma_floor", "sigma_rule", "inner_iters"],
    )?;
    let algorithm = pick(a.algo, &kv, "algo", Algorithm::Bimcc)?;
    let defaults = (IcpConfig::default(), KernelSchedule::default());
    let cfg = IcpConfig {
        max_iterations: pick(a.max_iters, &kv, "max_iters", defaults.0.max_iterations)?,
        epsilon: pick(a.epsilon, &kv, "epsilon", defaults.0.epsilon)?,
        inner_iters: pick(a.inner_iters, &kv, "inner_iters", defaults.0.inner_iters)?,
        keep_residuals: false,
    };
    let sched = KernelSchedule {
        sigma_init_scale: pick(a.sigma_scale, &kv, "sigma_scale", defaults.1.sigma_init_scale)?,
        sigma_floor: pick(a.sigma_floor, &kv, "sigma_floor", defaults.1.sigma_floor)?,
        eta: pick(a.eta, &kv, "eta", defaults.1.eta)?,
        rule: pick(a.sigma_rule, &kv, "sigma_rule", defaults.1.rule)?,
    };
    require(cfg.max_iterations >= 1, "max-iters", "must be at least 1".into())?;
    require(cfg.inner_iters >= 1, "inner-iters", "must be at least 1".into())?;
    require(
        cfg.epsilon >= 0.0 && cfg.epsilon.is_finite(),
        "epsilon",
        format!("{} must be non-negative", cfg.epsilon),
    )?;
    positive("sigma-scale", sched.sigma_init_scale)?;
    positive("sigma-floor", sched.sigma_floor)?;
    positive("eta", sched.eta)?;

    let source = read_ply(&a.source)?;
    let target = read_ply(&a.target)?;
    let result = register(algorithm, &source, &target, &RigidTransform::identity(), &cfg, &sched)?;

    TransformRecord::from_result(algorithm.name(), &result).write(&a.out)?;
    if let Some(path) = &a.trace {
        let mut csv = String::from("iter,error,objective,sigma\n");
        for t in &result.trace {
            let _ = writeln!(csv, "{},{},{},{}", t.iteration, t.error, fmt_opt(t.objective), fmt_opt(t.sigma));
        }
        write_atomic(path, csv.as_bytes())?;
    }
    if a.strict && !result.converged {
        return Err(Fail {
            code: 3,
            message: format!("{} did not converge within {} iterations", algorithm, cfg.max_iterations),
        });
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_stereo(a: StereoArgs) -> Outcome {
    let kv = load_config(
        &a.config,
        &["dmax", "cost_window", "agg_window", "lr_tau", "sigma", "wls_radius", "wls_lambda", "scale"],
    )?;
    let d_max: usize = match a.dmax {
        Some(d) => d,
        None => kv
            .get_parsed("dmax")?
            .ok_or_else(|| usage("--dmax is required (flag or config file)"))?,
    };
    require(d_max >= 1, "dmax", "must be at least 1".into())?;
    let base = StereoConfig::new(d_max);
    let cfg = StereoConfig {
        d_max,
        cost_window: pick(a.cost_window, &kv, "cost_window", base.cost_window)?,
        agg_window: pick(a.agg_window, &kv, "agg_window", base.agg_window)?,
        lr_tau: pick(a.lr_tau, &kv, "lr_tau", base.lr_tau)?,
        gaussian_sigma: pick(a.sigma, &kv, "sigma", base.gaussian_sigma)?,
        wls_radius: pick(a.wls_radius, &kv, "wls_radius", base.wls_radius)?,
        wls_lambda: pick(a.wls_lambda, &kv, "wls_lambda", base.wls_lambda)?,
    };
    let scale = pick(a.scale, &kv, "scale", 255.0 / d_max as f64)?;
    for (flag, w) in [("cost-window", cfg.cost_window), ("agg-window", cfg.agg_window)] {
        require(w % 2 == 1, flag, format!("{w} must be odd"))?;
    }
    require(
        cfg.lr_tau >= 0.0 && cfg.lr_tau.is_finite(),
        "lr-tau",
        format!("{} must be non-negative", cfg.lr_tau),
    )?;
    positive("sigma", cfg.gaussian_sigma)?;
    require(cfg.wls_radius >= 1, "wls-radius", "must be at least 1".into())?;
    positive("wls-lambda", cfg.wls_lambda)?;
    positive("scale", scale)?;
    if a.out.is_none() && a.raw.is_none() {
        return Err(usage("nothing to write: give --out and/or --raw"));
    }

    let left = read_pgm(&a.left)?;
    let right = read_pgm(&a.right)?;
    let opts = StageOptions {
        fill: !a.no_fill,
        smooth: !a.no_smooth,
    };
    let stages = stereo_pipeline_stages(&left, &right, &cfg, opts)?;
    write_disparity(&stages.output, scale, a.out.as_deref(), a.raw.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn cmd_bench(a: BenchArgs) -> Outcome {
    let (grid, kv) = match &a.grid {
        Some(p) => {
            let kv = KeyValues::load(p)?;
            (parse_grid(&kv)?, kv)
        }
        None => (default_grid(), KeyValues::default()),
    };
    let repeats = pick(a.repeats, &kv, "repeats", 20)?;
    let seed = pick(a.seed, &kv, "seed", 2024)?;
    require(repeats >= 1, "repeats", "must be at least 1".into())?;

    let rows = run_benchmark(&grid, repeats, seed, &IcpConfig::default(), &KernelSchedule::default())?;
    let mut csv = Vec::new();
    write_csv(&mut csv, &rows, a.timing).map_err(|e| usage(e.to_string()))?;
    write_atomic(&a.out, &csv)?;

    println!("cell  algorithm  median_rot_deg  median_trans_mm  converged");
    for (c, cell) in grid.iter().enumerate() {
        for &alg in &cell.algorithms {
            let sel: Vec<_> = rows.iter().filter(|r| r.cell == c && r.algorithm == alg).collect();
            println!(
                "{c:>4}  {:<9}  {:>14.4}  {:>15.4}  {}/{}",
                alg.name(),
                median(sel.iter().map(|r| r.report.rotation_error_deg).collect()),
                median(sel.iter().map(|r| r.report.translation_error_mm).collect()),
                sel.iter().filter(|r| r.converged).count(),
                sel.len()
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_gen(a: GenArgs) -> Outcome {
    let kv = load_config(
        &a.config,
        &["shape", "n", "scale", "seed", "transform", "noise", "outliers", "overlap"],
    )?;
    let scene = SceneSpec {
        shape: pick(a.shape, &kv, "shape", Shape::SphereSurface)?,
        n_points: pick(a.n, &kv, "n", 500)?,
        scale_mm: pick(a.scale, &kv, "scale", 50.0)?,
        seed: pick(a.seed, &kv, "seed", 0)?,
    };
    let transform_text = pick(a.transform, &kv, "transform", "0,0,0,0,0,0".to_string())?;
    let truth = parse_euler_transform(&transform_text).map_err(|e| usage(format!("invalid value for --transform: {e}")))?;
    let noise = pick(a.noise, &kv, "noise", 0.0)?;
    let outliers = pick(a.outliers, &kv, "outliers", 0.0)?;
    let overlap = pick(a.overlap, &kv, "overlap", 1.0)?;
    require(scene.n_points >= 3, "n", format!("{} must be at least 3", scene.n_points))?;
    positive("scale", scene.scale_mm)?;
    require(noise >= 0.0 && noise.is_finite(), "noise", format!("{noise} must be non-negative"))?;
    require((0.0..1.0).contains(&outliers), "outliers", format!("{outliers} must be in [0, 1)"))?;
    require(overlap > 0.0 && overlap <= 1.0, "overlap", format!("{overlap} must be in (0, 1]"))?;

    let source = generate_cloud(&scene)?;
    let scene_out = corrupt(
        &source,
        &CorruptionSpec {
            true_transform: truth,
            noise_sigma_mm: noise,
            outlier_fraction: outliers,
            overlap_fraction: overlap,
            seed: scene.seed.wrapping_add(1),
        },
    )?;
    write_ply(&source, &a.out_source)?;
    write_ply(&scene_out.target, &a.out_target)?;
    TransformRecord::from_transform(&scene_out.truth).write(&a.out_truth)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_stereogram(a: StereogramArgs) -> Outcome {
    let (w, h) = (a.width, a.height);
    let field: Vec<i64> = match (&a.disparity, &a.step) {
        (_, Some(s)) => {
            let v: Vec<i64> = s.split(',').filter_map(|p| p.trim().parse().ok()).collect();
            let [col, dl, dr] = v[..] else {
                return Err(usage(format!("invalid value for --step: expected column,left_d,right_d, got '{s}'")));
            };
            (0..w * h).map(|i| if ((i % w) as i64) < col { dl } else { dr }).collect()
        }
        (d, None) => vec![d.unwrap_or(4); w * h],
    };
    let s = generate_stereogram(w, h, &field, a.seed)?;
    write_pgm(&s.left, &a.out_left)?;
    write_pgm(&s.right, &a.out_right)?;
    if let Some(p) = &a.out_gt {
        write_disparity(&s.gt, 1.0, None, Some(Path::new(p)))?;
    }
    Ok(ExitCode::SUCCESS)
}
