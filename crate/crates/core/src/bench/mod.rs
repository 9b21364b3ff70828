//! Synthetic ground truth: point-cloud scenes with known rigid motion and
//! corruption, random-dot stereograms, error metrics, and the ICP vs BiMCC
//! comparison harness.

mod harness;
mod metrics;
mod scene;
mod stereogram;

pub use harness::{
    default_grid, derive_seed, run_benchmark, write_csv, BenchCell, BenchRow, TransformSpec,
};
pub use metrics::{error_report, ErrorReport};
pub use scene::{corrupt, generate_cloud, CorruptedScene, CorruptionSpec, SceneSpec, Shape};
pub use stereogram::{generate_stereogram, Stereogram};
