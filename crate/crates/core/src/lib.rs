//! Robust rigid point-cloud registration with bidirectional maximum
//! correntropy ICP, a gradient-based stereo disparity pipeline with
//! occlusion filling, and a synthetic benchmark harness comparing the
//! robust registration against classic ICP.

pub mod error;
pub mod geometry;
pub mod registration;
pub mod bench;
pub mod stereo;
pub mod io;

pub use error::{Error, Result};
