//! File formats: ASCII PLY point clouds, binary PGM images, disparity
//! outputs, JSON transform records and flat `key = value` config files.
//! Every writer goes through a temporary file in the destination directory
//! and an atomic rename.

mod config;
mod pgm;
mod ply;
mod record;

pub use config::{parse_euler_transform, parse_grid, KeyValues};
pub use pgm::{read_pgm, write_disparity, write_pgm};
pub use ply::{read_ply, write_ply};
pub use record::{read_transform, TransformRecord};

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Writes `bytes` to `path` via a sibling temporary file and rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.flush().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}
