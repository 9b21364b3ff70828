use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::Vector3;

use super::read_bytes;
use crate::bench::{default_grid, BenchCell, SceneSpec, Shape, TransformSpec};
use crate::error::{Error, Result};
use crate::geometry::RigidTransform;
use crate::registration::Algorithm;

/// Flat `key = value` file. Blank lines and lines starting with `#` are
/// ignored; keys may use `-` or `_` interchangeably. A key may repeat: `get`
/// returns the last value, `get_all` every value in file order.
#[derive(Debug, Clone, Default)]
pub struct KeyValues {
    path: PathBuf,
    entries: Vec<(String, String, usize)>,
}

impl KeyValues {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = read_bytes(path)?;
        let text = String::from_utf8(bytes).map_err(|_| Error::InvalidRecord {
            path: path.into(),
            message: "config file is not UTF-8".into(),
        })?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::InvalidRecord {
                path: path.clone(),
                message: format!("line {}: expected key = value", i + 1),
            })?;
            let key = k.trim().replace('-', "_");
            if key.is_empty() {
                return Err(Error::InvalidRecord {
                    path,
                    message: format!("line {}: empty key", i + 1),
                });
            }
            entries.push((key, v.trim().to_string(), i + 1));
        }
        Ok(Self { path, entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().rev().find(|e| e.0 == key).map(|e| e.1.as_str())
    }

    pub fn get_all(&self, key: &str) -> Vec<&str> {
        self.entries.iter().filter(|e| e.0 == key).map(|e| e.1.as_str()).collect()
    }

    /// Parses the last value of `key`, naming the key and line on failure.
    pub fn get_parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.iter().rev().find(|e| e.0 == key) {
            None => Ok(None),
            Some((k, v, line)) => v.parse().map(Some).map_err(|e| self.bad(*line, k, v, e)),
        }
    }

    /// Rejects keys outside `known`.
    pub fn check_known(&self, known: &[&str]) -> Result<()> {
        match self.entries.iter().find(|e| !known.contains(&e.0.as_str())) {
            Some((k, _, line)) => Err(Error::InvalidRecord {
                path: self.path.clone(),
                message: format!("line {line}: unknown key '{k}'"),
            }),
            None => Ok(()),
        }
    }

    fn bad(&self, line: usize, key: &str, value: &str, e: impl std::fmt::Display) -> Error {
        Error::InvalidRecord {
            path: self.path.clone(),
            message: format!("line {line}: invalid {key} '{value}': {e}"),
        }
    }
}

/// Parses `"rx,ry,rz,tx,ty,tz"`: Euler angles in degrees, translation in mm.
pub fn parse_euler_transform(s: &str) -> std::result::Result<RigidTransform, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("'{}': {e}", p.trim())))
        .collect::<std::result::Result<_, _>>()?;
    if v.len() != 6 || v.iter().any(|x| !x.is_finite()) {
        return Err(format!("expected six finite numbers rx,ry,rz,tx,ty,tz, got '{s}'"));
    }
    Ok(RigidTransform::from_euler_deg(v[0], v[1], v[2], Vector3::new(v[3], v[4], v[5])))
}

pub(crate) const GRID_KEYS: &[&str] = &[
    "shape",
    "n",
    "scale",
    "rotation_deg",
    "translation_frac",
    "transform",
    "algorithms",
    "cell",
    "repeats",
    "seed",
];

/// Builds a benchmark grid from a config file.
///
/// Scene keys (`shape`, `n`, `scale`), motion keys (`rotation_deg`,
/// `translation_frac`, or a fixed `transform = rx,ry,rz,tx,ty,tz`) and
/// `algorithms = icp,bimcc` apply to every cell. Each
/// `cell = noise_mm,outlier_frac,overlap` line adds a cell; with none, the
/// default three cells are used. `repeats` and `seed` are accepted for the
/// caller to read.
pub fn parse_grid(kv: &KeyValues) -> Result<Vec<BenchCell>> {
    kv.check_known(GRID_KEYS)?;
    let defaults = default_grid();
    let base = &defaults[0];
    let scene = SceneSpec {
        shape: kv.get_parsed::<Shape>("shape")?.unwrap_or(base.scene.shape),
        n_points: kv.get_parsed("n")?.unwrap_or(base.scene.n_points),
        scale_mm: kv.get_parsed("scale")?.unwrap_or(base.scene.scale_mm),
        seed: 0,
    };
    let transform = match kv.get("transform") {
        Some(s) => TransformSpec::Fixed(parse_euler_transform(s).map_err(|e| invalid(kv, "transform", e))?),
        None => {
            let TransformSpec::Random { rotation_deg, translation_frac } = base.transform else {
                unreachable!("default grid uses random motion")
            };
            TransformSpec::Random {
                rotation_deg: kv.get_parsed("rotation_deg")?.unwrap_or(rotation_deg),
                translation_frac: kv.get_parsed("translation_frac")?.unwrap_or(translation_frac),
            }
        }
    };
    let algorithms = match kv.get("algorithms") {
        Some(s) => s
            .split(',')
            .map(|a| a.trim().parse::<Algorithm>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| invalid(kv, "algorithms", e))?,
        None => base.algorithms.clone(),
    };
    if algorithms.is_empty() {
        return Err(invalid(kv, "algorithms", "empty list".into()));
    }
    let cell_lines = kv.get_all("cell");
    let triples: Vec<(f64, f64, f64)> = if cell_lines.is_empty() {
        defaults
            .iter()
            .map(|c| (c.noise_sigma_mm, c.outlier_fraction, c.overlap_fraction))
            .collect()
    } else {
        cell_lines
            .iter()
            .map(|line| {
                let v: Vec<f64> = line.split(',').filter_map(|p| p.trim().parse().ok()).collect();
                match v.as_slice() {
                    [a, b, c] => Ok((*a, *b, *c)),
                    _ => Err(invalid(kv, "cell", format!("expected noise,outliers,overlap, got '{line}'"))),
                }
            })
            .collect::<Result<_>>()?
    };
    if scene.n_points < 3 || !(scene.scale_mm > 0.0 && scene.scale_mm.is_finite()) {
        return Err(invalid(kv, "scene", "n must be at least 3 and scale positive".into()));
    }
    for &(noise, outliers, overlap) in &triples {
        let overlap_ok = overlap > 0.0 && overlap <= 1.0;
        if !(noise >= 0.0 && noise.is_finite()) || !(0.0..1.0).contains(&outliers) || !overlap_ok {
            return Err(invalid(
                kv,
                "cell",
                format!("{noise},{outliers},{overlap} needs noise >= 0, outliers in [0,1), overlap in (0,1]"),
            ));
        }
    }
    Ok(triples
        .into_iter()
        .map(|(noise, outliers, overlap)| BenchCell {
            scene: scene.clone(),
            transform: transform.clone(),
            noise_sigma_mm: noise,
            outlier_fraction: outliers,
            overlap_fraction: overlap,
            algorithms: algorithms.clone(),
        })
        .collect())
}

fn invalid(kv: &KeyValues, key: &str, message: String) -> Error {
    Error::InvalidRecord {
        path: kv.path.clone(),
        message: format!("{key}: {message}"),
    }
}
