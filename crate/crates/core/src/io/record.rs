use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{read_bytes, write_atomic};
use crate::error::{Error, Result};
use crate::geometry::RigidTransform;
use crate::registration::RegistrationResult;

/// JSON form of a transform plus optional run metadata. Ground-truth files
/// carry only the rotation and translation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformRecord {
    /// Row-major.
    pub rotation: [f64; 9],
    pub translation: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_error: Option<f64>,
}

impl TransformRecord {
    pub fn from_transform(t: &RigidTransform) -> Self {
        let tr = t.translation();
        Self {
            rotation: t.rotation_row_major(),
            translation: [tr.x, tr.y, tr.z],
            algorithm: None,
            iterations: None,
            converged: None,
            final_error: None,
        }
    }

    pub fn from_result(algorithm: &str, result: &RegistrationResult) -> Self {
        Self {
            algorithm: Some(algorithm.to_string()),
            iterations: Some(result.iterations),
            converged: Some(result.converged),
            final_error: Some(result.final_error()),
            ..Self::from_transform(&result.transform)
        }
    }

    /// Rebuilds the transform, rejecting rotations that are not proper
    /// orthonormal matrices rather than renormalising them.
    pub fn transform(&self) -> Result<RigidTransform> {
        RigidTransform::new(
            Matrix3::from_row_slice(&self.rotation),
            Vector3::from_column_slice(&self.translation),
        )
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut json = serde_json::to_string_pretty(self).map_err(|e| Error::InvalidRecord {
            path: path.as_ref().into(),
            message: e.to_string(),
        })?;
        json.push('\n');
        write_atomic(path.as_ref(), json.as_bytes())
    }
}

/// Loads and validates a transform record.
pub fn read_transform(path: impl AsRef<Path>) -> Result<(TransformRecord, RigidTransform)> {
    let path = path.as_ref();
    let invalid = |message: String| Error::InvalidRecord {
        path: path.into(),
        message,
    };
    let bytes = read_bytes(path)?;
    let record: TransformRecord = serde_json::from_slice(&bytes).map_err(|e| invalid(e.to_string()))?;
    let t = record.transform().map_err(|e| invalid(e.to_string()))?;
    Ok((record, t))
}
