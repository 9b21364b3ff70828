//! Point clouds, rigid transforms, exact nearest-neighbour search and the
//! weighted rigid fit used by every registration iteration.
//!
//! Coordinates are millimetres throughout.

mod cloud;
mod fit;
mod kdtree;
mod transform;

pub use cloud::{Point3, PointCloud};
pub use fit::weighted_rigid_fit;
pub use kdtree::{build_index, nearest, NeighborIndex};
pub use transform::{apply_transform, rotation_angle, RigidTransform};

/// Tolerance used when validating rotation matrices.
pub const ROTATION_TOLERANCE: f64 = 1e-9;
