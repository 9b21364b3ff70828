use nalgebra::Vector3;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud, RigidTransform};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    SphereSurface,
    CubeGrid,
    Helix,
}

impl Shape {
    pub fn name(self) -> &'static str {
        match self {
            Shape::SphereSurface => "sphere_surface",
            Shape::CubeGrid => "cube_grid",
            Shape::Helix => "helix",
        }
    }
}

impl std::str::FromStr for Shape {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sphere_surface" | "sphere" => Ok(Shape::SphereSurface),
            "cube_grid" | "cube" => Ok(Shape::CubeGrid),
            "helix" => Ok(Shape::Helix),
            other => Err(format!(
                "unknown shape '{other}', expected sphere_surface, cube_grid or helix"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub shape: Shape,
    pub n_points: usize,
    pub scale_mm: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorruptionSpec {
    pub true_transform: RigidTransform,
    pub noise_sigma_mm: f64,
    /// Fraction of kept points replaced by uniform outliers, in `[0, 1)`.
    pub outlier_fraction: f64,
    /// Fraction of the source kept in the target, in `(0, 1]`.
    pub overlap_fraction: f64,
    pub seed: u64,
}

impl CorruptionSpec {
    pub fn clean(true_transform: RigidTransform) -> Self {
        Self {
            true_transform,
            noise_sigma_mm: 0.0,
            outlier_fraction: 0.0,
            overlap_fraction: 1.0,
            seed: 0,
        }
    }
}

/// Target cloud produced by [`corrupt`].
#[derive(Debug, Clone, PartialEq)]
pub struct CorruptedScene {
    pub target: PointCloud,
    pub truth: RigidTransform,
    /// For each target point, the source point it was generated from, or
    /// `None` for an outlier.
    pub origin: Vec<Option<usize>>,
}

impl CorruptedScene {
    pub fn outlier_count(&self) -> usize {
        self.origin.iter().filter(|o| o.is_none()).count()
    }
}

/// Deterministic synthetic cloud inside `[−scale, scale]³`.
///
/// * `SphereSurface`: points on the sphere of radius `scale`, concentrated in
///   a band around a seam-shaped curve with uneven density along it. A
///   uniformly covered sphere carries no rotational information, so ICP could
///   not recover orientation from it.
/// * `CubeGrid`: the first `n` nodes (lexicographic order) of the smallest
///   `k×k×k` lattice over `[−scale, scale]³` with `k³ ≥ n`; independent of the seed.
/// * `Helix`: three turns of radius `scale` along z, parameters drawn uniformly.
pub fn generate_cloud(spec: &SceneSpec) -> Result<PointCloud> {
    if spec.n_points < 3 {
        return Err(Error::InvalidConfig(format!(
            "scene needs at least 3 points, got {}",
            spec.n_points
        )));
    }
    if !(spec.scale_mm > 0.0 && spec.scale_mm.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "scale must be positive, got {}",
            spec.scale_mm
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let s = spec.scale_mm;
    let points = match spec.shape {
        Shape::SphereSurface => {
            let mut pts = Vec::with_capacity(spec.n_points);
            while pts.len() < spec.n_points {
                let t = rng.random::<f64>() * std::f64::consts::TAU;
                if rng.random::<f64>() > seam_density(t) {
                    continue;
                }
                let offset = Vector3::new(
                    rng.sample::<f64, _>(StandardNormal),
                    rng.sample::<f64, _>(StandardNormal),
                    rng.sample::<f64, _>(StandardNormal),
                ) * SEAM_WIDTH;
                let v = seam_point(t) + offset;
                let norm = v.norm();
                if norm < 1e-9 {
                    continue;
                }
                pts.push(v * (s / norm));
            }
            pts
        }
        Shape::CubeGrid => {
            let mut k = 1;
            while k * k * k < spec.n_points {
                k += 1;
            }
            let coord = |i: usize| {
                if k == 1 {
                    0.0
                } else {
                    -s + 2.0 * s * i as f64 / (k - 1) as f64
                }
            };
            (0..spec.n_points)
                .map(|n| Point3::new(coord(n / (k * k)), coord((n / k) % k), coord(n % k)))
                .collect()
        }
        Shape::Helix => {
            let turns = 3.0;
            let mut ts: Vec<f64> = (0..spec.n_points).map(|_| rng.random::<f64>()).collect();
            ts.sort_by(f64::total_cmp);
            ts.into_iter()
                .map(|t| {
                    let phi = std::f64::consts::TAU * turns * t;
                    Point3::new(s * phi.cos(), s * phi.sin(), s * (2.0 * t - 1.0))
                })
                .collect()
        }
    };
    PointCloud::new(points)
}

const SEAM_WIDTH: f64 = 0.1;

/// Closed curve on the unit sphere shaped like a tennis-ball seam.
fn seam_point(t: f64) -> Vector3<f64> {
    let (a, b) = (0.7, 0.3);
    Vector3::new(
        a * t.cos() + b * (3.0 * t).cos(),
        a * t.sin() - b * (3.0 * t).sin(),
        2.0 * (a * b).sqrt() * (2.0 * t).sin(),
    )
    .normalize()
}

/// Acceptance probability along the seam; uneven so the seam's discrete
/// symmetries are broken too.
fn seam_density(t: f64) -> f64 {
    0.35 + 0.65 * (0.5 + 0.5 * (t + 0.7).sin()).powi(2)
}

/// Builds a target cloud from `cloud`: keeps a contiguous slab along x
/// (the lowest `overlap_fraction` of points by x), applies the true motion,
/// adds isotropic Gaussian noise, then replaces `outlier_fraction` of the
/// kept points with samples drawn uniformly in the moved cloud's bounding box.
pub fn corrupt(cloud: &PointCloud, spec: &CorruptionSpec) -> Result<CorruptedScene> {
    if !(spec.noise_sigma_mm >= 0.0 && spec.noise_sigma_mm.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "noise sigma must be non-negative, got {}",
            spec.noise_sigma_mm
        )));
    }
    if !(0.0..1.0).contains(&spec.outlier_fraction) {
        return Err(Error::InvalidConfig(format!(
            "outlier fraction must be in [0, 1), got {}",
            spec.outlier_fraction
        )));
    }
    if !(spec.overlap_fraction > 0.0 && spec.overlap_fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "overlap fraction must be in (0, 1], got {}",
            spec.overlap_fraction
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = cloud.len();
    let keep = ((spec.overlap_fraction * n as f64).round() as usize).min(n);
    let mut kept: Vec<usize> = if keep == n {
        (0..n).collect()
    } else {
        let mut by_x: Vec<usize> = (0..n).collect();
        by_x.sort_by(|&a, &b| {
            cloud.points()[a].x.total_cmp(&cloud.points()[b].x).then(a.cmp(&b))
        });
        by_x.truncate(keep);
        by_x
    };
    kept.sort_unstable();
    if kept.len() < 3 {
        return Err(Error::DegenerateScene(kept.len()));
    }

    let noise = Normal::new(0.0, spec.noise_sigma_mm).expect("validated sigma");
    let mut points: Vec<Point3> = kept
        .iter()
        .map(|&i| spec.true_transform.apply_point(&cloud.points()[i]))
        .collect();
    if spec.noise_sigma_mm > 0.0 {
        for p in &mut points {
            *p += Vector3::new(noise.sample(&mut rng), noise.sample(&mut rng), noise.sample(&mut rng));
        }
    }
    let mut origin: Vec<Option<usize>> = kept.iter().map(|&i| Some(i)).collect();

    let n_out = (spec.outlier_fraction * points.len() as f64).round() as usize;
    if n_out > 0 {
        let (lo, hi) = PointCloud::new(points.clone())?
            .bounding_box()
            .expect("non-empty");
        let mut replaced: Vec<usize> = index::sample(&mut rng, points.len(), n_out).into_vec();
        replaced.sort_unstable();
        for i in replaced {
            points[i] = Point3::new(
                uniform(&mut rng, lo.x, hi.x),
                uniform(&mut rng, lo.y, hi.y),
                uniform(&mut rng, lo.z, hi.z),
            );
            origin[i] = None;
        }
    }

    Ok(CorruptedScene {
        target: PointCloud::new(points)?,
        truth: spec.true_transform,
        origin,
    })
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::apply_transform;

    fn spec(shape: Shape, n: usize, scale: f64) -> SceneSpec {
        SceneSpec { shape, n_points: n, scale_mm: scale, seed: 42 }
    }

    #[test]
    fn sphere_points_on_radius() {
        let c = generate_cloud(&spec(Shape::SphereSurface, 100, 25.0)).unwrap();
        assert_eq!(c.len(), 100);
        for p in c.points() {
            assert!((p.norm() - 25.0).abs() < 1e-9);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        for shape in [Shape::SphereSurface, Shape::CubeGrid, Shape::Helix] {
            let a = generate_cloud(&spec(shape, 64, 3.0)).unwrap();
            let b = generate_cloud(&spec(shape, 64, 3.0)).unwrap();
            assert_eq!(a, b);
            for p in a.points() {
                assert!(p.iter().all(|c| c.abs() <= 3.0 + 1e-12));
            }
        }
        let a = generate_cloud(&spec(Shape::SphereSurface, 50, 1.0)).unwrap();
        let b = generate_cloud(&SceneSpec { seed: 43, ..spec(Shape::SphereSurface, 50, 1.0) }).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn cube_lattice() {
        let c = generate_cloud(&spec(Shape::CubeGrid, 27, 1.0)).unwrap();
        let mut expected = Vec::new();
        for x in [-1.0, 0.0, 1.0] {
            for y in [-1.0, 0.0, 1.0] {
                for z in [-1.0, 0.0, 1.0] {
                    expected.push(Point3::new(x, y, z));
                }
            }
        }
        assert_eq!(c.points(), &expected[..]);
    }

    #[test]
    fn no_op_corruption() {
        let c = generate_cloud(&spec(Shape::Helix, 80, 10.0)).unwrap();
        let s = corrupt(&c, &CorruptionSpec::clean(RigidTransform::identity())).unwrap();
        assert_eq!(s.target, c);
        assert_eq!(s.outlier_count(), 0);
    }

    #[test]
    fn outlier_count_is_exact() {
        let c = generate_cloud(&spec(Shape::SphereSurface, 1000, 10.0)).unwrap();
        let s = corrupt(&c, &CorruptionSpec { outlier_fraction: 0.3, seed: 9, ..CorruptionSpec::clean(RigidTransform::identity()) }).unwrap();
        assert_eq!(s.target.len(), 1000);
        assert_eq!(s.outlier_count(), 300);
    }

    #[test]
    fn noise_has_requested_spread() {
        let c = generate_cloud(&spec(Shape::SphereSurface, 10_000, 50.0)).unwrap();
        let truth = RigidTransform::from_axis_angle(Vector3::new(1.0, 2.0, 3.0), 17.0, Vector3::new(4.0, 5.0, 6.0));
        let s = corrupt(&c, &CorruptionSpec { noise_sigma_mm: 0.5, seed: 3, ..CorruptionSpec::clean(truth) }).unwrap();
        let moved = apply_transform(&truth, &c);
        for axis in 0..3 {
            let d: Vec<f64> = s.target.points().iter().zip(moved.points()).map(|(t, m)| t[axis] - m[axis]).collect();
            let mean = d.iter().sum::<f64>() / d.len() as f64;
            let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (d.len() - 1) as f64;
            let sd = var.sqrt();
            assert!((0.48..=0.52).contains(&sd), "axis {axis}: {sd}");
        }
    }

    #[test]
    fn inverse_truth_recovers_inliers_without_noise() {
        let c = generate_cloud(&spec(Shape::SphereSurface, 300, 20.0)).unwrap();
        let truth = RigidTransform::from_axis_angle(Vector3::new(0.0, 1.0, 1.0), 40.0, Vector3::new(-3.0, 2.0, 8.0));
        let s = corrupt(&c, &CorruptionSpec { outlier_fraction: 0.2, overlap_fraction: 0.6, seed: 11, ..CorruptionSpec::clean(truth) }).unwrap();
        assert_eq!(s.target.len(), 180);
        let back = apply_transform(&truth.inverse(), &s.target);
        for (p, o) in back.points().iter().zip(&s.origin) {
            if let Some(i) = o {
                assert!((p - c.points()[*i]).norm() < 1e-9);
            }
        }
        // The kept slab is the lowest-x part of the source.
        let max_kept = s.origin.iter().flatten().map(|&i| c.points()[i].x).fold(f64::MIN, f64::max);
        let dropped_min = (0..c.len())
            .filter(|i| !s.origin.contains(&Some(*i)))
            .map(|i| c.points()[i].x)
            .fold(f64::MAX, f64::min);
        assert!(max_kept <= dropped_min || s.outlier_count() > 0);
    }

    #[test]
    fn degenerate_scene() {
        let c = generate_cloud(&spec(Shape::Helix, 5, 1.0)).unwrap();
        let r = corrupt(&c, &CorruptionSpec { overlap_fraction: 0.2, ..CorruptionSpec::clean(RigidTransform::identity()) });
        assert!(matches!(r, Err(Error::DegenerateScene(1))));
    }
}
