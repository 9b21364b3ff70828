//! Shared fixtures and independent reference implementations for the
//! integration tests.
#![allow(dead_code)]

use bimcc::geometry::{Point3, PointCloud, RigidTransform};
use bimcc::stereo::{DisparityMap, StereoConfig};
use nalgebra::{Matrix3, Matrix4, SymmetricEigen, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_points(rng: &mut ChaCha8Rng, n: usize, half_extent: f64) -> Vec<Point3> {
    (0..n)
        .map(|_| {
            Point3::new(
                rng.random_range(-half_extent..half_extent),
                rng.random_range(-half_extent..half_extent),
                rng.random_range(-half_extent..half_extent),
            )
        })
        .collect()
}

pub fn random_unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Rotation of up to `max_deg` about a random axis, translation up to
/// `max_t` in each coordinate.
pub fn random_transform(rng: &mut ChaCha8Rng, max_deg: f64, max_t: f64) -> RigidTransform {
    let axis = random_unit(rng);
    let angle = rng.random_range(0.0..max_deg);
    let t = Vector3::new(
        rng.random_range(-max_t..=max_t),
        rng.random_range(-max_t..=max_t),
        rng.random_range(-max_t..=max_t),
    );
    RigidTransform::from_axis_angle(axis, angle, t)
}

pub fn cloud(points: Vec<Point3>) -> PointCloud {
    PointCloud::new(points).unwrap()
}

/// Weighted rigid fit by Horn's closed-form quaternion method: the optimal
/// rotation is the dominant eigenvector of a 4×4 symmetric matrix built from
/// the weighted cross-covariance. Shares no code with the SVD solver.
pub fn horn_fit(source: &[Point3], target: &[Point3], weights: &[f64]) -> RigidTransform {
    let wsum: f64 = weights.iter().sum();
    let mut cs = Vector3::zeros();
    let mut ct = Vector3::zeros();
    for i in 0..source.len() {
        cs += weights[i] * source[i];
        ct += weights[i] * target[i];
    }
    cs /= wsum;
    ct /= wsum;
    let mut m = Matrix3::zeros();
    for i in 0..source.len() {
        m += weights[i] * (source[i] - cs) * (target[i] - ct).transpose();
    }
    let (sxx, sxy, sxz) = (m[(0, 0)], m[(0, 1)], m[(0, 2)]);
    let (syx, syy, syz) = (m[(1, 0)], m[(1, 1)], m[(1, 2)]);
    let (szx, szy, szz) = (m[(2, 0)], m[(2, 1)], m[(2, 2)]);
    let n = Matrix4::new(
        sxx + syy + szz, syz - szy, szx - sxz, sxy - syx,
        syz - szy, sxx - syy - szz, sxy + syx, szx + sxz,
        szx - sxz, sxy + syx, -sxx + syy - szz, syz + szy,
        sxy - syx, szx + sxz, syz + szy, -sxx - syy + szz,
    );
    let eig = SymmetricEigen::new(n);
    let k = eig.eigenvalues.imax();
    let q = eig.eigenvectors.column(k);
    let rot = UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(q[0], q[1], q[2], q[3]));
    let r = rot.to_rotation_matrix().into_inner();
    RigidTransform::new(r, ct - r * cs).unwrap()
}

/// Nearest point by exhaustive scan, lowest index on ties.
pub fn linear_nearest(points: &[Point3], q: &Point3) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, p) in points.iter().enumerate() {
        let d2 = (p - q).norm_squared();
        if d2 < best.1 {
            best = (i, d2);
        }
    }
    (best.0, best.1.sqrt())
}

pub fn max_abs_diff(a: &RigidTransform, b: &RigidTransform) -> f64 {
    let dr = (a.rotation() - b.rotation()).abs().max();
    let dt = (a.translation() - b.translation()).abs().max();
    dr.max(dt)
}

/// `‖RᵀR − I‖_F` and `|det R − 1|`.
pub fn rotation_defects(t: &RigidTransform) -> (f64, f64) {
    let r = t.rotation();
    ((r.transpose() * r - Matrix3::identity()).norm(), (r.determinant() - 1.0).abs())
}

/// Checks that every pixel invalid in `before` is valid in `after` with a
/// value inside `[min, max]` of the originally valid pixels in its fill
/// window, or, when that window holds none, equal to a valid or filled
/// neighbour on its scanline. Returns the first offending pixel.
pub fn check_fill_bounds(before: &DisparityMap, after: &DisparityMap, cfg: &StereoConfig) -> Result<(), String> {
    let (w, h) = (before.width, before.height);
    let r = cfg.wls_radius as isize;
    if after.invalid_count() != 0 {
        return Err(format!("{} pixels left invalid", after.invalid_count()));
    }
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if before.valid[i] {
                if after.d[i] != before.d[i] {
                    return Err(format!("valid pixel ({x},{y}) changed"));
                }
                continue;
            }
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for dy in -r..=r {
                for dx in -r..=r {
                    let (xx, yy) = (x as isize + dx, y as isize + dy);
                    if xx < 0 || yy < 0 || xx >= w as isize || yy >= h as isize {
                        continue;
                    }
                    let j = yy as usize * w + xx as usize;
                    if before.valid[j] {
                        lo = lo.min(before.d[j]);
                        hi = hi.max(before.d[j]);
                    }
                }
            }
            let v = after.d[i];
            let ok = if lo <= hi {
                v >= lo && v <= hi
            } else {
                let left = (x > 0).then(|| after.d[i - 1]);
                let right = (x + 1 < w).then(|| after.d[i + 1]);
                left == Some(v) || right == Some(v) || (0..h).any(|yy| before.valid[yy * w + x] && before.d[yy * w + x] == v)
            };
            if !ok {
                return Err(format!("pixel ({x},{y}) filled with {v}, window range [{lo}, {hi}]"));
            }
        }
    }
    Ok(())
}
