use super::{box_mean, DisparityMap, GradientField, StereoConfig};
use crate::error::{Error, Result};

/// Matching cost for every pixel and disparity `0..=d_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostVolume {
    pub width: usize,
    pub height: usize,
    pub d_max: usize,
    /// Indexed `(y * width + x) * (d_max + 1) + d`.
    pub costs: Vec<f64>,
}

impl CostVolume {
    pub fn filled(width: usize, height: usize, d_max: usize, value: f64) -> Self {
        Self {
            width,
            height,
            d_max,
            costs: vec![value; width * height * (d_max + 1)],
        }
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, d: usize) -> usize {
        (y * self.width + x) * (self.d_max + 1) + d
    }

    pub fn cost(&self, x: usize, y: usize, d: usize) -> f64 {
        self.costs[self.index(x, y, d)]
    }

    pub fn set(&mut self, x: usize, y: usize, d: usize, v: f64) {
        let i = self.index(x, y, d);
        self.costs[i] = v;
    }

    fn slice(&self, d: usize) -> Vec<f64> {
        (0..self.width * self.height)
            .map(|p| self.costs[p * (self.d_max + 1) + d])
            .collect()
    }

    fn set_slice(&mut self, d: usize, plane: &[f64]) {
        for (p, v) in plane.iter().enumerate() {
            self.costs[p * (self.d_max + 1) + d] = *v;
        }
    }

    fn flipped(&self) -> CostVolume {
        let mut out = self.clone();
        for y in 0..self.height {
            for x in 0..self.width {
                for d in 0..=self.d_max {
                    let v = self.cost(self.width - 1 - x, y, d);
                    out.set(x, y, d, v);
                }
            }
        }
        out
    }
}

/// Window mean of `|m_l(x', y') − m_r(x' − d, y')|` over `cost_window`.
///
/// Window samples past the image edge replicate the border. Samples whose
/// right-image column `x' − d` is negative cost the largest in-bounds
/// absolute difference found anywhere in the volume.
pub fn matching_cost(left: &GradientField, right: &GradientField, cfg: &StereoConfig) -> Result<CostVolume> {
    cfg.validate()?;
    if left.width != right.width || left.height != right.height {
        return Err(Error::DimensionMismatch(format!(
            "left {}x{}, right {}x{}",
            left.width, left.height, right.width, right.height
        )));
    }
    let (w, h, d_max) = (left.width, left.height, cfg.d_max);
    let ml = &left.magnitude;
    let mr = &right.magnitude;

    let mut penalty: f64 = 0.0;
    for y in 0..h {
        for x in 0..w {
            for d in 0..=d_max.min(x) {
                penalty = penalty.max((ml[y * w + x] - mr[y * w + x - d]).abs());
            }
        }
    }

    let mut vol = CostVolume::filled(w, h, d_max, 0.0);
    let radius = cfg.cost_window / 2;
    let mut diff = vec![0.0; w * h];
    for d in 0..=d_max {
        for y in 0..h {
            for x in 0..w {
                diff[y * w + x] = if x >= d {
                    (ml[y * w + x] - mr[y * w + x - d]).abs()
                } else {
                    penalty
                };
            }
        }
        vol.set_slice(d, &box_mean(&diff, w, h, radius));
    }
    Ok(vol)
}

/// Cost volume with the right image as reference: right pixel `x` matches
/// left pixel `x + d`. Computed by mirroring both images.
pub fn matching_cost_right(left: &GradientField, right: &GradientField, cfg: &StereoConfig) -> Result<CostVolume> {
    Ok(matching_cost(&right.flipped(), &left.flipped(), cfg)?.flipped())
}

/// Per-disparity box mean over `agg_window`, replicated borders.
pub fn aggregate_cost(vol: &CostVolume, cfg: &StereoConfig) -> CostVolume {
    let radius = cfg.agg_window / 2;
    let mut out = vol.clone();
    for d in 0..=vol.d_max {
        let plane = box_mean(&vol.slice(d), vol.width, vol.height, radius);
        out.set_slice(d, &plane);
    }
    out
}

/// Winner-take-all: the smallest disparity attaining the minimum cost.
pub fn select_disparity(vol: &CostVolume) -> DisparityMap {
    let n = vol.width * vol.height;
    let mut d = Vec::with_capacity(n);
    for p in 0..n {
        let costs = &vol.costs[p * (vol.d_max + 1)..(p + 1) * (vol.d_max + 1)];
        let mut best = 0;
        for (k, c) in costs.iter().enumerate().skip(1) {
            if *c < costs[best] {
                best = k;
            }
        }
        d.push(best as f64);
    }
    DisparityMap::new(vol.width, vol.height, vol.d_max, d, vec![true; n])
        .expect("winner-take-all output is within range")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stereo::{gradient_field, GrayImage};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg(d_max: usize, win: usize) -> StereoConfig {
        StereoConfig { cost_window: win, agg_window: win, ..StereoConfig::new(d_max) }
    }

    fn noise_image(w: usize, h: usize, seed: u64) -> GrayImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let px = (0..w * h).map(|_| rng.random::<f64>()).collect();
        GrayImage::new(w, h, px).unwrap()
    }

    #[test]
    fn identical_images_zero_cost_at_zero_disparity() {
        let g = gradient_field(&noise_image(20, 12, 1)).unwrap();
        let vol = matching_cost(&g, &g, &cfg(4, 5)).unwrap();
        for y in 0..12 {
            for x in 0..20 {
                assert_eq!(vol.cost(x, y, 0), 0.0);
            }
        }
        assert!(vol.costs.iter().all(|c| *c >= 0.0 && c.is_finite()));
    }

    #[test]
    fn shifted_pair_has_zero_cost_at_true_shift() {
        let (w, h, shift) = (40, 16, 3);
        let left = noise_image(w + shift, h, 2);
        let l = GrayImage::from_fn(w, h, |x, y| left.get(x, y)).unwrap();
        let r = GrayImage::from_fn(w, h, |x, y| left.get(x + shift, y)).unwrap();
        let (gl, gr) = (gradient_field(&l).unwrap(), gradient_field(&r).unwrap());
        let c = cfg(6, 5);
        let vol = matching_cost(&gl, &gr, &c).unwrap();
        // Window and gradient support stay inside both images.
        for y in 3..h - 3 {
            for x in (shift + 4)..w - 4 {
                assert_eq!(vol.cost(x, y, shift), 0.0, "({x},{y})");
                for d in (0..=6).filter(|d| *d != shift) {
                    assert!(vol.cost(x, y, d) > 0.0);
                }
            }
        }
        let d = select_disparity(&aggregate_cost(&vol, &c));
        for y in 5..h - 5 {
            for x in (shift + 6)..w - 6 {
                assert_eq!(d.get(x, y), shift as f64);
            }
        }
    }

    #[test]
    fn constant_images_are_ambiguous() {
        let img = GrayImage::new(10, 10, vec![0.5; 100]).unwrap();
        let g = gradient_field(&img).unwrap();
        let vol = matching_cost(&g, &g, &cfg(3, 3)).unwrap();
        assert!(vol.costs.iter().all(|c| *c == 0.0));
        assert!(select_disparity(&vol).d.iter().all(|d| *d == 0.0));
    }

    #[test]
    fn dimension_mismatch() {
        let a = gradient_field(&noise_image(10, 10, 1)).unwrap();
        let b = gradient_field(&noise_image(11, 10, 1)).unwrap();
        assert!(matches!(matching_cost(&a, &b, &cfg(2, 3)), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn border_samples_carry_penalty() {
        let g = gradient_field(&noise_image(12, 8, 4)).unwrap();
        let c = StereoConfig { cost_window: 1, ..StereoConfig::new(3) };
        let vol = matching_cost(&g, &g, &c).unwrap();
        let mut max_in = 0.0f64;
        for y in 0..8 {
            for x in 0..12 {
                for d in 0..=3usize.min(x) {
                    max_in = max_in.max(vol.cost(x, y, d));
                }
            }
        }
        assert_eq!(vol.cost(0, 0, 1), max_in);
        assert_eq!(vol.cost(2, 5, 3), max_in);
    }

    #[test]
    fn aggregation() {
        let c = cfg(2, 3);
        let zeros = CostVolume::filled(6, 5, 2, 0.0);
        assert_eq!(aggregate_cost(&zeros, &c), zeros);

        let mut spike = CostVolume::filled(7, 7, 2, 0.0);
        spike.set(3, 3, 1, 1.0);
        let agg = aggregate_cost(&spike, &c);
        for y in 0..7 {
            for x in 0..7 {
                let expected = if (2..=4).contains(&x) && (2..=4).contains(&y) { 1.0 / 9.0 } else { 0.0 };
                assert!((agg.cost(x, y, 1) - expected).abs() < 1e-15);
                assert_eq!(agg.cost(x, y, 0), 0.0);
            }
        }

        let konst = CostVolume::filled(6, 5, 2, 0.37);
        for v in aggregate_cost(&konst, &c).costs {
            assert!((v - 0.37).abs() < 1e-12);
        }
    }

    #[test]
    fn winner_take_all() {
        let mut vol = CostVolume::filled(1, 1, 2, 0.0);
        vol.set(0, 0, 0, 5.0);
        vol.set(0, 0, 1, 1.0);
        vol.set(0, 0, 2, 7.0);
        assert_eq!(select_disparity(&vol).d, vec![1.0]);
        let flat = CostVolume::filled(3, 2, 4, 2.0);
        let d = select_disparity(&flat);
        assert!(d.d.iter().all(|v| *v == 0.0));
        assert!(d.valid.iter().all(|v| *v));
    }
}
