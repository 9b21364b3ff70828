use super::{clamp_index, DisparityMap, GrayImage};
use crate::error::{Error, Result};

/// Normalised Gaussian taps `exp(−k²/2σ²)` for `|k| ≤ ceil(3σ)`.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidSigma(sigma));
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let taps: Vec<f64> = (-radius..=radius)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    Ok(taps.into_iter().map(|t| t / sum).collect())
}

fn convolve(values: &[f64], width: usize, height: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as isize;
    let mut tmp = vec![0.0; values.len()];
    for y in 0..height {
        for x in 0..width {
            tmp[y * width + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, t)| t * values[y * width + clamp_index(x as isize + k as isize - r, width)])
                .sum();
        }
    }
    let mut out = vec![0.0; values.len()];
    for y in 0..height {
        for x in 0..width {
            out[y * width + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, t)| t * tmp[clamp_index(y as isize + k as isize - r, height) * width + x])
                .sum();
        }
    }
    out
}

/// Types that can be Gaussian-smoothed.
pub trait Smooth: Sized {
    fn smoothed(&self, sigma: f64) -> Result<Self>;
}

impl Smooth for GrayImage {
    fn smoothed(&self, sigma: f64) -> Result<Self> {
        let k = gaussian_kernel(sigma)?;
        let px = convolve(self.pixels(), self.width(), self.height(), &k)
            .into_iter()
            .map(|v| v.clamp(0.0, 1.0))
            .collect();
        Ok(GrayImage::from_raw(self.width(), self.height(), px))
    }
}

impl Smooth for DisparityMap {
    /// Smooths the disparity values; the validity mask is carried over.
    fn smoothed(&self, sigma: f64) -> Result<Self> {
        let k = gaussian_kernel(sigma)?;
        let hi = self.d_max as f64;
        let d = convolve(&self.d, self.width, self.height, &k)
            .into_iter()
            .map(|v| v.clamp(0.0, hi))
            .collect();
        Ok(DisparityMap {
            d,
            ..self.clone()
        })
    }
}

/// Separable Gaussian smoothing with replicated borders.
pub fn gaussian_smooth<T: Smooth>(input: &T, sigma: f64) -> Result<T> {
    input.smoothed(sigma)
}
