use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::stereo::{DisparityMap, GrayImage};

/// A random-dot stereo pair with exact ground truth.
#[derive(Debug, Clone)]
pub struct Stereogram {
    pub left: GrayImage,
    pub right: GrayImage,
    /// Ground-truth left-reference disparity, valid everywhere.
    pub gt: DisparityMap,
    /// Left pixels with no visible counterpart in the right image.
    pub occlusion: Vec<bool>,
}

/// Builds a stereo pair from a left-reference disparity field.
///
/// The left image is uniform random dots. Left pixel `x` with disparity `d`
/// is forward-warped to right pixel `x − d`; when several land on one right
/// pixel the larger disparity (nearer surface) wins and the others are
/// occluded. Right pixels nobody lands on get fresh random dots.
pub fn generate_stereogram(width: usize, height: usize, field: &[i64], seed: u64) -> Result<Stereogram> {
    if width == 0 || height == 0 {
        return Err(Error::ImageTooSmall { width, height });
    }
    if field.len() != width * height {
        return Err(Error::DimensionMismatch(format!(
            "{} disparities for {width}x{height}",
            field.len()
        )));
    }
    let max = (width / 4) as i64;
    if let Some(index) = field.iter().position(|&d| !(0..=max).contains(&d)) {
        return Err(Error::DisparityOutOfRange { index, value: field[index], max });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let left: Vec<f64> = (0..width * height).map(|_| rng.random::<f64>()).collect();
    let mut right = vec![0.0; width * height];
    let mut occlusion = vec![false; width * height];

    for y in 0..height {
        let row = y * width;
        // owner[xr] = left column currently visible at right column xr
        let mut owner: Vec<Option<usize>> = vec![None; width];
        for x in 0..width {
            let d = field[row + x];
            let xr = x as i64 - d;
            if xr < 0 {
                occlusion[row + x] = true;
                continue;
            }
            let slot = &mut owner[xr as usize];
            match *slot {
                Some(prev) if field[row + prev] >= d => occlusion[row + x] = true,
                Some(prev) => {
                    occlusion[row + prev] = true;
                    *slot = Some(x);
                }
                None => *slot = Some(x),
            }
        }
        for (xr, o) in owner.iter().enumerate() {
            right[row + xr] = match o {
                Some(x) => left[row + x],
                None => rng.random::<f64>(),
            };
        }
    }

    let gt = DisparityMap::new(
        width,
        height,
        width / 4,
        field.iter().map(|&d| d as f64).collect(),
        vec![true; width * height],
    )?;
    Ok(Stereogram {
        left: GrayImage::from_raw(width, height, left),
        right: GrayImage::from_raw(width, height, right),
        gt,
        occlusion,
    })
}
