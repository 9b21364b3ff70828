use super::clamp_index;
use crate::error::{Error, Result};

/// Grayscale image, row-major, intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!("{width}x{height} has no pixels")));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        if let Some(i) = pixels.iter().position(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidImage(format!(
                "pixel {i} = {} is outside [0, 1]",
                pixels[i]
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    pub(crate) fn from_raw(width: usize, height: usize, pixels: Vec<f64>) -> Self {
        debug_assert_eq!(pixels.len(), width * height);
        Self {
            width,
            height,
            pixels,
        }
    }
}

/// Per-pixel image derivatives and their magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub width: usize,
    pub height: usize,
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
    pub magnitude: Vec<f64>,
}

impl GradientField {
    pub fn at(&self, x: usize, y: usize) -> (f64, f64) {
        let i = y * self.width + x;
        (self.gx[i], self.gy[i])
    }

    /// Same field mirrored left-to-right (magnitudes only are meaningful for
    /// matching; `gx` changes sign).
    pub(crate) fn flipped(&self) -> GradientField {
        let (w, h) = (self.width, self.height);
        let mut out = self.clone();
        for y in 0..h {
            for x in 0..w {
                let (src, dst) = (y * w + (w - 1 - x), y * w + x);
                out.gx[dst] = -self.gx[src];
                out.gy[dst] = self.gy[src];
                out.magnitude[dst] = self.magnitude[src];
            }
        }
        out
    }
}

/// Central differences, `(I(x+1) − I(x−1)) / 2`, with replicated borders.
pub fn gradient_field(img: &GrayImage) -> Result<GradientField> {
    let (w, h) = (img.width, img.height);
    if w < 3 || h < 3 {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
        });
    }
    let n = w * h;
    let mut gx = vec![0.0; n];
    let mut gy = vec![0.0; n];
    let mut magnitude = vec![0.0; n];
    for y in 0..h {
        for x in 0..w {
            let xl = clamp_index(x as isize - 1, w);
            let xr = clamp_index(x as isize + 1, w);
            let yu = clamp_index(y as isize - 1, h);
            let yd = clamp_index(y as isize + 1, h);
            let i = y * w + x;
            gx[i] = (img.get(xr, y) - img.get(xl, y)) / 2.0;
            gy[i] = (img.get(x, yd) - img.get(x, yu)) / 2.0;
            magnitude[i] = gx[i].hypot(gy[i]);
        }
    }
    Ok(GradientField {
        width: w,
        height: h,
        gx,
        gy,
        magnitude,
    })
}
