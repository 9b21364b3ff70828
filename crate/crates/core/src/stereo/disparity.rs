use crate::error::{Error, Result};

/// Per-pixel disparity with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct DisparityMap {
    pub width: usize,
    pub height: usize,
    pub d_max: usize,
    pub d: Vec<f64>,
    pub valid: Vec<bool>,
}

impl DisparityMap {
    /// Valid pixels must hold finite disparities in `[0, d_max]`.
    pub fn new(width: usize, height: usize, d_max: usize, d: Vec<f64>, valid: Vec<bool>) -> Result<Self> {
        if d.len() != width * height || valid.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} disparities / {} mask entries for {width}x{height}",
                d.len(),
                valid.len()
            )));
        }
        let hi = d_max as f64;
        if let Some(i) = (0..d.len()).find(|&i| valid[i] && !(d[i] >= 0.0 && d[i] <= hi)) {
            return Err(Error::DisparityOutOfRange {
                index: i,
                value: d[i] as i64,
                max: d_max as i64,
            });
        }
        Ok(Self {
            width,
            height,
            d_max,
            d,
            valid,
        })
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.d[y * self.width + x]
    }

    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.valid[y * self.width + x]
    }

    pub fn invalid_count(&self) -> usize {
        self.valid.iter().filter(|v| !**v).count()
    }

    fn check_same_shape(&self, other: &DisparityMap) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }
}

/// Invalidates left-reference pixels whose match `x − d_L(x)` falls off the
/// image or whose right-reference disparity there differs by more than
/// `tau`. Already-invalid pixels stay invalid; survivors keep `d_L`.
pub fn lr_consistency(d_left: &DisparityMap, d_right: &DisparityMap, tau: f64) -> Result<DisparityMap> {
    d_left.check_same_shape(d_right)?;
    if tau.is_nan() || tau < 0.0 {
        return Err(Error::InvalidConfig(format!("lr tau must be non-negative, got {tau}")));
    }
    let mut out = d_left.clone();
    for y in 0..d_left.height {
        for x in 0..d_left.width {
            let i = y * d_left.width + x;
            if !out.valid[i] {
                continue;
            }
            let xr = x as f64 - d_left.d[i].round();
            out.valid[i] = xr >= 0.0 && (d_left.d[i] - d_right.get(xr as usize, y)).abs() <= tau;
        }
    }
    Ok(out)
}
