use nalgebra::Vector2;

use super::GradientField;
use crate::error::{Error, Result};

/// A projected contour sample: pixel position and the contour normal there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourPoint {
    pub x: usize,
    pub y: usize,
    pub direction: Vector2<f64>,
}

/// Mean `|dᵢ·∇I| / (‖dᵢ‖‖∇I‖)` over the contour. Points on a zero gradient
/// contribute 0.
pub fn shape_similarity(contour: &[ContourPoint], grad: &GradientField) -> Result<f64> {
    if contour.is_empty() {
        return Err(Error::InvalidConfig("contour has no points".into()));
    }
    let mut sum = 0.0;
    for (i, p) in contour.iter().enumerate() {
        let dn = p.direction.norm();
        if !(dn > 0.0 && dn.is_finite()) {
            return Err(Error::InvalidDirection(i));
        }
        if p.x >= grad.width || p.y >= grad.height {
            return Err(Error::PositionOutOfBounds(i));
        }
        let (gx, gy) = grad.at(p.x, p.y);
        let g = Vector2::new(gx, gy);
        let gn = g.norm();
        if gn > 0.0 {
            sum += (p.direction.dot(&g).abs() / (dn * gn)).min(1.0);
        }
    }
    Ok(sum / contour.len() as f64)
}
