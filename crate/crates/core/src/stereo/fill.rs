use super::{DisparityMap, StereoConfig};
use crate::error::{Error, Result};

/// Fills every invalid pixel, leaving valid pixels untouched.
///
/// Each filled value is the weighted mean of the originally valid pixels in
/// the `(2·wls_radius+1)²` window around it, with weights
/// `exp(−dist²/wls_lambda)`; this is the weighted least-squares constant fit.
/// Invalid runs touching the left border are processed right to left and
/// every other run left to right. A pixel with no valid pixel in its window
/// copies the previous pixel in its scan order, i.e. the nearest valid or
/// already-filled pixel on the scanline.
pub fn wls_fill(d: &DisparityMap, cfg: &StereoConfig) -> Result<DisparityMap> {
    cfg.validate()?;
    if d.valid.iter().all(|v| !v) {
        return Err(Error::NoValidDisparities);
    }
    let (w, h) = (d.width, d.height);
    let r = cfg.wls_radius as isize;
    let weights: Vec<f64> = (-r..=r)
        .flat_map(|dy| (-r..=r).map(move |dx| (dx, dy)))
        .map(|(dx, dy)| (-((dx * dx + dy * dy) as f64) / cfg.wls_lambda).exp())
        .collect();
    let side = (2 * r + 1) as usize;

    let estimate = |x: usize, y: usize| -> Option<f64> {
        let (mut num, mut den) = (0.0, 0.0);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for dy in -r..=r {
            let yy = y as isize + dy;
            if yy < 0 || yy >= h as isize {
                continue;
            }
            for dx in -r..=r {
                let xx = x as isize + dx;
                if xx < 0 || xx >= w as isize {
                    continue;
                }
                let i = yy as usize * w + xx as usize;
                if !d.valid[i] {
                    continue;
                }
                let wt = weights[(dy + r) as usize * side + (dx + r) as usize];
                num += wt * d.d[i];
                den += wt;
                lo = lo.min(d.d[i]);
                hi = hi.max(d.d[i]);
            }
        }
        (den > 0.0).then(|| (num / den).clamp(lo, hi))
    };

    let mut out = d.clone();
    let mut unresolved = Vec::new();
    for y in 0..h {
        let row = y * w;
        let mut x = 0;
        while x < w {
            if d.valid[row + x] {
                x += 1;
                continue;
            }
            let start = x;
            while x < w && !d.valid[row + x] {
                x += 1;
            }
            let end = x; // exclusive
            let order: Box<dyn Iterator<Item = usize>> = if start == 0 {
                Box::new((start..end).rev())
            } else {
                Box::new(start..end)
            };
            for px in order {
                let donor = if start == 0 { px + 1 } else { px.wrapping_sub(1) };
                let value = estimate(px, y).or_else(|| {
                    (donor < w && out.valid[row + donor]).then(|| out.d[row + donor])
                });
                match value {
                    Some(v) => {
                        out.d[row + px] = v;
                        out.valid[row + px] = true;
                    }
                    None => unresolved.push((px, y)),
                }
            }
        }
    }

    // Rows with no valid pixel at all: nearest valid pixel in the same column.
    for (x, y) in unresolved {
        let donor = (1..h)
            .flat_map(|k| [y.checked_sub(k), Some(y + k)])
            .flatten()
            .filter(|&yy| yy < h)
            .find(|&yy| d.valid[yy * w + x]);
        let v = match donor {
            Some(yy) => d.d[yy * w + x],
            None => nearest_valid(d, x, y),
        };
        out.d[y * w + x] = v;
        out.valid[y * w + x] = true;
    }
    Ok(out)
}

fn nearest_valid(d: &DisparityMap, x: usize, y: usize) -> f64 {
    let mut best = (usize::MAX, 0.0);
    for yy in 0..d.height {
        for xx in 0..d.width {
            let i = yy * d.width + xx;
            if d.valid[i] {
                let dist = xx.abs_diff(x).pow(2) + yy.abs_diff(y).pow(2);
                if dist < best.0 {
                    best = (dist, d.d[i]);
                }
            }
        }
    }
    best.1
}
