use std::fmt::Write as _;
use std::path::Path;

use super::{read_bytes, write_atomic};
use crate::error::{Error, Result};
use crate::stereo::{DisparityMap, GrayImage};

/// Reads a binary (P5) PGM with maxval 255; byte `v` becomes `v/255`.
pub fn read_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = read_bytes(path)?;
    let unsupported = |m: &str| Error::UnsupportedPgm {
        path: path.into(),
        message: m.into(),
    };
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        let magic = String::from_utf8_lossy(&bytes[..bytes.len().min(2)]).into_owned();
        return Err(unsupported(&format!("magic '{magic}', only binary P5 is supported")));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // Whitespace and '#' comments may separate header fields.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|b| *b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| unsupported("malformed header"))?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(unsupported(&format!("maxval {maxval}, only 255 is supported")));
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(unsupported("malformed header"));
    }
    pos += 1;
    let expected = width * height;
    let payload = &bytes[pos..];
    if payload.len() < expected {
        return Err(Error::PgmTruncated {
            path: path.into(),
            expected,
            found: payload.len(),
        });
    }
    let pixels = payload[..expected].iter().map(|&b| b as f64 / 255.0).collect();
    GrayImage::new(width, height, pixels).map_err(|e| unsupported(&e.to_string()))
}

fn encode(width: usize, height: usize, bytes: impl Iterator<Item = u8>) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(bytes);
    out
}

/// Writes a binary PGM, mapping each pixel to `round(p·255)`.
pub fn write_pgm(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let data = encode(
        img.width(),
        img.height(),
        img.pixels().iter().map(|p| (p * 255.0).round() as u8),
    );
    write_atomic(path.as_ref(), &data)
}

/// Writes a disparity map as a PGM of `round(d·scale)` clamped to 0..=255
/// (invalid pixels are 0) and, if `raw` is given, as text: one image row per
/// line, invalid pixels written as `nan`.
pub fn write_disparity(map: &DisparityMap, scale: f64, pgm: Option<&Path>, raw: Option<&Path>) -> Result<()> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidConfig(format!("disparity scale must be positive, got {scale}")));
    }
    if let Some(p) = pgm {
        let bytes = map
            .d
            .iter()
            .zip(&map.valid)
            .map(|(d, v)| if *v { (d * scale).round().clamp(0.0, 255.0) as u8 } else { 0 });
        write_atomic(p, &encode(map.width, map.height, bytes))?;
    }
    if let Some(p) = raw {
        let mut text = String::with_capacity(map.d.len() * 8);
        for y in 0..map.height {
            for x in 0..map.width {
                if x > 0 {
                    text.push(' ');
                }
                if map.is_valid(x, y) {
                    let _ = write!(text, "{}", map.get(x, y));
                } else {
                    text.push_str("nan");
                }
            }
            text.push('\n');
        }
        write_atomic(p, text.as_bytes())?;
    }
    Ok(())
}
