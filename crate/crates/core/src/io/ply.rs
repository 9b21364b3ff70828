use std::fmt::Write as _;
use std::path::Path;

use super::{read_bytes, write_atomic};
use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud};

struct Element {
    name: String,
    count: usize,
    properties: Vec<String>,
    has_list: bool,
}

/// Reads an ASCII PLY file. Only the `vertex` element's `x`, `y`, `z`
/// properties are used; other properties and elements are skipped.
pub fn read_ply(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let bytes = read_bytes(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|_| parse_err(path, 1, "file is not ASCII text"))?;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));

    match lines.next() {
        Some((_, "ply")) => {}
        _ => return Err(parse_err(path, 1, "missing 'ply' magic")),
    }
    let mut elements: Vec<Element> = Vec::new();
    let mut format_seen = false;
    let mut header_end = None;
    for (no, line) in lines.by_ref() {
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok.as_slice() {
            [] | ["comment", ..] | ["obj_info", ..] => {}
            ["format", "ascii", "1.0"] => format_seen = true,
            ["format", other, ..] => return Err(parse_err(path, no, &format!("unsupported format '{other}'"))),
            ["element", name, count] => {
                let count = count
                    .parse()
                    .map_err(|_| parse_err(path, no, &format!("bad element count '{count}'")))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                    has_list: false,
                });
            }
            ["property", "list", _, _, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| parse_err(path, no, "property before any element"))?;
                el.properties.push(name.to_string());
                el.has_list = true;
            }
            ["property", _ty, name] => {
                elements
                    .last_mut()
                    .ok_or_else(|| parse_err(path, no, "property before any element"))?
                    .properties
                    .push(name.to_string());
            }
            ["end_header"] => {
                header_end = Some(no);
                break;
            }
            _ => return Err(parse_err(path, no, &format!("unrecognised header line '{line}'"))),
        }
    }
    let header_end = header_end.ok_or_else(|| parse_err(path, text.lines().count().max(1), "missing end_header"))?;
    if !format_seen {
        return Err(parse_err(path, header_end, "missing 'format ascii 1.0' line"));
    }
    let vi = elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| parse_err(path, header_end, "no vertex element"))?;
    let vertex = &elements[vi];
    if vertex.has_list {
        return Err(parse_err(path, header_end, "list properties on vertices are not supported"));
    }
    let col = |axis: &str| {
        vertex
            .properties
            .iter()
            .position(|p| p == axis)
            .ok_or_else(|| parse_err(path, header_end, &format!("vertex element lacks property '{axis}'")))
    };
    let cols = [col("x")?, col("y")?, col("z")?];

    let mut body = lines.filter(|(_, l)| !l.is_empty());
    for el in &elements[..vi] {
        for _ in 0..el.count {
            if body.next().is_none() {
                return Err(Error::PlyCountMismatch {
                    path: path.into(),
                    expected: vertex.count,
                    found: 0,
                });
            }
        }
    }
    let mut points = Vec::with_capacity(vertex.count);
    for (no, line) in body.by_ref().take(vertex.count) {
        let tok: Vec<&str> = line.split_whitespace().collect();
        if tok.len() != vertex.properties.len() {
            return Err(parse_err(
                path,
                no,
                &format!("expected {} values, found {}", vertex.properties.len(), tok.len()),
            ));
        }
        let mut p = Point3::zeros();
        for (k, &c) in cols.iter().enumerate() {
            p[k] = tok[c]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(path, no, &format!("bad coordinate '{}'", tok[c])))?;
        }
        points.push(p);
    }
    if points.len() < vertex.count {
        return Err(Error::PlyCountMismatch {
            path: path.into(),
            expected: vertex.count,
            found: points.len(),
        });
    }
    if vi + 1 == elements.len() {
        let extra = body.count();
        if extra > 0 {
            return Err(Error::PlyCountMismatch {
                path: path.into(),
                expected: vertex.count,
                found: vertex.count + extra,
            });
        }
    }
    PointCloud::new(points)
}

/// Writes an ASCII PLY file with `x y z` double properties. Coordinates use
/// the shortest decimal form that reads back to the same value.
pub fn write_ply(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::with_capacity(64 + cloud.len() * 48);
    out.push_str("ply\nformat ascii 1.0\n");
    if let Some(id) = &cloud.id {
        let _ = writeln!(out, "comment id {}", id.replace('\n', " "));
    }
    let _ = writeln!(out, "element vertex {}", cloud.len());
    out.push_str("property double x\nproperty double y\nproperty double z\nend_header\n");
    for p in cloud.points() {
        let _ = writeln!(out, "{} {} {}", p.x, p.y, p.z);
    }
    write_atomic(path.as_ref(), out.as_bytes())
}

fn parse_err(path: &Path, line: usize, message: &str) -> Error {
    Error::PlyParseError {
        path: path.into(),
        line,
        message: message.into(),
    }
}
