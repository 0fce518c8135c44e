use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vec3};

/// Input point-cloud format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CloudFormat {
    /// One `x y z [r g b]` per line, whitespace-separated.
    XyzAscii,
    /// ASCII PLY with vertex properties x, y, z (and optionally colors).
    PlyAscii,
}

#[derive(Debug, Clone)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    /// Per-point RGB, present only when the source file carried colors.
    pub colors: Option<Vec<[u8; 3]>>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn load_point_cloud(path: &Path, format: CloudFormat) -> Result<PointCloud> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let cloud = match format {
        CloudFormat::XyzAscii => parse_xyz(path, &text)?,
        CloudFormat::PlyAscii => parse_ply(path, &text)?,
    };
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    Ok(cloud)
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn parse_coord(path: &Path, line_no: usize, tok: &str) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(path, line_no, format!("bad number '{tok}'")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line_no, format!("non-finite value '{tok}'")));
    }
    Ok(v)
}

fn parse_point_line(path: &Path, line_no: usize, line: &str) -> Result<(Vec3, Option<[u8; 3]>)> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    if toks.len() != 3 && toks.len() != 6 {
        return Err(parse_err(
            path,
            line_no,
            format!("expected 3 or 6 fields, found {}", toks.len()),
        ));
    }
    let p = Vec3::new(
        parse_coord(path, line_no, toks[0])?,
        parse_coord(path, line_no, toks[1])?,
        parse_coord(path, line_no, toks[2])?,
    );
    let color = if toks.len() == 6 {
        let mut rgb = [0u8; 3];
        for (i, t) in toks[3..].iter().enumerate() {
            rgb[i] = t
                .parse()
                .map_err(|_| parse_err(path, line_no, format!("bad color '{t}'")))?;
        }
        Some(rgb)
    } else {
        None
    };
    Ok((p, color))
}

fn parse_xyz(path: &Path, text: &str) -> Result<PointCloud> {
    let mut points = Vec::new();
    let mut colors = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let (p, c) = parse_point_line(path, line_no, line)?;
        points.push(p);
        if let Some(c) = c {
            colors.push(c);
        }
    }
    let colors = if colors.len() == points.len() && !points.is_empty() {
        Some(colors)
    } else {
        None
    };
    Ok(PointCloud { points, colors })
}

fn parse_ply(path: &Path, text: &str) -> Result<PointCloud> {
    let mut lines = text.lines().enumerate();
    let (_, first) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file"))?;
    if first.trim() != "ply" {
        return Err(parse_err(path, 1, "missing 'ply' magic"));
    }
    let mut vertex_count: Option<usize> = None;
    let mut in_vertex_element = false;
    let mut vertex_props: Vec<String> = Vec::new();
    let mut header_end = 0usize;
    for (idx, line) in lines.by_ref() {
        let line_no = idx + 1;
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.first().copied() {
            Some("format") => {
                if toks.get(1) != Some(&"ascii") {
                    return Err(parse_err(path, line_no, "only ascii PLY is supported"));
                }
            }
            Some("element") => {
                in_vertex_element = toks.get(1) == Some(&"vertex");
                if in_vertex_element {
                    let n = toks
                        .get(2)
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| parse_err(path, line_no, "bad vertex count"))?;
                    vertex_count = Some(n);
                }
            }
            Some("property") if in_vertex_element => {
                if let Some(name) = toks.last() {
                    vertex_props.push((*name).to_string());
                }
            }
            Some("end_header") => {
                header_end = line_no;
                break;
            }
            _ => {}
        }
    }
    let vertex_count =
        vertex_count.ok_or_else(|| parse_err(path, header_end, "no vertex element declared"))?;
    let idx_of = |name: &str| vertex_props.iter().position(|p| p == name);
    let (xi, yi, zi) = match (idx_of("x"), idx_of("y"), idx_of("z")) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => return Err(parse_err(path, header_end, "vertex element lacks x, y, z")),
    };
    let color_idx = match (idx_of("red"), idx_of("green"), idx_of("blue")) {
        (Some(r), Some(g), Some(b)) => Some([r, g, b]),
        _ => None,
    };

    let mut points = Vec::with_capacity(vertex_count);
    let mut colors = Vec::new();
    for (idx, line) in lines {
        if points.len() == vertex_count {
            break;
        }
        let line_no = idx + 1;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < vertex_props.len() {
            return Err(parse_err(
                path,
                line_no,
                format!(
                    "expected {} vertex fields, found {}",
                    vertex_props.len(),
                    toks.len()
                ),
            ));
        }
        points.push(Vec3::new(
            parse_coord(path, line_no, toks[xi])?,
            parse_coord(path, line_no, toks[yi])?,
            parse_coord(path, line_no, toks[zi])?,
        ));
        if let Some([r, g, b]) = color_idx {
            let mut rgb = [0u8; 3];
            for (slot, &ti) in [r, g, b].iter().enumerate() {
                rgb[slot] = toks[ti]
                    .parse()
                    .map_err(|_| parse_err(path, line_no, "bad color value"))?;
            }
            colors.push(rgb);
        }
    }
    if points.len() != vertex_count {
        return Err(parse_err(
            path,
            header_end,
            format!("declared {} vertices, found {}", vertex_count, points.len()),
        ));
    }
    let colors = if color_idx.is_some() && colors.len() == points.len() {
        Some(colors)
    } else {
        None
    };
    Ok(PointCloud { points, colors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn xyz_two_points() {
        let f = write_tmp("0 0 0\n1 2 3\n");
        let c = load_point_cloud(f.path(), CloudFormat::XyzAscii).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.points[0], Vec3::new(0.0, 0.0, 0.0));
        assert_eq!(c.points[1], Vec3::new(1.0, 2.0, 3.0));
        assert!(c.colors.is_none());
    }

    #[test]
    fn xyz_with_colors() {
        let f = write_tmp("0 0 0 255 0 10\n");
        let c = load_point_cloud(f.path(), CloudFormat::XyzAscii).unwrap();
        assert_eq!(c.colors.as_ref().unwrap()[0], [255, 0, 10]);
    }

    #[test]
    fn xyz_nan_is_parse_error_at_line() {
        let f = write_tmp("0 0 nan\n");
        match load_point_cloud(f.path(), CloudFormat::XyzAscii) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn xyz_empty_file_errors() {
        let f = write_tmp("");
        assert!(matches!(
            load_point_cloud(f.path(), CloudFormat::XyzAscii),
            Err(Error::EmptyCloud)
        ));
    }

    #[test]
    fn ply_three_vertices() {
        let f = write_tmp(
            "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nend_header\n0 0 0\n1 0 0\n0 1 0\n",
        );
        let c = load_point_cloud(f.path(), CloudFormat::PlyAscii).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.points[2], Vec3::new(0.0, 1.0, 0.0));
    }

    #[test]
    fn ply_truncated_vertices_errors() {
        let f = write_tmp(
            "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nend_header\n0 0 0\n",
        );
        assert!(load_point_cloud(f.path(), CloudFormat::PlyAscii).is_err());
    }
}
