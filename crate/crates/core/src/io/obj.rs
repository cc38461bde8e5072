//! ASCII OBJ meshes and the landmark sidecar (`name index` per line).
//!
//! Vertex colours use the common `v x y z r g b` extension. Polygons are
//! fan-triangulated on read; normals and groups are ignored.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{TriangleMesh, Vec3};

fn err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::format("OBJ", format!("line {line}: {msg}"))
}

/// Numbers use the shortest exact representation, so reading back is lossless.
pub fn write_obj<W: Write>(mut w: W, mesh: &TriangleMesh) -> Result<()> {
    let mut out = String::new();
    for (i, v) in mesh.vertices.iter().enumerate() {
        let _ = write!(out, "v {:e} {:e} {:e}", v.x, v.y, v.z);
        if let Some(c) = &mesh.vertex_colors {
            let _ = write!(out, " {:e} {:e} {:e}", c[i][0], c[i][1], c[i][2]);
        }
        out.push('\n');
    }
    if let Some(tc) = &mesh.texcoords {
        for t in tc {
            let _ = writeln!(out, "vt {:e} {:e}", t[0], t[1]);
        }
    }
    for t in &mesh.triangles {
        let [a, b, c] = t.map(|i| i + 1);
        if mesh.texcoords.is_some() {
            let _ = writeln!(out, "f {a}/{a} {b}/{b} {c}/{c}");
        } else {
            let _ = writeln!(out, "f {a} {b} {c}");
        }
    }
    w.write_all(out.as_bytes()).map_err(|e| Error::io("<obj>", e))
}

fn resolve(token: &str, count: usize, line: usize) -> Result<u32> {
    let i: i64 = token.parse().map_err(|_| err(line, format!("bad index `{token}`")))?;
    let idx = if i > 0 {
        i - 1
    } else if i < 0 {
        count as i64 + i
    } else {
        -1
    };
    if idx < 0 || idx >= count as i64 {
        return Err(err(line, format!("index {i} out of range")));
    }
    Ok(idx as u32)
}

/// Reads an OBJ mesh. Texture coordinates are kept only when every face
/// corner uses the same index for position and texture.
pub fn read_obj<R: Read>(r: R) -> Result<TriangleMesh> {
    let mut vertices = Vec::new();
    let mut colors: Vec<[f64; 3]> = Vec::new();
    let mut texcoords: Vec<[f64; 2]> = Vec::new();
    let mut triangles = Vec::new();
    let mut uv_shared = true;
    for (n, line) in std::io::BufReader::new(r).lines().enumerate() {
        let line = line.map_err(|e| Error::io("<obj>", e))?;
        let ln = n + 1;
        let mut it = line.split_whitespace();
        let Some(tag) = it.next() else { continue };
        let rest: Vec<&str> = it.collect();
        let nums = || -> Result<Vec<f64>> {
            rest.iter()
                .map(|s| s.parse::<f64>().map_err(|_| err(ln, format!("bad number `{s}`"))))
                .collect()
        };
        match tag {
            "v" => {
                let x = nums()?;
                match x.len() {
                    3 | 4 => {}
                    6 => colors.push([x[3], x[4], x[5]]),
                    k => return Err(err(ln, format!("vertex with {k} numbers"))),
                }
                vertices.push(Vec3::new(x[0], x[1], x[2]));
            }
            "vt" => {
                let x = nums()?;
                if x.len() < 2 {
                    return Err(err(ln, "texture coordinate needs 2 numbers"));
                }
                texcoords.push([x[0], x[1]]);
            }
            "f" => {
                if rest.len() < 3 {
                    return Err(err(ln, "face needs at least 3 corners"));
                }
                let mut idx = Vec::with_capacity(rest.len());
                for corner in &rest {
                    let mut parts = corner.split('/');
                    let vi = resolve(parts.next().unwrap_or(""), vertices.len(), ln)?;
                    match parts.next() {
                        Some(t) if !t.is_empty() => {
                            uv_shared &= resolve(t, texcoords.len(), ln)? == vi;
                        }
                        _ => uv_shared = false,
                    }
                    idx.push(vi);
                }
                for k in 1..idx.len() - 1 {
                    triangles.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    if !colors.is_empty() && colors.len() != vertices.len() {
        return Err(Error::format("OBJ", "vertex colours given for only some vertices"));
    }
    let mut mesh = TriangleMesh::new(vertices, triangles)?;
    if !colors.is_empty() {
        mesh = mesh.with_colors(colors)?;
    }
    if uv_shared && texcoords.len() == mesh.vertices.len() && !mesh.triangles.is_empty() {
        mesh.texcoords = Some(texcoords);
    }
    Ok(mesh)
}

pub fn write_landmarks<W: Write>(mut w: W, landmarks: &BTreeMap<String, u32>) -> Result<()> {
    let mut out = String::new();
    for (name, idx) in landmarks {
        let _ = writeln!(out, "{name} {idx}");
    }
    w.write_all(out.as_bytes()).map_err(|e| Error::io("<landmarks>", e))
}

pub fn read_landmarks<R: Read>(r: R) -> Result<BTreeMap<String, u32>> {
    let mut out = BTreeMap::new();
    for (n, line) in std::io::BufReader::new(r).lines().enumerate() {
        let line = line.map_err(|e| Error::io("<landmarks>", e))?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        match parts.as_slice() {
            [] => {}
            [name, idx] => {
                let idx = idx
                    .parse()
                    .map_err(|_| Error::format("landmarks", format!("line {}: bad index", n + 1)))?;
                out.insert(name.to_string(), idx);
            }
            _ => return Err(Error::format("landmarks", format!("line {}: expected `name index`", n + 1))),
        }
    }
    Ok(out)
}

/// Writes `path` and, when the mesh has landmarks, the sidecar next to it.
pub fn write_obj_file(path: &Path, mesh: &TriangleMesh) -> Result<()> {
    let mut w = super::create(path)?;
    write_obj(&mut w, mesh)?;
    w.flush().map_err(|e| Error::io(path, e))?;
    if !mesh.landmarks.is_empty() {
        let lp = super::landmark_path(path);
        let mut w = super::create(&lp)?;
        write_landmarks(&mut w, &mesh.landmarks)?;
        w.flush().map_err(|e| Error::io(lp, e))?;
    }
    Ok(())
}

/// Reads `path` plus its landmark sidecar if one exists.
pub fn read_obj_file(path: &Path) -> Result<TriangleMesh> {
    let mut mesh = read_obj(super::open(path)?).map_err(|e| super::vxg::with_path(e, path))?;
    let lp = super::landmark_path(path);
    if lp.exists() {
        mesh.landmarks = read_landmarks(super::open(&lp)?)?;
        mesh.validate()?;
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{icosphere, unit_cube};

    #[test]
    fn round_trip_is_exact() {
        let mut m = icosphere(Vec3::new(0.1, -0.2, 0.3), 0.7, 2);
        let colors = (0..m.vertices.len()).map(|i| [i as f64 / 1000.0, 0.5, 1.0 / 3.0]).collect();
        m = m.with_colors(colors).unwrap();
        m.texcoords = Some(m.vertices.iter().map(|v| [v.x, v.y]).collect());
        m.landmarks.insert("nose_tip".into(), 3);
        let mut buf = Vec::new();
        write_obj(&mut buf, &m).unwrap();
        let mut back = read_obj(buf.as_slice()).unwrap();
        let mut lm = Vec::new();
        write_landmarks(&mut lm, &m.landmarks).unwrap();
        back.landmarks = read_landmarks(lm.as_slice()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn quads_and_negative_indices() {
        let src = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1 4//1\nf -4 -2 -1\n";
        let m = read_obj(src.as_bytes()).unwrap();
        assert_eq!(m.triangles, vec![[0, 1, 2], [0, 2, 3], [0, 2, 3]]);
        assert!(m.vertex_colors.is_none() && m.texcoords.is_none());
    }

    #[test]
    fn malformed_lines_are_rejected() {
        assert!(read_obj("v 0 0\n".as_bytes()).is_err());
        assert!(read_obj("v 0 0 0\nf 1 2 3\n".as_bytes()).is_err());
        assert!(read_landmarks("nose_tip\n".as_bytes()).is_err());
    }

    #[test]
    fn cube_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/cube.obj");
        let mut m = unit_cube();
        m.landmarks.insert("eye_outer_left".into(), 1);
        write_obj_file(&p, &m).unwrap();
        assert!(dir.path().join("sub/cube.landmarks.txt").exists());
        assert_eq!(read_obj_file(&p).unwrap(), m);
    }
}
