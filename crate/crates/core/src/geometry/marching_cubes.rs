//! Iso-surface extraction from occupancy grids.
//!
//! The case table is generated once from the cube topology rather than
//! transcribed: every face of a cell contributes oriented segments between
//! edge crossings, the segments are chained into closed loops and the loops
//! are fan-triangulated. Faces with two diagonal inside corners are
//! ambiguous; they are resolved by comparing the average of the four face
//! samples with the iso value. Neighbouring cells see the same face samples,
//! so both sides pick the same connectivity and the output has no cracks.
//!
//! Inside means `value > iso`. Triangles are wound so that normals point
//! towards lower occupancy.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::geometry::grid::VoxelGrid;
use crate::geometry::mesh::{TriangleMesh, Vec3};

/// Corner `c` of the unit cell sits at `(c & 1, (c >> 1) & 1, (c >> 2) & 1)`.
const fn corner_offset(c: usize) -> [usize; 3] {
    [c & 1, (c >> 1) & 1, (c >> 2) & 1]
}

/// The twelve cell edges as `(low corner, high corner, axis)`.
const EDGES: [(usize, usize, usize); 12] = [
    (0, 1, 0),
    (2, 3, 0),
    (4, 5, 0),
    (6, 7, 0),
    (0, 2, 1),
    (1, 3, 1),
    (4, 6, 1),
    (5, 7, 1),
    (0, 4, 2),
    (1, 5, 2),
    (2, 6, 2),
    (3, 7, 2),
];

fn edge_between(a: usize, b: usize) -> usize {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    EDGES
        .iter()
        .position(|&(c0, c1, _)| c0 == lo && c1 == hi)
        .expect("corners are not adjacent")
}

struct Face {
    /// Corners in cyclic order around the face.
    corners: [usize; 4],
    normal: [f64; 3],
}

fn faces() -> [Face; 6] {
    let mut out: Vec<Face> = Vec::with_capacity(6);
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in 0..2 {
            let base = side << axis;
            let corners = [base, base | (1 << u), base | (1 << u) | (1 << v), base | (1 << v)];
            let mut normal = [0.0; 3];
            normal[axis] = if side == 0 { -1.0 } else { 1.0 };
            out.push(Face { corners, normal });
        }
    }
    out.try_into().ok().expect("six faces")
}

fn corner_point(c: usize) -> [f64; 3] {
    let o = corner_offset(c);
    [o[0] as f64, o[1] as f64, o[2] as f64]
}

fn edge_mid(e: usize) -> [f64; 3] {
    let (a, b, _) = EDGES[e];
    let (pa, pb) = (corner_point(a), corner_point(b));
    [(pa[0] + pb[0]) * 0.5, (pa[1] + pb[1]) * 0.5, (pa[2] + pb[2]) * 0.5]
}

fn side_of(m1: [f64; 3], m2: [f64; 3], p: [f64; 3], n: [f64; 3]) -> f64 {
    let d = [m2[0] - m1[0], m2[1] - m1[1], m2[2] - m1[2]];
    let w = [p[0] - m1[0], p[1] - m1[1], p[2] - m1[2]];
    let c = [d[1] * w[2] - d[2] * w[1], d[2] * w[0] - d[0] * w[2], d[0] * w[1] - d[1] * w[0]];
    c[0] * n[0] + c[1] * n[1] + c[2] * n[2]
}

fn is_ambiguous(mask: usize, face: &Face) -> bool {
    let s: Vec<bool> = face.corners.iter().map(|&c| mask >> c & 1 == 1).collect();
    s[0] == s[2] && s[1] == s[3] && s[0] != s[1]
}

/// Triangles (as edge-index triples) for one inside mask and one assignment
/// of ambiguous-face decisions (bit `f` set: centre of face `f` is inside).
fn build_case(mask: usize, decisions: usize, faces: &[Face; 6]) -> Vec<[u8; 3]> {
    let inside = |c: usize| mask >> c & 1 == 1;
    let mut next: [Option<usize>; 12] = [None; 12];

    for (fi, face) in faces.iter().enumerate() {
        let cs = face.corners;
        let crossing: Vec<usize> = (0..4)
            .map(|k| edge_between(cs[k], cs[(k + 1) % 4]))
            .filter(|&e| inside(EDGES[e].0) != inside(EDGES[e].1))
            .collect();
        let mut segments: Vec<(usize, usize, usize)> = Vec::new();
        match crossing.len() {
            0 => {}
            2 => segments.push((crossing[0], crossing[1], cs[0])),
            4 => {
                let centre_inside = decisions >> fi & 1 == 1;
                for k in 0..4 {
                    // Cut off the corners whose state differs from the centre.
                    if inside(cs[k]) != centre_inside {
                        let prev = edge_between(cs[(k + 3) % 4], cs[k]);
                        let next_e = edge_between(cs[k], cs[(k + 1) % 4]);
                        segments.push((prev, next_e, cs[k]));
                    }
                }
            }
            n => unreachable!("face with {n} crossings"),
        }
        for (e1, e2, probe) in segments {
            let s = side_of(edge_mid(e1), edge_mid(e2), corner_point(probe), face.normal);
            // Inside corners stay on the right-hand side seen from outside the cell.
            let keep = if inside(probe) { s < 0.0 } else { s > 0.0 };
            let (from, to) = if keep { (e1, e2) } else { (e2, e1) };
            debug_assert!(next[from].is_none());
            next[from] = Some(to);
        }
    }

    let mut visited = [false; 12];
    let mut tris = Vec::new();
    for start in 0..12 {
        if visited[start] || next[start].is_none() {
            continue;
        }
        let mut lp = vec![start];
        visited[start] = true;
        let mut cur = next[start].expect("loop start");
        while cur != start {
            visited[cur] = true;
            lp.push(cur);
            cur = next[cur].expect("open loop in case table");
        }
        // `start` is the smallest edge of the loop, so fans are canonical.
        for k in 1..lp.len() - 1 {
            tris.push([lp[0] as u8, lp[k] as u8, lp[k + 1] as u8]);
        }
    }
    tris
}

struct CaseTable {
    /// Ambiguous face indices for each mask.
    ambiguous: Vec<Vec<u8>>,
    /// `cases[mask * 64 + decisions]`.
    cases: Vec<Vec<[u8; 3]>>,
}

fn case_table() -> &'static CaseTable {
    static TABLE: OnceLock<CaseTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let faces = faces();
        let ambiguous: Vec<Vec<u8>> = (0..256)
            .map(|m| (0..6).filter(|&f| is_ambiguous(m, &faces[f])).map(|f| f as u8).collect())
            .collect();
        let mut cases = Vec::with_capacity(256 * 64);
        for mask in 0..256 {
            for decisions in 0..64 {
                cases.push(build_case(mask, decisions, &faces));
            }
        }
        CaseTable { ambiguous, cases }
    })
}

/// Extracts the `iso` level set of `grid` as a triangle mesh in world
/// coordinates. Returns an empty mesh when no cell straddles `iso`.
pub fn marching_cubes(grid: &VoxelGrid, iso: f64) -> Result<TriangleMesh> {
    if !iso.is_finite() {
        return Err(Error::InvalidInput("iso value must be finite".into()));
    }
    let table = case_table();
    let faces = faces();
    let [nx, ny, nz] = grid.dims();
    let values = grid.values();
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut triangles: Vec<[u32; 3]> = Vec::new();

    if nx < 2 || ny < 2 || nz < 2 {
        return Ok(TriangleMesh::default());
    }

    let inside: Vec<bool> = values.iter().map(|&v| v > iso).collect();
    // Vertex slot per (grid point, axis) edge; u32::MAX while unassigned.
    let mut edge_vertex = vec![u32::MAX; 3 * values.len()];
    let offsets: [usize; 8] = std::array::from_fn(|c| {
        let o = corner_offset(c);
        o[0] + nx * (o[1] + ny * o[2])
    });
    let spacing = grid.spacing();

    let mut corner_vals = [0.0f64; 8];
    let mut corner_idx = [0usize; 8];
    for k in 0..nz - 1 {
        for j in 0..ny - 1 {
            let row = grid.index(0, j, k);
            for i in 0..nx - 1 {
                let base = row + i;
                let mut mask = 0usize;
                for (c, off) in offsets.iter().enumerate() {
                    if inside[base + off] {
                        mask |= 1 << c;
                    }
                }
                if mask == 0 || mask == 255 {
                    continue;
                }
                for c in 0..8 {
                    corner_idx[c] = base + offsets[c];
                    corner_vals[c] = values[corner_idx[c]];
                }
                let mut decisions = 0usize;
                for &f in &table.ambiguous[mask] {
                    let cs = faces[f as usize].corners;
                    let avg = cs.iter().map(|&c| corner_vals[c]).sum::<f64>() * 0.25;
                    let centre_inside = if avg == iso {
                        // Tie: join the diagonal through the first face corner.
                        mask >> cs[0] & 1 == 1
                    } else {
                        avg > iso
                    };
                    if centre_inside {
                        decisions |= 1 << f;
                    }
                }
                for tri in &table.cases[mask * 64 + decisions] {
                    let mut out = [0u32; 3];
                    for (slot, &e) in out.iter_mut().zip(tri) {
                        let (c0, c1, axis) = EDGES[e as usize];
                        let key = corner_idx[c0] * 3 + axis;
                        if edge_vertex[key] == u32::MAX {
                            let (v0, v1) = (corner_vals[c0], corner_vals[c1]);
                            let t = (iso - v0) / (v1 - v0);
                            let o = corner_offset(c0);
                            let mut p = grid.point(i + o[0], j + o[1], k + o[2]);
                            p[axis] += t * spacing[axis];
                            edge_vertex[key] = vertices.len() as u32;
                            vertices.push(p);
                        }
                        *slot = edge_vertex[key];
                    }
                    triangles.push(out);
                }
            }
        }
    }

    Ok(TriangleMesh {
        vertices,
        triangles,
        ..Default::default()
    })
}
