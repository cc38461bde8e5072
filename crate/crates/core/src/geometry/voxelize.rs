//! Solid voxelization by ray parity.
//!
//! For each axis, a ray is cast in the positive direction from every cell
//! centre; the cell is inside along that axis when the ray crosses the
//! surface an odd number of times. A cell is occupied when at least two of
//! the three axes agree. Intersections are computed once per grid line, with
//! a half-open edge rule so that rays through shared edges or vertices count
//! one hit.

use crate::error::{Error, Result};
use crate::geometry::grid::VoxelGrid;
use crate::geometry::mesh::{mesh_area, Aabb, TriangleMesh};

/// Half-open ownership rule for a counter-clockwise edge `(dx, dy)`.
#[inline]
fn owns_edge(dx: f64, dy: f64) -> bool {
    dy > 0.0 || (dy == 0.0 && dx < 0.0)
}

/// Edge function of `a → b` at `(su, sv)`, evaluated from the
/// lexicographically smaller endpoint so both triangles sharing an edge get
/// exactly opposite values. It is exactly zero at either endpoint.
#[inline]
fn edge_value(a: [f64; 2], b: [f64; 2], su: f64, sv: f64) -> f64 {
    let f = |p: [f64; 2], q: [f64; 2]| (q[0] - p[0]) * (sv - p[1]) - (q[1] - p[1]) * (su - p[0]);
    if (a[0], a[1]) <= (b[0], b[1]) {
        f(a, b)
    } else {
        -f(b, a)
    }
}

/// Per-line crossing coordinates along `axis`. Lines are indexed by the two
/// remaining axes, `(axis + 1) % 3` fastest.
fn line_crossings(mesh: &TriangleMesh, grid: &VoxelGrid, axis: usize) -> Vec<Vec<f64>> {
    let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
    let dims = grid.dims();
    let (nu, nv) = (dims[u], dims[v]);
    let origin = grid.origin();
    let spacing = grid.spacing();
    let mut lines: Vec<Vec<f64>> = vec![Vec::new(); nu * nv];

    for t in 0..mesh.triangles.len() {
        let tri = mesh.triangle(t);
        let mut p = [[0.0f64; 2]; 3];
        for k in 0..3 {
            p[k] = [tri[k][u], tri[k][v]];
        }
        let area = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]);
        if area == 0.0 {
            continue;
        }
        let order: [usize; 3] = if area > 0.0 { [0, 1, 2] } else { [0, 2, 1] };
        let q = [p[order[0]], p[order[1]], p[order[2]]];
        let depth = [tri[order[0]][axis], tri[order[1]][axis], tri[order[2]][axis]];
        let area = area.abs();

        let lo_u = q.iter().map(|a| a[0]).fold(f64::INFINITY, f64::min);
        let hi_u = q.iter().map(|a| a[0]).fold(f64::NEG_INFINITY, f64::max);
        let lo_v = q.iter().map(|a| a[1]).fold(f64::INFINITY, f64::min);
        let hi_v = q.iter().map(|a| a[1]).fold(f64::NEG_INFINITY, f64::max);
        // One extra line on each side: a vertex lying exactly on a line can
        // round out of the range, and the edge test decides anyway.
        let iu0 = ((lo_u - origin[u]) / spacing[u]).ceil().max(1.0) as usize - 1;
        let iu1 = ((hi_u - origin[u]) / spacing[u]).floor() + 1.0;
        let iv0 = ((lo_v - origin[v]) / spacing[v]).ceil().max(1.0) as usize - 1;
        let iv1 = ((hi_v - origin[v]) / spacing[v]).floor() + 1.0;
        if iu1 < 0.0 || iv1 < 0.0 {
            continue;
        }
        let iu1 = (iu1 as usize).min(nu - 1);
        let iv1 = (iv1 as usize).min(nv - 1);

        for iv in iv0..=iv1 {
            let sv = origin[v] + iv as f64 * spacing[v];
            for iu in iu0..=iu1 {
                let su = origin[u] + iu as f64 * spacing[u];
                let mut w = [0.0f64; 3];
                let mut hit = true;
                for e in 0..3 {
                    let a = q[(e + 1) % 3];
                    let b = q[(e + 2) % 3];
                    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
                    let we = edge_value(a, b, su, sv);
                    if we < 0.0 || (we == 0.0 && !owns_edge(dx, dy)) {
                        hit = false;
                        break;
                    }
                    w[e] = we;
                }
                if hit {
                    let d = (w[0] * depth[0] + w[1] * depth[1] + w[2] * depth[2]) / area;
                    lines[iu + nu * iv].push(d);
                }
            }
        }
    }
    lines
}

/// Voxelizes a closed mesh into a binary occupancy grid of `dims` cells
/// tiling `bounds`; samples sit at cell centres.
pub fn voxelize(mesh: &TriangleMesh, dims: [usize; 3], bounds: &Aabb) -> Result<VoxelGrid> {
    mesh.validate()?;
    if mesh.triangles.is_empty() || mesh_area(mesh)? == 0.0 {
        return Err(Error::InvalidInput("cannot voxelize an empty or degenerate mesh".into()));
    }
    if dims.contains(&0) {
        return Err(Error::InvalidInput("voxel dims must be positive".into()));
    }
    let extent = bounds.extent();
    if (0..3).any(|k| !(extent[k] > 0.0)) {
        return Err(Error::InvalidInput("voxel bounds must have positive extent".into()));
    }
    let spacing = extent.component_div(&nalgebra::Vector3::new(
        dims[0] as f64,
        dims[1] as f64,
        dims[2] as f64,
    ));
    let origin = bounds.min + spacing * 0.5;
    let mut grid = VoxelGrid::filled(dims, origin, spacing, 0.0)?;

    let mut votes = vec![0u8; grid.len()];
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        let mut lines = line_crossings(mesh, &grid, axis);
        for (line_idx, hits) in lines.iter_mut().enumerate() {
            if hits.is_empty() {
                continue;
            }
            hits.sort_by(f64::total_cmp);
            let iu = line_idx % dims[u];
            let iv = line_idx / dims[u];
            let mut passed = 0usize;
            for ia in 0..dims[axis] {
                let s = origin[axis] + ia as f64 * spacing[axis];
                while passed < hits.len() && hits[passed] <= s {
                    passed += 1;
                }
                if (hits.len() - passed) % 2 == 1 {
                    let mut ijk = [0usize; 3];
                    ijk[axis] = ia;
                    ijk[u] = iu;
                    ijk[v] = iv;
                    votes[grid.index(ijk[0], ijk[1], ijk[2])] += 1;
                }
            }
        }
    }

    let mut any = false;
    for (idx, &n) in votes.iter().enumerate() {
        if n >= 2 {
            any = true;
            let i = idx % dims[0];
            let j = (idx / dims[0]) % dims[1];
            let k = idx / (dims[0] * dims[1]);
            grid.set(i, j, k, 1.0);
        }
    }
    if !any {
        return Err(Error::InvalidInput("mesh encloses no voxel centre".into()));
    }
    Ok(grid)
}
