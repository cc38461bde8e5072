//! Closed reference shapes used by fixtures and demos.

use std::collections::HashMap;

use crate::error::Result;
use crate::geometry::grid::VoxelGrid;
use crate::geometry::mesh::{Aabb, TriangleMesh, Vec3};

/// Axis-aligned unit cube `[0, 1]³`, outward winding.
pub fn unit_cube() -> TriangleMesh {
    let vertices: Vec<Vec3> = (0..8)
        .map(|c| Vec3::new((c & 1) as f64, (c >> 1 & 1) as f64, (c >> 2 & 1) as f64))
        .collect();
    let triangles = vec![
        [0, 2, 1], [1, 2, 3], // z = 0
        [4, 5, 6], [5, 7, 6], // z = 1
        [0, 1, 4], [1, 5, 4], // y = 0
        [2, 6, 3], [3, 6, 7], // y = 1
        [0, 4, 2], [2, 4, 6], // x = 0
        [1, 3, 5], [3, 7, 5], // x = 1
    ];
    TriangleMesh {
        vertices,
        triangles,
        ..Default::default()
    }
}

/// Subdivided icosahedron projected onto a sphere.
pub fn icosphere(center: Vec3, radius: f64, subdivisions: usize) -> TriangleMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        (-1.0, t, 0.0), (1.0, t, 0.0), (-1.0, -t, 0.0), (1.0, -t, 0.0),
        (0.0, -1.0, t), (0.0, 1.0, t), (0.0, -1.0, -t), (0.0, 1.0, -t),
        (t, 0.0, -1.0), (t, 0.0, 1.0), (-t, 0.0, -1.0), (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut mids: HashMap<(u32, u32), u32> = HashMap::new();
        let mut midpoint = |a: u32, b: u32, verts: &mut Vec<Vec3>| -> u32 {
            let key = (a.min(b), a.max(b));
            *mids.entry(key).or_insert_with(|| {
                verts.push(((verts[a as usize] + verts[b as usize]) * 0.5).normalize());
                (verts.len() - 1) as u32
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    for v in &mut vertices {
        *v = center + *v * radius;
    }
    TriangleMesh {
        vertices,
        triangles: faces,
        ..Default::default()
    }
}

/// Occupancy of a ball of `radius` at the origin, sampled at the centres of
/// an `n³` grid over `[-half, half]³`. Values ramp linearly across two cells
/// on either side of the sphere, so the 0.5 iso-surface is the sphere up to
/// interpolation between samples.
pub fn sphere_grid(n: usize, radius: f64, half: f64) -> Result<VoxelGrid> {
    let template = VoxelGrid::cell_centered(n, &Aabb::cube(half))?;
    let h = template.spacing().x;
    VoxelGrid::from_fn(template.dims(), template.origin(), template.spacing(), |p| {
        0.5 + (radius - p.norm()) / (4.0 * h)
    })
}
