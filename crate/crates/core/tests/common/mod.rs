//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use boot3d::geometry::{TriangleMesh, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Undirected edge → number of triangles using it.
pub fn edge_counts(mesh: &TriangleMesh) -> HashMap<(u32, u32), usize> {
    let mut m = HashMap::new();
    for t in &mesh.triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            *m.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    m
}

pub fn is_watertight(mesh: &TriangleMesh) -> bool {
    !mesh.triangles.is_empty() && edge_counts(mesh).values().all(|&c| c == 2)
}

/// Closest point on a segment.
fn on_segment(p: &Vec3, a: &Vec3, b: &Vec3) -> Vec3 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return *a;
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    a + ab * t
}

/// Closest point on a triangle by plane projection with an inside test,
/// falling back to the three edges.
pub fn brute_triangle_point(p: &Vec3, t: &[Vec3; 3]) -> Vec3 {
    let n = (t[1] - t[0]).cross(&(t[2] - t[0]));
    if n.norm_squared() > 0.0 {
        let q = p - n * ((p - t[0]).dot(&n) / n.norm_squared());
        let inside = (0..3).all(|k| (t[(k + 1) % 3] - t[k]).cross(&(q - t[k])).dot(&n) >= 0.0);
        if inside {
            return q;
        }
    }
    let cands = [on_segment(p, &t[0], &t[1]), on_segment(p, &t[1], &t[2]), on_segment(p, &t[2], &t[0])];
    *cands
        .iter()
        .min_by(|a, b| (*a - p).norm().total_cmp(&(*b - p).norm()))
        .unwrap()
}

/// Distance to the nearest point of any triangle, by a full scan.
pub fn brute_distance(p: &Vec3, mesh: &TriangleMesh) -> f64 {
    (0..mesh.triangles.len())
        .map(|i| (brute_triangle_point(p, &mesh.triangle(i)) - p).norm())
        .fold(f64::INFINITY, f64::min)
}

/// Double-loop mean distance from pred vertices to the gt surface over d.
pub fn brute_nme(pred: &TriangleMesh, gt: &TriangleMesh, d: f64) -> f64 {
    pred.vertices.iter().map(|v| brute_distance(v, gt)).sum::<f64>() / pred.vertices.len() as f64 / d
}

/// Random triangle soup inside the unit cube.
pub fn random_soup(seed: u64, vertices: usize, triangles: usize) -> TriangleMesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<Vec3> = (0..vertices)
        .map(|_| Vec3::new(rng.random(), rng.random(), rng.random()))
        .collect();
    let mut t = Vec::with_capacity(triangles);
    while t.len() < triangles {
        let a = rng.random_range(0..vertices as u32);
        let b = rng.random_range(0..vertices as u32);
        let c = rng.random_range(0..vertices as u32);
        if a != b && b != c && a != c {
            t.push([a, b, c]);
        }
    }
    TriangleMesh::new(v, t).unwrap()
}

/// Angle between two directions in degrees.
pub fn angle_deg(a: &Vec3, b: &Vec3) -> f64 {
    (a.dot(b) / (a.norm() * b.norm())).clamp(-1.0, 1.0).acos().to_degrees()
}

/// Rotation angle of a 3×3 rotation matrix in degrees.
pub fn rotation_angle_deg(r: &nalgebra::Matrix3<f64>) -> f64 {
    ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos().to_degrees()
}

/// Random rotation from a random unit axis and an angle in `[0, max_deg]`.
pub fn random_rotation(rng: &mut ChaCha8Rng, max_deg: f64) -> nalgebra::Matrix3<f64> {
    let axis = loop {
        let a = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        if a.norm() > 0.1 && a.norm() <= 1.0 {
            break a.normalize();
        }
    };
    let angle = rng.random_range(0.0..=max_deg).to_radians();
    *nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle).matrix()
}
