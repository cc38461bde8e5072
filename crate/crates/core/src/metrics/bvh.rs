//! Bounding-volume hierarchy for exact closest-point queries on triangles.

use crate::error::{Error, Result};
use crate::geometry::mesh::{Aabb, TriangleMesh, Vec3};

/// Largest number of triangles stored in one leaf.
pub const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
enum NodeKind {
    Leaf { start: usize, count: usize },
    Inner { left: usize, right: usize },
}

#[derive(Debug, Clone)]
struct Node {
    bounds: Aabb,
    kind: NodeKind,
}

/// Immutable BVH over a mesh's triangles; safe to query concurrently.
#[derive(Debug, Clone)]
pub struct BvhIndex {
    nodes: Vec<Node>,
    /// Triangle corners in leaf order.
    tris: Vec<[Vec3; 3]>,
    /// Original triangle index for each entry of `tris`.
    tri_ids: Vec<u32>,
}

/// Result of a closest-point query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosestHit {
    pub point: Vec3,
    pub distance: f64,
    pub triangle: usize,
}

fn tri_bounds(t: &[Vec3; 3]) -> Aabb {
    let mut b = Aabb::empty();
    t.iter().for_each(|p| b.grow(p));
    b
}

impl BvhIndex {
    pub fn new(mesh: &TriangleMesh) -> Result<Self> {
        if mesh.triangles.is_empty() {
            return Err(Error::InvalidInput("cannot index a mesh without triangles".into()));
        }
        mesh.validate()?;
        let tris: Vec<[Vec3; 3]> = (0..mesh.triangles.len()).map(|i| mesh.triangle(i)).collect();
        let centroids: Vec<Vec3> = tris.iter().map(|t| (t[0] + t[1] + t[2]) / 3.0).collect();
        let mut order: Vec<u32> = (0..tris.len() as u32).collect();
        let mut nodes = Vec::with_capacity(2 * tris.len() / LEAF_SIZE + 1);
        build(&tris, &centroids, &mut order, 0, &mut nodes);
        Ok(BvhIndex {
            nodes,
            tris: order.iter().map(|&i| tris[i as usize]).collect(),
            tri_ids: order,
        })
    }

    pub fn triangle_count(&self) -> usize {
        self.tris.len()
    }

    /// Exact closest point on the indexed surface.
    pub fn closest_point(&self, q: &Vec3) -> ClosestHit {
        let mut best = ClosestHit {
            point: Vec3::zeros(),
            distance: f64::INFINITY,
            triangle: usize::MAX,
        };
        let mut best_d2 = f64::INFINITY;
        let mut stack: Vec<(usize, f64)> = vec![(0, self.nodes[0].bounds.distance_squared(q))];
        while let Some((ni, box_d2)) = stack.pop() {
            if box_d2 > best_d2 {
                continue;
            }
            match self.nodes[ni].kind {
                NodeKind::Leaf { start, count } => {
                    for k in start..start + count {
                        let p = closest_point_on_triangle(q, &self.tris[k]);
                        let d2 = (p - q).norm_squared();
                        if d2 < best_d2 {
                            best_d2 = d2;
                            best.point = p;
                            best.triangle = self.tri_ids[k] as usize;
                        }
                    }
                }
                NodeKind::Inner { left, right } => {
                    let dl = self.nodes[left].bounds.distance_squared(q);
                    let dr = self.nodes[right].bounds.distance_squared(q);
                    // Push the farther child first so the nearer one is popped next.
                    if dl <= dr {
                        stack.push((right, dr));
                        stack.push((left, dl));
                    } else {
                        stack.push((left, dl));
                        stack.push((right, dr));
                    }
                }
            }
        }
        best.distance = best_d2.sqrt();
        best
    }

    /// Checks the structural invariants; used by tests.
    pub fn check_invariants(&self) -> bool {
        let mut seen = vec![0u32; self.tris.len()];
        for node in &self.nodes {
            match node.kind {
                NodeKind::Leaf { start, count } => {
                    if count > LEAF_SIZE {
                        return false;
                    }
                    for k in start..start + count {
                        seen[k] += 1;
                        if !node.bounds.contains(&tri_bounds(&self.tris[k])) {
                            return false;
                        }
                    }
                }
                NodeKind::Inner { left, right } => {
                    if !node.bounds.contains(&self.nodes[left].bounds)
                        || !node.bounds.contains(&self.nodes[right].bounds)
                    {
                        return false;
                    }
                }
            }
        }
        seen.iter().all(|&c| c == 1)
    }
}

fn build(tris: &[[Vec3; 3]], centroids: &[Vec3], order: &mut [u32], offset: usize, nodes: &mut Vec<Node>) -> usize {
    let mut bounds = Aabb::empty();
    let mut cbounds = Aabb::empty();
    for &i in order.iter() {
        bounds = bounds.merge(&tri_bounds(&tris[i as usize]));
        cbounds.grow(&centroids[i as usize]);
    }
    let id = nodes.len();
    if order.len() <= LEAF_SIZE {
        nodes.push(Node {
            bounds,
            kind: NodeKind::Leaf {
                start: offset,
                count: order.len(),
            },
        });
        return id;
    }
    nodes.push(Node {
        bounds,
        kind: NodeKind::Leaf { start: 0, count: 0 },
    });
    let axis = cbounds.extent().imax();
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        centroids[a as usize][axis]
            .total_cmp(&centroids[b as usize][axis])
            .then(a.cmp(&b))
    });
    let (lo, hi) = order.split_at_mut(mid);
    let left = build(tris, centroids, lo, offset, nodes);
    let right = build(tris, centroids, hi, offset + mid, nodes);
    nodes[id].kind = NodeKind::Inner { left, right };
    id
}

/// Closest point to `p` on triangle `t` (Voronoi-region walk).
pub fn closest_point_on_triangle(p: &Vec3, t: &[Vec3; 3]) -> Vec3 {
    let (a, b, c) = (t[0], t[1], t[2]);
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regions_of_a_triangle() {
        let t = [Vec3::zeros(), Vec3::x(), Vec3::y()];
        let h = closest_point_on_triangle(&Vec3::new(0.2, 0.2, 1.0), &t);
        assert!((h - Vec3::new(0.2, 0.2, 0.0)).norm() < 1e-15);
        assert_eq!(closest_point_on_triangle(&Vec3::new(-1.0, -1.0, 0.0), &t), Vec3::zeros());
        assert_eq!(closest_point_on_triangle(&Vec3::new(0.5, -1.0, 0.0), &t), Vec3::new(0.5, 0.0, 0.0));
        let h = closest_point_on_triangle(&Vec3::new(1.0, 1.0, 0.0), &t);
        assert!((h - Vec3::new(0.5, 0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn empty_mesh_rejected() {
        assert!(BvhIndex::new(&TriangleMesh::default()).is_err());
    }
}
