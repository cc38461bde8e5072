use crate::error::{Error, Result};
use crate::geometry::kdtree::KdTree;
use crate::geometry::mesh::{mesh_bounds, TriangleMesh, Vec3};

/// Mean distance from each mirrored vertex to its nearest original vertex,
/// divided by the bounding-box diagonal. Zero for an exact mirror plane.
pub fn symmetry_score(mesh: &TriangleMesh, plane_point: &Vec3, plane_normal: &Vec3) -> Result<f64> {
    if mesh.vertices.is_empty() {
        return Err(Error::InvalidInput("symmetry score of an empty mesh".into()));
    }
    let norm = plane_normal.norm();
    if !(norm > 0.0) {
        return Err(Error::InvalidInput("plane normal must be non-zero".into()));
    }
    let n = plane_normal / norm;
    let diag = mesh_bounds(mesh)?.diagonal();
    if diag == 0.0 {
        return Ok(0.0);
    }
    let tree = KdTree::new(&mesh.vertices);
    let total: f64 = mesh
        .vertices
        .iter()
        .map(|v| {
            let mirrored = v - n * (2.0 * (v - plane_point).dot(&n));
            tree.nearest(&mirrored).map(|(_, d2)| d2.sqrt()).unwrap_or(0.0)
        })
        .sum();
    Ok(total / mesh.vertices.len() as f64 / diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes::icosphere;

    #[test]
    fn sphere_is_symmetric_about_coordinate_planes() {
        let s = icosphere(Vec3::zeros(), 1.0, 3);
        for n in [Vec3::x(), Vec3::y(), Vec3::z()] {
            assert!(symmetry_score(&s, &Vec3::zeros(), &n).unwrap() < 1e-9);
        }
    }

    #[test]
    fn empty_mesh_rejected() {
        assert!(symmetry_score(&TriangleMesh::default(), &Vec3::zeros(), &Vec3::x()).is_err());
    }
}
