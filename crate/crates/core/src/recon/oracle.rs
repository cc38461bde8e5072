//! Registry-backed oracle: perfect geometry for every known image.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::{TriangleMesh, VoxelGrid};
use crate::recon::{ReconGrid, Reconstructor};
use crate::render::Image;

/// Voxelizes the mesh registered under `image`'s content id.
pub fn oracle_reconstruct(
    image: &Image,
    registry: &HashMap<String, TriangleMesh>,
    grid: &ReconGrid,
) -> Result<VoxelGrid> {
    let id = image.content_id();
    let mesh = registry.get(&id).ok_or(Error::UnknownImage(id))?;
    grid.voxelize(mesh)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReconstructor {
    grid: ReconGrid,
    registry: HashMap<String, TriangleMesh>,
}

impl OracleReconstructor {
    pub fn new(grid: ReconGrid) -> Self {
        OracleReconstructor {
            grid,
            registry: HashMap::new(),
        }
    }

    /// Registers the geometry shown in `image`; returns the image id.
    pub fn register(&mut self, image: &Image, mesh: TriangleMesh) -> String {
        let id = image.content_id();
        self.registry.insert(id.clone(), mesh);
        id
    }

    pub fn registry(&self) -> &HashMap<String, TriangleMesh> {
        &self.registry
    }
}

impl Reconstructor for OracleReconstructor {
    fn reconstruct(&self, image: &Image) -> Result<VoxelGrid> {
        oracle_reconstruct(image, &self.registry, &self.grid)
    }

    fn grid(&self) -> ReconGrid {
        self.grid
    }

    fn reconstruct_rendered(&self, _image: &Image, truth: &TriangleMesh) -> Result<VoxelGrid> {
        self.grid.voxelize(truth)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{icosphere, Vec3};

    #[test]
    fn unknown_and_distinct_images() {
        let mut o = OracleReconstructor::new(ReconGrid::new(16, 1.1));
        let a = Image::filled(4, 4, [0.2; 3]).unwrap();
        let b = Image::filled(4, 4, [0.6; 3]).unwrap();
        assert!(matches!(o.reconstruct(&a), Err(Error::UnknownImage(_))));
        o.register(&a, icosphere(Vec3::zeros(), 0.5, 2));
        o.register(&b, icosphere(Vec3::zeros(), 0.8, 2));
        let (ga, gb) = (o.reconstruct(&a).unwrap(), o.reconstruct(&b).unwrap());
        assert_ne!(ga, gb);
        assert!(ga.occupied_count(0.5) < gb.occupied_count(0.5));
    }
}
