//! Reconstructors: image → occupancy volume.
//!
//! Two implementations are provided. [`OracleReconstructor`] looks up the
//! true geometry of known images and is exact up to voxelization.
//! [`ToyRegressor`] is a trainable linear-logistic model, small enough to
//! train in seconds and biased toward the poses it was trained on.

mod dataset;
mod face;
mod oracle;
mod toy;

pub use dataset::{
    read_synthetic_manifest, verify_synthetic_dataset, write_synthetic_dataset, SyntheticRecord, SYNTH_MANIFEST,
};
pub use face::{
    generate_synthetic_face, photograph_face, render_face_photo, SyntheticFaceSpec, FACE_LONGITUDES, FACE_RINGS,
};
pub use oracle::{oracle_reconstruct, OracleReconstructor};
pub use toy::{
    read_toy, read_toy_file, toy_fit, toy_reconstruct, write_toy, write_toy_file, EpochStats,
    FitConfig, LrSchedule, ToyRegressor, TOY_MAGIC,
};

use crate::error::Result;
use crate::geometry::{marching_cubes, voxelize, Aabb, TriangleMesh, VoxelGrid};
use crate::render::Image;

/// Iso level at which reconstructed volumes are turned into meshes.
pub const ISO: f64 = 0.5;

/// Cubic, cell-centred output layout shared by a reconstructor and its
/// training targets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconGrid {
    pub n: usize,
    pub bounds: Aabb,
}

impl ReconGrid {
    pub fn new(n: usize, half_extent: f64) -> Self {
        ReconGrid {
            n,
            bounds: Aabb::cube(half_extent),
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.n; 3]
    }

    /// Empty grid with this layout.
    pub fn template(&self) -> Result<VoxelGrid> {
        VoxelGrid::cell_centered(self.n, &self.bounds)
    }

    pub fn voxelize(&self, mesh: &TriangleMesh) -> Result<VoxelGrid> {
        voxelize(mesh, self.dims(), &self.bounds)
    }
}

/// Marching cubes at [`ISO`] on the grid padded with empty cells, so the
/// surface is closed even where occupancy reaches the grid boundary.
pub fn extract_surface(grid: &VoxelGrid) -> Result<TriangleMesh> {
    marching_cubes(&grid.padded(0.0), ISO)
}

/// Single-image reconstructor. Implementations must be deterministic for
/// fixed parameters.
pub trait Reconstructor: Sync {
    fn reconstruct(&self, image: &Image) -> Result<VoxelGrid>;

    /// Output layout.
    fn grid(&self) -> ReconGrid;

    /// Reconstructs an image the caller rendered from `truth`. Learned
    /// models ignore `truth`; the oracle uses it in place of a registry
    /// lookup.
    fn reconstruct_rendered(&self, image: &Image, truth: &TriangleMesh) -> Result<VoxelGrid> {
        let _ = truth;
        self.reconstruct(image)
    }
}

/// A reconstructor whose parameters can be fitted.
pub trait Trainable: Reconstructor {
    /// One gradient step on `batch`; returns the batch loss before the step.
    fn fit_step(&mut self, batch: &[(&Image, &VoxelGrid)], lr: f64) -> Result<f64>;

    /// Mean loss over `data` without updating.
    fn loss(&self, data: &[(&Image, &VoxelGrid)]) -> Result<f64>;

    fn snapshot(&self) -> Vec<f64>;

    fn restore(&mut self, params: &[f64]) -> Result<()>;
}
