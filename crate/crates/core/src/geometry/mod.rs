//! Occupancy volumes, iso-surface extraction, voxelization and basic mesh
//! measurements.

pub mod grid;
pub mod kdtree;
pub mod marching_cubes;
pub mod mesh;
pub mod shapes;
pub mod voxelize;

pub use grid::VoxelGrid;
pub use marching_cubes::marching_cubes;
pub use mesh::{
    mesh_area, mesh_bounds, mesh_centroid, Aabb, TriangleMesh, Vec3, EYE_OUTER_LEFT, EYE_OUTER_RIGHT, NOSE_TIP,
};
pub use shapes::{icosphere, sphere_grid, unit_cube};
pub use voxelize::voxelize;
