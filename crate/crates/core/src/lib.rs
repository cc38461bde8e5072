//! # boot3d
//!
//! Self-supervised bootstrap for single-image 3D face reconstruction.
//!
//! A reconstructor that works well on frontal images is used to synthesize
//! its own training data for other poses:
//!
//! 1. reconstruct a frontal image into an occupancy volume and extract a mesh
//!    ([`geometry::marching_cubes`]);
//! 2. estimate the face frame from the vertex covariance
//!    ([`pose::estimate_face_frame`]) and rotate the mesh through a
//!    constrained yaw/pitch schedule ([`viewgen::build_schedule`]);
//! 3. render each rotated mesh with emissive vertex colours in front of the
//!    original image mapped onto the backplane ([`render::render_sweep`]);
//! 4. fine-tune the reconstructor on the rendered image / voxelized mesh
//!    pairs ([`bootstrap::fine_tune`]).
//!
//! Reconstructions are scored with the closest-point NME after ICP alignment
//! ([`metrics`]). The [`recon`] module provides a perfect oracle
//! reconstructor, a procedural face generator and a small linear regressor
//! that is trainable in seconds and exhibits frontal-pose bias.

pub mod bootstrap;
pub mod config;
pub mod error;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod pose;
pub mod recon;
pub mod render;
pub mod viewgen;

pub use error::{Error, Result};
