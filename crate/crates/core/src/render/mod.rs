//! Software rendering of novel views: emissive vertex colours in front of
//! the source image mapped onto the face backplane.

mod camera;
mod image;
mod raster;

pub use camera::Camera;
pub use image::Image;
pub use raster::{rasterize, RenderedView, SceneMesh, NO_MESH};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::mesh::{mesh_bounds, Aabb, TriangleMesh, Vec3};
use crate::pose::FaceFrame;
use crate::viewgen::{apply_transform, ViewSchedule};

/// Samples `source` at the projection of every vertex (bilinear, edge
/// clamped) and stores the result as vertex colours.
pub fn project_colors(mesh: &TriangleMesh, source: &Image, camera: &Camera) -> Result<TriangleMesh> {
    camera.validate()?;
    let colors = mesh
        .vertices
        .iter()
        .map(|v| {
            let [u, w] = camera.to_uv(v);
            source.sample_bilinear(u * source.width() as f64 - 0.5, w * source.height() as f64 - 0.5)
        })
        .collect();
    let mut out = mesh.clone();
    out.vertex_colors = Some(colors);
    Ok(out)
}

/// Textured background quad together with its texture.
#[derive(Debug, Clone, PartialEq)]
pub struct Backplane {
    pub mesh: TriangleMesh,
    pub texture: Image,
}

impl Backplane {
    pub fn scene_mesh(&self) -> SceneMesh<'_> {
        SceneMesh::textured(&self.mesh, &self.texture)
    }
}

/// Gaze directions closer than this to the image plane fall back to a
/// camera-facing quad.
const MIN_GAZE_Z: f64 = 0.25;

/// Builds the backplane: a quad with normal `frame.gaze`, placed behind the
/// rear extent of `bounds` along the gaze and covering the camera view. The
/// texture coordinates are the orthographic projection of each corner into
/// `source`, so the visible background is the source image itself.
pub fn make_backplane(frame: &FaceFrame, bounds: &Aabb, source: &Image, camera: &Camera) -> Result<Backplane> {
    camera.validate()?;
    let mut normal = frame.gaze.normalize();
    if !normal.iter().all(|c| c.is_finite()) {
        return Err(Error::InvalidInput("frame gaze is not a direction".into()));
    }
    if normal.z < MIN_GAZE_Z {
        normal = if normal.z.abs() < MIN_GAZE_Z { Vec3::z() } else { -normal };
    }
    let margin = 1e-3 * bounds.diagonal().max(1e-3);
    let rear = bounds
        .corners()
        .iter()
        .map(|c| (c - frame.centroid).dot(&normal))
        .fold(f64::INFINITY, f64::min);
    let anchor = frame.centroid + normal * (rear - margin);

    let pad = 1.05;
    let (cx, cy) = (camera.center[0], camera.center[1]);
    let (hw, hh) = (camera.half_extent[0] * pad, camera.half_extent[1] * pad);
    let corners2 = [(cx - hw, cy - hh), (cx + hw, cy - hh), (cx + hw, cy + hh), (cx - hw, cy + hh)];
    let vertices: Vec<Vec3> = corners2
        .iter()
        .map(|&(x, y)| {
            let z = anchor.z - (normal.x * (x - anchor.x) + normal.y * (y - anchor.y)) / normal.z;
            Vec3::new(x, y, z)
        })
        .collect();
    let texcoords = vertices.iter().map(|v| camera.to_uv(v)).collect();
    let mut mesh = TriangleMesh::new(vertices, vec![[0, 1, 2], [0, 2, 3]])?;
    mesh.texcoords = Some(texcoords);
    let mesh = project_colors(&mesh, source, camera)?;
    Ok(Backplane {
        mesh,
        texture: source.clone(),
    })
}

/// Backplane used for a whole sweep: behind every vertex of every
/// scheduled view, so the rotating face never passes through it.
pub fn sweep_backplane(
    mesh: &TriangleMesh,
    frame: &FaceFrame,
    source: &Image,
    schedule: &ViewSchedule,
    camera: &Camera,
) -> Result<Backplane> {
    let mut bounds = mesh_bounds(mesh)?;
    for e in &schedule.entries {
        for c in bounds.corners() {
            bounds.grow(&e.transform.apply_point(&c));
        }
    }
    make_backplane(frame, &bounds, source, camera)
}

/// Renders `mesh` at every schedule entry in front of a static backplane.
/// Output order follows the schedule.
pub fn render_sweep(
    mesh: &TriangleMesh,
    frame: &FaceFrame,
    source: &Image,
    schedule: &ViewSchedule,
    camera: &Camera,
) -> Result<Vec<RenderedView>> {
    if schedule.is_empty() {
        return Ok(Vec::new());
    }
    let backplane = sweep_backplane(mesh, frame, source, schedule, camera)?;
    schedule
        .entries
        .par_iter()
        .map(|entry| {
            let moved = apply_transform(mesh, &entry.transform);
            let mut view = rasterize(&[SceneMesh::colored(&moved), backplane.scene_mesh()], camera)?;
            view.transform = entry.transform;
            view.yaw_deg = entry.yaw_deg;
            view.pitch_deg = entry.pitch_deg;
            Ok(view)
        })
        .collect()
}
