//! Z-buffered triangle rasterization with emissive shading.

use crate::error::{Error, Result};
use crate::geometry::mesh::TriangleMesh;
use crate::render::camera::Camera;
use crate::render::image::Image;
use crate::viewgen::RigidTransform;

/// A mesh to draw. Textured meshes sample `texture` at their texture
/// coordinates; others interpolate vertex colours.
#[derive(Debug, Clone, Copy)]
pub struct SceneMesh<'a> {
    pub mesh: &'a TriangleMesh,
    pub texture: Option<&'a Image>,
}

impl<'a> SceneMesh<'a> {
    pub fn colored(mesh: &'a TriangleMesh) -> Self {
        SceneMesh { mesh, texture: None }
    }

    pub fn textured(mesh: &'a TriangleMesh, texture: &'a Image) -> Self {
        SceneMesh {
            mesh,
            texture: Some(texture),
        }
    }
}

/// Sentinel in [`RenderedView::mesh_id`] for uncovered pixels.
pub const NO_MESH: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedView {
    pub image: Image,
    /// Per-pixel depth, `+∞` where nothing was drawn.
    pub depth: Vec<f64>,
    /// Index into the scene of the visible mesh, or [`NO_MESH`].
    pub mesh_id: Vec<u32>,
    pub transform: RigidTransform,
    pub yaw_deg: f64,
    pub pitch_deg: f64,
}

impl RenderedView {
    pub fn coverage(&self, scene_index: u32) -> usize {
        self.mesh_id.iter().filter(|&&m| m == scene_index).count()
    }
}

/// Half-open ownership of a counter-clockwise edge, so pixels centred on an
/// edge shared by two triangles are drawn once.
#[inline]
fn owns_edge(dx: f64, dy: f64) -> bool {
    dy > 0.0 || (dy == 0.0 && dx < 0.0)
}

/// Edge function of the directed edge `a → b` at `(sx, sy)`. It is always
/// evaluated from the lexicographically smaller endpoint, so the two
/// triangles sharing an edge get exactly opposite values and no pixel on
/// it is lost to rounding.
#[inline]
fn edge_value(a: (f64, f64, f64), b: (f64, f64, f64), sx: f64, sy: f64) -> f64 {
    let f = |p: (f64, f64, f64), q: (f64, f64, f64)| (q.0 - p.0) * (sy - p.1) - (q.1 - p.1) * (sx - p.0);
    if (a.0, a.1) <= (b.0, b.1) {
        f(a, b)
    } else {
        -f(b, a)
    }
}

/// Barycentric interpolation anchored at the first vertex, exact for
/// constant attributes.
#[inline]
fn lerp3(v0: f64, v1: f64, v2: f64, bary: &[f64; 3]) -> f64 {
    v0 + bary[1] * (v1 - v0) + bary[2] * (v2 - v0)
}

/// Draws `scene` with black background. Ties in depth keep the earlier
/// triangle.
pub fn rasterize(scene: &[SceneMesh<'_>], camera: &Camera) -> Result<RenderedView> {
    camera.validate()?;
    for (i, item) in scene.iter().enumerate() {
        let ok = match item.texture {
            Some(_) => item.mesh.texcoords.is_some(),
            None => item.mesh.vertex_colors.is_some(),
        };
        if !ok {
            return Err(Error::InvalidInput(format!(
                "scene mesh {i} has neither vertex colours nor a texture"
            )));
        }
    }

    let (w, h) = (camera.width, camera.height);
    let mut image = Image::filled(w, h, [0.0; 3])?;
    let mut depth = vec![f64::INFINITY; w * h];
    let mut mesh_id = vec![NO_MESH; w * h];

    for (sid, item) in scene.iter().enumerate() {
        let mesh = item.mesh;
        let screen: Vec<(f64, f64, f64)> = mesh
            .vertices
            .iter()
            .map(|v| {
                let (x, y) = camera.to_pixel(v);
                (x, y, camera.depth(v))
            })
            .collect();

        for tri in &mesh.triangles {
            let idx = [tri[0] as usize, tri[1] as usize, tri[2] as usize];
            let p = idx.map(|i| screen[i]);
            // Pixel rows grow downwards, so this is twice the signed area
            // measured clockwise in world terms.
            let area = (p[1].0 - p[0].0) * (p[2].1 - p[0].1) - (p[1].1 - p[0].1) * (p[2].0 - p[0].0);
            if area == 0.0 || !area.is_finite() {
                continue;
            }
            let order = if area > 0.0 { [0, 1, 2] } else { [0, 2, 1] };
            let q = order.map(|k| p[k]);
            let vi = order.map(|k| idx[k]);
            let area = area.abs();

            let min_x = q.iter().map(|a| a.0).fold(f64::INFINITY, f64::min);
            let max_x = q.iter().map(|a| a.0).fold(f64::NEG_INFINITY, f64::max);
            let min_y = q.iter().map(|a| a.1).fold(f64::INFINITY, f64::min);
            let max_y = q.iter().map(|a| a.1).fold(f64::NEG_INFINITY, f64::max);
            // Pixel i is sampled at i + 0.5.
            let i0 = (min_x - 0.5).ceil().max(0.0);
            let i1 = (max_x - 0.5).floor().min(w as f64 - 1.0);
            let j0 = (min_y - 0.5).ceil().max(0.0);
            let j1 = (max_y - 0.5).floor().min(h as f64 - 1.0);
            if i0 > i1 || j0 > j1 {
                continue;
            }

            for j in j0 as usize..=j1 as usize {
                let sy = j as f64 + 0.5;
                'px: for i in i0 as usize..=i1 as usize {
                    let sx = i as f64 + 0.5;
                    let mut bary = [0.0f64; 3];
                    for e in 0..3 {
                        let a = q[(e + 1) % 3];
                        let b = q[(e + 2) % 3];
                        let (dx, dy) = (b.0 - a.0, b.1 - a.1);
                        let we = edge_value(a, b, sx, sy);
                        if we < 0.0 || (we == 0.0 && !owns_edge(dx, dy)) {
                            continue 'px;
                        }
                        bary[e] = we / area;
                    }
                    let z = lerp3(q[0].2, q[1].2, q[2].2, &bary);
                    if z < camera.near || z > camera.far {
                        continue;
                    }
                    let pix = j * w + i;
                    if z >= depth[pix] {
                        continue;
                    }
                    let rgb = match item.texture {
                        Some(tex) => {
                            let uv = mesh.texcoords.as_ref().expect("checked above");
                            let t = vi.map(|k| uv[k]);
                            let u = lerp3(t[0][0], t[1][0], t[2][0], &bary);
                            let v = lerp3(t[0][1], t[1][1], t[2][1], &bary);
                            tex.sample_bilinear(
                                u * tex.width() as f64 - 0.5,
                                v * tex.height() as f64 - 0.5,
                            )
                        }
                        None => {
                            let col = mesh.vertex_colors.as_ref().expect("checked above");
                            let c = vi.map(|k| col[k]);
                            [0, 1, 2].map(|ch| lerp3(c[0][ch], c[1][ch], c[2][ch], &bary).clamp(0.0, 1.0))
                        }
                    };
                    depth[pix] = z;
                    mesh_id[pix] = sid as u32;
                    image.set(i, j, rgb);
                }
            }
        }
    }

    Ok(RenderedView {
        image,
        depth,
        mesh_id,
        transform: RigidTransform::identity(),
        yaw_deg: 0.0,
        pitch_deg: 0.0,
    })
}
