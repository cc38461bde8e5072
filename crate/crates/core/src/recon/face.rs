//! Procedural mask-like faces standing in for real face data.
//!
//! A face is a closed, deformed UV sphere: a deep front carrying nose, eye
//! sockets, brow and mouth, and a flatter back. Features depend on `x` only
//! through `x²` and longitudes are generated in mirrored pairs, so the mesh
//! is exactly symmetric about the `x = 0` plane. Canonical pose: lateral
//! `+x`, vertical `+y`, gaze `+z` (toward the camera).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::mesh::{mesh_centroid, TriangleMesh, Vec3, EYE_OUTER_LEFT, EYE_OUTER_RIGHT, NOSE_TIP};
use crate::render::{rasterize, Camera, Image, SceneMesh, NO_MESH};
use crate::viewgen::{apply_transform, sin_cos_deg, RigidTransform};

/// Longitudes per ring; even so that every longitude has a mirror partner.
pub const FACE_LONGITUDES: usize = 100;
/// Rings between the poles.
pub const FACE_RINGS: usize = 50;

/// Shape and appearance parameters. Lengths are in world units for a face
/// that fits the default ±1.1 camera window at any scheduled pose.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticFaceSpec {
    pub seed: u64,
    /// Half width at the temples, [0.55, 0.68].
    pub half_width: f64,
    /// Half height, [0.78, 0.9].
    pub half_height: f64,
    /// Depth of the front half, [0.38, 0.5].
    pub front_depth: f64,
    /// Depth of the back half, [0.15, 0.25].
    pub back_depth: f64,
    /// Relative narrowing toward the chin, [0.15, 0.3].
    pub chin_taper: f64,
    /// Nose protrusion, [0.12, 0.2].
    pub nose_length: f64,
    /// Nose half width, [0.06, 0.1].
    pub nose_width: f64,
    /// Eye centre `|x|`, [0.25, 0.3].
    pub eye_offset_x: f64,
    /// Eye centre `y`, [0.12, 0.2].
    pub eye_offset_y: f64,
    /// Eye socket depth, [0.03, 0.06].
    pub eye_depth: f64,
    /// Brow ridge height, [0.02, 0.05].
    pub brow_depth: f64,
    /// Base skin colour, each channel in [0.2, 1].
    pub skin: [f64; 3],
    /// Photo background colour, each channel in [0, 1].
    pub background: [f64; 3],
}

const RANGES: [(&str, f64, f64); 11] = [
    ("half_width", 0.55, 0.68),
    ("half_height", 0.78, 0.9),
    ("front_depth", 0.38, 0.5),
    ("back_depth", 0.15, 0.25),
    ("chin_taper", 0.15, 0.3),
    ("nose_length", 0.12, 0.2),
    ("nose_width", 0.06, 0.1),
    ("eye_offset_x", 0.25, 0.3),
    ("eye_offset_y", 0.12, 0.2),
    ("eye_depth", 0.03, 0.06),
    ("brow_depth", 0.02, 0.05),
];

impl Default for SyntheticFaceSpec {
    /// Mid-range shape, neutral skin, gray background.
    fn default() -> Self {
        let mid = RANGES.map(|(_, lo, hi)| 0.5 * (lo + hi));
        Self::from_shape(0, mid, [0.8, 0.62, 0.5], [0.3, 0.3, 0.3])
    }
}

impl SyntheticFaceSpec {
    fn from_shape(seed: u64, s: [f64; 11], skin: [f64; 3], background: [f64; 3]) -> Self {
        SyntheticFaceSpec {
            seed,
            half_width: s[0],
            half_height: s[1],
            front_depth: s[2],
            back_depth: s[3],
            chin_taper: s[4],
            nose_length: s[5],
            nose_width: s[6],
            eye_offset_x: s[7],
            eye_offset_y: s[8],
            eye_depth: s[9],
            brow_depth: s[10],
            skin,
            background,
        }
    }

    fn shape(&self) -> [f64; 11] {
        [
            self.half_width,
            self.half_height,
            self.front_depth,
            self.back_depth,
            self.chin_taper,
            self.nose_length,
            self.nose_width,
            self.eye_offset_x,
            self.eye_offset_y,
            self.eye_depth,
            self.brow_depth,
        ]
    }

    /// Every parameter drawn uniformly from its range.
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape = RANGES.map(|(_, lo, hi)| rng.random_range(lo..=hi));
        let tone = rng.random_range(0.45..=1.0);
        let skin = [
            tone,
            tone * rng.random_range(0.7..=0.85),
            tone * rng.random_range(0.55..=0.7),
        ];
        let base = rng.random_range(0.1..=0.45);
        let background = [
            base + rng.random_range(0.0..=0.1),
            base + rng.random_range(0.0..=0.1),
            base + rng.random_range(0.0..=0.1),
        ];
        Self::from_shape(seed, shape, skin, background)
    }

    pub fn validate(&self) -> Result<()> {
        for ((name, lo, hi), v) in RANGES.iter().zip(self.shape()) {
            if !(v >= *lo && v <= *hi) {
                return Err(Error::InvalidInput(format!("{name} = {v} outside [{lo}, {hi}]")));
            }
        }
        if self.skin.iter().any(|c| !(0.2..=1.0).contains(c)) {
            return Err(Error::InvalidInput("skin channel outside [0.2, 1]".into()));
        }
        if self.background.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::InvalidInput("background channel outside [0, 1]".into()));
        }
        Ok(())
    }

    /// Eye socket radius.
    fn eye_radius(&self) -> f64 {
        0.07
    }

    /// Forward displacement of the front surface at `(x, y)`.
    fn relief(&self, x: f64, y: f64) -> f64 {
        let g = |d2: f64, s: f64| (-d2 / (2.0 * s * s)).exp();
        let b = self.half_height;
        let x2 = x * x;
        let ny = y + 0.08 * b;
        let nose_sy = if ny > 0.0 { 0.22 * b } else { 0.1 * b };
        let nose = self.nose_length * g(x2, self.nose_width) * g(ny * ny, nose_sy);
        let (ex, ey) = (self.eye_offset_x, self.eye_offset_y);
        let dy = y - ey;
        let eyes = self.eye_depth
            * (g((x - ex) * (x - ex) + dy * dy, self.eye_radius())
                + g((x + ex) * (x + ex) + dy * dy, self.eye_radius()));
        let by = y - ey - 0.09;
        let brow = self.brow_depth * g(by * by, 0.04) * g(x2, 0.3);
        let my = y + 0.48 * b;
        let mouth = 0.015 * g(my * my, 0.025) * g(x2, 0.12);
        nose - eyes + brow - mouth
    }

    fn albedo(&self, x: f64, y: f64) -> [f64; 3] {
        let g = |d2: f64, s: f64| (-d2 / (2.0 * s * s)).exp();
        let (ex, ey) = (self.eye_offset_x, self.eye_offset_y);
        let dy = y - ey;
        let r2 = 0.6 * self.eye_radius();
        let eye = g((x - ex) * (x - ex) + dy * dy, r2) + g((x + ex) * (x + ex) + dy * dy, r2);
        let by = y - ey - 0.1;
        let brow = g(by * by, 0.025) * g((x.abs() - ex) * (x.abs() - ex), 0.08);
        let my = y + 0.48 * self.half_height;
        let lips = g(my * my, 0.03) * g(x * x, 0.1);
        let dark = (1.0 - 0.75 * eye.min(1.0)) * (1.0 - 0.6 * brow);
        let mut c = self.skin.map(|s| s * dark);
        c[1] *= 1.0 - 0.35 * lips;
        c[2] *= 1.0 - 0.3 * lips;
        c
    }
}

/// Builds the face mesh for `spec`: closed, outward wound, vertex centroid
/// on the `y`/`z` origin, colours = albedo × frontal shading, with the three
/// reserved landmarks.
pub fn generate_synthetic_face(spec: &SyntheticFaceSpec) -> Result<TriangleMesh> {
    spec.validate()?;
    let n = FACE_LONGITUDES;
    let rings = FACE_RINGS;
    let (a, b) = (spec.half_width, spec.half_height);

    let point = |sin_t: f64, cos_t: f64, sin_p: f64, cos_p: f64| -> Vec3 {
        let y = b * sin_t;
        let chin = 0.5 * (1.0 - sin_t);
        let x = a * (1.0 - spec.chin_taper * chin * chin) * cos_t * sin_p;
        let depth = if cos_p > 0.0 { spec.front_depth } else { spec.back_depth };
        let mut z = depth * cos_t * cos_p;
        if cos_p > 0.0 {
            z += cos_p * cos_t * spec.relief(x, y);
        }
        Vec3::new(x, y, z)
    };

    let mut vertices = Vec::with_capacity(rings * n + 2);
    vertices.push(Vec3::new(0.0, -b, 0.0));
    for i in 1..=rings {
        let (sin_t, cos_t) = sin_cos_deg(-90.0 + 180.0 * i as f64 / (rings + 1) as f64);
        let mut ring = vec![Vec3::zeros(); n];
        for j in 0..=n / 2 {
            let (sin_p, cos_p) = sin_cos_deg(-180.0 + 360.0 * j as f64 / n as f64);
            ring[j] = point(sin_t, cos_t, sin_p, cos_p);
        }
        for j in n / 2 + 1..n {
            let m = ring[n - j];
            ring[j] = Vec3::new(-m.x, m.y, m.z);
        }
        vertices.extend(ring);
    }
    vertices.push(Vec3::new(0.0, b, 0.0));

    let idx = |i: usize, j: usize| (1 + (i - 1) * n + j % n) as u32;
    let north = (rings * n + 1) as u32;
    let mut triangles = Vec::with_capacity(2 * rings * n);
    for j in 0..n {
        triangles.push([0, idx(1, j + 1), idx(1, j)]);
        triangles.push([north, idx(rings, j), idx(rings, j + 1)]);
    }
    for i in 1..rings {
        for j in 0..n {
            triangles.push([idx(i, j), idx(i, j + 1), idx(i + 1, j + 1)]);
            triangles.push([idx(i, j), idx(i + 1, j + 1), idx(i + 1, j)]);
        }
    }

    let count = vertices.len() as f64;
    let shift_y = vertices.iter().map(|v| v.y).sum::<f64>() / count;
    let shift_z = vertices.iter().map(|v| v.z).sum::<f64>() / count;
    let colors = shade(&vertices, &triangles, spec);
    for v in &mut vertices {
        v.y -= shift_y;
        v.z -= shift_z;
    }

    // Outer eye corner: the front vertex nearest the socket's outer rim; its
    // mirror partner is the other eye.
    let target = (spec.eye_offset_x + 1.5 * spec.eye_radius(), spec.eye_offset_y - shift_y);
    let mut left = (f64::INFINITY, 0usize, 0usize);
    for i in 1..=rings {
        for j in n / 2 + 1..n {
            let v = vertices[idx(i, j) as usize];
            let d = (v.x - target.0).powi(2) + (v.y - target.1).powi(2);
            if v.z > 0.0 && d < left.0 {
                left = (d, i, j);
            }
        }
    }
    let nose = (1..=rings)
        .map(|i| idx(i, n / 2))
        .max_by(|&p, &q| vertices[p as usize].z.total_cmp(&vertices[q as usize].z))
        .expect("rings exist");

    let mut mesh = TriangleMesh::new(vertices, triangles)?.with_colors(colors)?;
    mesh.landmarks.insert(EYE_OUTER_LEFT.into(), idx(left.1, left.2));
    mesh.landmarks.insert(EYE_OUTER_RIGHT.into(), idx(left.1, n - left.2));
    mesh.landmarks.insert(NOSE_TIP.into(), nose);
    Ok(mesh)
}

fn shade(vertices: &[Vec3], triangles: &[[u32; 3]], spec: &SyntheticFaceSpec) -> Vec<[f64; 3]> {
    let mut normals = vec![Vec3::zeros(); vertices.len()];
    for t in triangles {
        let [a, b, c] = t.map(|i| vertices[i as usize]);
        let n = (b - a).cross(&(c - a));
        for &i in t {
            normals[i as usize] += n;
        }
    }
    let light = Vec3::new(0.0, 0.35, 1.0).normalize();
    vertices
        .iter()
        .zip(&normals)
        .map(|(v, n)| {
            let lit = 0.3 + 0.7 * n.normalize().dot(&light).max(0.0);
            spec.albedo(v.x, v.y).map(|c| (c * lit).clamp(0.0, 1.0))
        })
        .collect()
}

/// Renders `face` posed by `transform` over a flat background, as a stand-in
/// photograph. Returns the image and the posed mesh.
pub fn render_face_photo(
    face: &TriangleMesh,
    transform: &RigidTransform,
    background: [f64; 3],
    camera: &Camera,
) -> Result<(Image, TriangleMesh)> {
    let posed = apply_transform(face, transform);
    let view = rasterize(&[SceneMesh::colored(&posed)], camera)?;
    let image = Image::from_fn(camera.width, camera.height, |x, y| {
        if view.mesh_id[y * camera.width + x] == NO_MESH {
            background
        } else {
            view.image.get(x, y)
        }
    })?;
    Ok((image.quantized(), posed))
}

/// Photographs the face of `spec` turned by `yaw_deg`/`pitch_deg` about its
/// centroid, over the background colour of `spec`.
pub fn photograph_face(
    spec: &SyntheticFaceSpec,
    face: &TriangleMesh,
    yaw_deg: f64,
    pitch_deg: f64,
    camera: &Camera,
) -> Result<(Image, TriangleMesh)> {
    let t = RigidTransform::yaw_pitch(yaw_deg, pitch_deg, &mesh_centroid(face)?);
    render_face_photo(face, &t, spec.background, camera)
}
