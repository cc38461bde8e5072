use std::collections::BTreeMap;

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Landmark names understood by the evaluation code.
pub const EYE_OUTER_LEFT: &str = "eye_outer_left";
pub const EYE_OUTER_RIGHT: &str = "eye_outer_right";
pub const NOSE_TIP: &str = "nose_tip";

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Result<Self> {
        if (0..3).any(|k| !(min[k] <= max[k])) {
            return Err(Error::InvalidInput(format!(
                "aabb min {:?} exceeds max {:?}",
                min.as_slice(),
                max.as_slice()
            )));
        }
        Ok(Aabb { min, max })
    }

    /// Cube centred at the origin with the given half extent.
    pub fn cube(half: f64) -> Self {
        Aabb {
            min: Vec3::repeat(-half),
            max: Vec3::repeat(half),
        }
    }

    pub fn empty() -> Self {
        Aabb {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn grow(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn merge(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn diagonal(&self) -> f64 {
        self.extent().norm()
    }

    pub fn contains(&self, other: &Aabb) -> bool {
        (0..3).all(|k| self.min[k] <= other.min[k] && other.max[k] <= self.max[k])
    }

    /// Squared distance from `p` to the box (0 inside).
    pub fn distance_squared(&self, p: &Vec3) -> f64 {
        let mut d = 0.0;
        for k in 0..3 {
            let v = if p[k] < self.min[k] {
                self.min[k] - p[k]
            } else if p[k] > self.max[k] {
                p[k] - self.max[k]
            } else {
                0.0
            };
            d += v * v;
        }
        d
    }

    pub fn corners(&self) -> [Vec3; 8] {
        let mut out = [Vec3::zeros(); 8];
        for (i, c) in out.iter_mut().enumerate() {
            *c = Vec3::new(
                if i & 1 == 0 { self.min.x } else { self.max.x },
                if i & 2 == 0 { self.min.y } else { self.max.y },
                if i & 4 == 0 { self.min.z } else { self.max.z },
            );
        }
        out
    }
}

/// Indexed triangle surface with optional per-vertex colour, texture
/// coordinates and named landmarks.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
    pub vertex_colors: Option<Vec<[f64; 3]>>,
    pub texcoords: Option<Vec<[f64; 2]>>,
    pub landmarks: BTreeMap<String, u32>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Result<Self> {
        let mesh = TriangleMesh {
            vertices,
            triangles,
            ..Default::default()
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn with_colors(mut self, colors: Vec<[f64; 3]>) -> Result<Self> {
        if colors.len() != self.vertices.len() {
            return Err(Error::DimMismatch(format!(
                "{} colours for {} vertices",
                colors.len(),
                self.vertices.len()
            )));
        }
        self.vertex_colors = Some(colors);
        Ok(self)
    }

    /// Checks every structural invariant of the mesh.
    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        if let Some(v) = self.vertices.iter().find(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidInput(format!("non-finite vertex {:?}", v.as_slice())));
        }
        for (i, t) in self.triangles.iter().enumerate() {
            if t.iter().any(|&k| k as usize >= n) {
                return Err(Error::InvalidInput(format!(
                    "triangle {i} index out of range ({n} vertices)"
                )));
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(Error::InvalidInput(format!("triangle {i} is degenerate")));
            }
        }
        if let Some(c) = &self.vertex_colors {
            if c.len() != n {
                return Err(Error::DimMismatch("vertex colour count".into()));
            }
        }
        if let Some(uv) = &self.texcoords {
            if uv.len() != n {
                return Err(Error::DimMismatch("texcoord count".into()));
            }
        }
        for (name, &idx) in &self.landmarks {
            if idx as usize >= n {
                return Err(Error::InvalidInput(format!("landmark {name} out of range")));
            }
        }
        Ok(())
    }

    pub fn triangle(&self, i: usize) -> [Vec3; 3] {
        let t = self.triangles[i];
        [
            self.vertices[t[0] as usize],
            self.vertices[t[1] as usize],
            self.vertices[t[2] as usize],
        ]
    }

    pub fn landmark(&self, name: &str) -> Option<Vec3> {
        self.landmarks.get(name).map(|&i| self.vertices[i as usize])
    }

    /// Reverses the winding of every triangle.
    pub fn flip_orientation(&mut self) {
        for t in &mut self.triangles {
            t.swap(1, 2);
        }
    }

    pub fn scaled(&self, s: f64) -> TriangleMesh {
        let mut out = self.clone();
        out.vertices.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// Signed enclosed volume (positive for outward-facing closed meshes).
    pub fn signed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let a = self.vertices[t[0] as usize];
                let b = self.vertices[t[1] as usize];
                let c = self.vertices[t[2] as usize];
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }
}

fn require_vertices(mesh: &TriangleMesh, what: &str) -> Result<()> {
    if mesh.vertices.is_empty() {
        return Err(Error::InvalidInput(format!("{what} of an empty mesh")));
    }
    Ok(())
}

pub fn mesh_bounds(mesh: &TriangleMesh) -> Result<Aabb> {
    require_vertices(mesh, "bounds")?;
    let mut b = Aabb::empty();
    mesh.vertices.iter().for_each(|v| b.grow(v));
    Ok(b)
}

pub fn mesh_area(mesh: &TriangleMesh) -> Result<f64> {
    if mesh.triangles.is_empty() {
        return Err(Error::InvalidInput("area of a mesh without triangles".into()));
    }
    Ok((0..mesh.triangles.len())
        .map(|i| {
            let [a, b, c] = mesh.triangle(i);
            0.5 * (b - a).cross(&(c - a)).norm()
        })
        .sum())
}

pub fn mesh_centroid(mesh: &TriangleMesh) -> Result<Vec3> {
    require_vertices(mesh, "centroid")?;
    let sum: Vec3 = mesh.vertices.iter().sum();
    Ok(sum / mesh.vertices.len() as f64)
}
