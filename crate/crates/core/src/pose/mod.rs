//! Face pose from mesh geometry.
//!
//! The vertex covariance of a mask-like face has its smallest principal axis
//! along the gaze (depth) direction; the other two principal axes are the
//! normal of the bilateral-symmetry plane and the vertical axis. Which of
//! the two is which is decided by how well the mesh mirrors onto itself.

mod eigen;
mod symmetry;

pub use eigen::{eigen_symmetric3, EigenPair, SymmetricMatrix3};
pub use symmetry::symmetry_score;

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::geometry::mesh::{
    mesh_area, TriangleMesh, Vec3, EYE_OUTER_LEFT, EYE_OUTER_RIGHT, NOSE_TIP,
};
use crate::viewgen::csv_err;

const FRAME_HEADER: [&str; 16] = [
    "cx", "cy", "cz", "lx", "ly", "lz", "vx", "vy", "vz", "gx", "gy", "gz", "e0", "e1", "e2", "tie",
];

/// Relative eigenvalue gap below which two axes are considered tied.
pub const TIE_GAP: f64 = 0.05;

/// Centroid plus orthonormal face axes. The symmetry plane passes through
/// `centroid` with normal `lateral`; the backplane has normal `gaze`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceFrame {
    pub centroid: Vec3,
    pub lateral: Vec3,
    pub vertical: Vec3,
    pub gaze: Vec3,
    /// Covariance eigenvalues, descending.
    pub eigenvalues: [f64; 3],
    /// Set when the two largest eigenvalues were within [`TIE_GAP`].
    pub tie: bool,
}

impl FaceFrame {
    /// Frame of a face looking down +z with +y up.
    pub fn canonical(centroid: Vec3) -> Self {
        FaceFrame {
            centroid,
            lateral: Vec3::x(),
            vertical: Vec3::y(),
            gaze: Vec3::z(),
            eigenvalues: [0.0; 3],
            tie: false,
        }
    }

    /// `centroid, lateral, vertical, gaze` as twelve numbers.
    pub fn to_row(&self) -> [f64; 12] {
        let mut out = [0.0; 12];
        for (k, v) in [self.centroid, self.lateral, self.vertical, self.gaze].iter().enumerate() {
            out[3 * k..3 * k + 3].copy_from_slice(v.as_slice());
        }
        out
    }

    pub fn from_row(row: &[f64]) -> Result<Self> {
        if row.len() != 12 {
            return Err(Error::format("frame", format!("expected 12 numbers, got {}", row.len())));
        }
        let v = |k: usize| Vec3::new(row[3 * k], row[3 * k + 1], row[3 * k + 2]);
        Ok(FaceFrame {
            centroid: v(0),
            lateral: v(1),
            vertical: v(2),
            gaze: v(3),
            eigenvalues: [0.0; 3],
            tie: false,
        })
    }

    /// One-row CSV: the twelve numbers of [`FaceFrame::to_row`], the three
    /// eigenvalues and the tie flag.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(FRAME_HEADER).map_err(csv_err)?;
        let mut rec: Vec<String> = self.to_row().iter().chain(&self.eigenvalues).map(|v| v.to_string()).collect();
        rec.push((self.tie as u8).to_string());
        wr.write_record(&rec).map_err(csv_err)?;
        wr.flush().map_err(|e| Error::io("frame csv", e))
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let rec = rd
            .records()
            .next()
            .ok_or_else(|| Error::format("frame", "no data row"))?
            .map_err(csv_err)?;
        if rec.len() != FRAME_HEADER.len() {
            return Err(Error::format("frame", format!("expected {} columns, found {}", FRAME_HEADER.len(), rec.len())));
        }
        let nums = rec
            .iter()
            .take(15)
            .map(|t| t.parse::<f64>().map_err(|_| Error::format("frame", format!("bad number `{t}`"))))
            .collect::<Result<Vec<_>>>()?;
        let mut frame = FaceFrame::from_row(&nums[..12])?;
        frame.eigenvalues = [nums[12], nums[13], nums[14]];
        frame.tie = &rec[15] == "1";
        Ok(frame)
    }

    /// Largest deviation from orthonormality and right-handedness.
    pub fn orthonormality_error(&self) -> f64 {
        let (l, v, g) = (self.lateral, self.vertical, self.gaze);
        [
            (l.norm() - 1.0).abs(),
            (v.norm() - 1.0).abs(),
            (g.norm() - 1.0).abs(),
            l.dot(&v).abs(),
            l.dot(&g).abs(),
            v.dot(&g).abs(),
            (l.cross(&v) - g).norm(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Centroid and unbiased sample covariance of the mesh vertices.
pub fn sample_covariance(mesh: &TriangleMesh) -> Result<(Vec3, SymmetricMatrix3)> {
    let n = mesh.vertices.len();
    if n < 4 {
        return Err(Error::DegenerateInput(format!("{n} vertices; need at least 4")));
    }
    let mu: Vec3 = mesh.vertices.iter().sum::<Vec3>() / n as f64;
    let mut c = [0.0f64; 6];
    for v in &mesh.vertices {
        let d = v - mu;
        c[0] += d.x * d.x;
        c[1] += d.y * d.y;
        c[2] += d.z * d.z;
        c[3] += d.x * d.y;
        c[4] += d.x * d.z;
        c[5] += d.y * d.z;
    }
    let s = 1.0 / (n - 1) as f64;
    let cov = SymmetricMatrix3 {
        xx: c[0] * s,
        yy: c[1] * s,
        zz: c[2] * s,
        xy: c[3] * s,
        xz: c[4] * s,
        yz: c[5] * s,
    };
    let eig = eigen_symmetric3(&cov);
    if !(eig[0].value > 0.0) || eig[2].value <= 1e-12 * eig[0].value {
        return Err(Error::DegenerateInput("vertex cloud is coplanar or collinear".into()));
    }
    Ok((mu, cov))
}

/// Third moment of the surface along `axis` about its area centroid:
/// positive when the long tail lies on the `+axis` side.
fn surface_skew(mesh: &TriangleMesh, axis: &Vec3) -> f64 {
    let parts: Vec<(f64, f64)> = (0..mesh.triangles.len())
        .map(|i| {
            let [a, b, c] = mesh.triangle(i);
            let area = 0.5 * (b - a).cross(&(c - a)).norm();
            (area, ((a + b + c) / 3.0).dot(axis))
        })
        .collect();
    let total: f64 = parts.iter().map(|p| p.0).sum();
    let mean = parts.iter().map(|p| p.0 * p.1).sum::<f64>() / total;
    parts.iter().map(|(w, t)| w * (t - mean).powi(3)).sum()
}

/// Estimates the face frame of `mesh`.
///
/// Sign conventions: gaze points towards the `nose_tip` landmark, or else
/// towards the long tail of the surface (the nose side). Vertical points
/// from the nose tip towards the outer eye corners when those landmarks
/// exist, otherwise against the tail of the surface (the chin is the
/// narrow end of a face). Lateral completes a right-handed
/// frame.
pub fn estimate_face_frame(mesh: &TriangleMesh) -> Result<FaceFrame> {
    mesh.validate()?;
    let (centroid, cov) = sample_covariance(mesh)?;
    let eig = eigen_symmetric3(&cov);
    let eigenvalues = [eig[0].value, eig[1].value, eig[2].value];
    if eigenvalues[2] <= 0.0 {
        return Err(Error::DegenerateInput("covariance is singular".into()));
    }
    let tie = (eigenvalues[0] - eigenvalues[1]) < TIE_GAP * eigenvalues[0];

    let mut gaze = eig[2].vector;
    let score_a = symmetry_score(mesh, &centroid, &eig[0].vector)?;
    let score_b = symmetry_score(mesh, &centroid, &eig[1].vector)?;
    let (lateral_guess, mut vertical) = if score_a < score_b {
        (eig[0].vector, eig[1].vector)
    } else {
        (eig[1].vector, eig[0].vector)
    };

    let eyes = mesh.landmark(EYE_OUTER_LEFT).zip(mesh.landmark(EYE_OUTER_RIGHT));
    let nose = mesh.landmark(NOSE_TIP);
    if (nose.is_none() || eyes.is_none()) && (mesh.triangles.is_empty() || mesh_area(mesh)? == 0.0) {
        return Err(Error::DegenerateInput("cannot orient the frame without landmarks or surface".into()));
    }
    let gaze_sign = match nose {
        Some(nose) => (nose - centroid).dot(&gaze),
        None => surface_skew(mesh, &gaze),
    };
    if gaze_sign < 0.0 {
        gaze = -gaze;
    }

    let vertical_sign = match (eyes, nose) {
        (Some((l, r)), Some(nose)) => ((l + r) * 0.5 - nose).dot(&vertical),
        (Some((l, r)), None) => ((l + r) * 0.5 - centroid).dot(&vertical),
        _ => -surface_skew(mesh, &vertical),
    };
    if vertical_sign < 0.0 {
        vertical = -vertical;
    }
    let lateral = vertical.cross(&gaze).normalize();
    debug_assert!(lateral.dot(&lateral_guess).abs() > 1.0 - 1e-9);

    Ok(FaceFrame {
        centroid,
        lateral,
        vertical,
        gaze,
        eigenvalues,
        tie,
    })
}
