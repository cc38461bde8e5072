use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::mesh::{mesh_bounds, TriangleMesh, EYE_OUTER_LEFT, EYE_OUTER_RIGHT};
use crate::metrics::bvh::BvhIndex;
use crate::metrics::icp::{icp_align_indexed, IcpParams};
use crate::metrics::report::{NmeReport, NmeRow};
use crate::pose::estimate_face_frame;
use crate::viewgen::apply_transform;

/// Fraction of the lateral extent used when eye landmarks are missing.
pub const PROXY_FRACTION: f64 = 0.4;

/// Distance between the outer eye-corner landmarks.
pub fn interocular_distance(mesh: &TriangleMesh) -> Result<f64> {
    let l = mesh
        .landmark(EYE_OUTER_LEFT)
        .ok_or_else(|| Error::MissingLandmark(EYE_OUTER_LEFT.into()))?;
    let r = mesh
        .landmark(EYE_OUTER_RIGHT)
        .ok_or_else(|| Error::MissingLandmark(EYE_OUTER_RIGHT.into()))?;
    Ok((l - r).norm())
}

/// Stand-in normalizer: [`PROXY_FRACTION`] of the mesh extent along its
/// estimated lateral axis.
pub fn interocular_proxy(mesh: &TriangleMesh) -> Result<f64> {
    let frame = estimate_face_frame(mesh)?;
    let (lo, hi) = mesh.vertices.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        let s = (v - frame.centroid).dot(&frame.lateral);
        (lo.min(s), hi.max(s))
    });
    Ok(PROXY_FRACTION * (hi - lo))
}

/// Mean distance from each predicted vertex to the closest point of the
/// ground-truth surface, divided by `d`.
pub fn nme(pred: &TriangleMesh, gt: &TriangleMesh, d: f64) -> Result<f64> {
    let index = BvhIndex::new(gt)?;
    nme_indexed(pred, &index, d)
}

pub fn nme_indexed(pred: &TriangleMesh, gt_index: &BvhIndex, d: f64) -> Result<f64> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::InvalidInput(format!("normalizer must be positive, got {d}")));
    }
    if pred.vertices.is_empty() {
        return Err(Error::InvalidInput("prediction has no vertices".into()));
    }
    let total: f64 = pred.vertices.iter().map(|v| gt_index.closest_point(v).distance).sum();
    Ok(total / pred.vertices.len() as f64 / d)
}

/// How the normalizer `d` is obtained from the ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalizerMode {
    /// Eye landmarks; rows without them are flagged as failures.
    Landmark,
    /// Always the lateral-extent proxy.
    Proxy,
    /// Landmarks when present, otherwise the proxy (row flagged `proxy_d`).
    LandmarkOrProxy,
}

#[derive(Debug, Clone)]
pub struct EvalPair {
    pub id: String,
    pub pred: TriangleMesh,
    pub gt: TriangleMesh,
    pub yaw_deg: f64,
    pub pitch_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub align: bool,
    pub mode: NormalizerMode,
    pub icp: IcpParams,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            align: true,
            mode: NormalizerMode::LandmarkOrProxy,
            icp: IcpParams::default(),
        }
    }
}

pub(crate) fn normalizer(gt: &TriangleMesh, mode: NormalizerMode, flags: &mut Vec<String>) -> Result<f64> {
    match mode {
        NormalizerMode::Landmark => interocular_distance(gt),
        NormalizerMode::Proxy => {
            flags.push("proxy_d".into());
            interocular_proxy(gt)
        }
        NormalizerMode::LandmarkOrProxy => match interocular_distance(gt) {
            Ok(d) => Ok(d),
            Err(Error::MissingLandmark(_)) => {
                flags.push("proxy_d".into());
                interocular_proxy(gt)
            }
            Err(e) => Err(e),
        },
    }
}

fn evaluate_one(pair: &EvalPair, opts: &EvalOptions) -> NmeRow {
    let mut flags = Vec::new();
    let result = (|| -> Result<f64> {
        if pair.pred.triangles.is_empty() {
            return Err(Error::InvalidInput("empty prediction".into()));
        }
        mesh_bounds(&pair.gt)?;
        let index = BvhIndex::new(&pair.gt)?;
        let d = normalizer(&pair.gt, opts.mode, &mut flags)?;
        let pred = if opts.align {
            let fit = icp_align_indexed(&pair.pred, &pair.gt, &index, &opts.icp)?;
            apply_transform(&pair.pred, &fit.transform)
        } else {
            pair.pred.clone()
        };
        nme_indexed(&pred, &index, d)
    })();
    let nme = match result {
        Ok(v) => Some(v),
        Err(e) => {
            flags.push(format!("error:{}", e.code()));
            None
        }
    };
    NmeRow {
        id: pair.id.clone(),
        yaw_deg: pair.yaw_deg,
        pitch_deg: pair.pitch_deg,
        nme,
        aligned: opts.align,
        flags,
    }
}

/// Scores every pair (optionally after ICP) and aggregates by yaw. Per-pair
/// failures become flagged rows.
pub fn evaluate_pairs(pairs: &[EvalPair], opts: &EvalOptions) -> Result<NmeReport> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("no pairs to evaluate".into()));
    }
    let rows: Vec<NmeRow> = pairs.par_iter().map(|p| evaluate_one(p, opts)).collect();
    Ok(NmeReport::from_rows(rows))
}
