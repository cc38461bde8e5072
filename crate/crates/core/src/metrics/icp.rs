//! Point-to-point ICP against a triangle surface.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector, Matrix3, Rotation3};

use crate::error::{Error, Result};
use crate::geometry::mesh::{mesh_bounds, TriangleMesh, Vec3};
use crate::metrics::bvh::BvhIndex;
use crate::viewgen::{compose, RigidTransform};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcpParams {
    pub max_iters: usize,
    pub rel_tol: f64,
    /// Use every `stride`-th source vertex.
    pub stride: usize,
}

impl Default for IcpParams {
    fn default() -> Self {
        IcpParams {
            max_iters: 50,
            rel_tol: 1e-6,
            stride: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcpResult {
    /// Maps source coordinates onto the destination.
    pub transform: RigidTransform,
    /// RMS closest-point distance after the final transform.
    pub residual: f64,
    pub iters: usize,
    /// RMS residual measured at the start of each iteration.
    pub history: Vec<f64>,
}

/// Best proper rotation and translation taking `src[i]` onto `dst[i]` in the
/// least-squares sense (SVD of the cross-covariance, reflection removed).
pub fn procrustes(src: &[Vec3], dst: &[Vec3]) -> Result<RigidTransform> {
    if src.len() != dst.len() || src.is_empty() {
        return Err(Error::InvalidInput("procrustes needs equal, non-empty point sets".into()));
    }
    let n = src.len() as f64;
    let cs: Vec3 = src.iter().sum::<Vec3>() / n;
    let cd: Vec3 = dst.iter().sum::<Vec3>() / n;
    let mut h = Matrix3::<f64>::zeros();
    for (s, d) in src.iter().zip(dst) {
        h += (s - cs) * (d - cd).transpose();
    }
    let svd = h.svd(true, true);
    let sv = svd.singular_values;
    let smax = sv.max();
    let mut sorted = [sv[0], sv[1], sv[2]];
    sorted.sort_by(|a, b| b.total_cmp(a));
    if !(smax > 0.0) || sorted[1] <= 1e-12 * smax {
        return Err(Error::DegenerateAlignment("cross-covariance has rank below 2".into()));
    }
    let (u, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::Numerical("SVD did not return singular vectors".into())),
    };
    let v = vt.transpose();
    let d = (v * u.transpose()).determinant().signum();
    // Flip the singular direction with the smallest singular value.
    let mut fix = Matrix3::<f64>::identity();
    let imin = sv.imin();
    fix[(imin, imin)] = if d < 0.0 { -1.0 } else { 1.0 };
    let r = v * fix * u.transpose();
    Ok(RigidTransform {
        rotation: r,
        translation: cd - r * cs,
    })
}

fn rms_correspondences(points: &[Vec3], index: &BvhIndex, targets: &mut Vec<Vec3>) -> f64 {
    targets.clear();
    let mut acc = 0.0;
    for p in points {
        let hit = index.closest_point(p);
        acc += hit.distance * hit.distance;
        targets.push(hit.point);
    }
    (acc / points.len() as f64).sqrt()
}

/// Aligns `src` to the surface of `dst`.
///
/// Starts from centroid alignment, then alternates closest-point
/// correspondences with a Procrustes update until the relative residual
/// change drops below `rel_tol` or `max_iters` is reached. Plain
/// point-to-point ICP converges linearly when the surfaces can slide along
/// each other, so each update is Anderson-accelerated in the six pose
/// parameters; an accelerated pose is kept only when it lowers the
/// residual below that of the plain update.
pub fn icp_align(src: &TriangleMesh, dst: &TriangleMesh, params: &IcpParams) -> Result<IcpResult> {
    if src.vertices.is_empty() {
        return Err(Error::InvalidInput("ICP source mesh is empty".into()));
    }
    let index = BvhIndex::new(dst)?;
    icp_align_indexed(src, dst, &index, params)
}

/// Number of past updates combined by the Anderson step.
const ANDERSON_DEPTH: usize = 5;

/// Transform as (rotation vector, displacement of `center`).
fn to_params(t: &RigidTransform, center: &Vec3) -> [f64; 6] {
    let w = Rotation3::from_matrix_unchecked(t.rotation).scaled_axis();
    let d = t.apply_point(center) - center;
    [w.x, w.y, w.z, d.x, d.y, d.z]
}

fn from_params(q: &[f64; 6], center: &Vec3) -> RigidTransform {
    let r = Rotation3::new(Vec3::new(q[0], q[1], q[2])).into_inner();
    RigidTransform {
        rotation: r,
        translation: center + Vec3::new(q[3], q[4], q[5]) - r * center,
    }
}

/// Source points under `t`, with their RMS residual and targets.
struct Placement {
    transform: RigidTransform,
    moved: Vec<Vec3>,
    targets: Vec<Vec3>,
    rms: f64,
}

impl Placement {
    fn new(transform: RigidTransform, points: &[Vec3], index: &BvhIndex) -> Self {
        let moved: Vec<Vec3> = points.iter().map(|p| transform.apply_point(p)).collect();
        let mut targets = Vec::with_capacity(points.len());
        let rms = rms_correspondences(&moved, index, &mut targets);
        Placement { transform, moved, targets, rms }
    }
}

/// Anderson mixing of the fixed-point map `q ↦ g`: the combination of the
/// remembered updates whose residuals `g - q` cancel best.
fn anderson(memory: &VecDeque<([f64; 6], [f64; 6])>) -> Option<[f64; 6]> {
    let n = memory.len();
    if n < 2 {
        return None;
    }
    let f: Vec<[f64; 6]> = memory.iter().map(|(q, g)| std::array::from_fn(|k| g[k] - q[k])).collect();
    let df = DMatrix::from_fn(6, n - 1, |r, c| f[c + 1][r] - f[c][r]);
    let dg = DMatrix::from_fn(6, n - 1, |r, c| memory[c + 1].1[r] - memory[c].1[r]);
    let last = DVector::from_column_slice(&f[n - 1]);
    let gamma = df.svd(true, true).solve(&last, 1e-12).ok()?;
    let mix = dg * gamma;
    let g = memory[n - 1].1;
    let q: [f64; 6] = std::array::from_fn(|k| g[k] - mix[k]);
    q.iter().all(|v| v.is_finite()).then_some(q)
}

/// [`icp_align`] with a prebuilt index over `dst`.
pub fn icp_align_indexed(
    src: &TriangleMesh,
    dst: &TriangleMesh,
    index: &BvhIndex,
    params: &IcpParams,
) -> Result<IcpResult> {
    if src.vertices.is_empty() || dst.vertices.is_empty() {
        return Err(Error::InvalidInput("ICP needs non-empty meshes".into()));
    }
    if params.max_iters == 0 || params.stride == 0 {
        return Err(Error::InvalidConfig("ICP needs max_iters and stride of at least 1".into()));
    }
    let points: Vec<Vec3> = src.vertices.iter().step_by(params.stride).copied().collect();
    let src_c: Vec3 = points.iter().sum::<Vec3>() / points.len() as f64;
    let dst_c: Vec3 = dst.vertices.iter().sum::<Vec3>() / dst.vertices.len() as f64;
    let converged_abs = 1e-12 * mesh_bounds(dst)?.diagonal();

    let mut cur = Placement::new(RigidTransform::from_translation(dst_c - src_c), &points, index);
    let mut history = Vec::new();
    // Recent (pose, plain update of that pose) pairs.
    let mut memory: VecDeque<([f64; 6], [f64; 6])> = VecDeque::new();

    for _ in 0..params.max_iters {
        let prev = history.last().copied();
        history.push(cur.rms);
        if cur.rms <= converged_abs {
            break;
        }
        if let Some(p) = prev {
            if p - cur.rms <= params.rel_tol * p {
                break;
            }
        }
        let step = procrustes(&cur.moved, &cur.targets)?;
        let plain = Placement::new(compose(&step, &cur.transform), &points, index);
        memory.push_back((to_params(&cur.transform, &src_c), to_params(&plain.transform, &src_c)));
        if memory.len() > ANDERSON_DEPTH + 1 {
            memory.pop_front();
        }
        cur = plain;
        if let Some(q) = anderson(&memory) {
            let trial = Placement::new(from_params(&q, &src_c), &points, index);
            if trial.rms < cur.rms {
                cur = trial;
            } else {
                memory.drain(..memory.len() - 1);
            }
        }
    }

    let residual = cur.rms;
    Ok(IcpResult {
        transform: cur.transform,
        residual,
        iters: history.len(),
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn procrustes_recovers_known_motion() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let src: Vec<Vec3> = (0..50)
            .map(|_| Vec3::new(rng.random(), rng.random(), rng.random()))
            .collect();
        let truth = RigidTransform::about_axis(&Vec3::new(0.3, -1.0, 0.4), 1.1, &Vec3::new(0.5, 0.1, 0.0));
        let dst: Vec<Vec3> = src.iter().map(|p| truth.apply_point(p)).collect();
        let est = procrustes(&src, &dst).unwrap();
        assert!((est.rotation - truth.rotation).norm() < 1e-12);
        assert!((est.translation - truth.translation).norm() < 1e-12);
    }

    #[test]
    fn procrustes_never_reflects() {
        let src = vec![Vec3::x(), Vec3::y(), Vec3::z(), Vec3::zeros()];
        let dst: Vec<Vec3> = src.iter().map(|p| Vec3::new(-p.x, p.y, p.z)).collect();
        let est = procrustes(&src, &dst).unwrap();
        assert!((est.rotation.determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let src: Vec<Vec3> = (0..5).map(|i| Vec3::x() * i as f64).collect();
        assert!(matches!(procrustes(&src, &src), Err(Error::DegenerateAlignment(_))));
    }
}
