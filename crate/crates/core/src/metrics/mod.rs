//! Closest-point queries, ICP alignment and the normalized mean error.

pub mod bvh;
pub mod icp;
mod nme;
pub mod report;

pub use bvh::{closest_point_on_triangle, BvhIndex, ClosestHit};
pub use icp::{icp_align, icp_align_indexed, procrustes, IcpParams, IcpResult};
pub use nme::{
    evaluate_pairs, interocular_distance, interocular_proxy, nme, nme_indexed, EvalOptions,
    EvalPair, NormalizerMode, PROXY_FRACTION,
};
pub use report::{bar_chart_svg, line_chart_svg, NmeReport, NmeRow, YawBucket};

pub(crate) use nme::normalizer;
