//! Rigid-body transforms and the constrained novel-view schedule.

mod schedule;
mod transform;

pub use schedule::{build_schedule, gaze_angle_deg, ScheduleParams, ViewEntry, ViewSchedule};
pub(crate) use schedule::csv_err;
pub use transform::{apply_transform, compose, inverse, rot_x, rot_y, sin_cos_deg, RigidTransform};
