use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::geometry::mesh::Vec3;
use crate::pose::FaceFrame;
use crate::viewgen::transform::RigidTransform;

/// Slack allowed on the gaze-angle bound, in degrees.
const GAZE_TOL_DEG: f64 = 1e-9;

/// One novel view: camera-frame yaw/pitch about the mesh centroid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewEntry {
    pub yaw_deg: f64,
    pub pitch_deg: f64,
    pub transform: RigidTransform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViewSchedule {
    pub entries: Vec<ViewEntry>,
    pub increment_deg: f64,
    pub pitch_limit_deg: f64,
    pub gaze_limit_deg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleParams {
    pub increment_deg: f64,
    pub pitch_limit_deg: f64,
    pub gaze_limit_deg: f64,
    /// Explicit yaws; `None` means the whole lattice in `(-180, 180]`.
    pub yaw_set: Option<Vec<f64>>,
}

impl Default for ScheduleParams {
    fn default() -> Self {
        ScheduleParams {
            increment_deg: 10.0,
            pitch_limit_deg: 20.0,
            gaze_limit_deg: 90.0,
            yaw_set: None,
        }
    }
}

impl ScheduleParams {
    pub fn with_yaws(yaws: &[f64], pitch_limit_deg: f64) -> Self {
        ScheduleParams {
            yaw_set: Some(yaws.to_vec()),
            pitch_limit_deg,
            ..Default::default()
        }
    }
}

/// Angle in degrees between a gaze direction and the direction from the
/// subject back to the camera (+z).
pub fn gaze_angle_deg(gaze: &Vec3) -> f64 {
    let c = (gaze.z / gaze.norm()).clamp(-1.0, 1.0);
    c.acos().to_degrees()
}

fn is_multiple(value: f64, increment: f64) -> bool {
    let k = value / increment;
    (k - k.round()).abs() < 1e-9
}

/// Enumerates the constrained yaw × pitch lattice for `frame`.
///
/// Entries are ordered yaw-major ascending, then pitch ascending; `(0, 0)`
/// is left out. A view is kept when its pitch is within the limit and the
/// rotated gaze stays within `gaze_limit_deg` of the camera direction.
pub fn build_schedule(frame: &FaceFrame, params: &ScheduleParams) -> Result<ViewSchedule> {
    let inc = params.increment_deg;
    if !(inc > 0.0 && inc.is_finite()) {
        return Err(Error::InvalidConfig(format!("increment must be positive, got {inc}")));
    }
    if !(params.pitch_limit_deg >= 0.0) || !(params.gaze_limit_deg >= 0.0) {
        return Err(Error::InvalidConfig("angle limits must be non-negative".into()));
    }

    let mut yaws: Vec<f64> = match &params.yaw_set {
        Some(set) => {
            if let Some(bad) = set.iter().find(|&&y| !is_multiple(y, inc)) {
                return Err(Error::InvalidConfig(format!(
                    "yaw {bad} is not a multiple of the {inc} degree increment"
                )));
            }
            set.iter().map(|&y| (y / inc).round() * inc).collect()
        }
        None => {
            let kmax = (180.0 / inc).floor() as i64;
            (-kmax..=kmax)
                .map(|k| k as f64 * inc)
                .filter(|&y| y > -180.0)
                .collect()
        }
    };
    yaws.sort_by(f64::total_cmp);
    yaws.dedup();

    let kp = (params.pitch_limit_deg / inc + 1e-9).floor() as i64;
    let pitches: Vec<f64> = (-kp..=kp).map(|k| k as f64 * inc).collect();

    let mut entries = Vec::new();
    for &yaw in &yaws {
        for &pitch in &pitches {
            if yaw == 0.0 && pitch == 0.0 {
                continue;
            }
            let transform = RigidTransform::yaw_pitch(yaw, pitch, &frame.centroid);
            let gaze = transform.apply_vector(&frame.gaze);
            if gaze_angle_deg(&gaze) <= params.gaze_limit_deg + GAZE_TOL_DEG {
                entries.push(ViewEntry {
                    yaw_deg: yaw,
                    pitch_deg: pitch,
                    transform,
                });
            }
        }
    }

    Ok(ViewSchedule {
        entries,
        increment_deg: inc,
        pitch_limit_deg: params.pitch_limit_deg,
        gaze_limit_deg: params.gaze_limit_deg,
    })
}

impl ViewSchedule {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Schedule holding exactly the given entries (used to force specific
    /// views such as the identity).
    pub fn from_entries(entries: Vec<ViewEntry>) -> Self {
        ViewSchedule {
            entries,
            increment_deg: 10.0,
            pitch_limit_deg: 90.0,
            gaze_limit_deg: 180.0,
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["yaw_deg".to_string(), "pitch_deg".to_string()];
        header.extend((0..9).map(|k| format!("r{}{}", k / 3, k % 3)));
        header.extend(["tx", "ty", "tz"].map(String::from));
        wr.write_record(&header).map_err(csv_err)?;
        for e in &self.entries {
            let mut rec = vec![e.yaw_deg.to_string(), e.pitch_deg.to_string()];
            rec.extend(e.transform.to_row().iter().map(|v| v.to_string()));
            wr.write_record(&rec).map_err(csv_err)?;
        }
        wr.flush().map_err(|e| Error::io("schedule csv", e))?;
        Ok(())
    }

    /// Reads entries written by [`ViewSchedule::write_csv`]. Limits are not
    /// stored in the file and are left at permissive values.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut entries = Vec::new();
        for rec in rd.records() {
            let rec = rec.map_err(csv_err)?;
            let nums = rec
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::format("schedule csv", e.to_string()))?;
            if nums.len() != 14 {
                return Err(Error::format("schedule csv", "expected 14 columns"));
            }
            entries.push(ViewEntry {
                yaw_deg: nums[0],
                pitch_deg: nums[1],
                transform: RigidTransform::from_row(&nums[2..])?,
            });
        }
        Ok(Self::from_entries(entries))
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::format("csv", e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::viewgen::transform::rot_y;

    fn frontal() -> FaceFrame {
        FaceFrame::canonical(Vec3::new(0.0, 0.0, 0.1))
    }

    #[test]
    fn frontal_lattice_spans_quarter_turns() {
        let s = build_schedule(&frontal(), &ScheduleParams::default()).unwrap();
        // 19 yaws in [-90, 90] × 5 pitches, minus the seed view.
        assert_eq!(s.len(), 19 * 5 - 1);
        let yaw_min = s.entries.iter().map(|e| e.yaw_deg).fold(f64::INFINITY, f64::min);
        let yaw_max = s.entries.iter().map(|e| e.yaw_deg).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!((yaw_min, yaw_max), (-90.0, 90.0));
        assert!(s.entries.iter().all(|e| e.pitch_deg.abs() <= 20.0));
        assert!(!s.entries.iter().any(|e| e.yaw_deg == 0.0 && e.pitch_deg == 0.0));
        for w in s.entries.windows(2) {
            assert!((w[0].yaw_deg, w[0].pitch_deg) < (w[1].yaw_deg, w[1].pitch_deg));
        }
    }

    #[test]
    fn explicit_yaws_without_pitch() {
        let s = build_schedule(&frontal(), &ScheduleParams::with_yaws(&[20.0, -20.0], 0.0)).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.entries[0].yaw_deg, -20.0);
    }

    #[test]
    fn rotated_frame_shifts_yaw_range() {
        let mut f = frontal();
        f.gaze = rot_y(30.0) * Vec3::z();
        f.lateral = rot_y(30.0) * Vec3::x();
        let s = build_schedule(&f, &ScheduleParams { pitch_limit_deg: 0.0, ..Default::default() }).unwrap();
        let yaws: Vec<f64> = s.entries.iter().map(|e| e.yaw_deg).collect();
        assert_eq!(yaws.iter().cloned().fold(f64::NEG_INFINITY, f64::max), 60.0);
        assert_eq!(yaws.iter().cloned().fold(f64::INFINITY, f64::min), -120.0);
    }

    #[test]
    fn bad_increment_rejected() {
        let p = ScheduleParams { increment_deg: 0.0, ..Default::default() };
        assert!(matches!(build_schedule(&frontal(), &p), Err(Error::InvalidConfig(_))));
        assert!(build_schedule(&frontal(), &ScheduleParams::with_yaws(&[15.0], 0.0)).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let s = build_schedule(&frontal(), &ScheduleParams::with_yaws(&[-40.0, 20.0], 10.0)).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let back = ViewSchedule::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.entries, s.entries);
    }
}
