//! Pipeline configuration: one versioned TOML file holding every tunable.
//!
//! Missing keys take the defaults below; unknown keys are rejected. The
//! hash of the resolved configuration is recorded in every output manifest.
//!
//! ```toml
//! version = 1
//! seed = 0
//!
//! [camera]
//! half_extent = 1.1   # half width of the square view window
//! size = 128          # image width and height in pixels
//!
//! [grid]
//! n = 128             # oracle volume resolution per axis
//! iso = 0.5
//!
//! [schedule]          # self-reconstruction and render-sweep views
//! increment_deg = 10.0
//! pitch_limit_deg = 20.0
//! gaze_limit_deg = 90.0
//! # yaw_set = [-20.0, 20.0]   (absent: the whole lattice)
//!
//! [bootstrap]
//! yaw_set = [-60.0, -40.0, -20.0, 20.0, 40.0, 60.0]
//! pitch_limit_deg = 20.0
//! split_ratio = 0.9
//! epochs = 15
//! batch_size = 32
//! include_source = false
//! lr = { initial = 0.01, factor = 0.5, period = 5 }
//!
//! [toy]
//! input_size = 16
//! grid_n = 20
//! epochs = 20
//! batch_size = 32
//! lr = { initial = 0.01, factor = 0.5, period = 5 }
//!
//! [benchmark]
//! train_faces = 60
//! source_faces = 40
//! test_faces = 20
//! train_yaws = [-10.0, -5.0, 0.0, 5.0, 10.0]
//! train_pitches = [-10.0, 0.0, 10.0]
//! test_yaws = [-55.0, -45.0, ..., 55.0]
//! bootstrap_pitch_limit_deg = 0.0
//! yaw_sets = [[-60.0, -40.0, -20.0, 20.0, 40.0, 60.0]]
//!
//! [eval]
//! align = true
//! normalizer = "landmark_or_proxy"   # or "landmark", "proxy"
//! icp_max_iters = 50
//! icp_rel_tol = 1e-6
//! icp_stride = 1
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bootstrap::{BenchmarkConfig, BootstrapConfig};
use crate::error::{Error, Result};
use crate::metrics::{EvalOptions, IcpParams, NormalizerMode};
use crate::recon::{FitConfig, LrSchedule, ReconGrid};
use crate::render::Camera;
use crate::viewgen::ScheduleParams;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub version: u32,
    pub seed: u64,
    pub camera: CameraSection,
    pub grid: GridSection,
    pub schedule: ScheduleSection,
    pub bootstrap: BootstrapSection,
    pub toy: ToySection,
    pub benchmark: BenchmarkSection,
    pub eval: EvalSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CameraSection {
    pub half_extent: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub n: usize,
    pub iso: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleSection {
    pub increment_deg: f64,
    pub pitch_limit_deg: f64,
    pub gaze_limit_deg: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub yaw_set: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LrSection {
    pub initial: f64,
    pub factor: f64,
    pub period: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BootstrapSection {
    pub yaw_set: Vec<f64>,
    pub pitch_limit_deg: f64,
    pub split_ratio: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub include_source: bool,
    pub lr: LrSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToySection {
    pub input_size: usize,
    pub grid_n: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: LrSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkSection {
    pub train_faces: usize,
    pub source_faces: usize,
    pub test_faces: usize,
    pub train_yaws: Vec<f64>,
    pub train_pitches: Vec<f64>,
    pub test_yaws: Vec<f64>,
    pub bootstrap_pitch_limit_deg: f64,
    /// One bootstrapped model is trained and scored per yaw set.
    pub yaw_sets: Vec<Vec<f64>>,
    /// Rigidly align predictions before scoring.
    pub align: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub align: bool,
    pub normalizer: String,
    pub icp_max_iters: usize,
    pub icp_rel_tol: f64,
    pub icp_stride: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            version: CONFIG_VERSION,
            seed: 0,
            camera: CameraSection::default(),
            grid: GridSection::default(),
            schedule: ScheduleSection::default(),
            bootstrap: BootstrapSection::default(),
            toy: ToySection::default(),
            benchmark: BenchmarkSection::default(),
            eval: EvalSection::default(),
        }
    }
}

impl Default for CameraSection {
    fn default() -> Self {
        CameraSection {
            half_extent: 1.1,
            size: 128,
        }
    }
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { n: 128, iso: 0.5 }
    }
}

impl Default for ScheduleSection {
    fn default() -> Self {
        let p = ScheduleParams::default();
        ScheduleSection {
            increment_deg: p.increment_deg,
            pitch_limit_deg: p.pitch_limit_deg,
            gaze_limit_deg: p.gaze_limit_deg,
            yaw_set: p.yaw_set,
        }
    }
}

impl From<LrSchedule> for LrSection {
    fn from(s: LrSchedule) -> Self {
        LrSection {
            initial: s.initial,
            factor: s.factor,
            period: s.period,
        }
    }
}

impl From<LrSection> for LrSchedule {
    fn from(s: LrSection) -> Self {
        LrSchedule {
            initial: s.initial,
            factor: s.factor,
            period: s.period,
        }
    }
}

impl Default for LrSection {
    fn default() -> Self {
        LrSchedule::default().into()
    }
}

impl Default for BootstrapSection {
    fn default() -> Self {
        let b = BootstrapConfig::default();
        BootstrapSection {
            yaw_set: b.yaw_set,
            pitch_limit_deg: b.pitch_limit_deg,
            split_ratio: b.split_ratio,
            epochs: b.epochs,
            batch_size: b.batch_size,
            include_source: b.include_source,
            lr: b.lr.into(),
        }
    }
}

impl Default for ToySection {
    fn default() -> Self {
        let b = BenchmarkConfig::default();
        ToySection {
            input_size: b.input_size,
            grid_n: b.grid_n,
            epochs: b.fit.epochs,
            batch_size: b.fit.batch_size,
            lr: b.fit.lr.into(),
        }
    }
}

impl Default for BenchmarkSection {
    fn default() -> Self {
        let b = BenchmarkConfig::default();
        BenchmarkSection {
            train_faces: b.train_faces,
            source_faces: b.source_faces,
            test_faces: b.test_faces,
            train_yaws: b.train_yaws,
            train_pitches: b.train_pitches,
            test_yaws: b.test_yaws,
            bootstrap_pitch_limit_deg: b.bootstrap.pitch_limit_deg,
            yaw_sets: vec![b.bootstrap.yaw_set],
            align: b.eval.align,
        }
    }
}

impl Default for EvalSection {
    fn default() -> Self {
        let icp = IcpParams::default();
        EvalSection {
            align: true,
            normalizer: "landmark_or_proxy".into(),
            icp_max_iters: icp.max_iters,
            icp_rel_tol: icp.rel_tol,
            icp_stride: icp.stride,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::InvalidConfig(m) => Error::InvalidConfig(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Fully resolved TOML, every key present.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the resolved TOML, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        self.camera().validate()?;
        if self.grid.n < 2 || self.toy.grid_n < 2 || self.toy.input_size == 0 {
            return Err(Error::InvalidConfig("grid and input sizes must be at least 2".into()));
        }
        if !self.grid.iso.is_finite() {
            return Err(Error::InvalidConfig("iso level must be finite".into()));
        }
        crate::viewgen::build_schedule(&crate::pose::FaceFrame::canonical(Default::default()), &self.schedule_params())?;
        self.bootstrap_config().validate()?;
        if self.toy.batch_size == 0 {
            return Err(Error::InvalidConfig("toy batch size must be positive".into()));
        }
        LrSchedule::from(self.toy.lr).validate()?;
        for set in &self.benchmark.yaw_sets {
            BootstrapConfig {
                yaw_set: set.clone(),
                pitch_limit_deg: self.benchmark.bootstrap_pitch_limit_deg,
                ..self.bootstrap_config()
            }
            .validate()?;
        }
        let b = &self.benchmark;
        if b.train_faces == 0 || b.source_faces < 2 || b.test_faces == 0 {
            return Err(Error::InvalidConfig(
                "benchmark needs training and test faces and at least two source faces".into(),
            ));
        }
        if b.train_yaws.is_empty() || b.train_pitches.is_empty() || b.test_yaws.is_empty() {
            return Err(Error::InvalidConfig("benchmark pose lists must not be empty".into()));
        }
        self.normalizer()?;
        if self.eval.icp_stride == 0 {
            return Err(Error::InvalidConfig("icp stride must be positive".into()));
        }
        Ok(())
    }

    pub fn camera(&self) -> Camera {
        Camera::square(self.camera.half_extent, self.camera.size)
    }

    pub fn oracle_grid(&self) -> ReconGrid {
        ReconGrid::new(self.grid.n, self.camera.half_extent)
    }

    pub fn schedule_params(&self) -> ScheduleParams {
        ScheduleParams {
            increment_deg: self.schedule.increment_deg,
            pitch_limit_deg: self.schedule.pitch_limit_deg,
            gaze_limit_deg: self.schedule.gaze_limit_deg,
            yaw_set: self.schedule.yaw_set.clone(),
        }
    }

    pub fn bootstrap_config(&self) -> BootstrapConfig {
        let b = &self.bootstrap;
        BootstrapConfig {
            yaw_set: b.yaw_set.clone(),
            pitch_limit_deg: b.pitch_limit_deg,
            increment_deg: self.schedule.increment_deg,
            gaze_limit_deg: self.schedule.gaze_limit_deg,
            split_ratio: b.split_ratio,
            epochs: b.epochs,
            batch_size: b.batch_size,
            lr: b.lr.into(),
            seed: self.seed,
            include_source: b.include_source,
        }
    }

    pub fn normalizer(&self) -> Result<NormalizerMode> {
        match self.eval.normalizer.as_str() {
            "landmark" => Ok(NormalizerMode::Landmark),
            "proxy" => Ok(NormalizerMode::Proxy),
            "landmark_or_proxy" => Ok(NormalizerMode::LandmarkOrProxy),
            other => Err(Error::InvalidConfig(format!("unknown normalizer `{other}`"))),
        }
    }

    pub fn eval_options(&self) -> Result<EvalOptions> {
        Ok(EvalOptions {
            align: self.eval.align,
            mode: self.normalizer()?,
            icp: IcpParams {
                max_iters: self.eval.icp_max_iters,
                rel_tol: self.eval.icp_rel_tol,
                stride: self.eval.icp_stride,
            },
        })
    }

    /// Benchmark settings; the toy model and bootstrap share the run seed.
    pub fn benchmark_config(&self) -> Result<BenchmarkConfig> {
        let b = &self.benchmark;
        Ok(BenchmarkConfig {
            seed: self.seed,
            image_size: self.camera.size,
            half_extent: self.camera.half_extent,
            input_size: self.toy.input_size,
            grid_n: self.toy.grid_n,
            train_faces: b.train_faces,
            train_yaws: b.train_yaws.clone(),
            train_pitches: b.train_pitches.clone(),
            source_faces: b.source_faces,
            test_faces: b.test_faces,
            test_yaws: b.test_yaws.clone(),
            fit: FitConfig {
                epochs: self.toy.epochs,
                batch_size: self.toy.batch_size,
                lr: self.toy.lr.into(),
                seed: self.seed,
            },
            bootstrap: BootstrapConfig {
                pitch_limit_deg: b.bootstrap_pitch_limit_deg,
                ..self.bootstrap_config()
            },
            eval: EvalOptions {
                align: b.align,
                ..self.eval_options()?
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = PipelineConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, PipelineConfig::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(
            PipelineConfig::from_toml_str("sed = 3"),
            Err(Error::InvalidConfig(_))
        ));
        assert!(PipelineConfig::from_toml_str("[camera]\nzoom = 2.0").is_err());
    }

    #[test]
    fn partial_sections_keep_other_defaults() {
        let cfg = PipelineConfig::from_toml_str("seed = 7\n[camera]\nsize = 64\n").unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.camera.size, 64);
        assert_eq!(cfg.camera.half_extent, 1.1);
        assert_eq!(cfg.bootstrap, BootstrapSection::default());
    }

    #[test]
    fn resolved_toml_round_trips_and_hash_tracks_content() {
        let cfg = PipelineConfig::default();
        let back = PipelineConfig::from_toml_str(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_eq!(cfg.hash().len(), 64);
        let other = PipelineConfig { seed: 1, ..cfg.clone() };
        assert_ne!(other.hash(), cfg.hash());
    }

    #[test]
    fn bad_values_rejected() {
        for text in [
            "version = 2",
            "[bootstrap]\nsplit_ratio = 1.0",
            "[bootstrap]\nyaw_set = [15.0]",
            "[eval]\nnormalizer = \"bbox\"",
            "[schedule]\nincrement_deg = 0.0",
        ] {
            assert!(PipelineConfig::from_toml_str(text).is_err(), "{text}");
        }
    }
}
