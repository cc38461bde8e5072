//! Desk-scale bias and bootstrap benchmark on synthetic faces.
//!
//! A toy regressor is trained on near-frontal photos only, then fine-tuned
//! on pairs bootstrapped from its own reconstructions of unlabeled frontal
//! photos. Both models are scored on held-out faces across yaw.

use rayon::prelude::*;

use crate::bootstrap::{fine_tune, generate_pairs, split_pairs, BootstrapConfig, FineTuneResult};
use crate::error::{Error, Result};
use crate::geometry::{TriangleMesh, VoxelGrid};
use crate::metrics::{evaluate_pairs, EvalOptions, EvalPair, NmeReport};
use crate::recon::{
    extract_surface, generate_synthetic_face, photograph_face, toy_fit, EpochStats, FitConfig, ReconGrid,
    Reconstructor, SyntheticFaceSpec, ToyRegressor, Trainable,
};
use crate::render::{Camera, Image};

/// `|yaw|` bucket edges used for bias summaries.
pub const YAW_BUCKET_EDGES: [f64; 4] = [0.0, 20.0, 40.0, 60.0];

/// Which face pool a synthetic face belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceRole {
    /// Labeled near-frontal training photos.
    Train = 1,
    /// Unlabeled frontal photos that seed the bootstrap.
    Source = 2,
    /// Held-out evaluation faces.
    Test = 3,
}

/// Face seed for the `i`-th face of a pool; pools never share faces.
pub fn face_seed(run_seed: u64, role: FaceRole, i: usize) -> u64 {
    // splitmix64 finalizer over a packed key
    let mut z = run_seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((role as u64) << 40)
        .wrapping_add(i as u64);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub seed: u64,
    pub image_size: usize,
    /// Half extent of the camera window and of the reconstruction grid.
    pub half_extent: f64,
    pub input_size: usize,
    pub grid_n: usize,
    pub train_faces: usize,
    pub train_yaws: Vec<f64>,
    pub train_pitches: Vec<f64>,
    pub source_faces: usize,
    pub test_faces: usize,
    pub test_yaws: Vec<f64>,
    pub fit: FitConfig,
    pub bootstrap: BootstrapConfig,
    /// Scoring of held-out predictions; unaligned by default.
    pub eval: EvalOptions,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            seed: 0,
            image_size: 128,
            half_extent: 1.1,
            input_size: 16,
            grid_n: 20,
            train_faces: 60,
            train_yaws: vec![-10.0, -5.0, 0.0, 5.0, 10.0],
            train_pitches: vec![-10.0, 0.0, 10.0],
            source_faces: 40,
            test_faces: 20,
            test_yaws: (0..6).flat_map(|k| [-(5.0 + 10.0 * k as f64), 5.0 + 10.0 * k as f64]).collect(),
            fit: FitConfig::default(),
            bootstrap: BootstrapConfig {
                pitch_limit_deg: 0.0,
                ..BootstrapConfig::default()
            },
            // Rigid alignment would cancel the pose error that a
            // frontal-only model makes, hiding the bias being measured.
            eval: EvalOptions {
                align: false,
                ..EvalOptions::default()
            },
        }
    }
}

impl BenchmarkConfig {
    pub fn camera(&self) -> Camera {
        Camera::square(self.half_extent, self.image_size)
    }

    pub fn recon_grid(&self) -> ReconGrid {
        ReconGrid::new(self.grid_n, self.half_extent)
    }

    fn face(&self, role: FaceRole, i: usize) -> Result<(SyntheticFaceSpec, TriangleMesh)> {
        let spec = SyntheticFaceSpec::random(face_seed(self.seed, role, i));
        let mesh = generate_synthetic_face(&spec)?;
        Ok((spec, mesh))
    }

    fn photo(&self, spec: &SyntheticFaceSpec, mesh: &TriangleMesh, yaw: f64, pitch: f64) -> Result<(Image, TriangleMesh)> {
        photograph_face(spec, mesh, yaw, pitch, &self.camera())
    }
}

/// Near-frontal labeled photos with their voxelized ground truth, face-major.
pub fn frontal_training_set(cfg: &BenchmarkConfig) -> Result<Vec<(Image, VoxelGrid)>> {
    let grid = cfg.recon_grid();
    let per_face: Vec<Result<Vec<(Image, VoxelGrid)>>> = (0..cfg.train_faces)
        .into_par_iter()
        .map(|i| {
            let (spec, mesh) = cfg.face(FaceRole::Train, i)?;
            let mut out = Vec::new();
            for &yaw in &cfg.train_yaws {
                for &pitch in &cfg.train_pitches {
                    let (img, posed) = cfg.photo(&spec, &mesh, yaw, pitch)?;
                    out.push((img, grid.voxelize(&posed)?));
                }
            }
            Ok(out)
        })
        .collect();
    Ok(per_face.into_iter().collect::<Result<Vec<_>>>()?.into_iter().flatten().collect())
}

/// Unlabeled frontal photos of the source pool.
pub fn source_images(cfg: &BenchmarkConfig) -> Result<Vec<Image>> {
    (0..cfg.source_faces)
        .into_par_iter()
        .map(|i| {
            let (spec, mesh) = cfg.face(FaceRole::Source, i)?;
            Ok(cfg.photo(&spec, &mesh, 0.0, 0.0)?.0)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct TestSample {
    pub id: String,
    pub image: Image,
    /// Posed ground-truth mesh, with landmarks.
    pub gt: TriangleMesh,
    pub yaw_deg: f64,
    pub pitch_deg: f64,
}

/// Held-out faces photographed at every test yaw (pitch 0).
pub fn test_set(cfg: &BenchmarkConfig) -> Result<Vec<TestSample>> {
    let per_face: Vec<Result<Vec<TestSample>>> = (0..cfg.test_faces)
        .into_par_iter()
        .map(|i| {
            let (spec, mesh) = cfg.face(FaceRole::Test, i)?;
            cfg.test_yaws
                .iter()
                .map(|&yaw| {
                    let (image, gt) = cfg.photo(&spec, &mesh, yaw, 0.0)?;
                    Ok(TestSample {
                        id: format!("{i:04}_y{:+04}", yaw.round() as i64),
                        image,
                        gt,
                        yaw_deg: yaw,
                        pitch_deg: 0.0,
                    })
                })
                .collect()
        })
        .collect();
    Ok(per_face.into_iter().collect::<Result<Vec<_>>>()?.into_iter().flatten().collect())
}

/// Fresh toy model fitted to `data`.
pub fn train_biased_model(cfg: &BenchmarkConfig, data: &[(Image, VoxelGrid)]) -> Result<(ToyRegressor, Vec<EpochStats>)> {
    let mut model = ToyRegressor::new(cfg.input_size, cfg.recon_grid())?;
    let samples: Vec<(&Image, &VoxelGrid)> = data.iter().map(|(i, g)| (i, g)).collect();
    let log = toy_fit(&mut model, &samples, &cfg.fit)?;
    Ok((model, log))
}

/// Reconstructs every test photo and scores it against the posed ground truth.
pub fn evaluate_model(model: &dyn Reconstructor, tests: &[TestSample], eval: &EvalOptions) -> Result<NmeReport> {
    let pairs: Vec<EvalPair> = tests
        .par_iter()
        .map(|t| {
            // An unusable prediction is scored as a failed row.
            let pred = model
                .reconstruct(&t.image)
                .and_then(|g| extract_surface(&g))
                .unwrap_or_default();
            EvalPair {
                id: t.id.clone(),
                pred,
                gt: t.gt.clone(),
                yaw_deg: t.yaw_deg,
                pitch_deg: t.pitch_deg,
            }
        })
        .collect();
    evaluate_pairs(&pairs, eval)
}

/// One bootstrapped variant of the benchmark.
#[derive(Debug, Clone)]
pub struct BootstrapVariant {
    pub yaw_set: Vec<f64>,
    pub pairs: usize,
    pub train_pairs: usize,
    pub fine_tune: FineTuneResult,
    /// Fine-tuned model at its best-validation epoch.
    pub model: ToyRegressor,
    pub report: NmeReport,
}

#[derive(Debug, Clone)]
pub struct BenchmarkRun {
    pub fit_log: Vec<EpochStats>,
    pub before: NmeReport,
    pub variants: Vec<BootstrapVariant>,
}

impl BenchmarkRun {
    /// Trains the biased model, evaluates it, then bootstraps and
    /// re-evaluates once per yaw set. Fine-tuned models keep their
    /// best-validation snapshot.
    pub fn execute(cfg: &BenchmarkConfig, yaw_sets: &[Vec<f64>]) -> Result<(Self, ToyRegressor)> {
        let data = frontal_training_set(cfg)?;
        let (base, fit_log) = train_biased_model(cfg, &data)?;
        drop(data);
        let tests = test_set(cfg)?;
        let before = evaluate_model(&base, &tests, &cfg.eval)?;
        let sources = source_images(cfg)?;
        let camera = cfg.camera();
        let mut variants = Vec::new();
        for yaw_set in yaw_sets {
            let bcfg = BootstrapConfig {
                yaw_set: yaw_set.clone(),
                ..cfg.bootstrap.clone()
            };
            let set = generate_pairs(&base, &sources, &bcfg, &camera)?;
            let pairs = set.pairs.len();
            if pairs == 0 {
                return Err(Error::DegenerateInput("bootstrap produced no pairs".into()));
            }
            let (train, val) = split_pairs(set.pairs, bcfg.split_ratio, bcfg.seed)?;
            let mut model = base.clone();
            let ft = fine_tune(&mut model, &train, &val, &bcfg)?;
            if let Some(best) = ft.best_snapshot() {
                model.restore(best)?;
            }
            let report = evaluate_model(&model, &tests, &cfg.eval)?;
            variants.push(BootstrapVariant {
                yaw_set: yaw_set.clone(),
                pairs,
                train_pairs: train.len(),
                fine_tune: ft,
                model,
                report,
            });
        }
        Ok((
            BenchmarkRun {
                fit_log,
                before,
                variants,
            },
            base,
        ))
    }
}
