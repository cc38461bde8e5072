//! Self-supervised training data from a reconstructor's own output.
//!
//! For each source image the reconstruction is meshed, its face frame is
//! estimated, and the mesh is rotated through a constrained view schedule.
//! Every rotated mesh is rendered in front of the source image (mapped onto
//! the backplane) and voxelized, giving a new (image, volume) pair. The
//! pairs fine-tune the same reconstructor.

mod benchmark;
mod dataset;

pub use benchmark::{
    evaluate_model, face_seed, frontal_training_set, test_set, train_biased_model, BenchmarkConfig,
    source_images, BenchmarkRun, BootstrapVariant, FaceRole, TestSample, YAW_BUCKET_EDGES,
};
pub use dataset::{read_pair_dir, write_pair_dir, PAIR_MANIFEST};

use std::io::Write;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{TriangleMesh, VoxelGrid};
use crate::metrics::{icp_align_indexed, nme_indexed, normalizer, BvhIndex, IcpParams, NmeReport, NmeRow, NormalizerMode};
use crate::pose::estimate_face_frame;
use crate::recon::{extract_surface, LrSchedule, Reconstructor, Trainable};
use crate::render::{project_colors, rasterize, sweep_backplane, Backplane, Camera, Image, SceneMesh};
use crate::viewgen::{apply_transform, build_schedule, csv_err, inverse, RigidTransform, ScheduleParams, ViewSchedule};

/// Where a pair came from.
#[derive(Debug, Clone, PartialEq)]
pub struct PairProvenance {
    /// Position of the source image in the input list; the split groups on it.
    pub source_index: usize,
    pub source_id: String,
    pub transform: RigidTransform,
    pub yaw_deg: f64,
    pub pitch_deg: f64,
}

/// A rendered novel view and the volume of the transformed reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub image: Image,
    pub target: VoxelGrid,
    pub provenance: PairProvenance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapConfig {
    pub yaw_set: Vec<f64>,
    pub pitch_limit_deg: f64,
    pub increment_deg: f64,
    pub gaze_limit_deg: f64,
    /// Fraction of source images whose pairs go to training.
    pub split_ratio: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: LrSchedule,
    pub seed: u64,
    /// Also emit the untransformed source pair.
    pub include_source: bool,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            yaw_set: vec![-60.0, -40.0, -20.0, 20.0, 40.0, 60.0],
            pitch_limit_deg: 20.0,
            increment_deg: 10.0,
            gaze_limit_deg: 90.0,
            split_ratio: 0.9,
            epochs: 15,
            batch_size: 32,
            lr: LrSchedule::default(),
            seed: 0,
            include_source: false,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::InvalidConfig(format!("split ratio {} outside (0, 1)", self.split_ratio)));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be positive".into()));
        }
        self.lr.validate()?;
        // Checks the increment and yaw lattice.
        build_schedule(&crate::pose::FaceFrame::canonical(Default::default()), &self.schedule_params())?;
        Ok(())
    }

    pub fn schedule_params(&self) -> ScheduleParams {
        ScheduleParams {
            increment_deg: self.increment_deg,
            pitch_limit_deg: self.pitch_limit_deg,
            gaze_limit_deg: self.gaze_limit_deg,
            yaw_set: Some(self.yaw_set.clone()),
        }
    }
}

/// Generated pairs plus the source images that had to be skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSet {
    pub pairs: Vec<TrainingPair>,
    /// `(source index, reason)`.
    pub skipped: Vec<(usize, String)>,
}

/// Everything needed to render novel views of one reconstruction.
struct Staged {
    colored: TriangleMesh,
    schedule: ViewSchedule,
    backplane: Backplane,
}

fn stage(
    recon: &dyn Reconstructor,
    image: &Image,
    params: &ScheduleParams,
    fixed: Option<&ViewSchedule>,
    camera: &Camera,
) -> Result<Staged> {
    let mesh = extract_surface(&recon.reconstruct(image)?)?;
    if mesh.triangles.is_empty() {
        return Err(Error::DegenerateInput("reconstruction has no surface".into()));
    }
    let frame = estimate_face_frame(&mesh)?;
    let schedule = match fixed {
        Some(s) => s.clone(),
        None => build_schedule(&frame, params)?,
    };
    let colored = project_colors(&mesh, image, camera)?;
    let backplane = sweep_backplane(&colored, &frame, image, &schedule, camera)?;
    Ok(Staged {
        colored,
        schedule,
        backplane,
    })
}

/// Renders `mesh` in front of `backplane`, snapped to 8 bits like any stored
/// image.
pub fn render_view(mesh: &TriangleMesh, backplane: &Backplane, camera: &Camera) -> Result<Image> {
    let view = rasterize(&[SceneMesh::colored(mesh), backplane.scene_mesh()], camera)?;
    Ok(view.image.quantized())
}

fn pairs_for_image(
    recon: &dyn Reconstructor,
    index: usize,
    image: &Image,
    config: &BootstrapConfig,
    camera: &Camera,
) -> Result<Vec<TrainingPair>> {
    let staged = stage(recon, image, &config.schedule_params(), None, camera)?;
    let grid = recon.grid();
    let source_id = image.content_id();
    let mut out = Vec::with_capacity(staged.schedule.len() + 1);
    if config.include_source {
        out.push(TrainingPair {
            image: image.clone(),
            target: grid.voxelize(&staged.colored)?,
            provenance: PairProvenance {
                source_index: index,
                source_id: source_id.clone(),
                transform: RigidTransform::identity(),
                yaw_deg: 0.0,
                pitch_deg: 0.0,
            },
        });
    }
    for entry in &staged.schedule.entries {
        let moved = apply_transform(&staged.colored, &entry.transform);
        out.push(TrainingPair {
            image: render_view(&moved, &staged.backplane, camera)?,
            target: grid.voxelize(&moved)?,
            provenance: PairProvenance {
                source_index: index,
                source_id: source_id.clone(),
                transform: entry.transform,
                yaw_deg: entry.yaw_deg,
                pitch_deg: entry.pitch_deg,
            },
        });
    }
    Ok(out)
}

/// Builds bootstrap pairs for every source image, image-major in schedule
/// order. Images whose reconstruction cannot be processed are skipped and
/// logged.
pub fn generate_pairs(
    recon: &dyn Reconstructor,
    images: &[Image],
    config: &BootstrapConfig,
    camera: &Camera,
) -> Result<PairSet> {
    config.validate()?;
    camera.validate()?;
    let results: Vec<Result<Vec<TrainingPair>>> = images
        .par_iter()
        .enumerate()
        .map(|(i, img)| pairs_for_image(recon, i, img, config, camera))
        .collect();
    let mut set = PairSet {
        pairs: Vec::new(),
        skipped: Vec::new(),
    };
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(p) => set.pairs.extend(p),
            Err(e) => {
                warn!("skipping source image {i}: {e}");
                set.skipped.push((i, e.to_string()));
            }
        }
    }
    Ok(set)
}

/// Seeded group split: all pairs of one source image land on the same
/// side. With two or more groups each side gets at least one.
pub fn split_pairs(pairs: Vec<TrainingPair>, ratio: f64, seed: u64) -> Result<(Vec<TrainingPair>, Vec<TrainingPair>)> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("no pairs to split".into()));
    }
    let groups: Vec<usize> = pairs.iter().map(|p| p.provenance.source_index).collect();
    let in_train = split_groups(&groups, ratio, seed)?;
    let (train, val): (Vec<_>, Vec<_>) = pairs.into_iter().zip(in_train).partition(|(_, t)| *t);
    Ok((train.into_iter().map(|p| p.0).collect(), val.into_iter().map(|p| p.0).collect()))
}

/// Per-item train flags for a group split.
pub fn split_groups(groups: &[usize], ratio: f64, seed: u64) -> Result<Vec<bool>> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidConfig(format!("split ratio {ratio} outside (0, 1)")));
    }
    let mut ids: Vec<usize> = groups.to_vec();
    ids.sort_unstable();
    ids.dedup();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n = ids.len();
    let n_train = if n < 2 {
        n
    } else {
        ((ratio * n as f64).round() as usize).clamp(1, n - 1)
    };
    let train: std::collections::HashSet<usize> = ids[..n_train].iter().copied().collect();
    Ok(groups.iter().map(|g| train.contains(g)).collect())
}

/// Epoch after which the fixed-epoch snapshot is taken.
pub const FIXED_EPOCH: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct FineTuneEpoch {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FineTuneResult {
    pub log: Vec<FineTuneEpoch>,
    /// Parameters after each epoch.
    pub snapshots: Vec<Vec<f64>>,
    /// Epoch with the lowest validation loss (the last epoch without
    /// validation data). `None` for zero epochs.
    pub best_epoch: Option<usize>,
}

impl FineTuneResult {
    pub fn best_snapshot(&self) -> Option<&[f64]> {
        self.best_epoch.map(|e| self.snapshots[e].as_slice())
    }

    /// Snapshot after [`FIXED_EPOCH`] epochs, when that many ran.
    pub fn fixed_epoch_snapshot(&self) -> Option<&[f64]> {
        self.snapshots.get(FIXED_EPOCH - 1).map(Vec::as_slice)
    }

    pub fn write_log_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["epoch", "lr", "train_loss", "val_loss"]).map_err(csv_err)?;
        for e in &self.log {
            wr.write_record([
                e.epoch.to_string(),
                e.lr.to_string(),
                e.train_loss.to_string(),
                e.val_loss.map(|v| v.to_string()).unwrap_or_default(),
            ])
            .map_err(csv_err)?;
        }
        wr.flush().map_err(|e| Error::io("fine-tune log", e))
    }
}

fn as_samples(pairs: &[TrainingPair]) -> Vec<(&Image, &VoxelGrid)> {
    pairs.iter().map(|p| (&p.image, &p.target)).collect()
}

/// Minibatch fine-tuning with step-decayed learning rate. The model is left
/// at its final-epoch parameters; every epoch's snapshot is returned.
pub fn fine_tune<M: Trainable + ?Sized>(
    model: &mut M,
    train: &[TrainingPair],
    val: &[TrainingPair],
    config: &BootstrapConfig,
) -> Result<FineTuneResult> {
    config.lr.validate()?;
    if config.batch_size == 0 {
        return Err(Error::InvalidConfig("batch size must be positive".into()));
    }
    if train.is_empty() && config.epochs > 0 {
        return Err(Error::InvalidInput("no training pairs".into()));
    }
    let train_s = as_samples(train);
    let val_s = as_samples(val);
    let mut order: Vec<usize> = (0..train_s.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut result = FineTuneResult {
        log: Vec::new(),
        snapshots: Vec::new(),
        best_epoch: None,
    };
    let mut best = f64::INFINITY;
    for epoch in 0..config.epochs {
        let lr = config.lr.lr(epoch);
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<(&Image, &VoxelGrid)> = chunk.iter().map(|&i| train_s[i]).collect();
            total += model.fit_step(&batch, lr)? * chunk.len() as f64;
        }
        let val_loss = if val_s.is_empty() { None } else { Some(model.loss(&val_s)?) };
        if !total.is_finite() {
            return Err(Error::Numerical(format!("training loss diverged in epoch {epoch}")));
        }
        let score = val_loss.unwrap_or(-(epoch as f64));
        if score < best {
            best = score;
            result.best_epoch = Some(epoch);
        }
        result.log.push(FineTuneEpoch {
            epoch,
            lr,
            train_loss: total / train_s.len() as f64,
            val_loss,
        });
        result.snapshots.push(model.snapshot());
    }
    Ok(result)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelfReconOptions {
    /// ICP-align the back-transformed mesh onto the first reconstruction.
    pub align: bool,
    pub mode: NormalizerMode,
    pub icp: IcpParams,
    /// Views used for every image in place of the per-image lattice.
    pub schedule: Option<ViewSchedule>,
}

impl Default for SelfReconOptions {
    fn default() -> Self {
        SelfReconOptions {
            align: false,
            mode: NormalizerMode::LandmarkOrProxy,
            icp: IcpParams::default(),
            schedule: None,
        }
    }
}

fn row_id(image: usize, yaw: f64, pitch: f64) -> String {
    format!("{image:04}_y{:+04}_p{:+03}", yaw.round() as i64, pitch.round() as i64)
}

fn failed_row(id: String, yaw: f64, pitch: f64, e: &Error, aligned: bool) -> NmeRow {
    NmeRow {
        id,
        yaw_deg: yaw,
        pitch_deg: pitch,
        nme: None,
        aligned,
        flags: vec![format!("error:{}", e.code())],
    }
}

/// Reconstruct, rotate, render, reconstruct again, rotate back and compare
/// with the first reconstruction. Views are scheduled per image from the
/// estimated frame of its first reconstruction. Failures become flagged
/// rows; a source image that cannot be staged yields one row at yaw 0.
pub fn self_reconstruction_experiment(
    recon: &dyn Reconstructor,
    images: &[Image],
    params: &ScheduleParams,
    camera: &Camera,
    options: &SelfReconOptions,
) -> Result<NmeReport> {
    if images.is_empty() {
        return Err(Error::InvalidInput("no images".into()));
    }
    camera.validate()?;
    let mut rows = Vec::new();
    for (i, image) in images.iter().enumerate() {
        let staged = stage(recon, image, params, options.schedule.as_ref(), camera).and_then(|s| {
            let index = BvhIndex::new(&s.colored)?;
            let mut flags = Vec::new();
            let d = normalizer(&s.colored, options.mode, &mut flags)?;
            Ok((s, index, d, flags))
        });
        let (staged, index, d, flags) = match staged {
            Ok(s) => s,
            Err(e) => {
                warn!("self-reconstruction: skipping image {i}: {e}");
                rows.push(failed_row(row_id(i, 0.0, 0.0), 0.0, 0.0, &e, options.align));
                continue;
            }
        };
        let image_rows: Vec<NmeRow> = staged
            .schedule
            .entries
            .par_iter()
            .map(|entry| {
                let id = row_id(i, entry.yaw_deg, entry.pitch_deg);
                let result = (|| -> Result<f64> {
                    let moved = apply_transform(&staged.colored, &entry.transform);
                    let view = render_view(&moved, &staged.backplane, camera)?;
                    let second = extract_surface(&recon.reconstruct_rendered(&view, &moved)?)?;
                    if second.triangles.is_empty() {
                        return Err(Error::DegenerateInput("second reconstruction has no surface".into()));
                    }
                    let mut back = apply_transform(&second, &inverse(&entry.transform));
                    if options.align {
                        let fit = icp_align_indexed(&back, &staged.colored, &index, &options.icp)?;
                        back = apply_transform(&back, &fit.transform);
                    }
                    nme_indexed(&back, &index, d)
                })();
                match result {
                    Ok(v) => NmeRow {
                        id,
                        yaw_deg: entry.yaw_deg,
                        pitch_deg: entry.pitch_deg,
                        nme: Some(v),
                        aligned: options.align,
                        flags: flags.clone(),
                    },
                    Err(e) => failed_row(id, entry.yaw_deg, entry.pitch_deg, &e, options.align),
                }
            })
            .collect();
        rows.extend(image_rows);
    }
    Ok(NmeReport::from_rows(rows))
}
