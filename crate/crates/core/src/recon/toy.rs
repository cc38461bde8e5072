//! Linear-logistic regressor from a downsampled grayscale image to voxel
//! occupancy.
//!
//! Each output cell is an independent logistic regression on the centred
//! pixels plus a bias. Training is minibatch SGD on per-cell binary
//! cross-entropy. Rows are updated in parallel; every row is computed
//! sequentially, so results do not depend on the thread count.

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Vec3, VoxelGrid};
use crate::recon::{ReconGrid, Reconstructor, Trainable};
use crate::render::Image;

pub const TOY_MAGIC: &[u8; 4] = b"TOY1";
const TOY_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ToyRegressor {
    input_size: usize,
    grid: ReconGrid,
    /// Row-major, one row of `input_size² + 1` weights per cell, bias last.
    weights: Vec<f64>,
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Binary cross-entropy of logit `z` against target `y`, stable for large `|z|`.
#[inline]
fn bce(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl ToyRegressor {
    /// Zero-initialized model: predicts 0.5 everywhere.
    pub fn new(input_size: usize, grid: ReconGrid) -> Result<Self> {
        if input_size == 0 || grid.n == 0 {
            return Err(Error::InvalidConfig("toy model sizes must be positive".into()));
        }
        let cells = grid.n.pow(3);
        Ok(ToyRegressor {
            input_size,
            grid,
            weights: vec![0.0; cells * (input_size * input_size + 1)],
        })
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn param_count(&self) -> usize {
        self.weights.len()
    }

    fn row_len(&self) -> usize {
        self.input_size * self.input_size + 1
    }

    /// Centred grayscale pixels followed by the constant 1.
    pub fn features(&self, image: &Image) -> Vec<f64> {
        let mut x: Vec<f64> = image.to_gray(self.input_size).into_iter().map(|g| g - 0.5).collect();
        x.push(1.0);
        x
    }

    fn target_values<'a>(&self, grid: &'a VoxelGrid) -> Result<&'a [f64]> {
        let template = self.grid.template()?;
        if !grid.same_layout(&template) {
            return Err(Error::DimMismatch(format!(
                "target grid {:?} does not match model grid {:?}",
                grid.dims(),
                self.grid.dims()
            )));
        }
        Ok(grid.values())
    }

    fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.weights.par_chunks_exact(self.row_len()).map(|w| dot(w, x)).collect()
    }

    /// One SGD step on precomputed features. Returns the mean per-cell loss
    /// before the step.
    fn step(&mut self, xs: &[&[f64]], ys: &[&[f64]], lr: f64) -> f64 {
        let b = xs.len();
        let scale = lr / b as f64;
        let row_len = self.row_len();
        let row_losses: Vec<f64> = self
            .weights
            .par_chunks_exact_mut(row_len)
            .enumerate()
            .map(|(r, w)| {
                let mut loss = 0.0;
                let mut deltas = Vec::with_capacity(b);
                for (x, y) in xs.iter().zip(ys) {
                    let z = dot(w, x);
                    loss += bce(z, y[r]);
                    deltas.push(sigmoid(z) - y[r]);
                }
                for (x, d) in xs.iter().zip(&deltas) {
                    let s = scale * d;
                    for (wi, xi) in w.iter_mut().zip(x.iter()) {
                        *wi -= s * xi;
                    }
                }
                loss
            })
            .collect();
        row_losses.iter().sum::<f64>() / (b * row_losses.len()) as f64
    }

    fn mean_loss(&self, xs: &[Vec<f64>], ys: &[&[f64]]) -> f64 {
        let row_losses: Vec<f64> = self
            .weights
            .par_chunks_exact(self.row_len())
            .enumerate()
            .map(|(r, w)| xs.iter().zip(ys).map(|(x, y)| bce(dot(w, x), y[r])).sum::<f64>())
            .collect();
        row_losses.iter().sum::<f64>() / (xs.len() * row_losses.len()) as f64
    }

    fn prepare<'a>(&self, data: &[(&Image, &'a VoxelGrid)]) -> Result<(Vec<Vec<f64>>, Vec<&'a [f64]>)> {
        let ys = data.iter().map(|(_, g)| self.target_values(g)).collect::<Result<Vec<_>>>()?;
        let xs = data.par_iter().map(|(img, _)| self.features(img)).collect();
        Ok((xs, ys))
    }
}

impl Reconstructor for ToyRegressor {
    fn reconstruct(&self, image: &Image) -> Result<VoxelGrid> {
        toy_reconstruct(self, image)
    }

    fn grid(&self) -> ReconGrid {
        self.grid
    }
}

impl Trainable for ToyRegressor {
    fn fit_step(&mut self, batch: &[(&Image, &VoxelGrid)], lr: f64) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::InvalidInput("empty batch".into()));
        }
        let (xs, ys) = self.prepare(batch)?;
        let xs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        Ok(self.step(&xs, &ys, lr))
    }

    fn loss(&self, data: &[(&Image, &VoxelGrid)]) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::InvalidInput("empty dataset".into()));
        }
        let (xs, ys) = self.prepare(data)?;
        Ok(self.mean_loss(&xs, &ys))
    }

    fn snapshot(&self) -> Vec<f64> {
        self.weights.clone()
    }

    fn restore(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.weights.len() {
            return Err(Error::DimMismatch(format!(
                "snapshot has {} parameters, model has {}",
                params.len(),
                self.weights.len()
            )));
        }
        self.weights.copy_from_slice(params);
        Ok(())
    }
}

/// Occupancy = logistic(W·x).
pub fn toy_reconstruct(model: &ToyRegressor, image: &Image) -> Result<VoxelGrid> {
    let x = model.features(image);
    let values = model.logits(&x).into_iter().map(sigmoid).collect();
    let t = model.grid.template()?;
    VoxelGrid::new(t.dims(), t.origin(), t.spacing(), values)
}

/// Step-decay learning rate: `initial · factor^⌊epoch / period⌋`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrSchedule {
    pub initial: f64,
    pub factor: f64,
    pub period: usize,
}

impl Default for LrSchedule {
    fn default() -> Self {
        LrSchedule {
            initial: 1e-2,
            factor: 0.5,
            period: 5,
        }
    }
}

impl LrSchedule {
    pub fn lr(&self, epoch: usize) -> f64 {
        self.initial * self.factor.powi((epoch / self.period.max(1)) as i32)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.initial >= 0.0 && self.initial.is_finite()) || !(self.factor > 0.0) || self.period == 0 {
            return Err(Error::InvalidConfig("learning-rate schedule needs initial ≥ 0, factor > 0, period ≥ 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: LrSchedule,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            epochs: 20,
            batch_size: 32,
            lr: LrSchedule::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub lr: f64,
    /// Mean of the batch losses seen during the epoch.
    pub train_loss: f64,
}

/// Shuffled minibatch SGD. The shuffle stream is seeded once, so a run is
/// reproducible from `(seed, dataset order)`.
pub fn toy_fit(
    model: &mut ToyRegressor,
    dataset: &[(&Image, &VoxelGrid)],
    config: &FitConfig,
) -> Result<Vec<EpochStats>> {
    let mut trainer = Trainer::new(model, dataset, config)?;
    (0..config.epochs).map(|e| Ok(trainer.epoch(model, e))).collect()
}

/// Epoch-by-epoch driver with features computed once.
pub(crate) struct Trainer<'a> {
    xs: Vec<Vec<f64>>,
    ys: Vec<&'a [f64]>,
    order: Vec<usize>,
    rng: ChaCha8Rng,
    config: FitConfig,
}

impl<'a> Trainer<'a> {
    pub(crate) fn new(
        model: &ToyRegressor,
        dataset: &[(&Image, &'a VoxelGrid)],
        config: &FitConfig,
    ) -> Result<Self> {
        config.lr.validate()?;
        if config.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be positive".into()));
        }
        if dataset.is_empty() {
            return Err(Error::InvalidInput("empty training set".into()));
        }
        let (xs, ys) = model.prepare(dataset)?;
        Ok(Trainer {
            order: (0..xs.len()).collect(),
            xs,
            ys,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config: config.clone(),
        })
    }

    pub(crate) fn epoch(&mut self, model: &mut ToyRegressor, epoch: usize) -> EpochStats {
        let lr = self.config.lr.lr(epoch);
        self.order.shuffle(&mut self.rng);
        let mut total = 0.0;
        for chunk in self.order.chunks(self.config.batch_size) {
            let xs: Vec<&[f64]> = chunk.iter().map(|&i| self.xs[i].as_slice()).collect();
            let ys: Vec<&[f64]> = chunk.iter().map(|&i| self.ys[i]).collect();
            total += model.step(&xs, &ys, lr) * chunk.len() as f64;
        }
        EpochStats {
            epoch,
            lr,
            train_loss: total / self.order.len() as f64,
        }
    }
}

fn toy_err(msg: impl Into<String>) -> Error {
    Error::format("TOY1", msg)
}

/// TOY1: magic, u32 version, u32 input size, u32 grid n, f64 bounds min and
/// max (3 each), u64 parameter count, then the f64 parameters. All
/// little-endian.
pub fn write_toy<W: Write>(mut w: W, model: &ToyRegressor) -> Result<()> {
    let mut buf = Vec::with_capacity(72 + 8 * model.weights.len());
    buf.extend_from_slice(TOY_MAGIC);
    buf.extend_from_slice(&TOY_VERSION.to_le_bytes());
    buf.extend_from_slice(&(model.input_size as u32).to_le_bytes());
    buf.extend_from_slice(&(model.grid.n as u32).to_le_bytes());
    for x in model.grid.bounds.min.iter().chain(model.grid.bounds.max.iter()) {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    buf.extend_from_slice(&(model.weights.len() as u64).to_le_bytes());
    for x in &model.weights {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&buf).map_err(|e| Error::io("<toy>", e))
}

pub fn read_toy<R: Read>(mut r: R) -> Result<ToyRegressor> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|e| Error::io("<toy>", e))?;
    if bytes.len() < 72 || &bytes[..4] != TOY_MAGIC {
        return Err(toy_err("bad header"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    if u32_at(4) != TOY_VERSION {
        return Err(toy_err(format!("unsupported version {}", u32_at(4))));
    }
    let input_size = u32_at(8) as usize;
    let n = u32_at(12) as usize;
    let min = Vec3::new(f64_at(16), f64_at(24), f64_at(32));
    let max = Vec3::new(f64_at(40), f64_at(48), f64_at(56));
    let count = u64::from_le_bytes(bytes[64..72].try_into().unwrap()) as usize;
    let grid = ReconGrid {
        n,
        bounds: Aabb::new(min, max)?,
    };
    let mut model = ToyRegressor::new(input_size, grid)?;
    if count != model.weights.len() || bytes.len() != 72 + 8 * count {
        return Err(toy_err("parameter count does not match header"));
    }
    for (w, c) in model.weights.iter_mut().zip(bytes[72..].chunks_exact(8)) {
        *w = f64::from_le_bytes(c.try_into().unwrap());
    }
    if model.weights.iter().any(|w| !w.is_finite()) {
        return Err(toy_err("non-finite parameter"));
    }
    Ok(model)
}

pub fn write_toy_file(path: &Path, model: &ToyRegressor) -> Result<()> {
    let mut w = crate::io::create(path)?;
    write_toy(&mut w, model)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_toy_file(path: &Path) -> Result<ToyRegressor> {
    read_toy(crate::io::open(path)?)
}
