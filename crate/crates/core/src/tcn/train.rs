use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::adam::{adam_step, AdamState};
use super::net::{loss_and_grad, Mode};
use super::{NormStats, TcnConfig, TcnError, TcnModel};
use crate::pipeline::WindowedDataset;

/// How training items are grouped into mini-batches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Batching {
    /// Runs of consecutive items of one recording, at a random phase each
    /// epoch; batch order shuffled. Overlapping windows share one dense pass.
    Contiguous,
    /// Items drawn uniformly without replacement.
    Random,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub val_fraction: f64,
    pub seed: u64,
    /// Smallest validation MSE decrease (deg^2) that counts as improvement.
    pub min_delta: f64,
    pub batching: Batching,
    /// Start the readout bias at the training-target mean.
    pub init_head_from_targets: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.001,
            batch: 32,
            max_epochs: 50,
            patience: 5,
            val_fraction: 0.1,
            seed: 0,
            min_delta: 0.0,
            batching: Batching::Contiguous,
            init_head_from_targets: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TcnError> {
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(TcnError::InvalidConfig("val_fraction must lie in (0, 1)"));
        }
        if self.patience > self.max_epochs {
            return Err(TcnError::InvalidConfig(
                "patience must not exceed max_epochs",
            ));
        }
        if self.batch == 0 || self.max_epochs == 0 {
            return Err(TcnError::InvalidConfig(
                "batch and max_epochs must be positive",
            ));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(TcnError::InvalidConfig("lr must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean mini-batch loss with dropout active.
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose weights were returned.
    pub best_epoch: usize,
    pub stopped_early: bool,
    pub train_items: usize,
    pub val_items: usize,
}

impl TrainHistory {
    pub fn best_val_loss(&self) -> f64 {
        self.epochs[self.best_epoch - 1].val_loss
    }
}

/// Contiguous tail of each recording's items goes to validation. Datasets of
/// single-item recordings fall back to the tail of the whole item list.
fn val_split(ds: &WindowedDataset, frac: f64) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut val = Vec::new();
    for g in ds.by_recording() {
        let n = g.len();
        let nv = (crate::math::round(frac * n as f64) as usize).min(n.saturating_sub(1));
        train.extend_from_slice(&g[..n - nv]);
        val.extend_from_slice(&g[n - nv..]);
    }
    if val.is_empty() && ds.len() > 1 {
        let nv = (crate::math::ceil(frac * ds.len() as f64) as usize).clamp(1, ds.len() - 1);
        train = (0..ds.len() - nv).collect();
        val = (ds.len() - nv..ds.len()).collect();
    }
    (train, val)
}

fn batches(
    ds: &WindowedDataset,
    train: &[usize],
    tcfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<usize>> {
    let b = tcfg.batch;
    let mut out: Vec<Vec<usize>> = match tcfg.batching {
        Batching::Random => {
            let mut idx = train.to_vec();
            idx.shuffle(rng);
            idx.chunks(b).map(<[usize]>::to_vec).collect()
        }
        Batching::Contiguous => {
            let mut per_rec: Vec<Vec<usize>> = alloc::vec![Vec::new(); ds.recordings.len()];
            for &i in train {
                per_rec[ds.items[i].rec].push(i);
            }
            let mut out = Vec::new();
            for g in per_rec.iter().filter(|g| !g.is_empty()) {
                let phase = rng.random_range(0..b.min(g.len()));
                if phase > 0 {
                    out.push(g[..phase].to_vec());
                }
                out.extend(g[phase..].chunks(b).map(<[usize]>::to_vec));
            }
            out
        }
    };
    out.shuffle(rng);
    out
}

fn target_mean(ds: &WindowedDataset, idx: &[usize]) -> [f64; crate::JOINT_ANGLES] {
    let mut m = [0.0; crate::JOINT_ANGLES];
    for &i in idx {
        for (a, t) in m.iter_mut().zip(&ds.items[i].target) {
            *a += t;
        }
    }
    m.map(|s| s / idx.len() as f64)
}

fn run(
    mut model: TcnModel,
    ds: &WindowedDataset,
    tcfg: &TrainConfig,
    fit: bool,
) -> Result<(TcnModel, TrainHistory), TcnError> {
    tcfg.validate()?;
    let (train_idx, val_idx) = val_split(ds, tcfg.val_fraction);
    if train_idx.len() < tcfg.batch || val_idx.is_empty() {
        return Err(TcnError::DatasetTooSmall {
            needed: tcfg.batch + 1,
            available: ds.len(),
        });
    }
    if ds
        .items
        .iter()
        .any(|it| !it.target.iter().all(|x| x.is_finite()))
    {
        return Err(TcnError::NonFiniteInput);
    }
    if fit {
        model.norm = NormStats::fit(ds, &train_idx);
        if tcfg.init_head_from_targets {
            model
                .weights
                .head
                .bias
                .copy_from_slice(&target_mean(ds, &train_idx));
        }
    }
    let merge = ds.window_len >= model.receptive_field();
    let val_segments = ds.segments(&val_idx, merge);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(tcfg.seed);
    shuffle_rng.set_stream(2);
    let mut drop_rng = ChaCha8Rng::seed_from_u64(tcfg.seed);
    drop_rng.set_stream(1);

    let mut adam = AdamState::new(&model.weights);
    let mut best = (f64::INFINITY, model.weights.clone(), 0usize);
    let mut history = TrainHistory {
        epochs: Vec::new(),
        best_epoch: 0,
        stopped_early: false,
        train_items: train_idx.len(),
        val_items: val_idx.len(),
    };
    let mut wait = 0;
    for epoch in 1..=tcfg.max_epochs {
        let mut sum = 0.0;
        let mut count = 0usize;
        for batch in batches(ds, &train_idx, tcfg, &mut shuffle_rng) {
            let segs = ds.segments(&batch, merge);
            let (loss, grads) = loss_and_grad(&model, &segs, Mode::Train, &mut drop_rng)?;
            if !loss.is_finite() || !grads.is_finite() {
                return Err(TcnError::NonFiniteLoss { epoch });
            }
            adam_step(&mut model.weights, &grads, &mut adam, tcfg.lr)?;
            sum += loss * batch.len() as f64;
            count += batch.len();
        }
        let val_loss = model.mse(&val_segments)?;
        if !val_loss.is_finite() {
            return Err(TcnError::NonFiniteLoss { epoch });
        }
        history.epochs.push(EpochRecord {
            epoch,
            train_loss: sum / count as f64,
            val_loss,
        });
        if val_loss < best.0 - tcfg.min_delta {
            best = (val_loss, model.weights.clone(), epoch);
            wait = 0;
        } else {
            wait += 1;
            if wait >= tcfg.patience {
                history.stopped_early = epoch < tcfg.max_epochs;
                break;
            }
        }
    }
    model.weights = best.1;
    history.best_epoch = best.2.max(1);
    Ok((model, history))
}

/// Train a fresh network: He-uniform init from `tcfg.seed`, input scaling
/// fitted on the training split, early stopping on the validation tail.
pub fn train(
    ds: &WindowedDataset,
    config: TcnConfig,
    tcfg: &TrainConfig,
) -> Result<(TcnModel, TrainHistory), TcnError> {
    config.validate()?;
    if ds.channels() != config.in_channels || ds.window_len != config.window_len {
        return Err(TcnError::ConfigMismatch(
            "dataset shape differs from the config",
        ));
    }
    let mut init_rng = ChaCha8Rng::seed_from_u64(tcfg.seed);
    let model = TcnModel::init(config, &mut init_rng)?;
    run(model, ds, tcfg, true)
}

/// Continue training all layers of `base` on `ds`, keeping its input scaling.
pub fn fine_tune(
    base: &TcnModel,
    ds: &WindowedDataset,
    tcfg: &TrainConfig,
) -> Result<(TcnModel, TrainHistory), TcnError> {
    if ds.channels() != base.config.in_channels {
        return Err(TcnError::ConfigMismatch(
            "channel count differs from the base model",
        ));
    }
    if ds.window_len != base.config.window_len {
        return Err(TcnError::ConfigMismatch(
            "window length differs from the base model",
        ));
    }
    run(base.clone(), ds, tcfg, false)
}
