//! Dilated causal temporal convolutional network.
//!
//! Architecture: `blocks` residual temporal blocks, each with two causal
//! dilated convolutions (ReLU, dropout after each), an identity or 1x1
//! projection shortcut, then a fully connected readout of the last time
//! step's features.
//!
//! Two forward paths share one arithmetic order, so they agree bitwise:
//! a dense path that evaluates every position of a segment (training, batch
//! prediction) and a pruned path that evaluates only the positions the final
//! output depends on (streaming).

mod adam;
mod codec;
mod kernels;
mod net;
mod train;
mod weights;

use alloc::vec;
use alloc::vec::Vec;

pub use adam::{adam_step, AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use codec::{decode_model, encode_model, MODEL_MAGIC, MODEL_VERSION};
pub use net::{loss_and_grad, EvalScratch, Mode};
pub use train::{fine_tune, train, Batching, EpochRecord, TrainConfig, TrainHistory};
pub use weights::{Conv1d, Linear, TcnWeights, TemporalBlock, TensorRef};

use crate::pipeline::WindowedDataset;
use crate::{IMU_CHANNELS, JOINT_ANGLES};

/// Convolutions per temporal block.
pub const LAYERS_PER_BLOCK: usize = 2;

/// Smallest per-channel standard deviation used for input scaling.
pub const STD_FLOOR: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, thiserror::Error)]
pub enum TcnError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("input contains non-finite values")]
    NonFiniteInput,
    #[error("loss became non-finite in epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("dataset too small: need {needed} items, have {available}")]
    DatasetTooSmall { needed: usize, available: usize },
    #[error("model and dataset disagree: {0}")]
    ConfigMismatch(&'static str),
    #[error("empty batch")]
    EmptyBatch,
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("model format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("model file checksum mismatch")]
    ChecksumMismatch,
    #[error("model file is truncated")]
    TruncatedFile,
    #[error("model file payload is inconsistent: {0}")]
    CorruptPayload(&'static str),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TcnConfig {
    pub in_channels: usize,
    pub blocks: usize,
    pub channels: usize,
    pub kernel: usize,
    pub dropout: f64,
    /// One dilation per block, shared by both of its convolutions.
    pub dilations: Vec<usize>,
    pub out_dim: usize,
    pub window_len: usize,
}

impl Default for TcnConfig {
    fn default() -> Self {
        let mut c = Self {
            in_channels: IMU_CHANNELS,
            blocks: 5,
            channels: 32,
            kernel: 7,
            dropout: 0.1,
            dilations: vec![1, 2, 4, 8, 16],
            out_dim: JOINT_ANGLES,
            window_len: 0,
        };
        c.window_len = c.receptive_field();
        c
    }
}

impl TcnConfig {
    /// Config with dilations `1, 2, 4, ...` and window = receptive field.
    pub fn small(in_channels: usize, blocks: usize, channels: usize, kernel: usize) -> Self {
        let mut c = Self {
            in_channels,
            blocks,
            channels,
            kernel,
            dropout: 0.0,
            dilations: (0..blocks).map(|b| 1 << b).collect(),
            out_dim: JOINT_ANGLES,
            window_len: 0,
        };
        c.window_len = c.receptive_field().max(kernel);
        c
    }

    /// Number of input samples that can influence the last output.
    pub fn receptive_field(&self) -> usize {
        1 + self
            .dilations
            .iter()
            .map(|d| LAYERS_PER_BLOCK * (self.kernel.saturating_sub(1)) * d)
            .sum::<usize>()
    }

    pub fn validate(&self) -> Result<(), TcnError> {
        let bad = |m| Err(TcnError::InvalidConfig(m));
        if self.in_channels == 0 || self.channels == 0 || self.out_dim == 0 {
            return bad("channel counts must be positive");
        }
        if self.blocks == 0 {
            return bad("blocks must be at least 1");
        }
        if self.kernel == 0 {
            return bad("kernel must be at least 1");
        }
        if self.dilations.len() != self.blocks {
            return bad("one dilation per block is required");
        }
        if self.dilations.contains(&0) {
            return bad("dilations must be at least 1");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if self.window_len < self.kernel {
            return bad("window_len must be at least kernel");
        }
        Ok(())
    }
}

/// Per-channel input standardization `(x - mean) / std`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    pub fn identity(channels: usize) -> Self {
        Self {
            mean: vec![0.0; channels],
            std: vec![1.0; channels],
        }
    }

    pub fn channels(&self) -> usize {
        self.mean.len()
    }

    /// Fit on the samples covered by the windows of `indices`, each sample
    /// counted once; left padding does not contribute.
    pub fn fit(ds: &WindowedDataset, indices: &[usize]) -> Self {
        let channels = ds.channels();
        let ranges = ds.covered_ranges(indices);
        let mut mean = vec![0.0; channels];
        let mut std = vec![STD_FLOOR; channels];
        let count: usize = ranges.iter().map(|&(_, a, b)| b - a + 1).sum();
        if count == 0 {
            return Self {
                mean,
                std: vec![1.0; channels],
            };
        }
        for c in 0..channels {
            let mut sum = 0.0;
            for &(r, a, b) in &ranges {
                sum += ds.recordings[r].imu.row(c)[a..=b].iter().sum::<f64>();
            }
            let m = sum / count as f64;
            let mut ss = 0.0;
            for &(r, a, b) in &ranges {
                ss += ds.recordings[r].imu.row(c)[a..=b]
                    .iter()
                    .map(|x| (x - m) * (x - m))
                    .sum::<f64>();
            }
            mean[c] = m;
            std[c] = crate::math::sqrt(ss / count as f64).max(STD_FLOOR);
        }
        Self { mean, std }
    }

    #[inline]
    pub fn apply(&self, c: usize, x: f64) -> f64 {
        (x - self.mean[c]) / self.std[c]
    }

    pub fn is_valid(&self) -> bool {
        self.mean.len() == self.std.len()
            && self.mean.iter().all(|m| m.is_finite())
            && self.std.iter().all(|s| s.is_finite() && *s >= STD_FLOOR)
    }
}

/// A trained network: configuration, weights and input scaling.
#[derive(Clone, Debug, PartialEq)]
pub struct TcnModel {
    pub config: TcnConfig,
    pub weights: TcnWeights,
    pub norm: NormStats,
}

impl TcnModel {
    /// He-uniform weights, zero biases, identity scaling.
    pub fn init<R: rand::Rng + ?Sized>(config: TcnConfig, rng: &mut R) -> Result<Self, TcnError> {
        config.validate()?;
        let weights = TcnWeights::he_uniform(&config, rng);
        let norm = NormStats::identity(config.in_channels);
        Ok(Self {
            config,
            weights,
            norm,
        })
    }

    /// All-zero weights.
    pub fn zeros(config: TcnConfig) -> Result<Self, TcnError> {
        config.validate()?;
        let weights = TcnWeights::zeros(&config);
        let norm = NormStats::identity(config.in_channels);
        Ok(Self {
            config,
            weights,
            norm,
        })
    }

    pub fn receptive_field(&self) -> usize {
        self.config.receptive_field()
    }

    pub fn check(&self) -> Result<(), TcnError> {
        self.config.validate()?;
        if !self.weights.matches(&self.config) {
            return Err(TcnError::CorruptPayload(
                "weight shapes do not match the config",
            ));
        }
        if !self.weights.is_finite() {
            return Err(TcnError::CorruptPayload("non-finite weight"));
        }
        if self.norm.channels() != self.config.in_channels || !self.norm.is_valid() {
            return Err(TcnError::CorruptPayload("invalid input scaling"));
        }
        Ok(())
    }
}
