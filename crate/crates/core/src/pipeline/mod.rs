//! Dataset assembly, splits and mixing, error metrics and experiment
//! runners.

mod dataset;
mod eval;
mod experiment;
mod split;

pub use dataset::*;
pub use eval::*;
pub use experiment::*;
pub use split::*;

use crate::geometry::GeometryError;
use crate::synth::SynthError;
use crate::tcn::TcnError;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("sample {index}: IMU time {imu_s} s and label time {label_s} s differ")]
    Misaligned {
        index: usize,
        imu_s: f64,
        label_s: f64,
    },
    #[error("non-finite values in {0}")]
    NonFinite(&'static str),
    #[error("window shapes differ")]
    ShapeMismatch,
    #[error("dataset too small: need {needed} items, have {available}")]
    DatasetTooSmall { needed: usize, available: usize },
    #[error("not enough stiff-knee data: need {needed} items, have {available}")]
    InsufficientSk { needed: usize, available: usize },
    #[error("baseline error must be positive")]
    ZeroBaseline,
    #[error(transparent)]
    Model(#[from] TcnError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
