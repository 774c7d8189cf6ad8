//! Core algorithms for estimating lower-limb joint kinematics from wearable
//! IMUs.
//!
//! The crate is `no_std` (it needs `alloc`) and contains no IO. It covers:
//!
//! - [`geometry`]: 3D keypoints to hip/knee angle labels, Savitzky–Golay
//!   smoothing.
//! - [`tcn`]: a dilated causal temporal convolutional network with analytic
//!   gradients, Adam, early-stopped training, fine-tuning and a binary model
//!   codec.
//! - [`synth`]: deterministic synthetic gait (joint angles, keypoints with
//!   pose-estimation noise, 18-channel IMU streams, recording protocols).
//! - [`pipeline`]: windowed datasets, AB/SK mixing, leakage-free splits,
//!   RMSE reports and the transfer-learning experiments.
//! - [`stream`]: ring-buffered causal windowing for per-tick inference and
//!   latency statistics.
//!
//! File formats, wall-clock timing and the command line live in the `gaitkin`
//! crate.

#![no_std]
#![forbid(unsafe_code)]
// Negated comparisons are how NaN gets rejected along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod geometry;
pub mod math;
pub mod pipeline;
pub mod stream;
pub mod synth;
pub mod tcn;

pub use geometry::{Joint, JointAngleFrame, Keypoint3D, KeypointFrame, SavGolSpec, Side};
pub use math::{Matrix, Vec3};

/// Number of IMU channels: 3 IMUs (pelvis, left thigh, right thigh) x
/// (3-axis accelerometer + 3-axis gyroscope).
pub const IMU_CHANNELS: usize = 18;

/// Number of regressed joint angles: right hip, left hip, right knee, left knee.
pub const JOINT_ANGLES: usize = 4;

/// IMU sample rate of the sensing loop.
pub const SAMPLE_RATE_HZ: f64 = 50.0;
