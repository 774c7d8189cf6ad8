//! Deterministic synthetic gait: joint-angle ground truth, camera keypoints
//! and body-worn IMU streams for able-bodied and stiff-knee walkers.
//!
//! Hip and knee flexion follow three-harmonic Fourier series in gait phase.
//! Phase advances at a speed-dependent stride frequency and excursions grow
//! with speed. The skeleton and sensors are planar (sagittal); IMU channels
//! outside that plane carry noise only.

mod imu;
mod keypoints;
mod profile;
mod protocol;
mod trajectory;

pub use imu::{simulate_imu, ImuNoise, GRAVITY_MPS2, IMU_CHANNEL_NAMES};
pub use keypoints::{pelvis_height, pose_frame, simulate_keypoints, KeypointNoise};
pub use profile::{
    amplitude_scale, cadence_for_speed, validation_speed_profile, FourierSeries, GaitProfile,
    Harmonic, SegmentLengths, SpeedProfile, CAMERA_RATE_HZ,
};
pub use protocol::{
    decimation_factor, derive_seed, hpe_labels, subject_profile, training_protocol,
    validation_recording, RecordingSpec, SpeedPlan, SynthOptions, SynthRecording, DEFAULT_SUBJECTS,
    SUBJECT_SPREAD, TRAINING_SPEEDS_MPS, TRIAL_DURATION_S,
};
pub use trajectory::{
    angles_at, joint_trajectories, sample_count, trajectories_over, StiffKneeSpec,
};

use crate::IMU_CHANNELS;

/// One 18-channel IMU reading. Channel order: for pelvis, left thigh, right
/// thigh in turn, accelerometer x, y, z (m/s^2) then gyroscope x, y, z (rad/s).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImuSample {
    pub time_s: f64,
    pub channels: [f64; IMU_CHANNELS],
}

#[derive(Clone, Copy, Debug, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("invalid profile: {0}")]
    InvalidProfile(&'static str),
    #[error("noise standard deviations must be finite and non-negative")]
    InvalidNoise,
    #[error("sample spacing {found_s}s does not match the expected {expected_s}s")]
    RateMismatch { expected_s: f64, found_s: f64 },
    #[error("need at least {needed} samples, got {available}")]
    TooShort { needed: usize, available: usize },
}
