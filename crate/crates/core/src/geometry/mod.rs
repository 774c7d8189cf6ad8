//! Keypoint geometry: joint angles from 3D pose keypoints and
//! Savitzky–Golay smoothing of the resulting label streams.
//!
//! Angles are in degrees at every public boundary.

mod angles;
mod labels;
mod savgol;

pub use angles::{
    angle_between, frame_angles, hip_angle, knee_angle, to_flexion_convention, DEGENERATE_EPS,
};
pub use labels::{extract_angle_labels, extract_angle_segments, LabelOptions, MAX_GAP_FRAMES};
pub use savgol::{savgol_coefficients, savgol_filter, savgol_matrix};

use core::fmt;

/// Canonical skeletal landmarks consumed by the angle definitions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Joint {
    Pelvis,
    Spine,
    LHip,
    RHip,
    LKnee,
    RKnee,
    LAnkle,
    RAnkle,
}

impl Joint {
    pub const ALL: [Joint; 8] = [
        Joint::Pelvis,
        Joint::Spine,
        Joint::LHip,
        Joint::RHip,
        Joint::LKnee,
        Joint::RKnee,
        Joint::LAnkle,
        Joint::RAnkle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Joint::Pelvis => "pelvis",
            Joint::Spine => "spine",
            Joint::LHip => "l_hip",
            Joint::RHip => "r_hip",
            Joint::LKnee => "l_knee",
            Joint::RKnee => "r_knee",
            Joint::LAnkle => "l_ankle",
            Joint::RAnkle => "r_ankle",
        }
    }

    pub fn from_name(name: &str) -> Option<Joint> {
        Joint::ALL.into_iter().find(|j| j.name() == name)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_left(self) -> bool {
        matches!(self, Joint::LHip | Joint::LKnee | Joint::LAnkle)
    }
}

impl fmt::Display for Joint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn hip(self) -> Joint {
        match self {
            Side::Left => Joint::LHip,
            Side::Right => Joint::RHip,
        }
    }

    pub fn knee(self) -> Joint {
        match self {
            Side::Left => Joint::LKnee,
            Side::Right => Joint::RKnee,
        }
    }

    pub fn ankle(self) -> Joint {
        match self {
            Side::Left => Joint::LAnkle,
            Side::Right => Joint::RAnkle,
        }
    }
}

/// Hip angles are reported either as the raw vector angle in `[0, 180]` or
/// re-signed as flexion (+) / extension (-) with standing at 0. Knee angles
/// are identical in both conventions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AngleConvention {
    Raw,
    #[default]
    Flexion,
}

/// A 3D landmark position in meters with an optional detector confidence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Keypoint3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub confidence: f64,
}

impl Keypoint3D {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self {
            x,
            y,
            z,
            confidence: 1.0,
        }
    }

    pub fn with_confidence(mut self, confidence: f64) -> Self {
        self.confidence = confidence;
        self
    }

    pub fn position(&self) -> crate::Vec3 {
        crate::Vec3::new(self.x, self.y, self.z)
    }

    pub fn is_valid(&self) -> bool {
        self.x.is_finite()
            && self.y.is_finite()
            && self.z.is_finite()
            && (0.0..=1.0).contains(&self.confidence)
    }
}

impl From<crate::Vec3> for Keypoint3D {
    fn from(v: crate::Vec3) -> Self {
        Keypoint3D::new(v.x, v.y, v.z)
    }
}

/// One timestamped skeleton. Missing landmarks are `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct KeypointFrame {
    pub time_s: f64,
    joints: [Option<Keypoint3D>; 8],
}

impl KeypointFrame {
    pub fn new(time_s: f64) -> Self {
        Self {
            time_s,
            joints: [None; 8],
        }
    }

    pub fn with(mut self, joint: Joint, kp: impl Into<Keypoint3D>) -> Self {
        self.set(joint, kp.into());
        self
    }

    pub fn set(&mut self, joint: Joint, kp: Keypoint3D) {
        self.joints[joint.index()] = Some(kp);
    }

    pub fn remove(&mut self, joint: Joint) {
        self.joints[joint.index()] = None;
    }

    pub fn get(&self, joint: Joint) -> Option<&Keypoint3D> {
        self.joints[joint.index()].as_ref()
    }

    pub fn position(&self, joint: Joint) -> Result<crate::Vec3, GeometryError> {
        self.get(joint)
            .map(|k| k.position())
            .ok_or(GeometryError::MissingJoint(joint))
    }

    /// All eight canonical joints are present.
    pub fn is_complete(&self) -> bool {
        self.joints.iter().all(Option::is_some)
    }
}

/// The four regressed angles at one instant, in degrees.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct JointAngleFrame {
    pub time_s: f64,
    pub r_hip: f64,
    pub l_hip: f64,
    pub r_knee: f64,
    pub l_knee: f64,
}

impl JointAngleFrame {
    /// Column order used by files and by the network output.
    pub const CHANNELS: [&'static str; 4] = ["r_hip", "l_hip", "r_knee", "l_knee"];

    pub fn from_array(time_s: f64, a: [f64; 4]) -> Self {
        Self {
            time_s,
            r_hip: a[0],
            l_hip: a[1],
            r_knee: a[2],
            l_knee: a[3],
        }
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.r_hip, self.l_hip, self.r_knee, self.l_knee]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Savitzky–Golay window length and polynomial order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SavGolSpec {
    pub window: usize,
    pub order: usize,
}

impl Default for SavGolSpec {
    fn default() -> Self {
        Self {
            window: 50,
            order: 4,
        }
    }
}

impl SavGolSpec {
    pub fn new(window: usize, order: usize) -> Result<Self, GeometryError> {
        let spec = Self { window, order };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.window == 0 || self.window < self.order + 1 {
            return Err(GeometryError::InvalidSpec {
                window: self.window,
                order: self.order,
            });
        }
        Ok(())
    }

    /// Evaluation index for interior samples. For even windows there is no
    /// exact center; index `window / 2` is used.
    pub fn center(&self) -> usize {
        self.window / 2
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("degenerate vector (norm <= {DEGENERATE_EPS} m)")]
    DegenerateVector,
    #[error("missing joint `{0}`")]
    MissingJoint(Joint),
    #[error("invalid Savitzky-Golay spec: window {window}, order {order}")]
    InvalidSpec { window: usize, order: usize },
    #[error("center index {center} outside window {window}")]
    BadCenter { center: usize, window: usize },
    #[error("least-squares system is ill-conditioned (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },
    #[error("series of length {len} is shorter than window {window}")]
    SeriesTooShort { len: usize, window: usize },
    #[error("gap of {frames} frames from t={start_s}s to t={end_s}s exceeds {MAX_GAP_FRAMES}")]
    GapTooLarge {
        start_s: f64,
        end_s: f64,
        frames: usize,
    },
    #[error("timestamps not strictly increasing at frame {index}")]
    NonMonotoneTime { index: usize },
    #[error("raw hip angle {0} outside [0, 180]")]
    AngleOutOfRange(f64),
}
