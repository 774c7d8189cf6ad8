use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{SegmentLengths, SynthError};
use crate::geometry::{Joint, JointAngleFrame, Keypoint3D, KeypointFrame};
use crate::math::{cos, exp, ln_1p, sin, Vec3};

/// Position noise added to every joint, with extra noise on the left side
/// (the side turned away from the camera).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KeypointNoise {
    pub jitter_std_m: f64,
    pub left_occlusion_std_m: f64,
}

impl KeypointNoise {
    pub const ZERO: Self = Self {
        jitter_std_m: 0.0,
        left_occlusion_std_m: 0.0,
    };
}

impl Default for KeypointNoise {
    fn default() -> Self {
        Self {
            jitter_std_m: 0.01,
            left_occlusion_std_m: 0.01,
        }
    }
}

/// Smoothing length of the pelvis height soft maximum, in meters.
const STANCE_SOFTNESS_M: f64 = 0.02;

/// Vertical hip-to-ankle distance of a leg.
fn leg_drop(seg: &SegmentLengths, hip_deg: f64, knee_deg: f64) -> f64 {
    let th = hip_deg.to_radians();
    let ts = (hip_deg - knee_deg).to_radians();
    seg.thigh_m * cos(th) + seg.shank_m * cos(ts)
}

/// Pelvis height above the treadmill: the longer of the two legs carries the
/// body, blended over a couple of centimeters so the height stays smooth at
/// stance transitions.
pub fn pelvis_height(angles: &JointAngleFrame, seg: &SegmentLengths) -> f64 {
    let r = leg_drop(seg, angles.r_hip, angles.r_knee);
    let l = leg_drop(seg, angles.l_hip, angles.l_knee);
    let hi = r.max(l);
    hi + STANCE_SOFTNESS_M * ln_1p(exp(-(r - l).abs() / STANCE_SOFTNESS_M))
}

/// Sagittal-plane skeleton posed by `angles`: x forward, y up, z to the
/// right. Segment angles are measured from straight down, positive forward;
/// the shank sits `knee` degrees behind the thigh.
pub fn pose_frame(angles: &JointAngleFrame, seg: &SegmentLengths) -> KeypointFrame {
    let pelvis = Vec3::new(0.0, pelvis_height(angles, seg), 0.0);
    let dir = |deg: f64| {
        let t = deg.to_radians();
        Vec3::new(sin(t), -cos(t), 0.0)
    };
    let mut frame = KeypointFrame::new(angles.time_s)
        .with(Joint::Pelvis, pelvis)
        .with(Joint::Spine, pelvis + Vec3::new(0.0, seg.trunk_m, 0.0));
    let legs = [
        (
            Joint::RHip,
            Joint::RKnee,
            Joint::RAnkle,
            seg.hip_half_width_m,
            angles.r_hip,
            angles.r_knee,
        ),
        (
            Joint::LHip,
            Joint::LKnee,
            Joint::LAnkle,
            -seg.hip_half_width_m,
            angles.l_hip,
            angles.l_knee,
        ),
    ];
    for (hj, kj, aj, z, hip_deg, knee_deg) in legs {
        let hip = pelvis + Vec3::new(0.0, 0.0, z);
        let knee = hip + dir(hip_deg).scale(seg.thigh_m);
        let ankle = knee + dir(hip_deg - knee_deg).scale(seg.shank_m);
        frame.set(hj, hip.into());
        frame.set(kj, knee.into());
        frame.set(aj, ankle.into());
    }
    frame
}

/// Pose every frame and add Gaussian position noise.
pub fn simulate_keypoints(
    angles: &[JointAngleFrame],
    seg: &SegmentLengths,
    noise: KeypointNoise,
    seed: u64,
) -> Result<Vec<KeypointFrame>, SynthError> {
    if !(noise.jitter_std_m >= 0.0) || !(noise.left_occlusion_std_m >= 0.0) {
        return Err(SynthError::InvalidNoise);
    }
    let total_left = crate::math::sqrt(
        noise.jitter_std_m * noise.jitter_std_m
            + noise.left_occlusion_std_m * noise.left_occlusion_std_m,
    );
    let both = Normal::new(0.0, noise.jitter_std_m).map_err(|_| SynthError::InvalidNoise)?;
    let left = Normal::new(0.0, total_left).map_err(|_| SynthError::InvalidNoise)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(angles
        .iter()
        .map(|a| {
            let mut frame = pose_frame(a, seg);
            if total_left > 0.0 {
                for j in Joint::ALL {
                    let d = if j.is_left() { &left } else { &both };
                    let p = frame.get(j).expect("posed frames are complete");
                    let jittered = Keypoint3D::new(
                        p.x + d.sample(&mut rng),
                        p.y + d.sample(&mut rng),
                        p.z + d.sample(&mut rng),
                    );
                    frame.set(j, jittered);
                }
            }
            frame
        })
        .collect())
}
