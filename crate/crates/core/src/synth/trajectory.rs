use alloc::vec::Vec;

use super::{amplitude_scale, GaitProfile, SpeedProfile, SynthError};
use crate::geometry::{JointAngleFrame, Side};
use crate::math::{exp, ln_1p};

/// A knee brace modelled as a smooth ceiling on knee flexion of one leg.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StiffKneeSpec {
    pub side: Side,
    pub max_flexion_deg: f64,
    /// Width of the transition into the ceiling; 0 gives a hard clamp.
    pub softness_deg: f64,
    /// Fraction of the suppressed knee flexion added back at the hip of the
    /// braced leg (circumduction / hip hiking surrogate).
    pub hip_compensation: f64,
}

impl Default for StiffKneeSpec {
    fn default() -> Self {
        Self {
            side: Side::Right,
            max_flexion_deg: 20.0,
            softness_deg: 5.0,
            hip_compensation: 0.3,
        }
    }
}

impl StiffKneeSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if !(self.max_flexion_deg > 0.0)
            || !(self.softness_deg >= 0.0)
            || !self.hip_compensation.is_finite()
        {
            return Err(SynthError::InvalidProfile(
                "stiff-knee parameters out of range",
            ));
        }
        Ok(())
    }

    /// `M - s softplus((M - k) / s)`: never above `M`, close to `k` well
    /// below it, and monotone in `k`. A non-negative input is not pushed
    /// into hyperextension, which keypoints could not represent.
    pub fn limit(&self, knee_deg: f64) -> f64 {
        let m = self.max_flexion_deg;
        let s = self.softness_deg;
        let limited = if s == 0.0 {
            knee_deg.min(m)
        } else {
            m - s * softplus((m - knee_deg) / s)
        };
        limited.max(knee_deg.min(0.0))
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + ln_1p(exp(-x))
    } else {
        ln_1p(exp(x))
    }
}

/// Joint angles at time `t` with gait phase `phase` and speed `speed`.
pub fn angles_at(
    profile: &GaitProfile,
    t: f64,
    phase: f64,
    speed: f64,
    sk: Option<&StiffKneeSpec>,
) -> JointAngleFrame {
    let s = amplitude_scale(speed);
    let leg = |phi: f64| (s * profile.hip.eval(phi), s * profile.knee.eval(phi));
    let (mut r_hip, mut r_knee) = leg(phase);
    let (mut l_hip, mut l_knee) = leg(phase + profile.lr_phase_offset);
    if let Some(sk) = sk {
        let (hip, knee) = match sk.side {
            Side::Right => (&mut r_hip, &mut r_knee),
            Side::Left => (&mut l_hip, &mut l_knee),
        };
        let limited = sk.limit(*knee);
        *hip += sk.hip_compensation * (*knee - limited);
        *knee = limited;
    }
    JointAngleFrame {
        time_s: t,
        r_hip,
        l_hip,
        r_knee,
        l_knee,
    }
}

/// Constant-speed trajectories at `profile.speed_mps`: `floor(duration * rate)`
/// frames at `t_i = i / rate`.
pub fn joint_trajectories(
    profile: &GaitProfile,
    sk: Option<&StiffKneeSpec>,
    duration_s: f64,
    rate_hz: f64,
) -> Result<Vec<JointAngleFrame>, SynthError> {
    if !(duration_s > 0.0) {
        return Err(SynthError::InvalidProfile("duration must be positive"));
    }
    profile.validate()?;
    let speed = SpeedProfile::constant(profile.speed_mps, duration_s)?;
    trajectories_over(profile, &speed, sk, rate_hz)
}

/// Trajectories following a time-varying treadmill speed; `profile.speed_mps`
/// is ignored.
pub fn trajectories_over(
    profile: &GaitProfile,
    speed: &SpeedProfile,
    sk: Option<&StiffKneeSpec>,
    rate_hz: f64,
) -> Result<Vec<JointAngleFrame>, SynthError> {
    profile.validate()?;
    if let Some(sk) = sk {
        sk.validate()?;
    }
    if !(rate_hz > 0.0) {
        return Err(SynthError::InvalidProfile("sample rate must be positive"));
    }
    let n = sample_count(speed.duration(), rate_hz);
    let t0 = speed.start();
    Ok((0..n)
        .map(|i| {
            let t = t0 + i as f64 / rate_hz;
            angles_at(profile, t, speed.phase_at(t), speed.speed_at(t), sk)
        })
        .collect())
}

/// Number of samples of a `duration_s` recording at `rate_hz`, tolerant of
/// products that land a hair below an integer.
pub fn sample_count(duration_s: f64, rate_hz: f64) -> usize {
    crate::math::floor(duration_s * rate_hz + 1e-9) as usize
}
