use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{pelvis_height, ImuSample, SegmentLengths, SynthError};
use crate::geometry::JointAngleFrame;
use crate::math::{cos, sin};
use crate::IMU_CHANNELS;

pub const GRAVITY_MPS2: f64 = 9.81;

/// Channel names in sample order.
pub const IMU_CHANNEL_NAMES: [&str; IMU_CHANNELS] = [
    "pelvis_ax",
    "pelvis_ay",
    "pelvis_az",
    "pelvis_gx",
    "pelvis_gy",
    "pelvis_gz",
    "l_thigh_ax",
    "l_thigh_ay",
    "l_thigh_az",
    "l_thigh_gx",
    "l_thigh_gy",
    "l_thigh_gz",
    "r_thigh_ax",
    "r_thigh_ay",
    "r_thigh_az",
    "r_thigh_gx",
    "r_thigh_gy",
    "r_thigh_gz",
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImuNoise {
    pub accel_std: f64,
    pub gyro_std: f64,
}

impl ImuNoise {
    pub const ZERO: Self = Self {
        accel_std: 0.0,
        gyro_std: 0.0,
    };
}

impl Default for ImuNoise {
    fn default() -> Self {
        Self {
            accel_std: 0.05,
            gyro_std: 0.01,
        }
    }
}

/// Tolerance on the spacing of angle timestamps relative to `1 / rate`.
const RATE_TOLERANCE_S: f64 = 1e-9;

/// First derivative by central differences, one-sided at the ends.
fn derivative(x: &[f64], h: f64) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| match i {
            0 => (x[1] - x[0]) / h,
            _ if i == n - 1 => (x[n - 1] - x[n - 2]) / h,
            _ => (x[i + 1] - x[i - 1]) / (2.0 * h),
        })
        .collect()
}

/// Second derivative by the three-point stencil; the end values repeat
/// their neighbours.
fn second_derivative(x: &[f64], h: f64) -> Vec<f64> {
    let n = x.len();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        d[i] = (x[i + 1] - 2.0 * x[i] + x[i - 1]) / (h * h);
    }
    d[0] = d[1];
    d[n - 1] = d[n - 2];
    d
}

/// Sagittal rigid-body IMU model.
///
/// Each sensor frame has x perpendicular to the segment pointing forward, y
/// lateral (to the right) and z along the segment pointing down, so a
/// motionless upright sensor reads specific force `(0, 0, -g)`. The pelvis
/// stays upright; each thigh is rotated by its hip flexion. All three sensors
/// share the vertical motion of the pelvis, whose height follows the stance
/// leg. Out-of-plane channels carry noise only.
pub fn simulate_imu(
    angles: &[JointAngleFrame],
    seg: &SegmentLengths,
    noise: ImuNoise,
    seed: u64,
    rate_hz: f64,
) -> Result<Vec<ImuSample>, SynthError> {
    if !(noise.accel_std >= 0.0) || !(noise.gyro_std >= 0.0) {
        return Err(SynthError::InvalidNoise);
    }
    if angles.len() < 3 {
        return Err(SynthError::TooShort {
            needed: 3,
            available: angles.len(),
        });
    }
    let h = 1.0 / rate_hz;
    for w in angles.windows(2) {
        let dt = w[1].time_s - w[0].time_s;
        if !((dt - h).abs() <= RATE_TOLERANCE_S) {
            return Err(SynthError::RateMismatch {
                expected_s: h,
                found_s: dt,
            });
        }
    }
    let accel_noise = Normal::new(0.0, noise.accel_std).map_err(|_| SynthError::InvalidNoise)?;
    let gyro_noise = Normal::new(0.0, noise.gyro_std).map_err(|_| SynthError::InvalidNoise)?;

    let height: Vec<f64> = angles.iter().map(|a| pelvis_height(a, seg)).collect();
    let vertical = second_derivative(&height, h);
    let theta_l: Vec<f64> = angles.iter().map(|a| a.l_hip.to_radians()).collect();
    let theta_r: Vec<f64> = angles.iter().map(|a| a.r_hip.to_radians()).collect();
    let omega_l = derivative(&theta_l, h);
    let omega_r = derivative(&theta_r, h);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(angles.len());
    for i in 0..angles.len() {
        // Specific force in the world frame is (0, a_y + g, 0).
        let f = vertical[i] + GRAVITY_MPS2;
        let mut ch = [0.0; IMU_CHANNELS];
        let sensors = [
            (0.0, 0.0),
            (theta_l[i], omega_l[i]),
            (theta_r[i], omega_r[i]),
        ];
        for (s, (theta, omega)) in sensors.into_iter().enumerate() {
            let c = &mut ch[6 * s..6 * s + 6];
            c[0] = f * sin(theta);
            c[2] = -f * cos(theta);
            c[4] = omega;
        }
        if noise.accel_std > 0.0 || noise.gyro_std > 0.0 {
            for (k, v) in ch.iter_mut().enumerate() {
                *v += if k % 6 < 3 {
                    accel_noise.sample(&mut rng)
                } else {
                    gyro_noise.sample(&mut rng)
                };
            }
        }
        out.push(ImuSample {
            time_s: angles[i].time_s,
            channels: ch,
        });
    }
    Ok(out)
}
