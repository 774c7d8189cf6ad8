use alloc::vec;
use alloc::vec::Vec;

use super::SynthError;
use crate::pipeline::SpeedCondition;

/// Frame rate of the simulated camera. An integer multiple of the IMU rate,
/// so every IMU timestamp is also a camera timestamp.
pub const CAMERA_RATE_HZ: f64 = 200.0;

/// Stride frequency (Hz) for a walking speed: `0.6 + 0.55 v`, clamped to
/// `[0.6, 1.6]`.
pub fn cadence_for_speed(speed_mps: f64) -> f64 {
    (CADENCE_INTERCEPT + CADENCE_SLOPE * speed_mps).clamp(CADENCE_MIN, CADENCE_MAX)
}

const CADENCE_INTERCEPT: f64 = 0.6;
const CADENCE_SLOPE: f64 = 0.55;
const CADENCE_MIN: f64 = 0.6;
const CADENCE_MAX: f64 = 1.6;

/// Joint excursion relative to 1 m/s walking: `1.25 v / (v + 0.25)`; zero
/// when standing still.
pub fn amplitude_scale(speed_mps: f64) -> f64 {
    let v = speed_mps.max(0.0);
    1.25 * v / (v + 0.25)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Harmonic {
    pub amplitude_deg: f64,
    pub phase_rad: f64,
}

/// `mean + sum_n a_n cos(2 pi n phi + p_n)` over gait phase `phi` in cycles.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierSeries {
    pub mean_deg: f64,
    pub harmonics: Vec<Harmonic>,
}

impl FourierSeries {
    pub fn eval(&self, phase_cycles: f64) -> f64 {
        let mut v = self.mean_deg;
        for (n, h) in self.harmonics.iter().enumerate() {
            let arg = 2.0 * core::f64::consts::PI * (n + 1) as f64 * phase_cycles + h.phase_rad;
            v += h.amplitude_deg * crate::math::cos(arg);
        }
        v
    }

    fn from_pairs(mean_deg: f64, pairs: &[(f64, f64)]) -> Self {
        Self {
            mean_deg,
            harmonics: pairs
                .iter()
                .map(|&(amplitude_deg, phase_rad)| Harmonic {
                    amplitude_deg,
                    phase_rad,
                })
                .collect(),
        }
    }

    /// Hip flexion over one stride at 1 m/s, starting at heel strike.
    pub fn default_hip() -> Self {
        Self::from_pairs(9.31, &[(20.256, 0.1546), (4.182, 1.6347), (0.883, 3.0925)])
    }

    /// Knee flexion over one stride at 1 m/s, starting at heel strike.
    pub fn default_knee() -> Self {
        Self::from_pairs(
            23.58,
            &[(20.631, 1.7605), (16.018, -2.6623), (2.876, -2.1688)],
        )
    }
}

/// Body dimensions used by the keypoint and IMU models.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentLengths {
    pub thigh_m: f64,
    pub shank_m: f64,
    pub trunk_m: f64,
    /// Lateral offset of each hip joint from the pelvis centre.
    pub hip_half_width_m: f64,
}

impl Default for SegmentLengths {
    fn default() -> Self {
        Self {
            thigh_m: 0.43,
            shank_m: 0.415,
            trunk_m: 0.5,
            hip_half_width_m: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaitProfile {
    pub speed_mps: f64,
    pub hip: FourierSeries,
    pub knee: FourierSeries,
    /// Phase lag of the left leg, in cycles.
    pub lr_phase_offset: f64,
    pub segments: SegmentLengths,
}

impl GaitProfile {
    pub fn nominal(speed_mps: f64) -> Self {
        Self {
            speed_mps,
            hip: FourierSeries::default_hip(),
            knee: FourierSeries::default_knee(),
            lr_phase_offset: 0.5,
            segments: SegmentLengths::default(),
        }
    }

    pub fn with_speed(&self, speed_mps: f64) -> Self {
        Self {
            speed_mps,
            ..self.clone()
        }
    }

    pub fn cadence_hz(&self) -> f64 {
        cadence_for_speed(self.speed_mps)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let s = &self.segments;
        if !(self.speed_mps >= 0.0) {
            return Err(SynthError::InvalidProfile("speed must be non-negative"));
        }
        if !(s.thigh_m > 0.0 && s.shank_m > 0.0 && s.trunk_m > 0.0 && s.hip_half_width_m > 0.0) {
            return Err(SynthError::InvalidProfile(
                "segment lengths must be positive",
            ));
        }
        let amps = self.hip.harmonics.iter().chain(&self.knee.harmonics);
        if amps.clone().any(|h| !(h.amplitude_deg >= 0.0)) {
            return Err(SynthError::InvalidProfile(
                "amplitudes must be non-negative",
            ));
        }
        Ok(())
    }
}

/// Piecewise-linear treadmill speed over time.
#[derive(Clone, Debug, PartialEq)]
pub struct SpeedProfile {
    knots: Vec<(f64, f64)>,
    /// Gait phase (cycles) accumulated at each knot.
    phase_at_knot: Vec<f64>,
}

impl SpeedProfile {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self, SynthError> {
        if knots.len() < 2 {
            return Err(SynthError::InvalidProfile(
                "a speed profile needs at least two knots",
            ));
        }
        if knots.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(SynthError::InvalidProfile(
                "knot times must increase strictly",
            ));
        }
        if knots.iter().any(|k| !(k.1 >= 0.0) || !k.0.is_finite()) {
            return Err(SynthError::InvalidProfile("speeds must be non-negative"));
        }
        let mut phase_at_knot = vec![0.0];
        for w in knots.windows(2) {
            let last = *phase_at_knot.last().expect("seeded");
            phase_at_knot.push(last + cadence_integral(w[0], w[1], w[1].0));
        }
        Ok(Self {
            knots,
            phase_at_knot,
        })
    }

    pub fn constant(speed_mps: f64, duration_s: f64) -> Result<Self, SynthError> {
        Self::new(vec![(0.0, speed_mps), (duration_s, speed_mps)])
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn start(&self) -> f64 {
        self.knots[0].0
    }

    pub fn duration(&self) -> f64 {
        self.knots[self.knots.len() - 1].0 - self.knots[0].0
    }

    fn segment(&self, t: f64) -> usize {
        let k = self.knots.partition_point(|k| k.0 <= t);
        k.saturating_sub(1).min(self.knots.len() - 2)
    }

    /// Speed at `t`; held constant outside the knot range.
    pub fn speed_at(&self, t: f64) -> f64 {
        let first = self.knots[0];
        let last = self.knots[self.knots.len() - 1];
        if t <= first.0 {
            return first.1;
        }
        if t >= last.0 {
            return last.1;
        }
        let i = self.segment(t);
        let (a, b) = (self.knots[i], self.knots[i + 1]);
        a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0)
    }

    /// Gait phase in cycles: the exact integral of the cadence from the
    /// first knot to `t`.
    pub fn phase_at(&self, t: f64) -> f64 {
        let first = self.knots[0];
        if t <= first.0 {
            return (t - first.0) * cadence_for_speed(first.1);
        }
        let i = self.segment(t);
        let (a, b) = (self.knots[i], self.knots[i + 1]);
        if t >= b.0 {
            return self.phase_at_knot[i + 1] + (t - b.0) * cadence_for_speed(b.1);
        }
        self.phase_at_knot[i] + cadence_integral(a, b, t)
    }

    pub fn max_abs_slope(&self) -> f64 {
        self.knots
            .windows(2)
            .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
            .fold(0.0, f64::max)
    }

    /// `(start, end, speed)` of every constant, non-zero segment.
    pub fn plateaus(&self) -> Vec<(f64, f64, f64)> {
        self.knots
            .windows(2)
            .filter(|w| w[0].1 == w[1].1 && w[0].1 > 0.0)
            .map(|w| (w[0].0, w[1].0, w[0].1))
            .collect()
    }

    /// Plateau speed at `t`, or transient on ramps.
    pub fn condition_at(&self, t: f64) -> SpeedCondition {
        let i = self.segment(t.clamp(self.knots[0].0, self.knots[self.knots.len() - 1].0));
        let (a, b) = (self.knots[i], self.knots[i + 1]);
        if a.1 == b.1 {
            SpeedCondition::Plateau(a.1)
        } else {
            SpeedCondition::Transient
        }
    }
}

/// Integral of the cadence from `a.0` to `t` along the line through `a`, `b`,
/// split where the clamp becomes active so each piece is linear.
fn cadence_integral(a: (f64, f64), b: (f64, f64), t: f64) -> f64 {
    let slope = (b.1 - a.1) / (b.0 - a.0);
    let speed = |x: f64| a.1 + slope * (x - a.0);
    let mut cuts = vec![a.0, t];
    if slope != 0.0 {
        for limit in [CADENCE_MIN, CADENCE_MAX] {
            let v = (limit - CADENCE_INTERCEPT) / CADENCE_SLOPE;
            let x = a.0 + (v - a.1) / slope;
            if x > a.0 && x < t {
                cuts.push(x);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.windows(2)
        .map(|w| {
            0.5 * (cadence_for_speed(speed(w[0])) + cadence_for_speed(speed(w[1]))) * (w[1] - w[0])
        })
        .sum()
}

/// Validation treadmill profile: from standstill through plateaus at 1.1,
/// 0.5, 1.2 and 0.6 m/s back to standstill, ramping at 0.5 m/s^2, 185 s in
/// total with equal plateau durations.
pub fn validation_speed_profile() -> SpeedProfile {
    const TOTAL_S: f64 = 185.0;
    const RAMP_MPS2: f64 = 0.5;
    let plateaus: [f64; 4] = [1.1, 0.5, 1.2, 0.6];
    let mut levels: Vec<f64> = vec![0.0];
    levels.extend_from_slice(&plateaus);
    levels.push(0.0);
    let ramp_total: f64 = levels
        .windows(2)
        .map(|w| (w[1] - w[0]).abs() / RAMP_MPS2)
        .sum();
    let hold = (TOTAL_S - ramp_total) / plateaus.len() as f64;
    let mut knots = vec![(0.0, 0.0)];
    let mut t = 0.0;
    for (i, &v) in plateaus.iter().enumerate() {
        let prev = if i == 0 { 0.0 } else { plateaus[i - 1] };
        t += (v - prev).abs() / RAMP_MPS2;
        knots.push((t, v));
        t += hold;
        knots.push((t, v));
    }
    knots.push((TOTAL_S, 0.0));
    SpeedProfile::new(knots).expect("static profile is valid")
}
