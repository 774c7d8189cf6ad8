use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    simulate_imu, simulate_keypoints, trajectories_over, validation_speed_profile, GaitProfile,
    ImuNoise, ImuSample, KeypointNoise, SpeedProfile, StiffKneeSpec, SynthError, CAMERA_RATE_HZ,
};
use crate::geometry::{
    extract_angle_labels, GeometryError, JointAngleFrame, KeypointFrame, LabelOptions,
};
use crate::pipeline::{Population, Recording, SpeedCondition};
use crate::SAMPLE_RATE_HZ;

/// Constant treadmill speeds of the training trials, m/s.
pub const TRAINING_SPEEDS_MPS: [f64; 4] = [0.4, 0.7, 1.0, 1.3];
pub const TRIAL_DURATION_S: f64 = 60.0;
pub const DEFAULT_SUBJECTS: usize = 3;
/// Relative spread of per-subject parameters around the nominal profile.
pub const SUBJECT_SPREAD: f64 = 0.1;

/// Independent 64-bit seed for sub-stream `key` of `base`.
pub fn derive_seed(base: u64, key: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(key);
    rng.next_u64()
}

/// Nominal profile with segment lengths and joint excursions scaled by
/// deterministic factors in `1 +- SUBJECT_SPREAD`, drawn from the subject
/// index. Scaling a whole series keeps knee flexion non-negative.
pub fn subject_profile(index: usize) -> GaitProfile {
    let mut rng = ChaCha8Rng::seed_from_u64(index as u64);
    let mut factor = || 1.0 + SUBJECT_SPREAD * (2.0 * rng.random::<f64>() - 1.0);
    let mut p = GaitProfile::nominal(1.0);
    for series in [&mut p.hip, &mut p.knee] {
        let g = factor();
        series.mean_deg *= g;
        for h in &mut series.harmonics {
            h.amplitude_deg *= g;
        }
    }
    p.segments.thigh_m *= factor();
    p.segments.shank_m *= factor();
    p.segments.trunk_m *= factor();
    p
}

/// Treadmill condition of a recording.
#[derive(Clone, Debug, PartialEq)]
pub enum SpeedPlan {
    Constant(f64),
    /// The validation profile of accelerations and plateaus.
    Validation,
}

/// Everything needed to regenerate one recording.
#[derive(Clone, Debug, PartialEq)]
pub struct RecordingSpec {
    pub id: String,
    pub population: Population,
    pub subject: usize,
    pub profile: GaitProfile,
    pub plan: SpeedPlan,
    pub duration_s: f64,
    pub sk: Option<StiffKneeSpec>,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthOptions {
    pub imu_rate_hz: f64,
    pub imu_noise: ImuNoise,
    pub keypoint_noise: KeypointNoise,
    pub trial_duration_s: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            imu_rate_hz: SAMPLE_RATE_HZ,
            imu_noise: ImuNoise::default(),
            keypoint_noise: KeypointNoise::default(),
            trial_duration_s: TRIAL_DURATION_S,
        }
    }
}

/// Ground truth and IMU stream of one recording at the IMU rate.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthRecording {
    pub spec: RecordingSpec,
    pub truth: Vec<JointAngleFrame>,
    pub imu: Vec<ImuSample>,
    pub speed_mps: Vec<f64>,
    pub condition: Vec<SpeedCondition>,
}

const IMU_STREAM: u64 = 1;
const KEYPOINT_STREAM: u64 = 2;

impl RecordingSpec {
    pub fn speed_profile(&self) -> Result<SpeedProfile, SynthError> {
        match self.plan {
            SpeedPlan::Constant(v) => SpeedProfile::constant(v, self.duration_s),
            SpeedPlan::Validation => Ok(validation_speed_profile()),
        }
    }

    pub fn truth(&self, rate_hz: f64) -> Result<Vec<JointAngleFrame>, SynthError> {
        trajectories_over(
            &self.profile,
            &self.speed_profile()?,
            self.sk.as_ref(),
            rate_hz,
        )
    }

    pub fn generate(&self, opts: &SynthOptions) -> Result<SynthRecording, SynthError> {
        let speed = self.speed_profile()?;
        let truth = self.truth(opts.imu_rate_hz)?;
        let imu = simulate_imu(
            &truth,
            &self.profile.segments,
            opts.imu_noise,
            derive_seed(self.seed, IMU_STREAM),
            opts.imu_rate_hz,
        )?;
        let (speed_mps, condition) = truth
            .iter()
            .map(|a| match self.plan {
                SpeedPlan::Constant(v) => (v, SpeedCondition::Constant(v)),
                SpeedPlan::Validation => (speed.speed_at(a.time_s), speed.condition_at(a.time_s)),
            })
            .unzip();
        Ok(SynthRecording {
            spec: self.clone(),
            truth,
            imu,
            speed_mps,
            condition,
        })
    }

    /// Camera-rate keypoints of the recording.
    pub fn keypoints(&self, noise: KeypointNoise) -> Result<Vec<KeypointFrame>, SynthError> {
        let angles = self.truth(CAMERA_RATE_HZ)?;
        simulate_keypoints(
            &angles,
            &self.profile.segments,
            noise,
            derive_seed(self.seed, KEYPOINT_STREAM),
        )
    }
}

/// Labels as a vision pipeline would produce them: camera-rate keypoints,
/// angle extraction with smoothing, then every `factor`-th frame so the
/// labels land on the IMU timestamps.
pub fn hpe_labels(
    keypoints: &[KeypointFrame],
    opts: &LabelOptions,
    factor: usize,
) -> Result<Vec<JointAngleFrame>, GeometryError> {
    let labels = extract_angle_labels(keypoints, opts)?;
    Ok(labels.into_iter().step_by(factor.max(1)).collect())
}

/// Camera frames per IMU sample.
pub fn decimation_factor(imu_rate_hz: f64) -> Result<usize, SynthError> {
    let f = CAMERA_RATE_HZ / imu_rate_hz;
    let r = crate::math::round(f);
    if r < 1.0 || (f - r).abs() > 1e-9 {
        return Err(SynthError::RateMismatch {
            expected_s: 1.0 / CAMERA_RATE_HZ,
            found_s: 1.0 / imu_rate_hz,
        });
    }
    Ok(r as usize)
}

impl SynthRecording {
    pub fn len(&self) -> usize {
        self.imu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.imu.is_empty()
    }

    pub fn to_recording(&self) -> Recording {
        Recording::from_samples(
            self.spec.id.clone(),
            self.spec.population,
            &self.imu,
            self.speed_mps.clone(),
            self.condition.clone(),
        )
    }
}

fn recording_id(population: Population, subject: usize, plan: &SpeedPlan) -> String {
    match plan {
        SpeedPlan::Constant(v) => format!("{population}-s{}-v{v:.2}", subject + 1),
        SpeedPlan::Validation => format!("{population}-s{}-val", subject + 1),
    }
}

fn spec_for(
    subject: usize,
    sk: Option<&StiffKneeSpec>,
    plan: SpeedPlan,
    duration_s: f64,
    seed: u64,
) -> RecordingSpec {
    let population = if sk.is_some() {
        Population::Sk
    } else {
        Population::Ab
    };
    let trial = match plan {
        SpeedPlan::Constant(v) => crate::math::round(v * 100.0) as u64,
        SpeedPlan::Validation => 1000,
    };
    let key = ((population as u64) << 40) | ((subject as u64) << 16) | trial;
    RecordingSpec {
        id: recording_id(population, subject, &plan),
        population,
        subject,
        profile: subject_profile(subject),
        plan,
        duration_s,
        sk: sk.copied(),
        seed: derive_seed(seed, key),
    }
}

/// The four constant-speed trials of one subject. With `sk` the subject
/// wears the brace and every recording is tagged stiff-knee.
pub fn training_protocol(
    subject: usize,
    sk: Option<&StiffKneeSpec>,
    opts: &SynthOptions,
    seed: u64,
) -> Result<Vec<SynthRecording>, SynthError> {
    TRAINING_SPEEDS_MPS
        .iter()
        .map(|&v| {
            spec_for(
                subject,
                sk,
                SpeedPlan::Constant(v),
                opts.trial_duration_s,
                seed,
            )
            .generate(opts)
        })
        .collect()
}

/// The subject walking the validation speed profile.
pub fn validation_recording(
    subject: usize,
    sk: Option<&StiffKneeSpec>,
    opts: &SynthOptions,
    seed: u64,
) -> Result<SynthRecording, SynthError> {
    let duration = validation_speed_profile().duration();
    spec_for(subject, sk, SpeedPlan::Validation, duration, seed).generate(opts)
}
