//! Synthetic datasets on disk and experiment inputs loaded from them.

use std::path::Path;

use gaitkin_core::geometry::{JointAngleFrame, LabelOptions};
use gaitkin_core::pipeline::{
    population_data, CohortConfig, DataOptions, EvalRecording, ExperimentData, PipelineError,
    Population, PopulationData, TrainingRecording,
};
use gaitkin_core::synth::{
    decimation_factor, hpe_labels, training_protocol, validation_recording, SynthRecording,
    CAMERA_RATE_HZ,
};

use crate::io::{
    read_angles, read_keypoints, write_angles, write_imu, write_keypoints, IoError, RecordingEntry,
    RecordingFiles, RecordingManifest, SpeedRef,
};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

impl From<gaitkin_core::synth::SynthError> for DataError {
    fn from(e: gaitkin_core::synth::SynthError) -> Self {
        DataError::Pipeline(e.into())
    }
}

fn write_recording(
    dir: &Path,
    rec: &SynthRecording,
    cfg: &CohortConfig,
) -> Result<RecordingEntry, DataError> {
    let id = &rec.spec.id;
    let files = RecordingFiles {
        imu: format!("{id}.imu.csv"),
        keypoints: format!("{id}.keypoints.jsonl"),
        angles_truth: format!("{id}.angles.csv"),
    };
    let noise = match cfg.labels {
        gaitkin_core::pipeline::LabelSource::Camera { noise, .. } => noise,
        gaitkin_core::pipeline::LabelSource::Truth => gaitkin_core::synth::KeypointNoise::ZERO,
    };
    write_imu(&dir.join(&files.imu), &rec.imu)?;
    write_keypoints(&dir.join(&files.keypoints), &rec.spec.keypoints(noise)?)?;
    write_angles(&dir.join(&files.angles_truth), &rec.truth)?;
    let speed = match rec.spec.plan {
        gaitkin_core::synth::SpeedPlan::Constant(v) => SpeedRef::Constant { speed_mps: v },
        gaitkin_core::synth::SpeedPlan::Validation => SpeedRef::Profile {
            profile: "validation".into(),
        },
    };
    Ok(RecordingEntry {
        id: id.clone(),
        subject: rec.spec.subject,
        speed,
        sk: rec.spec.sk.is_some(),
        files,
    })
}

/// Write the training protocol and validation walk of every subject, with
/// and without the brace: IMU table, camera keypoints and true angles per
/// recording, plus the manifest.
pub fn write_synthetic_dataset(
    dir: &Path,
    cfg: &CohortConfig,
) -> Result<RecordingManifest, DataError> {
    std::fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
    let mut recordings = Vec::new();
    for sk in [None, Some(&cfg.brace)] {
        for s in 0..cfg.subjects {
            for rec in training_protocol(s, sk, &cfg.synth, cfg.seed)? {
                recordings.push(write_recording(dir, &rec, cfg)?);
            }
            recordings.push(write_recording(
                dir,
                &validation_recording(s, sk, &cfg.synth, cfg.seed)?,
                cfg,
            )?);
        }
    }
    let manifest = RecordingManifest {
        seed: cfg.seed,
        imu_rate_hz: cfg.synth.imu_rate_hz,
        camera_rate_hz: CAMERA_RATE_HZ,
        recordings,
    };
    manifest.write(dir)?;
    Ok(manifest)
}

/// Which labels supervise training.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LabelChoice {
    /// The true-angle files.
    Truth,
    /// Angles extracted from the keypoint files.
    Keypoints(LabelOptions),
}

fn labels_for(
    dir: &Path,
    manifest: &RecordingManifest,
    entry: &RecordingEntry,
    truth: &[JointAngleFrame],
    choice: LabelChoice,
) -> Result<Vec<JointAngleFrame>, DataError> {
    match choice {
        LabelChoice::Truth => Ok(truth.to_vec()),
        LabelChoice::Keypoints(opts) => {
            let path = dir.join(&entry.files.keypoints);
            let frames = read_keypoints(&path)?;
            let factor =
                decimation_factor(manifest.imu_rate_hz * CAMERA_RATE_HZ / manifest.camera_rate_hz)?;
            hpe_labels(&frames, &opts, factor).map_err(|e| DataError::Pipeline(e.into()))
        }
    }
}

/// Training, test and validation windows of one population.
pub fn load_population(
    dir: &Path,
    manifest: &RecordingManifest,
    population: Population,
    labels: LabelChoice,
    opts: &DataOptions,
) -> Result<PopulationData, DataError> {
    let mut train = Vec::new();
    for e in manifest.select(population, false) {
        let recording = e.load(dir)?;
        let truth = read_angles(&dir.join(&e.files.angles_truth))?;
        let labels = labels_for(dir, manifest, e, &truth, labels)?;
        train.push(TrainingRecording {
            recording,
            labels,
            truth,
        });
    }
    let mut validation = Vec::new();
    for e in manifest.select(population, true) {
        let recording = e.load(dir)?;
        let truth = read_angles(&dir.join(&e.files.angles_truth))?;
        validation.push(EvalRecording { recording, truth });
    }
    Ok(population_data(&train, &validation, opts)?)
}

pub fn load_experiment_data(
    dir: &Path,
    labels: LabelChoice,
    opts: &DataOptions,
) -> Result<ExperimentData, DataError> {
    let manifest = RecordingManifest::read(dir)?;
    Ok(ExperimentData {
        ab: load_population(dir, &manifest, Population::Ab, labels, opts)?,
        sk: load_population(dir, &manifest, Population::Sk, labels, opts)?,
    })
}
