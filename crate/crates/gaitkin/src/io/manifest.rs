use std::path::{Path, PathBuf};

use gaitkin_core::pipeline::{Population, Recording, SpeedCondition};
use gaitkin_core::synth::{validation_speed_profile, ImuSample};
use serde::{Deserialize, Serialize};

use super::{create_parent, read_imu, IoError};

pub const MANIFEST_FILE: &str = "recordings.json";

/// Relative paths of the files of one recording.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordingFiles {
    pub imu: String,
    pub keypoints: String,
    pub angles_truth: String,
}

/// Treadmill condition: a constant speed or a named speed profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpeedRef {
    Constant { speed_mps: f64 },
    Profile { profile: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordingEntry {
    pub id: String,
    pub subject: usize,
    #[serde(flatten)]
    pub speed: SpeedRef,
    pub sk: bool,
    pub files: RecordingFiles,
}

impl RecordingEntry {
    pub fn population(&self) -> Population {
        if self.sk {
            Population::Sk
        } else {
            Population::Ab
        }
    }

    pub fn is_validation(&self) -> bool {
        matches!(self.speed, SpeedRef::Profile { .. })
    }

    /// The IMU file as a tagged recording.
    pub fn load(&self, dir: &Path) -> Result<Recording, IoError> {
        let path = dir.join(&self.files.imu);
        let samples = read_imu(&path)?;
        let (speed, condition) = self.speed_tags(&path, &samples)?;
        Ok(Recording::from_samples(
            self.id.clone(),
            self.population(),
            &samples,
            speed,
            condition,
        ))
    }

    fn speed_tags(
        &self,
        path: &Path,
        samples: &[ImuSample],
    ) -> Result<(Vec<f64>, Vec<SpeedCondition>), IoError> {
        match &self.speed {
            SpeedRef::Constant { speed_mps } => Ok((
                vec![*speed_mps; samples.len()],
                vec![SpeedCondition::Constant(*speed_mps); samples.len()],
            )),
            SpeedRef::Profile { profile } if profile == "validation" => {
                let p = validation_speed_profile();
                Ok(samples
                    .iter()
                    .map(|s| (p.speed_at(s.time_s), p.condition_at(s.time_s)))
                    .unzip())
            }
            SpeedRef::Profile { profile } => Err(IoError::format(
                path,
                0,
                format!("unknown speed profile `{profile}`"),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordingManifest {
    pub seed: u64,
    pub imu_rate_hz: f64,
    pub camera_rate_hz: f64,
    pub recordings: Vec<RecordingEntry>,
}

impl RecordingManifest {
    pub fn read(dir: &Path) -> Result<Self, IoError> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| IoError::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| IoError::format(&path, e.line(), e.to_string()))
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, IoError> {
        let path = dir.join(MANIFEST_FILE);
        create_parent(&path)?;
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, text + "\n").map_err(|e| IoError::io(&path, e))?;
        Ok(path)
    }

    pub fn select(&self, population: Population, validation: bool) -> Vec<&RecordingEntry> {
        self.recordings
            .iter()
            .filter(|r| r.population() == population && r.is_validation() == validation)
            .collect()
    }
}

/// Load every recording of a population and split, in manifest order.
pub fn load_recordings(
    dir: &Path,
    manifest: &RecordingManifest,
    population: Population,
    validation: bool,
) -> Result<Vec<(RecordingEntry, Recording)>, IoError> {
    manifest
        .select(population, validation)
        .into_iter()
        .map(|e| Ok((e.clone(), e.load(dir)?)))
        .collect()
}
