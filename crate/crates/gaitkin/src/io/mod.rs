//! File formats: keypoint records, angle and IMU tables, model files and
//! recording manifests.

mod angles;
mod imu;
mod keypoints;
mod manifest;
mod model;

pub use angles::{read_angles, write_angles};
pub use imu::{imu_header, parse_imu_row, read_imu, write_imu};
pub use keypoints::{parse_keypoint_line, read_keypoints, write_keypoints};
pub use manifest::{
    load_recordings, RecordingEntry, RecordingFiles, RecordingManifest, SpeedRef, MANIFEST_FILE,
};
pub use model::{load_model, save_model};

use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{}: {source}", path.display())]
    Model {
        path: PathBuf,
        source: gaitkin_core::tcn::TcnError,
    },
}

impl IoError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn format(path: &Path, line: usize, message: impl Into<String>) -> Self {
        IoError::Format {
            path: path.to_path_buf(),
            line,
            message: message.into(),
        }
    }
}

pub(crate) fn create_parent(path: &Path) -> Result<(), IoError> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            std::fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))
        }
        _ => Ok(()),
    }
}

/// Read a delimited table with a header row. Returns the data rows with
/// their 1-based line numbers.
pub(crate) fn read_table(
    path: &Path,
    expected_header: &[&str],
) -> Result<Vec<(usize, Vec<f64>)>, IoError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?;
    if header.iter().ne(expected_header.iter().copied()) {
        return Err(IoError::format(
            path,
            1,
            format!("expected header `{}`", expected_header.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let values = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| IoError::format(path, line, format!("`{f}` is not a number")))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(IoError::format(path, line, "non-finite value"));
        }
        rows.push((line, values));
    }
    Ok(rows)
}

fn csv_error(path: &Path, e: csv::Error) -> IoError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => IoError::io(path, io),
        other => IoError::format(path, line, format!("{other:?}")),
    }
}
