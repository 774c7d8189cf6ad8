use std::io::Write;
use std::path::Path;

use gaitkin_core::synth::{ImuSample, IMU_CHANNEL_NAMES};
use gaitkin_core::IMU_CHANNELS;

use super::{create_parent, read_table, IoError};

pub fn imu_header() -> Vec<&'static str> {
    let mut h = vec!["time_s"];
    h.extend(IMU_CHANNEL_NAMES);
    h
}

/// IMU table: `time_s` then the 18 channels, SI units. Values are written
/// in shortest round-trip form so reading gives back identical bits.
pub fn write_imu(path: &Path, samples: &[ImuSample]) -> Result<(), IoError> {
    create_parent(path)?;
    let mut out = String::with_capacity(400 * (samples.len() + 1));
    out.push_str(&imu_header().join(","));
    out.push('\n');
    for s in samples {
        out.push_str(&s.time_s.to_string());
        for v in s.channels {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    let mut file = std::fs::File::create(path).map_err(|e| IoError::io(path, e))?;
    file.write_all(out.as_bytes())
        .map_err(|e| IoError::io(path, e))
}

pub fn read_imu(path: &Path) -> Result<Vec<ImuSample>, IoError> {
    let rows = read_table(path, &imu_header())?;
    let mut out = Vec::with_capacity(rows.len());
    for (line, v) in rows {
        if v.len() != IMU_CHANNELS + 1 {
            return Err(IoError::format(
                path,
                line,
                format!("expected {} fields", IMU_CHANNELS + 1),
            ));
        }
        out.push(ImuSample {
            time_s: v[0],
            channels: std::array::from_fn(|c| v[c + 1]),
        });
    }
    Ok(out)
}

/// One comma-separated IMU row without header, as sent over a socket.
pub fn parse_imu_row(line: &str) -> Result<ImuSample, String> {
    let v: Vec<f64> = line
        .split(',')
        .map(|f| {
            f.trim()
                .parse::<f64>()
                .map_err(|_| format!("`{}` is not a number", f.trim()))
        })
        .collect::<Result<_, _>>()?;
    if v.len() != IMU_CHANNELS + 1 {
        return Err(format!(
            "expected {} fields, found {}",
            IMU_CHANNELS + 1,
            v.len()
        ));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err("non-finite value".into());
    }
    Ok(ImuSample {
        time_s: v[0],
        channels: std::array::from_fn(|c| v[c + 1]),
    })
}
