use std::io::Write;
use std::path::Path;

use gaitkin_core::geometry::JointAngleFrame;

use super::{create_parent, read_table, IoError};

fn header() -> Vec<&'static str> {
    let mut h = vec!["time_s"];
    h.extend(JointAngleFrame::CHANNELS);
    h
}

/// Angle table: `time_s,r_hip,l_hip,r_knee,l_knee`, degrees with six
/// decimals.
pub fn write_angles(path: &Path, frames: &[JointAngleFrame]) -> Result<(), IoError> {
    create_parent(path)?;
    let mut out = String::with_capacity(64 * (frames.len() + 1));
    out.push_str(&header().join(","));
    out.push('\n');
    for f in frames {
        out.push_str(&format!(
            "{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            f.time_s, f.r_hip, f.l_hip, f.r_knee, f.l_knee
        ));
    }
    let mut file = std::fs::File::create(path).map_err(|e| IoError::io(path, e))?;
    file.write_all(out.as_bytes())
        .map_err(|e| IoError::io(path, e))
}

pub fn read_angles(path: &Path) -> Result<Vec<JointAngleFrame>, IoError> {
    let rows = read_table(path, &header())?;
    let mut out = Vec::with_capacity(rows.len());
    for (line, v) in rows {
        if v.len() != 5 {
            return Err(IoError::format(path, line, "expected 5 fields"));
        }
        out.push(JointAngleFrame::from_array(v[0], [v[1], v[2], v[3], v[4]]));
    }
    Ok(out)
}
