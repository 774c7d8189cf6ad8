use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use gaitkin_core::geometry::{Joint, Keypoint3D, KeypointFrame};
use serde_json::{Map, Value};

use super::{create_parent, IoError};

/// One JSON object per line:
/// `{"time_s": 0.0, "joints": {"pelvis": [x, y, z, confidence], ...}}`.
/// The confidence is optional on input and defaults to 1. Unknown joint
/// names are ignored; canonical joints may be missing.
pub fn parse_keypoint_line(line: &str) -> Result<KeypointFrame, String> {
    let v: Value = serde_json::from_str(line).map_err(|e| format!("invalid JSON: {e}"))?;
    let obj = v.as_object().ok_or("record must be an object")?;
    let time_s = obj
        .get("time_s")
        .and_then(Value::as_f64)
        .ok_or("missing numeric `time_s`")?;
    if !time_s.is_finite() {
        return Err("non-finite `time_s`".into());
    }
    let joints = obj
        .get("joints")
        .and_then(Value::as_object)
        .ok_or("missing object `joints`")?;
    let mut frame = KeypointFrame::new(time_s);
    for (name, coords) in joints {
        let Some(joint) = Joint::from_name(name) else {
            continue;
        };
        let arr = coords
            .as_array()
            .ok_or_else(|| format!("joint `{name}` must be an array"))?;
        if arr.len() != 3 && arr.len() != 4 {
            return Err(format!("joint `{name}` needs 3 or 4 numbers"));
        }
        let nums: Vec<f64> = arr
            .iter()
            .map(|x| {
                x.as_f64()
                    .ok_or_else(|| format!("joint `{name}` has a non-numeric entry"))
            })
            .collect::<Result<_, _>>()?;
        let kp = Keypoint3D::new(nums[0], nums[1], nums[2])
            .with_confidence(nums.get(3).copied().unwrap_or(1.0));
        if !kp.is_valid() {
            return Err(format!(
                "joint `{name}` is not finite or its confidence is outside [0, 1]"
            ));
        }
        frame.set(joint, kp);
    }
    Ok(frame)
}

pub fn read_keypoints(path: &Path) -> Result<Vec<KeypointFrame>, IoError> {
    let file = std::fs::File::open(path).map_err(|e| IoError::io(path, e))?;
    let mut frames = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| IoError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        frames.push(parse_keypoint_line(&line).map_err(|m| IoError::format(path, i + 1, m))?);
    }
    Ok(frames)
}

fn frame_json(f: &KeypointFrame) -> Value {
    let mut joints = Map::new();
    for j in Joint::ALL {
        if let Some(k) = f.get(j) {
            joints.insert(
                j.name().into(),
                Value::from(vec![k.x, k.y, k.z, k.confidence]),
            );
        }
    }
    let mut obj = Map::new();
    obj.insert("time_s".into(), Value::from(f.time_s));
    obj.insert("joints".into(), Value::Object(joints));
    Value::Object(obj)
}

pub fn write_keypoints(path: &Path, frames: &[KeypointFrame]) -> Result<(), IoError> {
    create_parent(path)?;
    let file = std::fs::File::create(path).map_err(|e| IoError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for f in frames {
        serde_json::to_writer(&mut w, &frame_json(f)).map_err(|e| IoError::io(path, e.into()))?;
        w.write_all(b"\n").map_err(|e| IoError::io(path, e))?;
    }
    w.flush().map_err(|e| IoError::io(path, e))
}
