use super::{AngleConvention, GeometryError, Joint, JointAngleFrame, KeypointFrame, Side};
use crate::math::{atan2, Vec3};

/// Vectors shorter than this (meters) have no usable direction.
pub const DEGENERATE_EPS: f64 = 1e-9;

/// Unsigned angle between two vectors in degrees, in `[0, 180]`.
///
/// Evaluated as `atan2(|u x v|, u . v)`, which equals the clamped
/// `acos(u.v / |u||v|)` but keeps full precision near 0 and 180 degrees.
pub fn angle_between(u: Vec3, v: Vec3) -> Result<f64, GeometryError> {
    if !(u.norm() > DEGENERATE_EPS) || !(v.norm() > DEGENERATE_EPS) {
        return Err(GeometryError::DegenerateVector);
    }
    Ok(atan2(u.cross(v).norm(), u.dot(v)).to_degrees())
}

/// Angle between the trunk (pelvis -> spine) and the thigh (hip -> knee).
/// Standing upright gives 180.
pub fn hip_angle(frame: &KeypointFrame, side: Side) -> Result<f64, GeometryError> {
    let pelvis = frame.position(Joint::Pelvis)?;
    let spine = frame.position(Joint::Spine)?;
    let hip = frame.position(side.hip())?;
    let knee = frame.position(side.knee())?;
    angle_between(spine - pelvis, knee - hip)
}

/// Angle between the thigh (hip -> knee) and the shank (knee -> ankle).
/// A straight leg gives 0, so the value is knee flexion directly.
pub fn knee_angle(frame: &KeypointFrame, side: Side) -> Result<f64, GeometryError> {
    let hip = frame.position(side.hip())?;
    let knee = frame.position(side.knee())?;
    let ankle = frame.position(side.ankle())?;
    angle_between(knee - hip, ankle - knee)
}

/// Re-sign a raw hip angle as flexion (+) / extension (-), 0 when standing.
///
/// The forward axis is `(l_hip - r_hip) x trunk_up`; a thigh whose direction
/// projects behind the trunk line is in extension.
pub fn to_flexion_convention(
    raw_hip: f64,
    frame: &KeypointFrame,
    side: Side,
) -> Result<f64, GeometryError> {
    if !(0.0..=180.0).contains(&raw_hip) {
        return Err(GeometryError::AngleOutOfRange(raw_hip));
    }
    let trunk_up = frame.position(Joint::Spine)? - frame.position(Joint::Pelvis)?;
    let across = frame.position(Joint::LHip)? - frame.position(Joint::RHip)?;
    if across.norm() <= DEGENERATE_EPS || trunk_up.norm() <= DEGENERATE_EPS {
        return Err(GeometryError::DegenerateVector);
    }
    let forward = across.cross(trunk_up);
    let forward_norm = forward.norm();
    if forward_norm <= DEGENERATE_EPS {
        return Err(GeometryError::DegenerateVector);
    }
    let forward = forward.scale(1.0 / forward_norm);
    let thigh = frame.position(side.knee())? - frame.position(side.hip())?;
    let flexion = 180.0 - raw_hip;
    Ok(if thigh.dot(forward) < 0.0 {
        -flexion
    } else {
        flexion
    })
}

/// All four angles of one frame in the requested convention.
pub fn frame_angles(
    frame: &KeypointFrame,
    convention: AngleConvention,
) -> Result<JointAngleFrame, GeometryError> {
    let hip = |side| -> Result<f64, GeometryError> {
        let raw = hip_angle(frame, side)?;
        match convention {
            AngleConvention::Raw => Ok(raw),
            AngleConvention::Flexion => to_flexion_convention(raw, frame, side),
        }
    };
    Ok(JointAngleFrame {
        time_s: frame.time_s,
        r_hip: hip(Side::Right)?,
        l_hip: hip(Side::Left)?,
        r_knee: knee_angle(frame, Side::Right)?,
        l_knee: knee_angle(frame, Side::Left)?,
    })
}
