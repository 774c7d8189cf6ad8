//! Keypoint sequences to smoothed joint-angle label streams.

use alloc::vec::Vec;

use super::{
    hip_angle, knee_angle, savgol_filter, to_flexion_convention, AngleConvention, GeometryError,
    JointAngleFrame, KeypointFrame, SavGolSpec, Side,
};

/// Longest run of missing frames bridged by linear interpolation
/// (100 ms at 50 Hz).
pub const MAX_GAP_FRAMES: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LabelOptions {
    pub savgol: SavGolSpec,
    pub convention: AngleConvention,
    pub max_gap: usize,
}

impl Default for LabelOptions {
    fn default() -> Self {
        Self {
            savgol: SavGolSpec::default(),
            convention: AngleConvention::Flexion,
            max_gap: MAX_GAP_FRAMES,
        }
    }
}

impl LabelOptions {
    pub fn with_spec(savgol: SavGolSpec) -> Self {
        Self {
            savgol,
            ..Self::default()
        }
    }
}

/// Frame-wise angles followed by per-channel Savitzky–Golay smoothing.
///
/// A channel whose landmarks are missing in a frame is linearly interpolated
/// across the gap (held constant at the ends of the sequence) when the gap is
/// at most `max_gap` frames; longer gaps fail with
/// [`GeometryError::GapTooLarge`]. Use [`extract_angle_segments`] to split at
/// long gaps instead.
pub fn extract_angle_labels(
    frames: &[KeypointFrame],
    opts: &LabelOptions,
) -> Result<Vec<JointAngleFrame>, GeometryError> {
    opts.savgol.validate()?;
    check_monotone(frames)?;
    let channels = raw_channels(frames, opts.convention)?;
    if let Some(gap) = find_gaps(frames, &channels)
        .into_iter()
        .find(|g| g.len > opts.max_gap)
    {
        return Err(gap.error(frames));
    }
    smooth_segment(frames, channels, &opts.savgol)
}

/// Like [`extract_angle_labels`], but splits the sequence at gaps longer than
/// `max_gap` and returns one label stream per segment. Segments shorter than
/// the filter window are dropped.
pub fn extract_angle_segments(
    frames: &[KeypointFrame],
    opts: &LabelOptions,
) -> Result<Vec<Vec<JointAngleFrame>>, GeometryError> {
    opts.savgol.validate()?;
    check_monotone(frames)?;
    let channels = raw_channels(frames, opts.convention)?;
    let mut long: Vec<Gap> = find_gaps(frames, &channels)
        .into_iter()
        .filter(|g| g.len > opts.max_gap)
        .collect();
    long.sort_by_key(|g| g.start);

    let mut segments = Vec::new();
    let mut cursor = 0;
    let mut bounds = Vec::new();
    for g in &long {
        if g.start > cursor {
            bounds.push((cursor, g.start));
        }
        cursor = cursor.max(g.start + g.len);
    }
    if cursor < frames.len() {
        bounds.push((cursor, frames.len()));
    }
    for (a, b) in bounds {
        if b - a < opts.savgol.window {
            continue;
        }
        let sub: [Vec<Option<f64>>; 4] = core::array::from_fn(|c| channels[c][a..b].to_vec());
        segments.push(smooth_segment(&frames[a..b], sub, &opts.savgol)?);
    }
    Ok(segments)
}

fn check_monotone(frames: &[KeypointFrame]) -> Result<(), GeometryError> {
    for (i, w) in frames.windows(2).enumerate() {
        if !(w[1].time_s > w[0].time_s) {
            return Err(GeometryError::NonMonotoneTime { index: i + 1 });
        }
    }
    Ok(())
}

/// Per-channel frame-wise angles, `None` where a landmark is missing.
fn raw_channels(
    frames: &[KeypointFrame],
    convention: AngleConvention,
) -> Result<[Vec<Option<f64>>; 4], GeometryError> {
    let mut out: [Vec<Option<f64>>; 4] = Default::default();
    for frame in frames {
        let hip = |side| -> Result<Option<f64>, GeometryError> {
            let raw = match optional(hip_angle(frame, side))? {
                Some(raw) => raw,
                None => return Ok(None),
            };
            match convention {
                AngleConvention::Raw => Ok(Some(raw)),
                AngleConvention::Flexion => optional(to_flexion_convention(raw, frame, side)),
            }
        };
        out[0].push(hip(Side::Right)?);
        out[1].push(hip(Side::Left)?);
        out[2].push(optional(knee_angle(frame, Side::Right))?);
        out[3].push(optional(knee_angle(frame, Side::Left))?);
    }
    Ok(out)
}

fn optional(r: Result<f64, GeometryError>) -> Result<Option<f64>, GeometryError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(GeometryError::MissingJoint(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

struct Gap {
    start: usize,
    len: usize,
}

impl Gap {
    fn error(&self, frames: &[KeypointFrame]) -> GeometryError {
        GeometryError::GapTooLarge {
            start_s: frames[self.start].time_s,
            end_s: frames[self.start + self.len - 1].time_s,
            frames: self.len,
        }
    }
}

fn find_gaps(frames: &[KeypointFrame], channels: &[Vec<Option<f64>>; 4]) -> Vec<Gap> {
    let mut gaps = Vec::new();
    for ch in channels {
        let mut i = 0;
        while i < frames.len() {
            if ch[i].is_none() {
                let start = i;
                while i < frames.len() && ch[i].is_none() {
                    i += 1;
                }
                gaps.push(Gap {
                    start,
                    len: i - start,
                });
            } else {
                i += 1;
            }
        }
    }
    gaps
}

fn smooth_segment(
    frames: &[KeypointFrame],
    channels: [Vec<Option<f64>>; 4],
    spec: &SavGolSpec,
) -> Result<Vec<JointAngleFrame>, GeometryError> {
    if frames.len() < spec.window {
        return Err(GeometryError::SeriesTooShort {
            len: frames.len(),
            window: spec.window,
        });
    }
    let times: Vec<f64> = frames.iter().map(|f| f.time_s).collect();
    let mut smoothed: [Vec<f64>; 4] = Default::default();
    for (c, ch) in channels.into_iter().enumerate() {
        let filled = fill_gaps(&times, &ch).ok_or(GeometryError::GapTooLarge {
            start_s: times[0],
            end_s: times[times.len() - 1],
            frames: times.len(),
        })?;
        smoothed[c] = savgol_filter(&filled, spec)?;
    }
    Ok((0..frames.len())
        .map(|i| JointAngleFrame::from_array(times[i], core::array::from_fn(|c| smoothed[c][i])))
        .collect())
}

/// Linear interpolation in time across missing samples; constant hold before
/// the first and after the last known sample. `None` if nothing is known.
fn fill_gaps(times: &[f64], values: &[Option<f64>]) -> Option<Vec<f64>> {
    let known: Vec<usize> = (0..values.len()).filter(|&i| values[i].is_some()).collect();
    let first = *known.first()?;
    let last = *known.last()?;
    let mut out = Vec::with_capacity(values.len());
    let mut next_known = 0;
    for i in 0..values.len() {
        if let Some(v) = values[i] {
            out.push(v);
            next_known += 1;
            continue;
        }
        let v = if i < first {
            values[first].unwrap()
        } else if i > last {
            values[last].unwrap()
        } else {
            let (a, b) = (known[next_known - 1], known[next_known]);
            let (va, vb) = (values[a].unwrap(), values[b].unwrap());
            let w = (times[i] - times[a]) / (times[b] - times[a]);
            va + w * (vb - va)
        };
        out.push(v);
    }
    Some(out)
}
