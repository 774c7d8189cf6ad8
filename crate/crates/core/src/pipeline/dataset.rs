//! Windowed supervised datasets over IMU recordings.
//!
//! A dataset does not materialize its windows. It keeps the recordings
//! (shared, immutable) and one small item per supervised target: the index of
//! the window's final sample and the target angles. Windows that start before
//! the first sample are zero-padded on the left.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use super::PipelineError;
use crate::geometry::JointAngleFrame;
use crate::math::Matrix;
use crate::synth::ImuSample;
use crate::{IMU_CHANNELS, JOINT_ANGLES};

/// Largest tolerated timestamp disagreement between IMU and label streams.
pub const ALIGN_TOLERANCE_S: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Population {
    /// Able-bodied gait.
    Ab,
    /// Stiff-knee gait.
    Sk,
}

impl Population {
    pub fn as_str(self) -> &'static str {
        match self {
            Population::Ab => "AB",
            Population::Sk => "SK",
        }
    }
}

impl fmt::Display for Population {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Speed bucket of a sample, used for per-speed error breakdowns.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpeedCondition {
    /// Constant-speed trial.
    Constant(f64),
    /// Steady plateau of a speed profile.
    Plateau(f64),
    /// Acceleration or deceleration between plateaus.
    Transient,
}

impl SpeedCondition {
    /// Stable label, e.g. `1.10` or `transient`.
    pub fn label(&self) -> String {
        match self {
            SpeedCondition::Constant(v) | SpeedCondition::Plateau(v) => alloc::format!("{v:.2}"),
            SpeedCondition::Transient => String::from("transient"),
        }
    }
}

/// One IMU recording with per-sample speed bookkeeping.
#[derive(Clone, Debug)]
pub struct Recording {
    pub id: String,
    pub population: Population,
    pub times: Vec<f64>,
    /// `IMU_CHANNELS x n`, channel-major.
    pub imu: Matrix,
    pub speed_mps: Vec<f64>,
    pub condition: Vec<SpeedCondition>,
}

impl Recording {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Builds a recording from IMU samples and a per-sample condition.
    pub fn from_samples(
        id: impl Into<String>,
        population: Population,
        samples: &[ImuSample],
        speed_mps: Vec<f64>,
        condition: Vec<SpeedCondition>,
    ) -> Self {
        let n = samples.len();
        assert_eq!(speed_mps.len(), n, "speed per sample");
        assert_eq!(condition.len(), n, "condition per sample");
        let mut imu = Matrix::zeros(IMU_CHANNELS, n);
        for (t, s) in samples.iter().enumerate() {
            for c in 0..IMU_CHANNELS {
                imu.set(c, t, s.channels[c]);
            }
        }
        Self {
            id: id.into(),
            population,
            times: samples.iter().map(|s| s.time_s).collect(),
            imu,
            speed_mps,
            condition,
        }
    }

    /// Raw window of `len` samples ending at `end` (inclusive), zero-padded
    /// on the left.
    pub fn window(&self, end: usize, len: usize) -> Matrix {
        let mut m = Matrix::zeros(self.imu.rows(), len);
        self.copy_window(end, len, &mut m);
        m
    }

    pub(crate) fn copy_window(&self, end: usize, len: usize, out: &mut Matrix) {
        let first = end as isize + 1 - len as isize;
        let skip = (-first).max(0) as usize;
        let src_start = first.max(0) as usize;
        for c in 0..self.imu.rows() {
            let dst = out.row_mut(c);
            dst[..skip].fill(0.0);
            dst[skip..].copy_from_slice(&self.imu.row(c)[src_start..=end]);
        }
    }
}

/// Provenance of one supervised item.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ItemTags<'a> {
    pub population: Population,
    pub speed_mps: f64,
    pub condition: SpeedCondition,
    pub recording_id: &'a str,
    pub t_end_s: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Item {
    /// Index into [`WindowedDataset::recordings`].
    pub rec: usize,
    /// Sample index of the window's final (target) step.
    pub end: usize,
    pub target: [f64; JOINT_ANGLES],
}

/// Window length, stride and warm-up policy for [`window_dataset`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindowOptions {
    pub window_len: usize,
    pub stride: usize,
    /// Drop items whose window would need left zero-padding.
    pub skip_warmup: bool,
}

impl WindowOptions {
    pub fn new(window_len: usize) -> Self {
        Self {
            window_len,
            stride: 1,
            skip_warmup: false,
        }
    }
}

/// A contiguous stretch of raw input with supervised positions, the unit the
/// network trains on. A single window is a segment with one target at its
/// last column.
#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    /// `channels x len`, raw (un-normalized) samples.
    pub input: Matrix,
    /// `(column, target)` pairs, columns strictly increasing.
    pub targets: Vec<(usize, [f64; JOINT_ANGLES])>,
}

#[derive(Clone, Debug)]
pub struct WindowedDataset {
    pub window_len: usize,
    pub recordings: Vec<Arc<Recording>>,
    /// Sorted by `(rec, end)`.
    pub items: Vec<Item>,
}

/// Slide a causal window over a recording; one item per `stride` samples,
/// aligned so the last sample is always a target. The target is the label at
/// the window's final timestamp.
pub fn window_dataset(
    recording: Recording,
    labels: &[JointAngleFrame],
    opts: WindowOptions,
) -> Result<WindowedDataset, PipelineError> {
    let n = recording.len();
    if opts.window_len == 0 || opts.stride == 0 {
        return Err(PipelineError::InvalidArgument(
            "window_len and stride must be positive",
        ));
    }
    if labels.len() != n {
        return Err(PipelineError::LengthMismatch {
            left: n,
            right: labels.len(),
        });
    }
    for (i, (t, l)) in recording.times.iter().zip(labels).enumerate() {
        if !((t - l.time_s).abs() <= ALIGN_TOLERANCE_S) {
            return Err(PipelineError::Misaligned {
                index: i,
                imu_s: *t,
                label_s: l.time_s,
            });
        }
    }
    if !labels.iter().all(JointAngleFrame::is_finite) {
        return Err(PipelineError::NonFinite("labels"));
    }
    let first_end = if opts.skip_warmup {
        opts.window_len - 1
    } else {
        0
    };
    let mut items = Vec::new();
    if n > first_end {
        let count = (n - 1 - first_end) / opts.stride + 1;
        for j in (0..count).rev() {
            let end = n - 1 - j * opts.stride;
            items.push(Item {
                rec: 0,
                end,
                target: labels[end].to_array(),
            });
        }
    }
    Ok(WindowedDataset {
        window_len: opts.window_len,
        recordings: vec![Arc::new(recording)],
        items,
    })
}

impl WindowedDataset {
    pub fn empty(window_len: usize) -> Self {
        Self {
            window_len,
            recordings: Vec::new(),
            items: Vec::new(),
        }
    }

    /// Dataset from explicit `(window, target)` pairs; every pair becomes its
    /// own single-item recording.
    pub fn from_windows(
        windows: Vec<(Matrix, [f64; JOINT_ANGLES])>,
    ) -> Result<Self, PipelineError> {
        let window_len =
            windows
                .first()
                .map(|(w, _)| w.cols())
                .ok_or(PipelineError::DatasetTooSmall {
                    needed: 1,
                    available: 0,
                })?;
        let mut ds = Self::empty(window_len);
        for (k, (w, target)) in windows.into_iter().enumerate() {
            if w.cols() != window_len {
                return Err(PipelineError::ShapeMismatch);
            }
            let n = w.cols();
            let rec = Recording {
                id: alloc::format!("window-{k}"),
                population: Population::Ab,
                times: (0..n).map(|i| i as f64 / crate::SAMPLE_RATE_HZ).collect(),
                imu: w,
                speed_mps: vec![0.0; n],
                condition: vec![SpeedCondition::Constant(0.0); n],
            };
            ds.recordings.push(Arc::new(rec));
            ds.items.push(Item {
                rec: k,
                end: n - 1,
                target,
            });
        }
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn channels(&self) -> usize {
        self.recordings
            .first()
            .map_or(IMU_CHANNELS, |r| r.imu.rows())
    }

    pub fn tags(&self, i: usize) -> ItemTags<'_> {
        let it = &self.items[i];
        let rec = &self.recordings[it.rec];
        ItemTags {
            population: rec.population,
            speed_mps: rec.speed_mps[it.end],
            condition: rec.condition[it.end],
            recording_id: &rec.id,
            t_end_s: rec.times[it.end],
        }
    }

    pub fn window(&self, i: usize) -> Matrix {
        let it = &self.items[i];
        self.recordings[it.rec].window(it.end, self.window_len)
    }

    pub fn targets(&self) -> Vec<[f64; JOINT_ANGLES]> {
        self.items.iter().map(|it| it.target).collect()
    }

    /// Concatenate datasets with the same window length. Recordings are
    /// shared, not copied.
    pub fn concat(parts: &[&WindowedDataset]) -> Result<Self, PipelineError> {
        let window_len = parts.first().map_or(0, |p| p.window_len);
        let mut out = Self::empty(window_len);
        for p in parts {
            if p.window_len != window_len {
                return Err(PipelineError::ShapeMismatch);
            }
            out.append(p);
        }
        Ok(out)
    }

    fn append(&mut self, other: &WindowedDataset) {
        let offset = self.recordings.len();
        self.recordings.extend(other.recordings.iter().cloned());
        self.items.extend(other.items.iter().map(|it| Item {
            rec: it.rec + offset,
            ..*it
        }));
    }

    /// Item indices grouped per recording, in `end` order.
    pub fn by_recording(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.recordings.len()];
        for (i, it) in self.items.iter().enumerate() {
            groups[it.rec].push(i);
        }
        groups
    }

    /// Subset with the given item indices (kept in dataset order); unused
    /// recordings are dropped.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut idx = indices.to_vec();
        idx.sort_unstable();
        idx.dedup();
        let mut remap = vec![usize::MAX; self.recordings.len()];
        let mut out = Self::empty(self.window_len);
        for i in idx {
            let it = self.items[i];
            if remap[it.rec] == usize::MAX {
                remap[it.rec] = out.recordings.len();
                out.recordings.push(self.recordings[it.rec].clone());
            }
            out.items.push(Item {
                rec: remap[it.rec],
                ..it
            });
        }
        out
    }

    /// Keep every `stride`-th item of each recording, counted back from the
    /// last one.
    pub fn thin(&self, stride: usize) -> Self {
        let stride = stride.max(1);
        let keep: Vec<usize> = self
            .by_recording()
            .into_iter()
            .flat_map(|g| {
                let n = g.len();
                g.into_iter()
                    .enumerate()
                    .filter(move |(k, _)| (n - 1 - k) % stride == 0)
                    .map(|(_, i)| i)
            })
            .collect();
        self.subset(&keep)
    }

    /// Segments covering the given items. With `merge`, items of the same
    /// recording whose windows overlap share one segment; this is only exact
    /// when the window covers the network's receptive field.
    pub fn segments(&self, indices: &[usize], merge: bool) -> Vec<Segment> {
        let mut idx = indices.to_vec();
        idx.sort_unstable_by_key(|&i| (self.items[i].rec, self.items[i].end));
        let w = self.window_len;
        let mut out = Vec::new();
        let mut k = 0;
        while k < idx.len() {
            let first = self.items[idx[k]];
            let mut last_k = k;
            if merge {
                while last_k + 1 < idx.len() {
                    let next = self.items[idx[last_k + 1]];
                    let prev = self.items[idx[last_k]];
                    if next.rec != first.rec || next.end - prev.end > w {
                        break;
                    }
                    last_k += 1;
                }
            }
            let last = self.items[idx[last_k]];
            let len = last.end - first.end + w;
            let input = self.recordings[first.rec].window(last.end, len);
            let targets = idx[k..=last_k]
                .iter()
                .map(|&i| {
                    let it = self.items[i];
                    (it.end - first.end + w - 1, it.target)
                })
                .collect();
            out.push(Segment { input, targets });
            k = last_k + 1;
        }
        out
    }

    /// Sample ranges `[start, end]` (inclusive, unpadded) covered by the
    /// windows of the given items, merged per recording.
    pub fn covered_ranges(&self, indices: &[usize]) -> Vec<(usize, usize, usize)> {
        let mut spans: Vec<(usize, usize, usize)> = indices
            .iter()
            .map(|&i| {
                let it = self.items[i];
                (it.rec, (it.end + 1).saturating_sub(self.window_len), it.end)
            })
            .collect();
        spans.sort_unstable();
        let mut merged: Vec<(usize, usize, usize)> = Vec::new();
        for (rec, a, b) in spans {
            match merged.last_mut() {
                Some(m) if m.0 == rec && a <= m.2 + 1 => m.2 = m.2.max(b),
                _ => merged.push((rec, a, b)),
            }
        }
        merged
    }
}
