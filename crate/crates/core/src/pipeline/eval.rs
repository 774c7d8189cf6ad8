use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{PipelineError, SpeedCondition, WindowedDataset};
use crate::tcn::{TcnError, TcnModel};
use crate::JOINT_ANGLES;

/// RMSE of one group of samples, in degrees.
#[derive(Clone, Debug, PartialEq)]
pub struct JointErrors {
    /// In [`JointAngleFrame::CHANNELS`](crate::geometry::JointAngleFrame::CHANNELS) order.
    pub per_joint: [f64; JOINT_ANGLES],
    pub count: usize,
}

impl JointErrors {
    pub fn hip_mean(&self) -> f64 {
        0.5 * (self.per_joint[0] + self.per_joint[1])
    }

    pub fn knee_mean(&self) -> f64 {
        0.5 * (self.per_joint[2] + self.per_joint[3])
    }

    /// Mean of the four per-joint values.
    pub fn overall(&self) -> f64 {
        self.per_joint.iter().sum::<f64>() / JOINT_ANGLES as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpeedBreakdown {
    /// Speed label such as `1.10`, or `transient`.
    pub condition: String,
    pub errors: JointErrors,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub errors: JointErrors,
    /// Sorted by speed, with `transient` last. Empty without tags.
    pub per_speed: Vec<SpeedBreakdown>,
}

impl EvalReport {
    pub fn overall(&self) -> f64 {
        self.errors.overall()
    }

    pub fn per_joint(&self) -> [f64; JOINT_ANGLES] {
        self.errors.per_joint
    }
}

#[derive(Default, Clone)]
struct Accum {
    sq: [f64; JOINT_ANGLES],
    n: usize,
}

impl Accum {
    fn add(&mut self, p: &[f64; JOINT_ANGLES], t: &[f64; JOINT_ANGLES]) {
        for j in 0..JOINT_ANGLES {
            let e = p[j] - t[j];
            self.sq[j] += e * e;
        }
        self.n += 1;
    }

    fn finish(&self) -> JointErrors {
        let per_joint = core::array::from_fn(|j| crate::math::sqrt(self.sq[j] / self.n as f64));
        JointErrors {
            per_joint,
            count: self.n,
        }
    }
}

/// Per-joint root-mean-square error, optionally broken down by speed
/// condition (one bucket per speed, ramps pooled as `transient`).
pub fn rmse_report(
    preds: &[[f64; JOINT_ANGLES]],
    truth: &[[f64; JOINT_ANGLES]],
    conditions: Option<&[SpeedCondition]>,
) -> Result<EvalReport, PipelineError> {
    if preds.len() != truth.len() {
        return Err(PipelineError::LengthMismatch {
            left: preds.len(),
            right: truth.len(),
        });
    }
    if preds.is_empty() {
        return Err(PipelineError::DatasetTooSmall {
            needed: 1,
            available: 0,
        });
    }
    if let Some(c) = conditions {
        if c.len() != preds.len() {
            return Err(PipelineError::LengthMismatch {
                left: preds.len(),
                right: c.len(),
            });
        }
    }
    if preds.iter().chain(truth).flatten().any(|v| !v.is_finite()) {
        return Err(PipelineError::NonFinite("predictions or truth"));
    }
    let mut all = Accum::default();
    // Bucket key: Some(speed) or None for transients.
    let mut buckets: Vec<(Option<f64>, Accum)> = Vec::new();
    for (i, (p, t)) in preds.iter().zip(truth).enumerate() {
        all.add(p, t);
        if let Some(c) = conditions {
            let key = match c[i] {
                SpeedCondition::Constant(v) | SpeedCondition::Plateau(v) => Some(v),
                SpeedCondition::Transient => None,
            };
            let slot = match buckets.iter().position(|b| b.0 == key) {
                Some(k) => k,
                None => {
                    buckets.push((key, Accum::default()));
                    buckets.len() - 1
                }
            };
            buckets[slot].1.add(p, t);
        }
    }
    buckets.sort_by(|a, b| match (a.0, b.0) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (Some(_), None) => core::cmp::Ordering::Less,
        (None, Some(_)) => core::cmp::Ordering::Greater,
        (None, None) => core::cmp::Ordering::Equal,
    });
    let per_speed = buckets
        .into_iter()
        .map(|(key, acc)| SpeedBreakdown {
            condition: match key {
                Some(v) => SpeedCondition::Plateau(v).label(),
                None => SpeedCondition::Transient.label(),
            },
            errors: acc.finish(),
        })
        .collect();
    Ok(EvalReport {
        errors: all.finish(),
        per_speed,
    })
}

/// `100 (baseline - new) / baseline`; positive when `new` is lower.
pub fn improvement_pct(baseline: f64, new: f64) -> Result<f64, PipelineError> {
    if !(baseline > 0.0) || !baseline.is_finite() {
        return Err(PipelineError::ZeroBaseline);
    }
    Ok(100.0 * (baseline - new) / baseline)
}

/// Predictions for every item, in dataset order. Items of one recording are
/// evaluated in shared dense passes over overlapping windows, which gives
/// the same bits as evaluating each window on its own.
pub fn predict_dataset(
    model: &TcnModel,
    ds: &WindowedDataset,
) -> Result<Vec<[f64; JOINT_ANGLES]>, TcnError> {
    if model.config.out_dim != JOINT_ANGLES {
        return Err(TcnError::ConfigMismatch("model must predict four angles"));
    }
    if ds.window_len != model.config.window_len {
        return Err(TcnError::ConfigMismatch(
            "dataset window length differs from the model's",
        ));
    }
    if !ds.is_empty() && ds.channels() != model.config.in_channels {
        return Err(TcnError::ConfigMismatch(
            "dataset channel count differs from the model's",
        ));
    }
    // Merged passes reproduce per-window outputs only when every window
    // covers the receptive field.
    let merge = ds.window_len >= model.receptive_field();
    let mut out = vec![[0.0; JOINT_ANGLES]; ds.len()];
    for mut order in ds.by_recording() {
        order.sort_unstable_by_key(|&i| ds.items[i].end);
        // Segment targets come out in the order of `order`.
        let mut next = order.iter();
        for seg in ds.segments(&order, merge) {
            let cols: Vec<usize> = seg.targets.iter().map(|t| t.0).collect();
            for p in model.predict_segment(&seg.input, &cols)? {
                let i = *next.next().expect("one prediction per item");
                out[i] = core::array::from_fn(|j| p[j]);
            }
        }
    }
    Ok(out)
}

/// Predict every item and score against its target, by speed condition.
pub fn evaluate(model: &TcnModel, ds: &WindowedDataset) -> Result<EvalReport, PipelineError> {
    let preds = predict_dataset(model, ds)?;
    let conditions: Vec<SpeedCondition> = (0..ds.len()).map(|i| ds.tags(i).condition).collect();
    rmse_report(&preds, &ds.targets(), Some(&conditions))
}
