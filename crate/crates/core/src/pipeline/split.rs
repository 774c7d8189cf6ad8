use alloc::vec::Vec;

use super::{PipelineError, WindowedDataset};

/// Result of [`split_train_test`].
#[derive(Clone, Debug)]
pub struct Split {
    pub train: WindowedDataset,
    pub test: WindowedDataset,
    /// Training items removed because their window overlaps the input
    /// window of the first test item of the same recording.
    pub dropped: usize,
}

/// Per recording, the final `round(test_fraction * n)` items (at least one)
/// form the test set. Training items whose window overlaps the window of the
/// first test item are dropped, so no sample feeds both sets through
/// neighbouring windows.
pub fn split_train_test(ds: &WindowedDataset, test_fraction: f64) -> Result<Split, PipelineError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(PipelineError::InvalidArgument(
            "test_fraction must lie in (0, 1)",
        ));
    }
    let w = ds.window_len;
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut dropped = 0;
    for group in ds.by_recording() {
        let n = group.len();
        if n == 0 {
            continue;
        }
        let n_test = (crate::math::round(test_fraction * n as f64) as usize).max(1);
        if n_test >= n {
            return Err(PipelineError::DatasetTooSmall {
                needed: n_test + 1,
                available: n,
            });
        }
        let first_test_end = ds.items[group[n - n_test]].end;
        let guard = (first_test_end + 1).saturating_sub(w);
        for &i in &group[..n - n_test] {
            if ds.items[i].end >= guard {
                dropped += 1;
            } else {
                train.push(i);
            }
        }
        test.extend_from_slice(&group[n - n_test..]);
    }
    if train.is_empty() {
        return Err(PipelineError::DatasetTooSmall {
            needed: w + 1,
            available: ds.len(),
        });
    }
    Ok(Split {
        train: ds.subset(&train),
        test: ds.subset(&test),
        dropped,
    })
}

/// SK items needed for an SK share of `fraction` next to `n_ab` AB items:
/// `round(fraction * n_ab / (1 - fraction))`.
pub fn sk_items_for_fraction(n_ab: usize, fraction: f64) -> usize {
    crate::math::round(fraction * n_ab as f64 / (1.0 - fraction)) as usize
}

/// All of `ab` plus, from every SK recording, its earliest items, so that
/// SK items make up `sk_fraction` of the result (to within one item). The
/// SK budget is split evenly over recordings, the remainder going to the
/// first ones.
pub fn mix_datasets(
    ab: &WindowedDataset,
    sk: &WindowedDataset,
    sk_fraction: f64,
) -> Result<WindowedDataset, PipelineError> {
    if !(0.0..1.0).contains(&sk_fraction) {
        return Err(PipelineError::InvalidArgument(
            "sk_fraction must lie in [0, 1)",
        ));
    }
    if ab.window_len != sk.window_len
        || (!ab.is_empty() && !sk.is_empty() && ab.channels() != sk.channels())
    {
        return Err(PipelineError::ShapeMismatch);
    }
    let needed = sk_items_for_fraction(ab.len(), sk_fraction);
    if needed == 0 {
        return Ok(ab.clone());
    }
    let groups: Vec<Vec<usize>> = sk
        .by_recording()
        .into_iter()
        .filter(|g| !g.is_empty())
        .collect();
    if groups.is_empty() {
        return Err(PipelineError::InsufficientSk {
            needed,
            available: 0,
        });
    }
    let base = needed / groups.len();
    let extra = needed % groups.len();
    let mut picked = Vec::with_capacity(needed);
    for (k, g) in groups.iter().enumerate() {
        let take = base + usize::from(k < extra);
        if take > g.len() {
            return Err(PipelineError::InsufficientSk {
                needed,
                available: sk.len(),
            });
        }
        picked.extend_from_slice(&g[..take]);
    }
    WindowedDataset::concat(&[ab, &sk.subset(&picked)])
}

impl WindowedDataset {
    /// Items whose window lies entirely inside its recording.
    pub fn without_warmup(&self) -> Self {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| self.items[i].end + 1 >= self.window_len)
            .collect();
        self.subset(&keep)
    }
}
