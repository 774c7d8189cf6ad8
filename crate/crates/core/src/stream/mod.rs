//! Causal per-sample inference: a ring buffer of recent IMU samples, one
//! model evaluation per tick, and latency accounting against a per-tick
//! budget.
//!
//! Time is read through [`Clock`] so the engine stays free of OS
//! dependencies; the std companion crate supplies a wall clock.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::Matrix;
use crate::synth::ImuSample;
use crate::tcn::{EvalScratch, TcnError, TcnModel};
use crate::JOINT_ANGLES;

/// Per-tick budget at 50 Hz.
pub const TICK_BUDGET_MS: f64 = 20.0;

#[derive(Clone, Copy, Debug, PartialEq, thiserror::Error)]
pub enum StreamError {
    #[error("sample has {found} channels, expected {expected}")]
    ChannelMismatch { expected: usize, found: usize },
    #[error("timestamp at sample {index} does not increase")]
    NonMonotoneTimestamps { index: usize },
    #[error("non-finite sample at t={time_s}s")]
    NonFinite { time_s: f64 },
    #[error("no ticks recorded")]
    Empty,
    #[error(transparent)]
    Model(#[from] TcnError),
}

/// Fixed-capacity history of multichannel samples.
#[derive(Clone, Debug)]
pub struct RingBuffer {
    channels: usize,
    capacity: usize,
    /// Sample-major storage: slot `k` occupies `data[k * channels..]`.
    data: Vec<f64>,
    /// Slot the next sample is written to.
    head: usize,
    fill: usize,
}

impl RingBuffer {
    pub fn new(channels: usize, capacity: usize) -> Self {
        assert!(channels > 0 && capacity > 0, "empty ring buffer");
        Self {
            channels,
            capacity,
            data: vec![0.0; channels * capacity],
            head: 0,
            fill: 0,
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Samples held, at most `capacity`.
    pub fn fill(&self) -> usize {
        self.fill
    }

    pub fn is_full(&self) -> bool {
        self.fill == self.capacity
    }

    pub fn reset(&mut self) {
        self.head = 0;
        self.fill = 0;
    }

    pub fn push(&mut self, sample: &[f64]) -> Result<(), StreamError> {
        if sample.len() != self.channels {
            return Err(StreamError::ChannelMismatch {
                expected: self.channels,
                found: sample.len(),
            });
        }
        let c = self.channels;
        self.data[self.head * c..(self.head + 1) * c].copy_from_slice(sample);
        self.head = (self.head + 1) % self.capacity;
        self.fill = (self.fill + 1).min(self.capacity);
        Ok(())
    }

    /// Copy the held samples, oldest first, into the right end of `out`
    /// (`channels x capacity`) and zero the columns before them. Returns
    /// `true` while the window is still zero-padded.
    pub fn write_window(&self, out: &mut Matrix) -> bool {
        assert_eq!(
            (out.rows(), out.cols()),
            (self.channels, self.capacity),
            "window shape"
        );
        let pad = self.capacity - self.fill;
        let oldest = (self.head + self.capacity - self.fill) % self.capacity;
        for ch in 0..self.channels {
            let row = out.row_mut(ch);
            row[..pad].fill(0.0);
            for (k, v) in row[pad..].iter_mut().enumerate() {
                *v = self.data[((oldest + k) % self.capacity) * self.channels + ch];
            }
        }
        pad > 0
    }
}

/// Monotonic time source in nanoseconds.
pub trait Clock {
    fn now_ns(&mut self) -> u64;
}

/// A clock that never advances: every latency reads zero.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now_ns(&mut self) -> u64 {
        0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TickResult {
    pub time_s: f64,
    /// In [`JointAngleFrame::CHANNELS`](crate::geometry::JointAngleFrame::CHANNELS) order, degrees.
    pub angles: [f64; JOINT_ANGLES],
    pub latency_ms: f64,
    /// The window still contained zero padding.
    pub warmup: bool,
}

/// Ring buffer, window and evaluation buffers for one model.
#[derive(Clone, Debug)]
pub struct StreamEngine<'m> {
    model: &'m TcnModel,
    buf: RingBuffer,
    window: Matrix,
    scratch: EvalScratch,
    out: Vec<f64>,
}

impl<'m> StreamEngine<'m> {
    pub fn new(model: &'m TcnModel) -> Result<Self, StreamError> {
        model.check()?;
        if model.config.out_dim != JOINT_ANGLES {
            return Err(TcnError::ConfigMismatch("model must predict four angles").into());
        }
        let cfg = &model.config;
        Ok(Self {
            model,
            buf: RingBuffer::new(cfg.in_channels, cfg.window_len),
            window: Matrix::zeros(cfg.in_channels, cfg.window_len),
            scratch: EvalScratch::new(model),
            out: vec![0.0; cfg.out_dim],
        })
    }

    pub fn reset(&mut self) {
        self.buf.reset();
    }

    pub fn buffer(&self) -> &RingBuffer {
        &self.buf
    }

    /// Append one sample and predict the angles at its timestamp from the
    /// causal window ending there.
    pub fn push_and_infer<C: Clock + ?Sized>(
        &mut self,
        time_s: f64,
        channels: &[f64],
        clock: &mut C,
    ) -> Result<TickResult, StreamError> {
        let start = clock.now_ns();
        if !channels.iter().all(|v| v.is_finite()) {
            return Err(StreamError::NonFinite { time_s });
        }
        self.buf.push(channels)?;
        let warmup = self.buf.write_window(&mut self.window);
        self.scratch
            .predict_into(self.model, &self.window, &mut self.out);
        let angles = core::array::from_fn(|j| self.out[j]);
        let end = clock.now_ns();
        Ok(TickResult {
            time_s,
            angles,
            latency_ms: end.saturating_sub(start) as f64 * 1e-6,
            warmup,
        })
    }

    pub fn push_sample<C: Clock + ?Sized>(
        &mut self,
        sample: &ImuSample,
        clock: &mut C,
    ) -> Result<TickResult, StreamError> {
        self.push_and_infer(sample.time_s, &sample.channels, clock)
    }
}

/// Per-tick durations with nearest-rank percentiles.
#[derive(Clone, Debug, PartialEq)]
pub struct LatencyStats {
    pub budget_ms: f64,
    durations_ms: Vec<f64>,
    violations: usize,
}

impl Default for LatencyStats {
    fn default() -> Self {
        Self::new(TICK_BUDGET_MS)
    }
}

impl LatencyStats {
    pub fn new(budget_ms: f64) -> Self {
        Self {
            budget_ms,
            durations_ms: Vec::new(),
            violations: 0,
        }
    }

    /// Record one tick; `late` marks a tick that missed its deadline for
    /// reasons other than its own duration (for example queueing).
    pub fn record(&mut self, duration_ms: f64, late: bool) {
        if late || duration_ms > self.budget_ms {
            self.violations += 1;
        }
        self.durations_ms.push(duration_ms);
    }

    pub fn ticks(&self) -> usize {
        self.durations_ms.len()
    }

    pub fn violations(&self) -> usize {
        self.violations
    }

    pub fn durations_ms(&self) -> &[f64] {
        &self.durations_ms
    }

    /// Smallest recorded value with at least `p` percent of ticks at or
    /// below it.
    pub fn percentile(&self, p: f64) -> Result<f64, StreamError> {
        if self.durations_ms.is_empty() {
            return Err(StreamError::Empty);
        }
        let mut sorted = self.durations_ms.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let rank = (crate::math::ceil(p.clamp(0.0, 100.0) / 100.0 * n as f64) as usize).clamp(1, n);
        Ok(sorted[rank - 1])
    }

    pub fn summary(&self) -> Result<LatencySummary, StreamError> {
        Ok(LatencySummary {
            ticks: self.ticks(),
            p50_ms: self.percentile(50.0)?,
            p95_ms: self.percentile(95.0)?,
            max_ms: self.percentile(100.0)?,
            violations: self.violations,
            budget_ms: self.budget_ms,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatencySummary {
    pub ticks: usize,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub max_ms: f64,
    pub violations: usize,
    pub budget_ms: f64,
}

/// Feed every sample through a fresh engine in order, as fast as possible.
pub fn replay<C: Clock + ?Sized>(
    model: &TcnModel,
    samples: &[ImuSample],
    clock: &mut C,
) -> Result<(Vec<TickResult>, LatencyStats), StreamError> {
    if let Some(i) = samples
        .windows(2)
        .position(|w| !(w[1].time_s > w[0].time_s))
    {
        return Err(StreamError::NonMonotoneTimestamps { index: i + 1 });
    }
    let mut engine = StreamEngine::new(model)?;
    let mut stats = LatencyStats::default();
    let mut ticks = Vec::with_capacity(samples.len());
    for s in samples {
        let tick = engine.push_sample(s, clock)?;
        stats.record(tick.latency_ms, false);
        ticks.push(tick);
    }
    Ok((ticks, stats))
}
