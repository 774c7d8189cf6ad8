//! Wall-clock streaming: a producer thread feeds IMU samples from a file or
//! a socket through a bounded queue, and the consumer runs one inference
//! per sample, optionally on a fixed trigger schedule.

use std::io::{BufRead, BufReader};
use std::net::TcpStream;
use std::path::PathBuf;
use std::sync::mpsc::{sync_channel, Receiver};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use gaitkin_core::stream::{
    Clock, LatencyStats, StreamEngine, StreamError, TickResult, TICK_BUDGET_MS,
};
use gaitkin_core::synth::ImuSample;
use gaitkin_core::tcn::TcnModel;
use serde::Serialize;

use crate::io::{imu_header, parse_imu_row, read_imu, IoError};

/// Monotonic nanoseconds since construction.
#[derive(Clone, Copy, Debug)]
pub struct WallClock(Instant);

impl Default for WallClock {
    fn default() -> Self {
        Self(Instant::now())
    }
}

impl Clock for WallClock {
    fn now_ns(&mut self) -> u64 {
        self.0.elapsed().as_nanos() as u64
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Source {
    /// IMU table file.
    File(PathBuf),
    /// Header-less IMU rows, one per line, read from `host:port`.
    Tcp(String),
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("{0}")]
    Connect(String),
    #[error(transparent)]
    Stream(#[from] StreamError),
}

type Item = Result<ImuSample, RunError>;

/// Spawn the reader. It blocks once `capacity` samples are waiting.
pub fn spawn_source(source: Source, capacity: usize) -> (Receiver<Item>, JoinHandle<()>) {
    let (tx, rx) = sync_channel(capacity.max(1));
    let handle = thread::spawn(move || match source {
        Source::File(path) => match read_imu(&path) {
            Ok(samples) => {
                for s in samples {
                    if tx.send(Ok(s)).is_err() {
                        return;
                    }
                }
            }
            Err(e) => {
                let _ = tx.send(Err(e.into()));
            }
        },
        Source::Tcp(addr) => {
            let stream = match TcpStream::connect(&addr) {
                Ok(s) => s,
                Err(e) => {
                    let _ = tx.send(Err(RunError::Connect(format!("{addr}: {e}"))));
                    return;
                }
            };
            let header = imu_header().join(",");
            for (i, line) in BufReader::new(stream).lines().enumerate() {
                let item = match line {
                    Err(e) => Err(RunError::Connect(format!("{addr}: {e}"))),
                    Ok(l) if l.trim().is_empty() || l.trim() == header => continue,
                    Ok(l) => parse_imu_row(&l).map_err(|message| RunError::Parse {
                        source_name: addr.clone(),
                        line: i + 1,
                        message,
                    }),
                };
                let stop = item.is_err();
                if tx.send(item).is_err() || stop {
                    return;
                }
            }
        }
    });
    (rx, handle)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOptions {
    /// Trigger rate of the timed schedule.
    pub rate_hz: f64,
    /// Wait for each trigger instead of running as fast as samples arrive.
    pub timed: bool,
    /// Skip samples whose trigger has already passed when they are picked up.
    pub strict: bool,
    pub budget_ms: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            rate_hz: 50.0,
            timed: false,
            strict: false,
            budget_ms: TICK_BUDGET_MS,
        }
    }
}

/// One output record.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TickRecord {
    pub time_s: f64,
    pub r_hip: f64,
    pub l_hip: f64,
    pub r_knee: f64,
    pub l_knee: f64,
    pub latency_ms: f64,
    pub warmup: bool,
}

impl From<&TickResult> for TickRecord {
    fn from(t: &TickResult) -> Self {
        let [r_hip, l_hip, r_knee, l_knee] = t.angles;
        Self {
            time_s: t.time_s,
            r_hip,
            l_hip,
            r_knee,
            l_knee,
            latency_ms: t.latency_ms,
            warmup: t.warmup,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub stats: LatencyStats,
    /// Samples skipped in strict mode.
    pub dropped: usize,
}

/// Consume the queue in order, calling `sink` with every tick.
///
/// In timed mode sample `k` is due at `k / rate_hz` after the first one;
/// a tick that finishes after the next trigger counts as a violation but is
/// still emitted, unless `strict` drops samples that are already late.
pub fn run_stream<F>(
    model: &TcnModel,
    rx: Receiver<Item>,
    opts: RunOptions,
    mut sink: F,
) -> Result<RunSummary, RunError>
where
    F: FnMut(&TickResult) -> Result<(), RunError>,
{
    let mut engine = StreamEngine::new(model)?;
    let mut clock = WallClock::default();
    let mut stats = LatencyStats::new(opts.budget_ms);
    let period = Duration::from_secs_f64(1.0 / opts.rate_hz);
    let mut dropped = 0;
    let mut last_time = f64::NEG_INFINITY;
    let mut start: Option<Instant> = None;
    for (index, item) in rx.into_iter().enumerate() {
        let sample = item?;
        if sample.time_s <= last_time {
            return Err(StreamError::NonMonotoneTimestamps { index }.into());
        }
        last_time = sample.time_s;
        let mut late = false;
        if opts.timed {
            let t0 = *start.get_or_insert_with(Instant::now);
            let due = t0 + period * index as u32;
            let now = Instant::now();
            if now < due {
                thread::sleep(due - now);
            } else if now >= due + period {
                if opts.strict {
                    dropped += 1;
                    continue;
                }
                late = true;
            }
        }
        let tick = engine.push_sample(&sample, &mut clock)?;
        if opts.timed {
            let deadline = start.expect("set above") + period * (index as u32 + 1);
            late |= Instant::now() > deadline;
        }
        stats.record(tick.latency_ms, late);
        sink(&tick)?;
    }
    Ok(RunSummary { stats, dropped })
}
