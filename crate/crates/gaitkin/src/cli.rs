//! Command-line interface.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use gaitkin_core::geometry::{
    AngleConvention, GeometryError, JointAngleFrame, LabelOptions, SavGolSpec, Side,
};
use gaitkin_core::pipeline::{
    adapt, evaluate, experiment_matrix, ratio_sweep, rmse_report, CohortConfig, DataOptions,
    ExperimentConfig, ExperimentData, LabelSource, PipelineError, Population, PopulationData,
};
use gaitkin_core::stream::StreamError;
use gaitkin_core::synth::{
    ImuNoise, KeypointNoise, StiffKneeSpec, SynthError, SynthOptions, DEFAULT_SUBJECTS,
    TRIAL_DURATION_S,
};
use gaitkin_core::tcn::{Batching, TcnConfig, TcnError, TrainConfig, TrainHistory};
use serde::Serialize;

use crate::config::{expand_args, ConfigError};
use crate::data::{
    load_experiment_data, load_population, write_synthetic_dataset, DataError, LabelChoice,
};
use crate::io::{
    load_model, read_angles, read_keypoints, save_model, write_angles, IoError, RecordingManifest,
};
use crate::report::{
    per_joint_table, per_speed_table, ratio_curve_table, to_jsonl, write_reports, write_table,
    LatencyRecord, ReportFormat, ReportRecord,
};
use crate::run::RunManifest;
use crate::timed::{run_stream, spawn_source, RunError, RunOptions, Source, TickRecord};

#[derive(Debug, Parser)]
#[command(
    name = "gaitkin",
    version,
    about = "Joint-angle estimation from IMU streams"
)]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic able-bodied and stiff-knee recordings.
    Synth(SynthArgs),
    /// Turn keypoint files into smoothed joint-angle label tables.
    ExtractAngles(ExtractArgs),
    /// Train a model on one population.
    Train(TrainArgs),
    /// Fine-tune a base model on able-bodied data mixed with stiff-knee data.
    Adapt(AdaptArgs),
    /// Score a model on a dataset, or predicted against true angle tables.
    Eval(EvalArgs),
    /// Adapt at several stiff-knee fractions and record the error curve.
    Sweep(SweepArgs),
    /// Score AB, SK and AB+SK models on the validation walks.
    Matrix(MatrixArgs),
    /// Run per-sample inference over an IMU file or socket feed.
    Stream(StreamArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelArg {
    /// Angles extracted from the camera keypoints.
    Keypoints,
    /// The generator's true angles.
    Truth,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConventionArg {
    /// Flexion from neutral: 180 minus the raw angle, knee sign folded.
    Flexion,
    /// Raw included angles.
    Raw,
}

impl From<ConventionArg> for AngleConvention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::Flexion => AngleConvention::Flexion,
            ConventionArg::Raw => AngleConvention::Raw,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PopulationArg {
    Ab,
    Sk,
}

impl From<PopulationArg> for Population {
    fn from(p: PopulationArg) -> Self {
        match p {
            PopulationArg::Ab => Population::Ab,
            PopulationArg::Sk => Population::Sk,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitArg {
    /// Held-out tail of the constant-speed recordings.
    Test,
    /// The variable-speed validation walks.
    Validation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BatchingArg {
    Contiguous,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SideArg {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormatArg {
    Jsonl,
    Text,
    Both,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Jsonl => ReportFormat::Jsonl,
            FormatArg::Text => ReportFormat::Text,
            FormatArg::Both => ReportFormat::Both,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    /// Key-value config file; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Subjects per population.
    #[arg(long, default_value_t = DEFAULT_SUBJECTS)]
    pub subjects: usize,
    /// IMU sampling rate (Hz); the camera runs at 200 Hz.
    #[arg(long, default_value_t = 50.0)]
    pub imu_rate: f64,
    /// Length of each constant-speed trial (s).
    #[arg(long, default_value_t = TRIAL_DURATION_S)]
    pub duration: f64,
    /// Accelerometer noise std (m/s^2).
    #[arg(long, default_value_t = ImuNoise::default().accel_std)]
    pub accel_noise: f64,
    /// Gyroscope noise std (rad/s).
    #[arg(long, default_value_t = ImuNoise::default().gyro_std)]
    pub gyro_noise: f64,
    /// Keypoint jitter std on every landmark (m).
    #[arg(long, default_value_t = KeypointNoise::default().jitter_std_m)]
    pub keypoint_jitter: f64,
    /// Extra keypoint noise std on the left, camera-far side (m).
    #[arg(long, default_value_t = KeypointNoise::default().left_occlusion_std_m)]
    pub occlusion: f64,
    /// Braced leg of the stiff-knee population.
    #[arg(long, value_enum, default_value_t = SideArg::Right)]
    pub brace_side: SideArg,
    /// Knee flexion ceiling of the brace (deg).
    #[arg(long, default_value_t = StiffKneeSpec::default().max_flexion_deg)]
    pub brace_max_flexion: f64,
    /// Softness of the ceiling (deg).
    #[arg(long, default_value_t = StiffKneeSpec::default().softness_deg)]
    pub brace_softness: f64,
    /// Hip flexion added per degree of knee flexion removed.
    #[arg(long, default_value_t = StiffKneeSpec::default().hip_compensation)]
    pub hip_compensation: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct ExtractArgs {
    /// Key-value config file; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Keypoint files (one JSON record per line).
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Output directory; each input `<id>.keypoints.jsonl` becomes `<id>.labels.csv`.
    #[arg(long)]
    pub out: PathBuf,
    /// Savitzky-Golay window length (frames).
    #[arg(long, default_value_t = SavGolSpec::default().window)]
    pub window: usize,
    /// Savitzky-Golay polynomial order.
    #[arg(long, default_value_t = SavGolSpec::default().order)]
    pub order: usize,
    #[arg(long, value_enum, default_value_t = ConventionArg::Flexion)]
    pub convention: ConventionArg,
    /// Keep every n-th smoothed frame (4 maps 200 Hz keypoints onto 50 Hz IMU samples).
    #[arg(long, default_value_t = 1)]
    pub decimate: usize,
    /// Longest run of missing frames that is interpolated.
    #[arg(long, default_value_t = gaitkin_core::geometry::MAX_GAP_FRAMES)]
    pub max_gap: usize,
}

/// Where the data is and how it becomes windows.
#[derive(Debug, Args, Serialize)]
pub struct DataArgs {
    /// Dataset directory written by `synth`.
    #[arg(long)]
    pub data: PathBuf,
    /// Training labels.
    #[arg(long, value_enum, default_value_t = LabelArg::Keypoints)]
    pub labels: LabelArg,
    /// Savitzky-Golay window for keypoint labels (frames).
    #[arg(long, default_value_t = SavGolSpec::default().window)]
    pub sg_window: usize,
    /// Savitzky-Golay order for keypoint labels.
    #[arg(long, default_value_t = SavGolSpec::default().order)]
    pub sg_order: usize,
    /// Share of each recording held out as its test tail.
    #[arg(long, default_value_t = DataOptions::default().test_fraction)]
    pub test_fraction: f64,
    /// Keep every n-th training window.
    #[arg(long, default_value_t = DataOptions::default().train_stride)]
    pub train_stride: usize,
}

impl DataArgs {
    fn label_choice(&self) -> Result<LabelChoice, CliError> {
        Ok(match self.labels {
            LabelArg::Truth => LabelChoice::Truth,
            LabelArg::Keypoints => LabelChoice::Keypoints(LabelOptions::with_spec(savgol_spec(
                self.sg_window,
                self.sg_order,
            )?)),
        })
    }

    fn options(&self, window_len: usize) -> DataOptions {
        DataOptions {
            window_len,
            test_fraction: self.test_fraction,
            train_stride: self.train_stride,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct TcnArgs {
    /// Residual blocks.
    #[arg(long, default_value_t = TcnConfig::default().blocks)]
    pub blocks: usize,
    /// Filters per convolution.
    #[arg(long, default_value_t = TcnConfig::default().channels)]
    pub channels: usize,
    /// Convolution kernel size.
    #[arg(long, default_value_t = TcnConfig::default().kernel)]
    pub kernel: usize,
    #[arg(long, default_value_t = TcnConfig::default().dropout)]
    pub dropout: f64,
    /// One dilation per block [default: 1,2,4,8,16].
    #[arg(long, value_delimiter = ',')]
    pub dilations: Option<Vec<usize>>,
    /// Input window (samples) [default: the receptive field, 373].
    #[arg(long)]
    pub window: Option<usize>,
}

impl TcnArgs {
    fn config(&self) -> TcnConfig {
        let mut c = TcnConfig {
            blocks: self.blocks,
            channels: self.channels,
            kernel: self.kernel,
            dropout: self.dropout,
            ..TcnConfig::default()
        };
        c.dilations = match &self.dilations {
            Some(d) => d.clone(),
            None => (0..self.blocks).map(|i| 1usize << i).collect(),
        };
        c.window_len = self.window.unwrap_or_else(|| c.receptive_field());
        c
    }
}

#[derive(Debug, Args, Serialize)]
pub struct OptimArgs {
    /// Adam learning rate.
    #[arg(long, default_value_t = TrainConfig::default().lr)]
    pub lr: f64,
    #[arg(long, default_value_t = TrainConfig::default().batch)]
    pub batch: usize,
    #[arg(long, default_value_t = TrainConfig::default().max_epochs)]
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    #[arg(long, default_value_t = TrainConfig::default().patience)]
    pub patience: usize,
    /// Share of training items held out for early stopping.
    #[arg(long, default_value_t = TrainConfig::default().val_fraction)]
    pub val_fraction: f64,
    /// Smallest validation improvement (deg^2) that resets patience.
    #[arg(long, default_value_t = TrainConfig::default().min_delta)]
    pub min_delta: f64,
    #[arg(long, value_enum, default_value_t = BatchingArg::Contiguous)]
    pub batching: BatchingArg,
    /// Start the readout at zero instead of the target mean.
    #[arg(long)]
    pub zero_head: bool,
    /// Seed for initialisation, batching and dropout.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl OptimArgs {
    fn config(&self) -> TrainConfig {
        TrainConfig {
            lr: self.lr,
            batch: self.batch,
            max_epochs: self.max_epochs,
            patience: self.patience,
            val_fraction: self.val_fraction,
            seed: self.seed,
            min_delta: self.min_delta,
            batching: match self.batching {
                BatchingArg::Contiguous => Batching::Contiguous,
                BatchingArg::Random => Batching::Random,
            },
            init_head_from_targets: !self.zero_head,
        }
    }

    fn experiment(&self, tcn: TcnConfig, sk_fraction: f64) -> ExperimentConfig {
        let t = self.config();
        ExperimentConfig {
            tcn,
            base: t.clone(),
            adapt: t.clone(),
            scratch: t,
            sk_fraction,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    /// Key-value config file; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Run directory for the model, reports and manifest.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = PopulationArg::Ab)]
    pub population: PopulationArg,
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub tcn: TcnArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub optim: OptimArgs,
    #[arg(long, value_enum, default_value_t = FormatArg::Both)]
    pub report_format: FormatArg,
}

#[derive(Debug, Args, Serialize)]
pub struct AdaptArgs {
    /// Key-value config file; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Run directory for outputs and the run manifest.
    #[arg(long)]
    pub out: PathBuf,
    /// Base model trained on able-bodied data.
    #[arg(long)]
    pub base: PathBuf,
    /// Stiff-knee share of the fine-tuning set.
    #[arg(long, default_value_t = ExperimentConfig::default().sk_fraction)]
    pub sk_fraction: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub optim: OptimArgs,
    #[arg(long, value_enum, default_value_t = FormatArg::Both)]
    pub report_format: FormatArg,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    /// Key-value config file; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Run directory for outputs and the run manifest.
    #[arg(long)]
    pub out: PathBuf,
    /// Model to score on `--data`.
    #[arg(long, requires = "data", conflicts_with_all = ["pred", "truth"])]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = PopulationArg::Sk)]
    pub population: PopulationArg,
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    pub split: SplitArg,
    /// Predicted angle table, scored against `--truth`.
    #[arg(long, requires = "truth")]
    pub pred: Option<PathBuf>,
    #[arg(long, requires = "pred")]
    pub truth: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Both)]
    pub report_format: FormatArg,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    /// Key-value config file; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Run directory for outputs and the run manifest.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub base: PathBuf,
    /// Stiff-knee fractions to adapt at.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.01,0.02,0.04,0.06,0.08,0.12"
    )]
    pub ratios: Vec<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub optim: OptimArgs,
    #[arg(long, value_enum, default_value_t = FormatArg::Both)]
    pub report_format: FormatArg,
}

#[derive(Debug, Args, Serialize)]
pub struct MatrixArgs {
    /// Key-value config file; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Run directory for outputs and the run manifest.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Model trained on able-bodied data.
    #[arg(long)]
    pub ab_model: PathBuf,
    /// Model trained on stiff-knee data only.
    #[arg(long)]
    pub sk_model: PathBuf,
    /// Adapted model.
    #[arg(long)]
    pub mixed_model: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Both)]
    pub report_format: FormatArg,
}

#[derive(Debug, Args, Serialize)]
pub struct StreamArgs {
    /// Key-value config file; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Run directory for outputs and the run manifest.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// IMU table to replay.
    #[arg(long, required_unless_present = "tcp", conflicts_with = "tcp")]
    pub imu: Option<PathBuf>,
    /// `host:port` sending header-less IMU rows, one per line.
    #[arg(long)]
    pub tcp: Option<String>,
    /// Trigger rate (Hz).
    #[arg(long, default_value_t = 50.0)]
    pub rate: f64,
    /// Per-tick budget (ms).
    #[arg(long, default_value_t = gaitkin_core::stream::TICK_BUDGET_MS)]
    pub budget_ms: f64,
    /// Wait for each trigger instead of replaying as fast as possible.
    #[arg(long)]
    pub timed: bool,
    /// Drop samples whose trigger has passed (timed mode only).
    #[arg(long, requires = "timed")]
    pub strict: bool,
    /// Samples buffered between reader and inference.
    #[arg(long, default_value_t = 64)]
    pub queue: usize,
    #[arg(long, value_enum, default_value_t = FormatArg::Both)]
    pub report_format: FormatArg,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Stream(#[from] RunError),
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::Io(e) => CliError::Io(e),
            DataError::Pipeline(e) => CliError::Pipeline(e),
        }
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        CliError::Pipeline(e.into())
    }
}

impl From<TcnError> for CliError {
    fn from(e: TcnError) -> Self {
        CliError::Pipeline(e.into())
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        CliError::Pipeline(e.into())
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

fn tcn_is_numeric(e: &TcnError) -> bool {
    matches!(e, TcnError::NonFiniteLoss { .. } | TcnError::NonFiniteInput)
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => EXIT_USAGE,
            CliError::Pipeline(PipelineError::Model(e)) => {
                if tcn_is_numeric(e) {
                    EXIT_NUMERIC
                } else {
                    EXIT_DATA
                }
            }
            CliError::Pipeline(PipelineError::NonFinite(_))
            | CliError::Pipeline(PipelineError::Geometry(GeometryError::IllConditioned {
                ..
            })) => EXIT_NUMERIC,
            CliError::Stream(RunError::Stream(StreamError::Model(e))) if tcn_is_numeric(e) => {
                EXIT_NUMERIC
            }
            CliError::Stream(RunError::Stream(StreamError::NonFinite { .. })) => EXIT_NUMERIC,
            _ => EXIT_DATA,
        }
    }
}

/// Parse, run and map the outcome to an exit code. Errors go to stderr.
pub fn main_with_args(args: Vec<OsString>) -> i32 {
    let args = match expand_args(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Synth(a) => cmd_synth(&a),
        Command::ExtractAngles(a) => cmd_extract(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Adapt(a) => cmd_adapt(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Matrix(a) => cmd_matrix(&a),
        Command::Stream(a) => cmd_stream(&a),
    }
}

/// Write the manifest, run `body`, then record the outcome.
fn with_manifest<F>(out: &Path, mut manifest: RunManifest, body: F) -> Result<(), CliError>
where
    F: FnOnce() -> Result<Vec<PathBuf>, CliError>,
{
    manifest.write(out)?;
    match body() {
        Ok(outputs) => {
            manifest.finish(out, "ok", outputs)?;
            Ok(())
        }
        Err(e) => {
            let _ = manifest.finish(out, &format!("error: {e}"), Vec::new());
            Err(e)
        }
    }
}

fn report_paths(out: &Path, stem: &str, format: FormatArg) -> Vec<PathBuf> {
    let mut p = Vec::new();
    if format != FormatArg::Text {
        p.push(out.join(format!("{stem}.jsonl")));
    }
    if format != FormatArg::Jsonl {
        p.push(out.join(format!("{stem}.txt")));
    }
    p
}

#[derive(Serialize)]
struct EpochLine {
    model: &'static str,
    epoch: usize,
    train_loss: f64,
    val_loss: f64,
    best: bool,
}

fn history_lines(name: &'static str, h: &TrainHistory) -> Vec<EpochLine> {
    h.epochs
        .iter()
        .map(|e| EpochLine {
            model: name,
            epoch: e.epoch,
            train_loss: e.train_loss,
            val_loss: e.val_loss,
            best: e.epoch == h.best_epoch,
        })
        .collect()
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    write_table(path, text)?;
    Ok(())
}

fn savgol_spec(window: usize, order: usize) -> Result<SavGolSpec, CliError> {
    SavGolSpec::new(window, order).map_err(|e| CliError::Usage(e.to_string()))
}

fn check_fraction(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "--{name} must lie in (0, 1), got {v}"
        )))
    }
}

fn cmd_synth(a: &SynthArgs) -> Result<(), CliError> {
    let cfg = CohortConfig {
        subjects: a.subjects,
        seed: a.seed,
        synth: SynthOptions {
            imu_rate_hz: a.imu_rate,
            imu_noise: ImuNoise {
                accel_std: a.accel_noise,
                gyro_std: a.gyro_noise,
            },
            keypoint_noise: KeypointNoise {
                jitter_std_m: a.keypoint_jitter,
                left_occlusion_std_m: a.occlusion,
            },
            trial_duration_s: a.duration,
        },
        brace: StiffKneeSpec {
            side: match a.brace_side {
                SideArg::Left => Side::Left,
                SideArg::Right => Side::Right,
            },
            max_flexion_deg: a.brace_max_flexion,
            softness_deg: a.brace_softness,
            hip_compensation: a.hip_compensation,
        },
        labels: LabelSource::Camera {
            noise: KeypointNoise {
                jitter_std_m: a.keypoint_jitter,
                left_occlusion_std_m: a.occlusion,
            },
            options: LabelOptions::default(),
        },
    };
    if a.subjects == 0 {
        return Err(CliError::Usage("--subjects must be at least 1".into()));
    }
    cfg.brace.validate()?;
    let manifest = RunManifest::new("synth", a, Some(a.seed), Vec::new());
    with_manifest(&a.out, manifest, || {
        let m = write_synthetic_dataset(&a.out, &cfg)?;
        eprintln!(
            "wrote {} recordings to {}",
            m.recordings.len(),
            a.out.display()
        );
        let mut outputs = vec![a.out.join(crate::io::MANIFEST_FILE)];
        for r in &m.recordings {
            for f in [&r.files.imu, &r.files.keypoints, &r.files.angles_truth] {
                outputs.push(a.out.join(f));
            }
        }
        Ok(outputs)
    })
}

/// `<dir>/<id>.keypoints.jsonl` becomes `<id>`.
fn recording_stem(path: &Path) -> String {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    for suffix in [".keypoints.jsonl", ".jsonl"] {
        if let Some(stem) = name.strip_suffix(suffix) {
            return stem.to_string();
        }
    }
    name
}

fn cmd_extract(a: &ExtractArgs) -> Result<(), CliError> {
    let spec = savgol_spec(a.window, a.order)?;
    if a.decimate == 0 {
        return Err(CliError::Usage("--decimate must be at least 1".into()));
    }
    let opts = LabelOptions {
        savgol: spec,
        convention: a.convention.into(),
        max_gap: a.max_gap,
    };
    let manifest = RunManifest::new("extract-angles", a, None, a.inputs.clone());
    with_manifest(&a.out, manifest, || {
        let mut outputs = Vec::new();
        for input in &a.inputs {
            let frames = read_keypoints(input)?;
            let labels = gaitkin_core::geometry::extract_angle_labels(&frames, &opts).map_err(
                |e| match e {
                    GeometryError::IllConditioned { .. } => CliError::from(e),
                    _ => IoError::format(input, 0, e.to_string()).into(),
                },
            )?;
            let labels: Vec<JointAngleFrame> = labels.into_iter().step_by(a.decimate).collect();
            let path = a.out.join(format!("{}.labels.csv", recording_stem(input)));
            write_angles(&path, &labels)?;
            outputs.push(path);
        }
        Ok(outputs)
    })
}

fn population_of(
    a: &DataArgs,
    pop: Population,
    window_len: usize,
) -> Result<PopulationData, CliError> {
    let manifest = RecordingManifest::read(&a.data)?;
    Ok(load_population(
        &a.data,
        &manifest,
        pop,
        a.label_choice()?,
        &a.options(window_len),
    )?)
}

fn cmd_train(a: &TrainArgs) -> Result<(), CliError> {
    let tcn = a.tcn.config();
    tcn.validate()?;
    check_fraction("test-fraction", a.data.test_fraction)?;
    let manifest = RunManifest::new("train", a, Some(a.optim.seed), vec![a.data.data.clone()]);
    with_manifest(&a.out, manifest, || {
        let data = population_of(&a.data, a.population.into(), tcn.window_len)?;
        eprintln!("training on {} windows", data.train.len());
        let (model, history) =
            gaitkin_core::tcn::train(&data.train, tcn.clone(), &a.optim.config())?;
        eprintln!(
            "best epoch {} of {}",
            history.best_epoch,
            history.epochs.len()
        );
        let model_path = a.out.join("model.tcn");
        save_model(&model_path, &model)?;
        let history_path = a.out.join("history.jsonl");
        write_text(&history_path, &to_jsonl(&history_lines("model", &history)))?;
        let pop = Population::from(a.population).as_str();
        let records = vec![
            ReportRecord::new(format!("{pop} test"), &evaluate(&model, &data.test)?),
            ReportRecord::new(
                format!("{pop} validation"),
                &evaluate(&model, &data.validation)?,
            ),
        ];
        write_reports(&a.out, "eval", &records, a.report_format.into())?;
        let mut outputs = vec![model_path, history_path];
        outputs.extend(report_paths(&a.out, "eval", a.report_format));
        Ok(outputs)
    })
}

fn load_data(a: &DataArgs, window_len: usize) -> Result<ExperimentData, CliError> {
    Ok(load_experiment_data(
        &a.data,
        a.label_choice()?,
        &a.options(window_len),
    )?)
}

fn cmd_adapt(a: &AdaptArgs) -> Result<(), CliError> {
    check_fraction("sk-fraction", a.sk_fraction)?;
    let base = load_model(&a.base)?;
    let cfg = a.optim.experiment(base.config.clone(), a.sk_fraction);
    let manifest = RunManifest::new(
        "adapt",
        a,
        Some(a.optim.seed),
        vec![a.data.data.clone(), a.base.clone()],
    );
    with_manifest(&a.out, manifest, || {
        let data = load_data(&a.data, base.config.window_len)?;
        let models = adapt(&base, &data, &cfg, a.sk_fraction)?;
        eprintln!("adapted with {} stiff-knee windows", models.sk_items);
        let adapted_path = a.out.join("adapted.tcn");
        let sk_only_path = a.out.join("sk_only.tcn");
        save_model(&adapted_path, &models.adapted.model)?;
        save_model(&sk_only_path, &models.sk_only.model)?;
        let history_path = a.out.join("history.jsonl");
        let mut lines = history_lines("adapted", &models.adapted.history);
        lines.extend(history_lines("sk_only", &models.sk_only.history));
        write_text(&history_path, &to_jsonl(&lines))?;
        let test = &data.sk.test;
        let records = vec![
            ReportRecord::new("AB model to SK", &evaluate(&base, test)?),
            ReportRecord::new("SK model to SK", &evaluate(&models.sk_only.model, test)?),
            ReportRecord::new("AB+SK model to SK", &evaluate(&models.adapted.model, test)?),
        ];
        write_reports(&a.out, "transfer", &records, a.report_format.into())?;
        let mut outputs = vec![adapted_path, sk_only_path, history_path];
        outputs.extend(report_paths(&a.out, "transfer", a.report_format));
        Ok(outputs)
    })
}

fn cmd_eval(a: &EvalArgs) -> Result<(), CliError> {
    let inputs: Vec<PathBuf> = [&a.model, &a.data, &a.pred, &a.truth]
        .into_iter()
        .flatten()
        .cloned()
        .collect();
    if a.model.is_none() && a.pred.is_none() {
        return Err(CliError::Usage(
            "give either --model with --data, or --pred with --truth".into(),
        ));
    }
    let manifest = RunManifest::new("eval", a, None, inputs);
    with_manifest(&a.out, manifest, || {
        let record = match (&a.model, &a.data, &a.pred, &a.truth) {
            (Some(model), Some(data), _, _) => {
                let model = load_model(model)?;
                let manifest = RecordingManifest::read(data)?;
                let opts = DataOptions {
                    window_len: model.config.window_len,
                    ..DataOptions::default()
                };
                let pop: Population = a.population.into();
                let d = load_population(data, &manifest, pop, LabelChoice::Truth, &opts)?;
                let (ds, split) = match a.split {
                    SplitArg::Test => (&d.test, "test"),
                    SplitArg::Validation => (&d.validation, "validation"),
                };
                ReportRecord::new(format!("{} {split}", pop.as_str()), &evaluate(&model, ds)?)
            }
            (_, _, Some(pred), Some(truth)) => {
                let p = read_angles(pred)?;
                let t = read_angles(truth)?;
                if p.len() != t.len() {
                    return Err(PipelineError::LengthMismatch {
                        left: p.len(),
                        right: t.len(),
                    }
                    .into());
                }
                if let Some(i) = p
                    .iter()
                    .zip(&t)
                    .position(|(p, t)| (p.time_s - t.time_s).abs() > 1e-6)
                {
                    return Err(IoError::format(
                        pred,
                        i + 2,
                        "timestamp differs from the truth table",
                    )
                    .into());
                }
                let preds: Vec<[f64; 4]> = p.iter().map(|f| f.to_array()).collect();
                let truth: Vec<[f64; 4]> = t.iter().map(|f| f.to_array()).collect();
                ReportRecord::new("pred vs truth", &rmse_report(&preds, &truth, None)?)
            }
            _ => unreachable!("checked above"),
        };
        let records = vec![record];
        write_reports(&a.out, "eval", &records, a.report_format.into())?;
        let per_joint = a.out.join("per_joint.csv");
        write_text(&per_joint, &per_joint_table(&records))?;
        let mut outputs = report_paths(&a.out, "eval", a.report_format);
        outputs.push(per_joint);
        Ok(outputs)
    })
}

fn cmd_sweep(a: &SweepArgs) -> Result<(), CliError> {
    if a.ratios.is_empty() {
        return Err(CliError::Usage("--ratios needs at least one value".into()));
    }
    for &r in &a.ratios {
        check_fraction("ratios", r)?;
    }
    let base = load_model(&a.base)?;
    let cfg = a.optim.experiment(base.config.clone(), a.ratios[0]);
    let manifest = RunManifest::new(
        "sweep",
        a,
        Some(a.optim.seed),
        vec![a.data.data.clone(), a.base.clone()],
    );
    with_manifest(&a.out, manifest, || {
        let data = load_data(&a.data, base.config.window_len)?;
        let points = ratio_sweep(&data, &base, &a.ratios, &cfg)?;
        let mut records = Vec::new();
        for p in &points {
            records.push(ReportRecord::new(
                format!("AB+SK {:.0}%", p.ratio * 100.0),
                &p.adapted,
            ));
            records.push(ReportRecord::new(
                format!("SK {:.0}%", p.ratio * 100.0),
                &p.sk_only,
            ));
        }
        write_reports(&a.out, "sweep", &records, a.report_format.into())?;
        let curve = a.out.join("ratio_curve.csv");
        write_text(&curve, &ratio_curve_table(&points))?;
        let mut outputs = report_paths(&a.out, "sweep", a.report_format);
        outputs.push(curve);
        Ok(outputs)
    })
}

fn cmd_matrix(a: &MatrixArgs) -> Result<(), CliError> {
    let ab = load_model(&a.ab_model)?;
    let sk = load_model(&a.sk_model)?;
    let mixed = load_model(&a.mixed_model)?;
    let window = ab.config.window_len;
    if sk.config.window_len != window || mixed.config.window_len != window {
        return Err(CliError::Usage(
            "the three models must share one window length".into(),
        ));
    }
    let inputs = vec![
        a.data.clone(),
        a.ab_model.clone(),
        a.sk_model.clone(),
        a.mixed_model.clone(),
    ];
    let manifest = RunManifest::new("matrix", a, None, inputs);
    with_manifest(&a.out, manifest, || {
        let rm = RecordingManifest::read(&a.data)?;
        let opts = DataOptions {
            window_len: window,
            ..DataOptions::default()
        };
        let ab_val =
            load_population(&a.data, &rm, Population::Ab, LabelChoice::Truth, &opts)?.validation;
        let sk_val =
            load_population(&a.data, &rm, Population::Sk, LabelChoice::Truth, &opts)?.validation;
        let rows = experiment_matrix(&ab, &sk, &mixed, &ab_val, &sk_val)?;
        let records: Vec<ReportRecord> = rows
            .iter()
            .map(|r| ReportRecord::new(r.name(), &r.report))
            .collect();
        write_reports(&a.out, "matrix", &records, a.report_format.into())?;
        let per_joint = a.out.join("per_joint.csv");
        let per_speed = a.out.join("per_speed.csv");
        write_text(&per_joint, &per_joint_table(&records))?;
        write_text(&per_speed, &per_speed_table(&records))?;
        let mut outputs = report_paths(&a.out, "matrix", a.report_format);
        outputs.extend([per_joint, per_speed]);
        Ok(outputs)
    })
}

fn cmd_stream(a: &StreamArgs) -> Result<(), CliError> {
    if !(a.rate > 0.0 && a.rate.is_finite()) {
        return Err(CliError::Usage("--rate must be positive".into()));
    }
    let model = load_model(&a.model)?;
    let source = match (&a.imu, &a.tcp) {
        (Some(p), _) => Source::File(p.clone()),
        (None, Some(addr)) => Source::Tcp(addr.clone()),
        (None, None) => return Err(CliError::Usage("give --imu or --tcp".into())),
    };
    let inputs: Vec<PathBuf> = [Some(a.model.clone()), a.imu.clone()]
        .into_iter()
        .flatten()
        .collect();
    let manifest = RunManifest::new("stream", a, None, inputs);
    with_manifest(&a.out, manifest, || {
        let ticks_path = a.out.join("ticks.jsonl");
        let file = std::fs::File::create(&ticks_path).map_err(|e| IoError::io(&ticks_path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let (rx, handle) = spawn_source(source, a.queue);
        let opts = RunOptions {
            rate_hz: a.rate,
            timed: a.timed,
            strict: a.strict,
            budget_ms: a.budget_ms,
        };
        let result = run_stream(&model, rx, opts, |tick| {
            let line = serde_json::to_string(&TickRecord::from(tick)).expect("ticks serialize");
            writeln!(w, "{line}").map_err(|e| RunError::Io(IoError::io(&ticks_path, e)))
        });
        let _ = handle.join();
        let summary = result?;
        w.flush().map_err(|e| IoError::io(&ticks_path, e))?;
        let stats = summary.stats.summary().map_err(RunError::from)?;
        let record = LatencyRecord::new(&stats, summary.dropped);
        eprint!("{}", record.to_text());
        let mut outputs = vec![ticks_path];
        let format: ReportFormat = a.report_format.into();
        if matches!(format, ReportFormat::Jsonl | ReportFormat::Both) {
            let p = a.out.join("latency.jsonl");
            write_text(&p, &to_jsonl(&[record]))?;
            outputs.push(p);
        }
        if matches!(format, ReportFormat::Text | ReportFormat::Both) {
            let p = a.out.join("latency.txt");
            write_text(&p, &record.to_text())?;
            outputs.push(p);
        }
        Ok(outputs)
    })
}

impl From<StreamError> for CliError {
    fn from(e: StreamError) -> Self {
        CliError::Stream(e.into())
    }
}
