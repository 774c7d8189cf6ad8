use alloc::string::String;
use alloc::vec::Vec;

use super::{
    evaluate, mix_datasets, sk_items_for_fraction, split_train_test, window_dataset, EvalReport,
    PipelineError, Population, Recording, WindowOptions, WindowedDataset,
};
use crate::geometry::{JointAngleFrame, LabelOptions};
use crate::synth::{
    decimation_factor, hpe_labels, training_protocol, validation_recording, KeypointNoise,
    StiffKneeSpec, SynthOptions, SynthRecording, DEFAULT_SUBJECTS,
};
use crate::tcn::{fine_tune, train, TcnConfig, TcnModel, TrainConfig, TrainHistory};

/// Where training labels come from. Test and validation scores always use
/// the generator's ground truth.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LabelSource {
    Truth,
    /// Angles extracted from simulated camera keypoints.
    Camera {
        noise: KeypointNoise,
        options: LabelOptions,
    },
}

impl Default for LabelSource {
    fn default() -> Self {
        LabelSource::Camera {
            noise: KeypointNoise::default(),
            options: LabelOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CohortConfig {
    pub subjects: usize,
    pub seed: u64,
    pub synth: SynthOptions,
    pub brace: StiffKneeSpec,
    pub labels: LabelSource,
}

impl Default for CohortConfig {
    fn default() -> Self {
        Self {
            subjects: DEFAULT_SUBJECTS,
            seed: 0,
            synth: SynthOptions::default(),
            brace: StiffKneeSpec::default(),
            labels: LabelSource::default(),
        }
    }
}

/// A recording with the labels used to train on it.
#[derive(Clone, Debug)]
pub struct LabelledRecording {
    pub recording: SynthRecording,
    pub labels: Vec<JointAngleFrame>,
}

/// The synthetic subjects walking the training protocol without and with
/// the brace, and the validation profile.
#[derive(Clone, Debug)]
pub struct Cohort {
    pub ab: Vec<LabelledRecording>,
    pub sk: Vec<LabelledRecording>,
    pub ab_validation: Vec<SynthRecording>,
    pub sk_validation: Vec<SynthRecording>,
}

fn label(
    rec: SynthRecording,
    source: &LabelSource,
    factor: usize,
) -> Result<LabelledRecording, PipelineError> {
    let labels = match source {
        LabelSource::Truth => rec.truth.clone(),
        LabelSource::Camera { noise, options } => {
            hpe_labels(&rec.spec.keypoints(*noise)?, options, factor)?
        }
    };
    Ok(LabelledRecording {
        recording: rec,
        labels,
    })
}

pub fn build_cohort(cfg: &CohortConfig) -> Result<Cohort, PipelineError> {
    let factor = decimation_factor(cfg.synth.imu_rate_hz)?;
    let mut cohort = Cohort {
        ab: Vec::new(),
        sk: Vec::new(),
        ab_validation: Vec::new(),
        sk_validation: Vec::new(),
    };
    for s in 0..cfg.subjects {
        for rec in training_protocol(s, None, &cfg.synth, cfg.seed)? {
            cohort.ab.push(label(rec, &cfg.labels, factor)?);
        }
        for rec in training_protocol(s, Some(&cfg.brace), &cfg.synth, cfg.seed)? {
            cohort.sk.push(label(rec, &cfg.labels, factor)?);
        }
        cohort
            .ab_validation
            .push(validation_recording(s, None, &cfg.synth, cfg.seed)?);
        cohort.sk_validation.push(validation_recording(
            s,
            Some(&cfg.brace),
            &cfg.synth,
            cfg.seed,
        )?);
    }
    Ok(cohort)
}

/// A recording with training labels and ground truth on its timestamps.
#[derive(Clone, Debug)]
pub struct TrainingRecording {
    pub recording: Recording,
    pub labels: Vec<JointAngleFrame>,
    pub truth: Vec<JointAngleFrame>,
}

/// A recording scored against ground truth only.
#[derive(Clone, Debug)]
pub struct EvalRecording {
    pub recording: Recording,
    pub truth: Vec<JointAngleFrame>,
}

impl From<&LabelledRecording> for TrainingRecording {
    fn from(r: &LabelledRecording) -> Self {
        Self {
            recording: r.recording.to_recording(),
            labels: r.labels.clone(),
            truth: r.recording.truth.clone(),
        }
    }
}

impl From<&SynthRecording> for EvalRecording {
    fn from(r: &SynthRecording) -> Self {
        Self {
            recording: r.to_recording(),
            truth: r.truth.clone(),
        }
    }
}

/// Windowed training and evaluation sets of one population.
#[derive(Clone, Debug)]
pub struct PopulationData {
    /// Thinned training windows with the training labels.
    pub train: WindowedDataset,
    /// Final part of every training recording, scored against ground truth.
    pub test: WindowedDataset,
    /// Validation-profile windows scored against ground truth.
    pub validation: WindowedDataset,
    /// Training windows removed at the train/test boundary.
    pub dropped: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DataOptions {
    pub window_len: usize,
    pub test_fraction: f64,
    /// Keep every n-th training window; neighbouring windows differ by one
    /// sample and add little information.
    pub train_stride: usize,
}

impl Default for DataOptions {
    fn default() -> Self {
        Self {
            window_len: TcnConfig::default().window_len,
            test_fraction: 0.1,
            train_stride: 4,
        }
    }
}

fn concat(
    parts: Vec<WindowedDataset>,
    window_len: usize,
) -> Result<WindowedDataset, PipelineError> {
    if parts.is_empty() {
        return Ok(WindowedDataset::empty(window_len));
    }
    WindowedDataset::concat(&parts.iter().collect::<Vec<_>>())
}

/// Training windows exclude those whose history would be zero-padded; the
/// validation profile is scored from the first full window on.
pub fn population_data(
    recordings: &[TrainingRecording],
    validation: &[EvalRecording],
    opts: &DataOptions,
) -> Result<PopulationData, PipelineError> {
    let w = WindowOptions::new(opts.window_len);
    let (mut train, mut test, mut dropped) = (Vec::new(), Vec::new(), 0);
    for r in recordings {
        let labelled = split_train_test(
            &window_dataset(r.recording.clone(), &r.labels, w)?,
            opts.test_fraction,
        )?;
        let truth = split_train_test(
            &window_dataset(r.recording.clone(), &r.truth, w)?,
            opts.test_fraction,
        )?;
        train.push(labelled.train.without_warmup().thin(opts.train_stride));
        test.push(truth.test);
        dropped += labelled.dropped;
    }
    let mut val = Vec::new();
    for r in validation {
        val.push(window_dataset(r.recording.clone(), &r.truth, w)?.without_warmup());
    }
    Ok(PopulationData {
        train: concat(train, opts.window_len)?,
        test: concat(test, opts.window_len)?,
        validation: concat(val, opts.window_len)?,
        dropped,
    })
}

#[derive(Clone, Debug)]
pub struct ExperimentData {
    pub ab: PopulationData,
    pub sk: PopulationData,
}

pub fn prepare_data(cohort: &Cohort, opts: &DataOptions) -> Result<ExperimentData, PipelineError> {
    let training =
        |rs: &[LabelledRecording]| rs.iter().map(TrainingRecording::from).collect::<Vec<_>>();
    let eval = |rs: &[SynthRecording]| rs.iter().map(EvalRecording::from).collect::<Vec<_>>();
    Ok(ExperimentData {
        ab: population_data(&training(&cohort.ab), &eval(&cohort.ab_validation), opts)?,
        sk: population_data(&training(&cohort.sk), &eval(&cohort.sk_validation), opts)?,
    })
}

/// Network and optimiser settings for the three models.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub tcn: TcnConfig,
    /// Base model on able-bodied data.
    pub base: TrainConfig,
    /// Fine-tuning the base model on the mixed set.
    pub adapt: TrainConfig,
    /// Model trained from scratch on the stiff-knee subset alone.
    pub scratch: TrainConfig,
    /// Stiff-knee share of the fine-tuning set.
    pub sk_fraction: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            tcn: TcnConfig::default(),
            base: TrainConfig::default(),
            adapt: TrainConfig::default(),
            scratch: TrainConfig::default(),
            sk_fraction: 0.06,
        }
    }
}

impl ExperimentConfig {
    /// Same settings with every training seed offset by `seed`.
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        for t in [&mut c.base, &mut c.adapt, &mut c.scratch] {
            t.seed = t.seed.wrapping_add(seed);
        }
        c
    }
}

/// The stiff-knee items that a mix at `fraction` adds to `ab`.
pub fn sk_subset(
    ab: &WindowedDataset,
    sk: &WindowedDataset,
    fraction: f64,
) -> Result<WindowedDataset, PipelineError> {
    let mixed = mix_datasets(ab, sk, fraction)?;
    let keep: Vec<usize> = (0..mixed.len())
        .filter(|&i| mixed.tags(i).population == Population::Sk)
        .collect();
    Ok(mixed.subset(&keep))
}

#[derive(Clone, Debug)]
pub struct TrainedModel {
    pub model: TcnModel,
    pub history: TrainHistory,
}

pub fn train_base(
    data: &ExperimentData,
    cfg: &ExperimentConfig,
) -> Result<TrainedModel, PipelineError> {
    let (model, history) = train(&data.ab.train, cfg.tcn.clone(), &cfg.base)?;
    Ok(TrainedModel { model, history })
}

/// Adapted and stiff-knee-only models for one mixing fraction.
#[derive(Clone, Debug)]
pub struct AdaptedModels {
    pub fraction: f64,
    pub sk_items: usize,
    pub adapted: TrainedModel,
    pub sk_only: TrainedModel,
}

pub fn adapt(
    base: &TcnModel,
    data: &ExperimentData,
    cfg: &ExperimentConfig,
    fraction: f64,
) -> Result<AdaptedModels, PipelineError> {
    let mixed = mix_datasets(&data.ab.train, &data.sk.train, fraction)?;
    let sk = sk_subset(&data.ab.train, &data.sk.train, fraction)?;
    let (adapted, adapt_history) = fine_tune(base, &mixed, &cfg.adapt)?;
    let (sk_only, sk_history) = train(&sk, cfg.tcn.clone(), &cfg.scratch)?;
    Ok(AdaptedModels {
        fraction,
        sk_items: sk_items_for_fraction(data.ab.train.len(), fraction),
        adapted: TrainedModel {
            model: adapted,
            history: adapt_history,
        },
        sk_only: TrainedModel {
            model: sk_only,
            history: sk_history,
        },
    })
}

/// Stiff-knee test errors of the three models at one mixing fraction.
#[derive(Clone, Debug)]
pub struct TransferResult {
    pub ab_to_sk: EvalReport,
    pub sk_only: EvalReport,
    pub adapted: EvalReport,
}

pub fn transfer_scores(
    base: &TcnModel,
    models: &AdaptedModels,
    sk_test: &WindowedDataset,
) -> Result<TransferResult, PipelineError> {
    Ok(TransferResult {
        ab_to_sk: evaluate(base, sk_test)?,
        sk_only: evaluate(&models.sk_only.model, sk_test)?,
        adapted: evaluate(&models.adapted.model, sk_test)?,
    })
}

#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub ratio: f64,
    pub sk_items: usize,
    pub adapted: EvalReport,
    pub sk_only: EvalReport,
}

/// For each ratio, fine-tune `base` on the mix and train a fresh model on
/// the same stiff-knee subset; score both on the stiff-knee test split.
pub fn ratio_sweep(
    data: &ExperimentData,
    base: &TcnModel,
    ratios: &[f64],
    cfg: &ExperimentConfig,
) -> Result<Vec<SweepPoint>, PipelineError> {
    ratios
        .iter()
        .map(|&ratio| {
            let m = adapt(base, data, cfg, ratio)?;
            Ok(SweepPoint {
                ratio,
                sk_items: m.sk_items,
                adapted: evaluate(&m.adapted.model, &data.sk.test)?,
                sk_only: evaluate(&m.sk_only.model, &data.sk.test)?,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Ab,
    Sk,
    Mixed,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Ab => "AB",
            ModelKind::Sk => "SK",
            ModelKind::Mixed => "AB+SK",
        }
    }
}

#[derive(Clone, Debug)]
pub struct MatrixRow {
    pub model: ModelKind,
    pub subject: Population,
    pub report: EvalReport,
}

impl MatrixRow {
    /// Trial name such as `AB+SK to SK`.
    pub fn name(&self) -> String {
        alloc::format!("{} to {}", self.model.as_str(), self.subject.as_str())
    }
}

/// The four model/subject pairings scored on the validation profile:
/// AB on AB, then AB, SK and AB+SK on SK.
pub fn experiment_matrix(
    ab_model: &TcnModel,
    sk_model: &TcnModel,
    mixed_model: &TcnModel,
    ab_subjects: &WindowedDataset,
    sk_subjects: &WindowedDataset,
) -> Result<Vec<MatrixRow>, PipelineError> {
    let cells = [
        (ModelKind::Ab, ab_model, Population::Ab, ab_subjects),
        (ModelKind::Ab, ab_model, Population::Sk, sk_subjects),
        (ModelKind::Sk, sk_model, Population::Sk, sk_subjects),
        (ModelKind::Mixed, mixed_model, Population::Sk, sk_subjects),
    ];
    cells
        .into_iter()
        .map(|(model, m, subject, ds)| {
            Ok(MatrixRow {
                model,
                subject,
                report: evaluate(m, ds)?,
            })
        })
        .collect()
}
