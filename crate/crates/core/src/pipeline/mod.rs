//! Experiment orchestration: load → compress → similarity → detect →
//! evaluate → aggregate, driven by a declarative config.
//!
//! Tasks are keyed by (record, channel, cr); records are processed in
//! parallel and results reassembled in a fixed order, so report files are
//! byte-identical across runs whatever the scheduling. A record that fails
//! to load marks its own tasks failed and never aborts the rest.

pub mod report;
pub mod synth;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detector::{detect_r_peaks, map_to_original_timescale, DetectError, DetectorConfig};
use crate::eval::{aggregate, compute_metrics, match_peaks, AggregateReport, EvalError, MetricsReport};
use crate::sensing::{compress_channel, config_from_cr, SensingError};
use crate::similarity::{structural_similarity, SimilarityError, SimilarityReport};
use crate::wfdb::{load_record_from_paths, WfdbError};
use report::DetectionExport;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Wfdb(#[from] WfdbError),

    #[error(transparent)]
    Sensing(#[from] SensingError),

    #[error(transparent)]
    Similarity(#[from] SimilarityError),

    #[error(transparent)]
    Detect(#[from] DetectError),

    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error("cannot parse config file: {0}")]
    ConfigParse(#[from] toml::de::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Everything a run needs, mirroring the CLI flags and the flat key-value
/// config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data_dir: PathBuf,
    pub record_ids: Vec<String>,
    /// 1-based channel numbers.
    pub channels: Vec<usize>,
    /// Samples analyzed per channel.
    pub sample_limit: usize,
    /// Templates per measurement.
    pub num_segments: usize,
    /// Compression ratios as fractions; the uncompressed baseline is always
    /// run in addition.
    pub crs: Vec<f64>,
    /// Beat-matching tolerance, milliseconds.
    pub tolerance_ms: f64,
    /// Divide block sums by d during compression.
    pub normalize: bool,
    /// Annotation type codes that count as beats.
    pub beat_codes: Vec<u8>,
    pub format: OutputFormat,
    pub out_dir: PathBuf,
    /// Seed for synthetic fixtures generated from this config.
    pub seed: u64,
}

/// A representative spread of 18 MIT-BIH arrhythmia records: normal rhythm,
/// bundle branch block, ectopy and noisy leads.
pub fn default_record_ids() -> Vec<String> {
    [
        "100", "101", "103", "105", "106", "108", "109", "111", "112", "115", "116", "119",
        "200", "201", "203", "208", "210", "213",
    ]
    .iter()
    .map(ToString::to_string)
    .collect()
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data_dir: PathBuf::from("."),
            record_ids: default_record_ids(),
            channels: vec![1, 2],
            sample_limit: 10_240,
            num_segments: 40,
            crs: vec![0.5, 0.75, 0.875],
            tolerance_ms: 150.0,
            normalize: true,
            beat_codes: crate::wfdb::default_beat_codes().into_iter().collect(),
            format: OutputFormat::Csv,
            out_dir: PathBuf::from("out"),
            seed: 42,
        }
    }
}

impl ExperimentConfig {
    /// Reads a flat key = value TOML file.
    pub fn from_file(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)?;
        Ok(toml::from_str(&text)?)
    }

    pub fn beat_code_set(&self) -> BTreeSet<u8> {
        self.beat_codes.iter().copied().collect()
    }

    /// Checks the cross-field invariants; violations abort a run before any
    /// task starts.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let err = |msg: String| Err(PipelineError::Config(msg));
        if self.record_ids.is_empty() {
            return err("record_ids must not be empty".into());
        }
        if self.channels.is_empty() || self.channels.contains(&0) {
            return err("channels must be non-empty, 1-based numbers".into());
        }
        if self.num_segments < 2 {
            return err("num_segments must be at least 2 for pairwise statistics".into());
        }
        if self.sample_limit == 0 || !self.sample_limit.is_multiple_of(self.num_segments) {
            return err(format!(
                "sample_limit {} must be a positive multiple of num_segments {}",
                self.sample_limit, self.num_segments
            ));
        }
        if self.tolerance_ms.partial_cmp(&0.0).is_none_or(|o| o == std::cmp::Ordering::Less) {
            return err(format!("tolerance_ms {} must be nonnegative", self.tolerance_ms));
        }
        for &cr in &self.crs {
            let config = config_from_cr(self.sample_limit, cr, self.normalize)
                .map_err(|e| PipelineError::Config(e.to_string()))?;
            if !config.m.is_multiple_of(self.num_segments) {
                return err(format!(
                    "cr {} leaves {} measurements, not divisible into {} segments",
                    cr, config.m, self.num_segments
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskState {
    Ok,
    Failed,
}

/// Terminal status of one (record, channel, cr) task.
#[derive(Debug, Clone, Serialize)]
pub struct TaskStatus {
    pub record: String,
    pub channel: usize,
    pub cr: f64,
    pub status: TaskState,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Warnings {
    /// Degenerate template pairs excluded across all similarity reports.
    pub excluded_pairs: usize,
    /// Reports whose ppv was undefined.
    pub undefined_metrics: usize,
}

/// Written last, after every report file, as the run's summary.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config: ExperimentConfig,
    pub tasks: Vec<TaskStatus>,
    pub outputs: Vec<String>,
    pub warnings: Warnings,
    pub elapsed_ms: u128,
}

impl RunManifest {
    pub fn any_failed(&self) -> bool {
        self.tasks.iter().any(|t| t.status == TaskState::Failed)
    }
}

/// Which report files a run writes.
#[derive(Debug, Clone, Copy)]
pub struct OutputSelection {
    pub similarity: bool,
    pub metrics: bool,
    pub detections: bool,
    pub plots: bool,
    pub manifest: bool,
}

impl OutputSelection {
    pub fn all() -> Self {
        Self {
            similarity: true,
            metrics: true,
            detections: true,
            plots: true,
            manifest: true,
        }
    }

    pub fn nothing() -> Self {
        Self {
            similarity: false,
            metrics: false,
            detections: false,
            plots: false,
            manifest: false,
        }
    }
}

/// In-memory results of a run, alongside whatever files were written.
#[derive(Debug)]
pub struct RunOutput {
    pub manifest: RunManifest,
    pub similarity: Vec<SimilarityReport>,
    pub metrics: Vec<MetricsReport>,
    pub aggregates: Vec<AggregateReport>,
    pub detections: Vec<DetectionExport>,
}

struct TaskOutcome {
    channel: usize,
    cr: f64,
    error: Option<String>,
    similarity: Option<SimilarityReport>,
    metrics: Option<MetricsReport>,
    detection: Option<DetectionExport>,
}

impl TaskOutcome {
    fn failed(channel: usize, cr: f64, error: impl ToString) -> Self {
        Self {
            channel,
            cr,
            error: Some(error.to_string()),
            similarity: None,
            metrics: None,
            detection: None,
        }
    }
}

struct RecordOutcome {
    record: String,
    tasks: Vec<TaskOutcome>,
}

fn run_task(
    config: &ExperimentConfig,
    record: &crate::wfdb::EcgRecord,
    x: &[f64],
    truth: &[usize],
    channel: usize,
    cr: f64,
) -> Result<TaskOutcome, PipelineError> {
    let fs = f64::from(record.header.sampling_rate);
    let tolerance_samples = (config.tolerance_ms / 1000.0 * fs).round() as usize;
    let record_name = record.header.record_name.clone();

    let (similarity, mapped, effective_rate, total_delay, native) = if cr == 0.0 {
        let detection = detect_r_peaks(x, &DetectorConfig::for_rate(fs))?;
        let native = detection.peak_indices.clone();
        (None, detection.peak_indices, fs, detection.total_delay, native)
    } else {
        let sensing = config_from_cr(config.sample_limit, cr, config.normalize)?;
        let compressed = compress_channel(x, &sensing, fs, channel - 1)?;
        let mut sim = structural_similarity(x, &compressed, config.num_segments, true)?;
        sim.record = record_name.clone();
        sim.channel = channel;
        let detection = detect_r_peaks(
            &compressed.data,
            &DetectorConfig::for_rate(compressed.effective_rate),
        )?;
        let mapped = map_to_original_timescale(&detection, &sensing);
        (
            Some(sim),
            mapped,
            compressed.effective_rate,
            detection.total_delay,
            detection.peak_indices,
        )
    };

    let matched = match_peaks(&mapped, truth, tolerance_samples)?;
    let mut metrics = compute_metrics(&matched)?;
    metrics.record = record_name.clone();
    metrics.channel = channel;
    metrics.cr = cr;

    Ok(TaskOutcome {
        channel,
        cr,
        error: None,
        similarity,
        metrics: Some(metrics),
        detection: Some(DetectionExport {
            record: record_name,
            channel,
            cr,
            effective_rate,
            total_delay,
            native_indices: native,
            original_indices: mapped,
        }),
    })
}

fn process_record(config: &ExperimentConfig, id: &str) -> RecordOutcome {
    let mut task_crs = vec![0.0];
    task_crs.extend_from_slice(&config.crs);

    let record = match load_record_from_paths(
        &config.data_dir,
        id,
        &config.beat_code_set(),
        Some(config.sample_limit),
    ) {
        Ok(r) => r,
        Err(e) => {
            let reason = e.to_string();
            let tasks = config
                .channels
                .iter()
                .flat_map(|&ch| {
                    let reason = &reason;
                    task_crs.iter().map(move |&cr| TaskOutcome::failed(ch, cr, reason))
                })
                .collect();
            return RecordOutcome {
                record: id.to_string(),
                tasks,
            };
        }
    };

    let truth: Vec<usize> = record.beat_annotations.iter().map(|a| a.sample_index).collect();
    let mut tasks = Vec::new();
    for &channel in &config.channels {
        let Some(samples) = record.channels.get(channel - 1) else {
            for &cr in &task_crs {
                tasks.push(TaskOutcome::failed(
                    channel,
                    cr,
                    format!("record {id} has no channel {channel}"),
                ));
            }
            continue;
        };
        let x: Vec<f64> = samples.iter().map(|&v| f64::from(v)).collect();
        for &cr in &task_crs {
            match run_task(config, &record, &x, &truth, channel, cr) {
                Ok(outcome) => tasks.push(outcome),
                Err(e) => tasks.push(TaskOutcome::failed(channel, cr, e)),
            }
        }
    }
    RecordOutcome {
        record: id.to_string(),
        tasks,
    }
}

/// Runs the whole experiment and writes the selected report files.
///
/// Config violations abort before any task runs; per-record failures are
/// recorded in the manifest while the run continues. The manifest is
/// written after every other output.
pub fn run_experiment(
    config: &ExperimentConfig,
    selection: &OutputSelection,
) -> Result<RunOutput, PipelineError> {
    config.validate()?;
    let start = Instant::now();

    let outcomes: Vec<RecordOutcome> = config
        .record_ids
        .par_iter()
        .map(|id| process_record(config, id))
        .collect();

    let mut tasks = Vec::new();
    let mut similarity = Vec::new();
    let mut metrics = Vec::new();
    let mut detections = Vec::new();
    let mut warnings = Warnings::default();

    let mut ordered = outcomes;
    ordered.sort_by(|a, b| a.record.cmp(&b.record));
    for outcome in ordered {
        for task in outcome.tasks {
            tasks.push(TaskStatus {
                record: outcome.record.clone(),
                channel: task.channel,
                cr: task.cr,
                status: if task.error.is_none() {
                    TaskState::Ok
                } else {
                    TaskState::Failed
                },
                error: task.error,
            });
            if let Some(sim) = task.similarity {
                warnings.excluded_pairs += sim.excluded_pairs;
                similarity.push(sim);
            }
            if let Some(m) = task.metrics {
                if m.ppv.is_none() {
                    warnings.undefined_metrics += 1;
                }
                metrics.push(m);
            }
            if let Some(d) = task.detection {
                detections.push(d);
            }
        }
    }

    let sort_key = |r: &str, ch: usize, cr: f64| (r.to_string(), ch, cr);
    similarity.sort_by(|a, b| {
        sort_key(&a.record, a.channel, a.cr)
            .partial_cmp(&sort_key(&b.record, b.channel, b.cr))
            .unwrap()
    });
    metrics.sort_by(|a, b| {
        sort_key(&a.record, a.channel, a.cr)
            .partial_cmp(&sort_key(&b.record, b.channel, b.cr))
            .unwrap()
    });
    detections.sort_by(|a, b| {
        sort_key(&a.record, a.channel, a.cr)
            .partial_cmp(&sort_key(&b.record, b.channel, b.cr))
            .unwrap()
    });

    let aggregates = if metrics.is_empty() {
        Vec::new()
    } else {
        aggregate(&metrics)?
    };

    let outputs = write_outputs(config, selection, &similarity, &metrics, &aggregates, &detections)?;

    let mut manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        tasks,
        outputs,
        warnings,
        elapsed_ms: start.elapsed().as_millis(),
    };

    if selection.manifest {
        std::fs::create_dir_all(&config.out_dir)?;
        let path = config.out_dir.join("manifest.json");
        std::fs::write(&path, report::to_json_pretty(&manifest)?)?;
        manifest.outputs.push(path.display().to_string());
    }

    Ok(RunOutput {
        manifest,
        similarity,
        metrics,
        aggregates,
        detections,
    })
}

fn write_outputs(
    config: &ExperimentConfig,
    selection: &OutputSelection,
    similarity: &[SimilarityReport],
    metrics: &[MetricsReport],
    aggregates: &[AggregateReport],
    detections: &[DetectionExport],
) -> Result<Vec<String>, PipelineError> {
    let mut outputs = Vec::new();
    let needs_dir = selection.similarity || selection.metrics || selection.detections || selection.plots;
    if needs_dir {
        std::fs::create_dir_all(&config.out_dir)?;
    }

    let emit = |name: &str, content: String, outputs: &mut Vec<String>| -> Result<(), PipelineError> {
        let path = config.out_dir.join(name);
        std::fs::write(&path, content)?;
        outputs.push(path.display().to_string());
        Ok(())
    };

    match config.format {
        OutputFormat::Csv => {
            if selection.similarity {
                emit("similarity.csv", report::similarity_csv(similarity), &mut outputs)?;
            }
            if selection.metrics {
                emit("metrics.csv", report::metrics_csv(metrics), &mut outputs)?;
                emit("aggregate.csv", report::aggregate_csv(aggregates), &mut outputs)?;
            }
            if selection.detections {
                emit("detections.csv", report::detections_csv(detections), &mut outputs)?;
            }
        }
        OutputFormat::Json => {
            if selection.similarity {
                emit("similarity.json", report::to_json_pretty(&similarity)?, &mut outputs)?;
            }
            if selection.metrics {
                emit("metrics.json", report::to_json_pretty(&metrics)?, &mut outputs)?;
                emit("aggregate.json", report::to_json_pretty(&aggregates)?, &mut outputs)?;
            }
            if selection.detections {
                emit("detections.json", report::to_json_pretty(&detections)?, &mut outputs)?;
            }
        }
    }

    if selection.plots && (!similarity.is_empty() || !aggregates.is_empty()) {
        for (name, content) in emit_plot_data(similarity, aggregates)? {
            emit(&name, content, &mut outputs)?;
        }
    }

    Ok(outputs)
}

/// Renders similarity series and per-CR metric bars as plot-ready CSV.
pub fn emit_plot_data(
    similarity: &[SimilarityReport],
    aggregates: &[AggregateReport],
) -> Result<Vec<(String, String)>, PipelineError> {
    if similarity.is_empty() && aggregates.is_empty() {
        return Err(PipelineError::Config("no reports to plot".into()));
    }
    let mut files = Vec::new();
    if !similarity.is_empty() {
        files.push(("plot_similarity.csv".to_string(), report::plot_similarity_csv(similarity)));
    }
    if !aggregates.is_empty() {
        for metric in ["se", "ppv", "f", "der"] {
            files.push((
                format!("plot_{metric}.csv"),
                report::plot_metric_csv(aggregates, metric),
            ));
        }
    }
    Ok(files)
}
