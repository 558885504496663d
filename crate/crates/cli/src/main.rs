//! `cdecg` — compressed-domain ECG analysis from the command line.
//!
//! Subcommands mirror the pipeline stages: `compress` dumps DBBD
//! measurements, `similarity`/`detect`/`evaluate` emit their report slice,
//! `run-all` performs the full experiment, and `synth` writes synthetic
//! WFDB fixtures. Exit codes: 0 all tasks ok, 1 some tasks failed, 2 bad
//! configuration.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use cdecg_core::pipeline::{
    report, run_experiment, synth, ExperimentConfig, OutputFormat, OutputSelection, PipelineError,
};
use cdecg_core::sensing::{compress_multichannel, config_from_cr};
use cdecg_core::wfdb::load_record_from_paths;

#[derive(Parser)]
#[command(name = "cdecg", version, about = "Compressed-domain multi-channel ECG analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compress records with the DBBD operator and dump the measurements.
    Compress(RunArgs),
    /// Template-based structural similarity reports.
    Similarity(RunArgs),
    /// R-peak detection reports (native and original-timescale indices).
    Detect(RunArgs),
    /// Detection metrics (Se, P+, F, DER) with per-CR aggregates.
    Evaluate(RunArgs),
    /// The full experiment: similarity, detections, metrics, plot data and
    /// a run manifest.
    RunAll(RunArgs),
    /// Generate synthetic WFDB records with known beat locations.
    Synth(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat key = value config file; command-line flags override it.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Directory holding <record>.hea/.dat/.atr files.
    #[arg(long)]
    data_dir: Option<PathBuf>,

    /// Comma-separated record names.
    #[arg(long, value_delimiter = ',')]
    records: Option<Vec<String>>,

    /// Comma-separated 1-based channel numbers.
    #[arg(long, value_delimiter = ',')]
    channels: Option<Vec<usize>>,

    /// Compression ratio as a fraction (repeat for several).
    #[arg(long = "cr")]
    crs: Option<Vec<f64>>,

    /// Samples analyzed per channel.
    #[arg(long)]
    samples: Option<usize>,

    /// Templates per measurement.
    #[arg(long)]
    segments: Option<usize>,

    /// Beat-matching tolerance in milliseconds.
    #[arg(long)]
    tolerance_ms: Option<f64>,

    /// Divide block sums by the decimation factor.
    #[arg(long)]
    normalize: Option<bool>,

    /// Report format: csv or json.
    #[arg(long)]
    format: Option<String>,

    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Seed for synthetic fixtures.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory for the .hea/.dat/.atr files.
    #[arg(long)]
    out: PathBuf,

    /// Records to generate; rates are varied when more than one.
    #[arg(long, default_value_t = 1)]
    count: usize,

    #[arg(long, default_value_t = 60.0)]
    bpm: f64,

    #[arg(long, default_value_t = 30.0)]
    duration_s: f64,

    #[arg(long, default_value_t = 360)]
    fs: u32,

    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Record name (single-record mode).
    #[arg(long, default_value = "synth00")]
    name: String,
}

impl RunArgs {
    fn into_config(self) -> anyhow::Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)
                .with_context(|| format!("reading config {}", path.display()))?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = self.data_dir {
            config.data_dir = v;
        }
        if let Some(v) = self.records {
            config.record_ids = v;
        }
        if let Some(v) = self.channels {
            config.channels = v;
        }
        if let Some(v) = self.crs {
            config.crs = v;
        }
        if let Some(v) = self.samples {
            config.sample_limit = v;
        }
        if let Some(v) = self.segments {
            config.num_segments = v;
        }
        if let Some(v) = self.tolerance_ms {
            config.tolerance_ms = v;
        }
        if let Some(v) = self.normalize {
            config.normalize = v;
        }
        if let Some(v) = self.format {
            config.format = match v.as_str() {
                "csv" => OutputFormat::Csv,
                "json" => OutputFormat::Json,
                other => anyhow::bail!("unknown format {other:?}, expected csv or json"),
            };
        }
        if let Some(v) = self.out {
            config.out_dir = v;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        Ok(config)
    }
}

fn run_selected(args: RunArgs, selection: OutputSelection) -> anyhow::Result<ExitCode> {
    let config = args.into_config()?;
    match run_experiment(&config, &selection) {
        Ok(output) => {
            let failed = output
                .manifest
                .tasks
                .iter()
                .filter(|t| t.status == cdecg_core::pipeline::TaskState::Failed)
                .count();
            let total = output.manifest.tasks.len();
            eprintln!(
                "{} of {} tasks ok; outputs in {}",
                total - failed,
                total,
                config.out_dir.display()
            );
            for task in &output.manifest.tasks {
                if let Some(err) = &task.error {
                    eprintln!(
                        "  failed: {} ch{} cr={}: {}",
                        task.record, task.channel, task.cr, err
                    );
                }
            }
            Ok(if failed > 0 {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            })
        }
        Err(PipelineError::Config(msg)) => {
            eprintln!("config error: {msg}");
            Ok(ExitCode::from(2))
        }
        Err(e) => Err(e.into()),
    }
}

/// Dumps DBBD measurements per record and CR: CSV has one column per
/// channel, JSON embeds the sensing config.
fn run_compress(args: RunArgs) -> anyhow::Result<ExitCode> {
    let config = args.into_config()?;
    if let Err(PipelineError::Config(msg)) = config.validate() {
        eprintln!("config error: {msg}");
        return Ok(ExitCode::from(2));
    }
    std::fs::create_dir_all(&config.out_dir)?;

    let mut failures = 0usize;
    for id in &config.record_ids {
        let record = match load_record_from_paths(
            &config.data_dir,
            id,
            &config.beat_code_set(),
            Some(config.sample_limit),
        ) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("failed: {id}: {e}");
                failures += 1;
                continue;
            }
        };
        let fs = f64::from(record.header.sampling_rate);
        let channels: Vec<Vec<f64>> = record
            .channels
            .iter()
            .map(|c| c.iter().map(|&v| f64::from(v)).collect())
            .collect();
        for &cr in &config.crs {
            let sensing = config_from_cr(config.sample_limit, cr, config.normalize)
                .map_err(PipelineError::from)?;
            let compressed = compress_multichannel(&channels, &sensing, fs)
                .map_err(PipelineError::from)?;
            let stem = format!("{id}_cr{:02.0}", cr * 100.0);
            match config.format {
                OutputFormat::Csv => {
                    let data: Vec<Vec<f64>> =
                        compressed.channels.iter().map(|c| c.data.clone()).collect();
                    std::fs::write(
                        config.out_dir.join(format!("{stem}.csv")),
                        report::compressed_csv(&data),
                    )?;
                }
                OutputFormat::Json => {
                    std::fs::write(
                        config.out_dir.join(format!("{stem}.json")),
                        report::to_json_pretty(&compressed)?,
                    )?;
                }
            }
        }
    }
    eprintln!(
        "compressed {} of {} records into {}",
        config.record_ids.len() - failures,
        config.record_ids.len(),
        config.out_dir.display()
    );
    Ok(if failures > 0 {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn run_synth(args: SynthArgs) -> anyhow::Result<ExitCode> {
    std::fs::create_dir_all(&args.out)?;
    if args.count == 1 {
        let record =
            synth::generate_synthetic_record(args.bpm, args.duration_s, args.fs, args.seed, &args.name);
        synth::write_record_files(&record, &args.out)?;
        eprintln!("wrote {} ({} beats)", args.name, record.beat_annotations.len());
    } else {
        let names = synth::generate_corpus(&args.out, args.count, args.duration_s, args.fs, args.seed)?;
        eprintln!("wrote {} records: {} .. {}", names.len(), names[0], names[names.len() - 1]);
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Compress(args) => run_compress(args),
        Command::Similarity(args) => run_selected(
            args,
            OutputSelection {
                similarity: true,
                ..OutputSelection::nothing()
            },
        ),
        Command::Detect(args) => run_selected(
            args,
            OutputSelection {
                detections: true,
                ..OutputSelection::nothing()
            },
        ),
        Command::Evaluate(args) => run_selected(
            args,
            OutputSelection {
                metrics: true,
                ..OutputSelection::nothing()
            },
        ),
        Command::RunAll(args) => run_selected(args, OutputSelection::all()),
        Command::Synth(args) => run_synth(args),
    }
}
