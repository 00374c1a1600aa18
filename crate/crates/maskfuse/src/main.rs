use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use maskfuse::error::{PipelineError, Result};
use maskfuse::pipeline::{
    self, ConfigFile, DEFAULT_BACKGROUND_TOLERANCE, DEFAULT_MIN_SPECKLE_SIZE, DEFAULT_THRESHOLD,
    Issue, PipelineOptions, SimulateOptions,
};

#[derive(Parser)]
#[command(
    name = "maskfuse",
    version,
    about = "Quality control and fusion for multi-annotator binary segmentation masks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize raw annotation PNGs into clean binary masks
    Ingest(IngestArgs),
    /// Compute pairwise Dice matrices, medians, and score distributions
    Agreement(StageArgs),
    /// Exclude annotators whose median pairwise Dice falls below the threshold
    Filter(StageArgs),
    /// Fuse ingested masks into consensus and disagreement maps
    Consensus(ConsensusArgs),
    /// Generate a synthetic annotator cohort from a binary truth mask
    Simulate(SimulateArgs),
    /// Run the full chain: ingest, agreement, filter, consensus before and after filtering
    Report(IngestArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Output directory; the working tree for every stage
    #[arg(long)]
    output: Option<PathBuf>,
    /// TOML config file; explicit flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Median Dice threshold for annotator exclusion [default: 0.9]
    #[arg(long)]
    threshold: Option<f64>,
    /// Minimum component size kept by speckle removal [default: 2]
    #[arg(long)]
    min_speckle_size: Option<usize>,
    /// Pixel connectivity for components: 4 or 8 [default: 8]
    #[arg(long)]
    connectivity: Option<u8>,
    /// Alpha handling in binarization: ignore or include [default: ignore]
    #[arg(long)]
    alpha: Option<String>,
}

#[derive(Args)]
struct StageArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct IngestArgs {
    /// Input directory of per-image annotation subdirectories
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct ConsensusArgs {
    /// Fuse only the annotators marked included by the filter report
    #[arg(long)]
    use_filtered: bool,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SimulateArgs {
    /// Ground-truth mask: 8-bit gray PNG with pixels 0 or 255
    #[arg(long)]
    input: PathBuf,
    /// Profile config: TOML with a [[profiles]] array
    #[arg(long)]
    config: PathBuf,
    /// Directory for the cohort PNGs
    #[arg(long)]
    output: PathBuf,
    /// Manifest path [default: <output>/manifest.toml]
    #[arg(long)]
    seed_manifest: Option<PathBuf>,
    /// Pixel connectivity for the truth component inventory: 4 or 8 [default: 8]
    #[arg(long)]
    connectivity: Option<u8>,
}

fn resolve_options(input: Option<PathBuf>, common: &CommonArgs) -> Result<PipelineOptions> {
    let config = match &common.config {
        Some(path) => pipeline::load_config(path)?,
        None => ConfigFile::default(),
    };
    let output = common
        .output
        .clone()
        .or(config.output)
        .ok_or_else(|| PipelineError::InvalidArgument("--output is required".into()))?;
    let options = PipelineOptions {
        input: input.or(config.input).unwrap_or_default(),
        output,
        threshold: common
            .threshold
            .or(config.threshold)
            .unwrap_or(DEFAULT_THRESHOLD),
        min_speckle_size: common
            .min_speckle_size
            .or(config.min_speckle_size)
            .unwrap_or(DEFAULT_MIN_SPECKLE_SIZE),
        connectivity: pipeline::parse_connectivity(
            common.connectivity.or(config.connectivity).unwrap_or(8),
        )?,
        alpha: pipeline::parse_alpha(
            common
                .alpha
                .as_deref()
                .or(config.alpha.as_deref())
                .unwrap_or("ignore"),
        )?,
        background_tolerance: config
            .background_tolerance
            .unwrap_or(DEFAULT_BACKGROUND_TOLERANCE),
    };
    options.validate()?;
    Ok(options)
}

fn require_input(options: &PipelineOptions) -> Result<()> {
    if options.input.as_os_str().is_empty() {
        return Err(PipelineError::InvalidArgument(
            "--input is required (flag or config)".into(),
        ));
    }
    if !options.input.is_dir() {
        return Err(PipelineError::FileMissing {
            path: options.input.clone(),
        });
    }
    Ok(())
}

fn dispatch(command: Command) -> Result<Vec<Issue>> {
    match command {
        Command::Ingest(args) => {
            let options = resolve_options(args.input, &args.common)?;
            require_input(&options)?;
            pipeline::run_ingest(&options)
        }
        Command::Agreement(args) => {
            let options = resolve_options(None, &args.common)?;
            pipeline::run_agreement(&options)
        }
        Command::Filter(args) => {
            let options = resolve_options(None, &args.common)?;
            pipeline::run_filter(&options)
        }
        Command::Consensus(args) => {
            let options = resolve_options(None, &args.common)?;
            let (summaries, issues) = pipeline::run_consensus(&options, args.use_filtered)?;
            pipeline::write_run_summary(&options, args.use_filtered, summaries)?;
            Ok(issues)
        }
        Command::Simulate(args) => {
            let options = SimulateOptions {
                truth: args.input,
                profiles: args.config,
                output: args.output,
                manifest: args.seed_manifest,
                connectivity: pipeline::parse_connectivity(args.connectivity.unwrap_or(8))?,
            };
            pipeline::run_simulate(&options)?;
            Ok(Vec::new())
        }
        Command::Report(args) => {
            let options = resolve_options(args.input, &args.common)?;
            require_input(&options)?;
            pipeline::run_report(&options)
        }
    }
}

fn emit_record(level: &str, extra: serde_json::Value) {
    let mut record = extra;
    record
        .as_object_mut()
        .expect("record is an object")
        .insert("level".into(), level.into());
    eprintln!("{record}");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(issues) if issues.is_empty() => ExitCode::SUCCESS,
        Ok(issues) => {
            for issue in &issues {
                emit_record(
                    "warning",
                    serde_json::to_value(issue).expect("issue serializes"),
                );
            }
            emit_record(
                "error",
                serde_json::json!({
                    "error": "completed_with_issues",
                    "count": issues.len(),
                }),
            );
            ExitCode::from(1)
        }
        Err(error) => {
            emit_record(
                "error",
                serde_json::json!({
                    "error": "fatal",
                    "message": error.to_string(),
                }),
            );
            ExitCode::from(2)
        }
    }
}
