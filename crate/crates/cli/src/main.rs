//! `fairtoss` command-line interface.
//!
//! Every command writes machine-readable output to `--out` and a short
//! human-readable summary to stdout. Exit codes: 0 success, 1 rejections
//! found under `--strict`, 2 usage or input error, 3 runtime or transport
//! failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fairtoss::experiment::ReportFormat;
use fairtoss::stats::RunMode;
use fairtoss::SamplingMode;

#[derive(Debug, Parser)]
#[command(name = "fairtoss", version, about = "Randomness checks for yes/no answers from language models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a collection protocol and write its transcript.
    Collect(CollectArgs),
    /// Run the test battery over a transcript.
    Analyze(AnalyzeArgs),
    /// Run the one-shot protocol at several temperatures.
    Sweep(SweepArgs),
    /// Generate a sequence from a synthetic source and analyze it.
    Simulate(SimulateArgs),
    /// Count "yes" and "no" in web-crawl WET archives.
    Crawl(CrawlArgs),
    /// Compare the switching behaviour of two sequences.
    Compare(CompareArgs),
    /// Render a combined report for one or more transcripts.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    OneShot,
    FewShot,
}

impl From<ModeArg> for SamplingMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::OneShot => SamplingMode::OneShot,
            ModeArg::FewShot => SamplingMode::FewShot,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SourceArg {
    Boltzmann,
    Markov,
}

/// Values that override the config file when given.
#[derive(Debug, Args)]
struct ConfigOverrides {
    /// Sampling temperature, 0–2.
    #[arg(long)]
    temperature: Option<f64>,
    /// One-shot calls per prompt.
    #[arg(long)]
    samples: Option<usize>,
    /// Few-shot calls per prompt.
    #[arg(long)]
    batches: Option<usize>,
    /// Decisions requested per few-shot call.
    #[arg(long)]
    batch_size: Option<usize>,
    /// Milliseconds to wait between calls.
    #[arg(long)]
    delay_ms: Option<u64>,
    /// Seed for synthetic sources.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Debug, Args)]
struct CollectArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Transcript destination (JSON lines).
    #[arg(long, required_unless_present = "dry_run")]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Print the call schedule and exit without calling anything.
    #[arg(long)]
    dry_run: bool,
    #[command(flatten)]
    overrides: ConfigOverrides,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Transcript to analyze.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Largest recency window.
    #[arg(long, default_value_t = 5)]
    windows: usize,
    #[arg(long, default_value = "at-least")]
    run_mode: RunMode,
    /// Decisions each few-shot call asked for; flags batches of other lengths.
    #[arg(long)]
    batch_size: Option<usize>,
    /// Report destination.
    #[arg(long)]
    out: PathBuf,
    /// Format of the file written to --out.
    #[arg(long, default_value = "delimited")]
    format: ReportFormat,
    /// Exit with status 1 when any uniformity test rejects.
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated temperatures.
    #[arg(long, value_delimiter = ',', default_values_t = fairtoss::experiment::DEFAULT_TEMPERATURES)]
    temperatures: Vec<f64>,
    /// Transcript destination covering every temperature.
    #[arg(long)]
    out: PathBuf,
    /// Delimited sweep table.
    #[arg(long)]
    report: Option<PathBuf>,
    /// `temperature,p_yes` series for plotting, one file per prompt
    /// (`<stem>-<prompt>.csv`).
    #[arg(long)]
    plot: Option<PathBuf>,
    #[command(flatten)]
    overrides: ConfigOverrides,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    source: SourceArg,
    /// Logit of "yes" (boltzmann).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    z_yes: f64,
    /// Logit of "no" (boltzmann).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    z_no: f64,
    /// Temperature (boltzmann).
    #[arg(long, default_value_t = 1.0)]
    temperature: f64,
    /// P(first = yes) (markov).
    #[arg(long, default_value_t = 0.5)]
    p_initial: f64,
    /// P(yes | previous yes) (markov).
    #[arg(long, default_value_t = 0.5)]
    p_yy: f64,
    /// P(yes | previous no) (markov).
    #[arg(long, default_value_t = 0.5)]
    p_yn: f64,
    /// Sequence length.
    #[arg(long)]
    n: usize,
    /// Seed; drawn from the clock and printed when omitted.
    #[arg(long)]
    seed: Option<u64>,
    /// Sequence file destination (`1`/`0` tokens).
    #[arg(long)]
    out: PathBuf,
    /// Delimited analysis of the sequence.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 5)]
    windows: usize,
}

#[derive(Debug, Args)]
struct CrawlArgs {
    /// WET archives, gzip-compressed or plain.
    #[arg(long, num_args = 1.., required = true)]
    wet: Vec<PathBuf>,
    /// Only scan the first N characters of each page.
    #[arg(long)]
    truncate: Option<usize>,
    /// Stop after this many pages.
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Per-page counts (CSV).
    #[arg(long)]
    out: PathBuf,
    /// Delimited corpus summary.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// First sequence file.
    #[arg(long)]
    a: PathBuf,
    /// Second sequence file.
    #[arg(long)]
    b: PathBuf,
    #[arg(long, default_value_t = 5)]
    windows: usize,
    #[arg(long, default_value = "at-least")]
    run_mode: RunMode,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Delimited comparison table.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Transcripts to include, one report section each.
    #[arg(long = "in", num_args = 1.., required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 5)]
    windows: usize,
    #[arg(long, default_value = "at-least")]
    run_mode: RunMode,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long, default_value = "markdown")]
    format: ReportFormat,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Collect(a) => commands::collect(a),
        Command::Analyze(a) => commands::analyze(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Crawl(a) => commands::crawl(a),
        Command::Compare(a) => commands::compare(a),
        Command::Report(a) => commands::report(a),
    };
    match outcome {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error);
            ExitCode::from(failure.code)
        }
    }
}
