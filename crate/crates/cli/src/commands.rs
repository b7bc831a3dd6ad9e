//! Subcommand implementations.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::anyhow;
use fairtoss::crawl::{aggregate_crawl, scan_archives, write_page_stats, CrawlError};
use fairtoss::experiment::{
    build_responder, compare_recency, render_report, run_experiment, run_temperature_sweep,
    summarize_records, write_sweep_plot, AnalysisOptions, ExperimentConfig, ExperimentError,
    ExperimentResult, PromptSpec, ReportFormat, ReportItem, SequenceResponder,
};
use fairtoss::sources::{
    format_sequence_file, import_external_random, sample_boltzmann, sample_markov_chain,
    BoltzmannParams, DecisionRng, MarkovChainParams, SourceError, SourceKind, SourceSpec,
};
use fairtoss::transcript::{read_transcript, TranscriptError};
use fairtoss::{PromptId, ResponseRecord};

use crate::{
    AnalyzeArgs, CollectArgs, CompareArgs, ConfigOverrides, CrawlArgs, ReportArgs, SimulateArgs,
    SourceArg, SweepArgs,
};

pub const EXIT_REJECTED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_RUNTIME: u8 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

pub type CmdResult = Result<ExitCode, Failure>;

fn usage(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        error: error.into(),
    }
}

fn runtime(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: EXIT_RUNTIME,
        error: error.into(),
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        if e.is_runtime() {
            runtime(e)
        } else {
            usage(e)
        }
    }
}

impl From<CrawlError> for Failure {
    fn from(e: CrawlError) -> Self {
        match e {
            CrawlError::EmptyCorpus | CrawlError::Stats(_) => usage(e),
            _ => runtime(e),
        }
    }
}

impl From<SourceError> for Failure {
    fn from(e: SourceError) -> Self {
        match e {
            SourceError::Io { .. } => runtime(e),
            _ => usage(e),
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| runtime(anyhow!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| runtime(anyhow!("{}: {e}", path.display())))
}

fn load_transcript(path: &Path) -> Result<Vec<ResponseRecord>, Failure> {
    let file = File::open(path).map_err(|e| runtime(anyhow!("{}: {e}", path.display())))?;
    let records = read_transcript(BufReader::new(file)).map_err(|e| match e {
        TranscriptError::Read(_) | TranscriptError::Write { .. } => {
            runtime(anyhow!("{}: {e}", path.display()))
        }
        _ => usage(anyhow!("{}: {e}", path.display())),
    })?;
    if records.is_empty() {
        return Err(usage(anyhow!("{}: transcript has no records", path.display())));
    }
    Ok(records)
}

fn check_analysis_args(alpha: f64, windows: usize) -> Result<(), Failure> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(usage(anyhow!("--alpha must lie in (0, 1), got {alpha}")));
    }
    if windows == 0 {
        return Err(usage(anyhow!("--windows must be at least 1")));
    }
    Ok(())
}

/// Config file values, then flags on top.
fn load_config(path: &Path, overrides: &ConfigOverrides) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::from_json_file(path)?;
    if let Some(t) = overrides.temperature {
        cfg.temperature = t;
    }
    if let Some(n) = overrides.samples {
        cfg.samples_per_prompt = n;
    }
    if let Some(n) = overrides.batches {
        cfg.batches = n;
    }
    if let Some(n) = overrides.batch_size {
        cfg.batch_size = n;
    }
    if let Some(ms) = overrides.delay_ms {
        cfg.inter_call_delay_ms = ms;
    }
    if let Some(seed) = overrides.seed {
        cfg.seed = Some(seed);
        cfg.source.seed = Some(seed);
    }
    if let Some(a) = overrides.alpha {
        cfg.alpha = a;
    }
    Ok(cfg)
}

fn clock_seed() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0)
}

fn print_uniformity_lines(result: &ExperimentResult) {
    for p in &result.prompts {
        let verdict = match p.uniformity {
            Some(u) if u.reject_null => "reject",
            Some(_) => "not rejected",
            None => "untested",
        };
        println!(
            "  {} ({}): {} yes, {} no, {} invalid; uniformity {verdict}",
            p.prompt_id, p.mode, p.yes_count, p.no_count, p.invalid_count
        );
    }
}

pub fn collect(args: CollectArgs) -> CmdResult {
    let mut cfg = load_config(&args.config, &args.overrides)?;
    if let Some(mode) = args.mode {
        cfg.mode = mode.into();
    }
    cfg.validate()?;
    let schedule = cfg.schedule();
    if args.dry_run {
        println!("{schedule}");
        return Ok(ExitCode::SUCCESS);
    }
    let out = args.out.expect("clap requires --out without --dry-run");
    let mut responder = build_responder(&cfg.source, cfg.seed)?;
    let mut sink = create(&out)?;
    println!("{}: {schedule}", cfg.experiment_id);
    let mut result = match run_experiment(&cfg, responder.as_mut(), &mut sink) {
        Ok(r) => r,
        Err(e) => {
            let _ = sink.flush();
            if let ExperimentError::Aborted { completed_calls, .. } = &e {
                eprintln!(
                    "partial transcript with {completed_calls} completed calls kept at {}",
                    out.display()
                );
            }
            return Err(e.into());
        }
    };
    sink.flush().map_err(runtime)?;
    result.transcript_path = Some(out.display().to_string());
    println!("wrote {} records from {} calls to {}", result.records, result.calls, out.display());
    print_uniformity_lines(&result);
    for w in &result.warnings {
        println!("  warning: {w}");
    }
    Ok(ExitCode::SUCCESS)
}

pub fn analyze(args: AnalyzeArgs) -> CmdResult {
    check_analysis_args(args.alpha, args.windows)?;
    let records = load_transcript(&args.input)?;
    let options = AnalysisOptions {
        alpha: args.alpha,
        w_max: args.windows,
        run_mode: args.run_mode,
        expected_batch_size: args.batch_size,
    };
    let mut result = summarize_records(&records, &options)?;
    result.transcript_path = Some(args.input.display().to_string());
    let item = [ReportItem::Experiment(&result)];
    write_file(&args.out, &render_report(&item, args.format))?;
    print!("{}", render_report(&item, ReportFormat::Markdown));
    if args.strict && result.any_uniformity_rejection() {
        return Ok(ExitCode::from(EXIT_REJECTED));
    }
    Ok(ExitCode::SUCCESS)
}

pub fn sweep(args: SweepArgs) -> CmdResult {
    let cfg = load_config(&args.config, &args.overrides)?;
    // Reject bad settings before --out is truncated.
    for &t in &args.temperatures {
        let mut probe = cfg.clone();
        probe.temperature = t;
        probe.mode = fairtoss::SamplingMode::OneShot;
        probe.validate()?;
    }
    let mut sink = create(&args.out)?;
    let outcome = run_temperature_sweep(&cfg, &args.temperatures, &mut sink);
    sink.flush().map_err(runtime)?;
    let sweep = outcome?;
    let item = [ReportItem::Sweep(&sweep)];
    if let Some(path) = &args.report {
        write_file(path, &render_report(&item, ReportFormat::Delimited))?;
    }
    if let Some(path) = &args.plot {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "sweep".into());
        for prompt in &cfg.prompts {
            let file = path.with_file_name(format!("{stem}-{}.csv", prompt.prompt_id));
            write_sweep_plot(&sweep, &prompt.prompt_id, create(&file)?)?;
        }
    }
    print!("{}", render_report(&item, ReportFormat::Markdown));
    Ok(ExitCode::SUCCESS)
}

pub fn simulate(args: SimulateArgs) -> CmdResult {
    if args.n == 0 {
        return Err(usage(anyhow!("--n must be positive")));
    }
    check_analysis_args(args.alpha, args.windows)?;
    let seed = args.seed.unwrap_or_else(clock_seed);
    let mut rng = DecisionRng::seeded(seed);
    let (kind, sequence) = match args.source {
        SourceArg::Boltzmann => {
            let params = BoltzmannParams::binary(args.z_yes, args.z_no, args.temperature);
            let seq = sample_boltzmann(&params, &mut rng, args.n)?;
            (SourceKind::Boltzmann(params), seq)
        }
        SourceArg::Markov => {
            let params = MarkovChainParams {
                p_initial_yes: args.p_initial,
                p_yes_given_yes: args.p_yy,
                p_yes_given_no: args.p_yn,
            };
            let seq = sample_markov_chain(&params, &mut rng, args.n)?;
            (SourceKind::MarkovChain(params), seq)
        }
    };
    write_file(&args.out, &format_sequence_file(&sequence))?;

    // Replaying the sequence through the one-shot runner yields the same
    // battery the other commands report.
    let spec = SourceSpec::new(kind).with_seed(seed);
    let label = spec.model_id();
    let mut cfg = ExperimentConfig::new("simulate", spec);
    cfg.prompts = vec![PromptSpec::new(PromptId::parse("sim"), "simulated")];
    cfg.samples_per_prompt = args.n;
    cfg.inter_call_delay_ms = 0;
    cfg.alpha = args.alpha;
    cfg.recency_w_max = args.windows;
    if matches!(args.source, SourceArg::Boltzmann) && (0.0..=2.0).contains(&args.temperature) {
        cfg.temperature = args.temperature;
    }
    let mut responder = SequenceResponder::new(label, sequence.items.iter().copied());
    let result = run_experiment(&cfg, &mut responder, &mut std::io::sink())?;
    let item = [ReportItem::Experiment(&result)];
    if let Some(path) = &args.report {
        write_file(path, &render_report(&item, ReportFormat::Delimited))?;
    }
    println!(
        "seed {seed}: {} decisions ({} yes) written to {}",
        sequence.len(),
        sequence.yes_count(),
        args.out.display()
    );
    print!("{}", render_report(&item, ReportFormat::Markdown));
    Ok(ExitCode::SUCCESS)
}

pub fn crawl(args: CrawlArgs) -> CmdResult {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(usage(anyhow!("--alpha must lie in (0, 1), got {}", args.alpha)));
    }
    if args.sample == Some(0) {
        return Err(usage(anyhow!("--sample must be positive")));
    }
    let pages = scan_archives(&args.wet, args.truncate, args.sample)?;
    write_page_stats(&pages, create(&args.out)?)?;
    let aggregate = aggregate_crawl(&pages, args.truncate, args.alpha)?;
    let label = match args.truncate {
        Some(n) => format!("first {n} characters"),
        None => "full pages".to_string(),
    };
    let item = [ReportItem::Crawl {
        label: &label,
        aggregate: &aggregate,
    }];
    if let Some(path) = &args.summary {
        write_file(path, &render_report(&item, ReportFormat::Delimited))?;
    }
    println!("scanned {} pages; per-page counts in {}", aggregate.pages, args.out.display());
    print!("{}", render_report(&item, ReportFormat::Markdown));
    Ok(ExitCode::SUCCESS)
}

pub fn compare(args: CompareArgs) -> CmdResult {
    check_analysis_args(args.alpha, args.windows)?;
    let load = |p: &Path| {
        import_external_random(p).map_err(|e| {
            let f = Failure::from(e);
            Failure {
                code: f.code,
                error: f.error.context(p.display().to_string()),
            }
        })
    };
    let a = load(&args.a)?;
    let b = load(&args.b)?;
    let comparison = compare_recency(&a, &b, args.windows, args.alpha, args.run_mode)?;
    let (label_a, label_b) = (args.a.display().to_string(), args.b.display().to_string());
    let item = [ReportItem::Comparison {
        label_a: &label_a,
        label_b: &label_b,
        comparison: &comparison,
    }];
    write_file(&args.out, &render_report(&item, ReportFormat::Delimited))?;
    print!("{}", render_report(&item, ReportFormat::Markdown));
    Ok(ExitCode::SUCCESS)
}

pub fn report(args: ReportArgs) -> CmdResult {
    check_analysis_args(args.alpha, args.windows)?;
    let options = AnalysisOptions {
        alpha: args.alpha,
        w_max: args.windows,
        run_mode: args.run_mode,
        expected_batch_size: args.batch_size,
    };
    let mut results = Vec::with_capacity(args.inputs.len());
    for path in &args.inputs {
        let records = load_transcript(path)?;
        let mut result = summarize_records(&records, &options)?;
        result.transcript_path = Some(path.display().to_string());
        results.push(result);
    }
    let items: Vec<ReportItem> = results.iter().map(ReportItem::Experiment).collect();
    write_file(&args.out, &render_report(&items, args.format))?;
    for r in &results {
        println!(
            "{} ({}, {}): {} records",
            r.transcript_path.as_deref().unwrap_or(""),
            r.experiment_id,
            r.model_id,
            r.records
        );
        print_uniformity_lines(r);
    }
    println!("report written to {}", args.out.display());
    Ok(ExitCode::SUCCESS)
}
