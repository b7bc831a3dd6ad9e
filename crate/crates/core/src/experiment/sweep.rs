use std::io::Write;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::responder::{build_responder, Responder};
use super::result::ExperimentResult;
use super::runner::run_experiment;
use super::ExperimentError;
use crate::client::validate_temperature;
use crate::sources::derive_seed;
use crate::stats::ChiSquareResult;
use crate::types::{PromptId, SamplingMode};

pub const DEFAULT_TEMPERATURES: [f64; 7] = [0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0];

/// Seed for the run at `temperature`. Keyed on the temperature itself (in
/// thousandths) so a setting gets the same stream whatever order, or
/// whichever subset, of temperatures is swept.
pub fn sweep_seed(master: u64, temperature: f64) -> u64 {
    derive_seed(master, (temperature * 1000.0).round() as u64)
}

/// One (temperature, prompt) line of the sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub temperature: f64,
    pub prompt_id: PromptId,
    pub valid_count: u64,
    pub p_yes: Option<f64>,
    pub p_yes_given_yes: Option<f64>,
    /// Yes→Yes transitions and transitions out of Yes ("YY/n").
    pub n_yy: u64,
    pub n_from_yes: u64,
    pub uniformity: Option<ChiSquareResult>,
    pub independence: Option<ChiSquareResult>,
    pub independence_degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub runs: Vec<(f64, ExperimentResult)>,
    pub rows: Vec<SweepRow>,
}

fn rows_for(temperature: f64, result: &ExperimentResult) -> Vec<SweepRow> {
    result
        .prompts
        .iter()
        .map(|p| {
            let markov = p.markov.as_ref();
            SweepRow {
                temperature,
                prompt_id: p.prompt_id.clone(),
                valid_count: p.valid_count(),
                p_yes: p.p_yes(),
                p_yes_given_yes: markov.and_then(|m| m.p_yes_given_yes),
                n_yy: markov.map_or(0, |m| m.counts.n_yy),
                n_from_yes: markov.map_or(0, |m| m.counts.from_yes()),
                uniformity: p.uniformity,
                independence: markov.and_then(|m| m.chi_square),
                independence_degenerate: markov.is_none_or(|m| m.degenerate),
            }
        })
        .collect()
}

/// Runs the one-shot protocol once per temperature, building a fresh
/// responder for each from `make(temperature, seed)`. Every temperature is
/// validated before the first call is made.
pub fn run_temperature_sweep_with<F>(
    config: &ExperimentConfig,
    temperatures: &[f64],
    mut make: F,
    sink: &mut dyn Write,
) -> Result<SweepResult, ExperimentError>
where
    F: FnMut(f64, Option<u64>) -> Result<Box<dyn Responder>, ExperimentError>,
{
    if temperatures.is_empty() {
        return Err(ExperimentError::Config("no temperatures to sweep".into()));
    }
    for &t in temperatures {
        validate_temperature(t)?;
    }
    let mut base = config.clone();
    base.mode = SamplingMode::OneShot;
    base.validate()?;
    let master = config.source.seed.or(config.seed);

    let mut runs = Vec::with_capacity(temperatures.len());
    let mut rows = Vec::new();
    for &t in temperatures {
        let mut cfg = base.clone();
        cfg.temperature = t;
        cfg.experiment_id = format!("{}@T={t:.2}", base.experiment_id);
        let seed = master.map(|m| sweep_seed(m, t));
        let mut responder = make(t, seed)?;
        let result = run_experiment(&cfg, responder.as_mut(), sink)?;
        rows.extend(rows_for(t, &result));
        runs.push((t, result));
    }
    Ok(SweepResult { runs, rows })
}

/// Sweep using the responder the config's source describes.
pub fn run_temperature_sweep(
    config: &ExperimentConfig,
    temperatures: &[f64],
    sink: &mut dyn Write,
) -> Result<SweepResult, ExperimentError> {
    run_temperature_sweep_with(
        config,
        temperatures,
        |_, seed| {
            let mut spec = config.source.clone();
            spec.seed = seed;
            build_responder(&spec, None)
        },
        sink,
    )
}

/// Two-column `temperature,p_yes` table for one prompt, for plotting.
pub fn write_sweep_plot<W: Write>(
    sweep: &SweepResult,
    prompt_id: &PromptId,
    sink: W,
) -> Result<(), ExperimentError> {
    let io = |e: std::io::Error| ExperimentError::Io {
        context: "writing sweep plot data".into(),
        source: e,
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["temperature", "p_yes"])
        .map_err(|e| io(e.into()))?;
    for row in sweep.rows.iter().filter(|r| &r.prompt_id == prompt_id) {
        let p = row.p_yes.map(|p| p.to_string()).unwrap_or_default();
        w.write_record([row.temperature.to_string(), p])
            .map_err(|e| io(e.into()))?;
    }
    w.flush().map_err(io)
}
