use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::thread;
use std::time::Duration;

use chrono::{DateTime, TimeZone, Utc};

use super::config::ExperimentConfig;
use super::responder::{Responder, SourceRequest};
use super::result::{BatchResult, ExperimentResult, PromptResult};
use super::ExperimentError;
use crate::sources::{parse_decision, parse_few_shot};
use crate::stats::{
    chi_square_uniform, markov_independence_test, markov_test_from_counts, recency_analysis,
    transition_counts, RunMode, TransitionCounts, DEFAULT_ALPHA, DEFAULT_MAX_WINDOW,
};
use crate::transcript::{sequence_from_records, RecordFilter, TranscriptWriter};
use crate::types::{BatchSlot, BinarySequence, PromptId, ResponseRecord, SamplingMode};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    pub alpha: f64,
    pub w_max: usize,
    pub run_mode: RunMode,
    /// Batch size the few-shot calls asked for; enables length-mismatch flags.
    pub expected_batch_size: Option<usize>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            alpha: DEFAULT_ALPHA,
            w_max: DEFAULT_MAX_WINDOW,
            run_mode: RunMode::AtLeast,
            expected_batch_size: None,
        }
    }
}

impl AnalysisOptions {
    pub fn from_config(config: &ExperimentConfig) -> Self {
        AnalysisOptions {
            alpha: config.alpha,
            w_max: config.recency_w_max,
            run_mode: config.run_mode,
            expected_batch_size: (config.mode == SamplingMode::FewShot).then_some(config.batch_size),
        }
    }
}

fn now_millis() -> DateTime<Utc> {
    let ms = Utc::now().timestamp_millis();
    Utc.timestamp_millis_opt(ms).single().unwrap_or_else(Utc::now)
}

fn aborted(completed_calls: usize, e: impl Into<ExperimentError>) -> ExperimentError {
    ExperimentError::Aborted {
        completed_calls,
        source: Box::new(e.into()),
    }
}

/// Runs the configured protocol against `responder`, appending every parsed
/// response to `sink` as it arrives. Calls are strictly sequential with the
/// configured delay between consecutive calls. On a failed call the
/// transcript is flushed up to that point and the run aborts.
pub fn run_experiment(
    config: &ExperimentConfig,
    responder: &mut dyn Responder,
    sink: &mut dyn Write,
) -> Result<ExperimentResult, ExperimentError> {
    config.validate()?;
    let schedule = config.schedule();
    let model_id = responder.model_id();
    let seed = responder.seed();
    let max_output_tokens = config.output_tokens();
    let delay = Duration::from_millis(config.inter_call_delay_ms);
    let few_shot = config.mode == SamplingMode::FewShot;

    let mut writer = TranscriptWriter::new(sink);
    let mut records = Vec::new();
    let mut warnings = Vec::new();

    for (done, call) in schedule.calls.iter().enumerate() {
        if done > 0 && !delay.is_zero() {
            thread::sleep(delay);
        }
        let prompt = &config.prompts[call.prompt_index];
        let prompt_text = if few_shot {
            config.few_shot_prompt(&prompt.prompt_text)
        } else {
            prompt.prompt_text.clone()
        };
        let request = SourceRequest {
            prompt_id: &prompt.prompt_id,
            prompt_text: &prompt_text,
            temperature: config.temperature,
            max_output_tokens,
            decisions_requested: if few_shot { config.batch_size } else { 1 },
        };
        let reply = match responder.respond(&request) {
            Ok(r) => r,
            Err(e) => {
                let _ = writer.flush();
                return Err(aborted(done, e));
            }
        };
        let timestamp = now_millis();
        let latency_ms = reply.latency.as_millis() as u64;

        let parsed: Vec<_> = match call.batch_index {
            Some(batch_index) => parse_few_shot(&reply.raw_text)
                .into_iter()
                .enumerate()
                .map(|(pos, p)| {
                    (
                        Some(BatchSlot {
                            batch_index,
                            position_in_batch: pos as u64,
                        }),
                        p,
                    )
                })
                .collect(),
            None => vec![(None, parse_decision(&reply.raw_text))],
        };
        if parsed.is_empty() {
            warnings.push(format!(
                "call {} ({} batch {}) returned no tokens",
                call.call_index,
                prompt.prompt_id,
                call.batch_index.unwrap_or(0)
            ));
        }
        for (slot, parsed) in parsed {
            let record = ResponseRecord {
                experiment_id: config.experiment_id.clone(),
                model_id: model_id.clone(),
                prompt_id: prompt.prompt_id.clone(),
                prompt_text: prompt_text.clone(),
                call_index: call.call_index,
                slot,
                temperature: config.temperature,
                parsed,
                timestamp,
                latency_ms,
                seed,
            };
            if let Err(e) = writer.append(&record) {
                return Err(aborted(done, e));
            }
            records.push(record);
        }
    }
    writer.flush()?;

    let options = AnalysisOptions::from_config(config);
    let prompts = analyze_records(&records, &options)?;
    for p in &prompts {
        for b in p.batches.iter().filter(|b| b.length_mismatch) {
            warnings.push(format!(
                "{} batch {}: {} valid decisions, {} requested",
                p.prompt_id,
                b.batch_index,
                b.len(),
                config.batch_size
            ));
        }
    }
    Ok(ExperimentResult {
        experiment_id: config.experiment_id.clone(),
        model_id,
        mode: config.mode,
        temperature: config.temperature,
        alpha: config.alpha,
        calls: schedule.calls.len(),
        records: records.len(),
        prompts,
        warnings,
        transcript_path: None,
    })
}

fn require_mode(config: &ExperimentConfig, mode: SamplingMode) -> Result<(), ExperimentError> {
    if config.mode == mode {
        Ok(())
    } else {
        Err(ExperimentError::Config(format!(
            "expected a {mode} configuration, got {}",
            config.mode
        )))
    }
}

pub fn run_one_shot(
    config: &ExperimentConfig,
    responder: &mut dyn Responder,
    sink: &mut dyn Write,
) -> Result<ExperimentResult, ExperimentError> {
    require_mode(config, SamplingMode::OneShot)?;
    run_experiment(config, responder, sink)
}

pub fn run_few_shot(
    config: &ExperimentConfig,
    responder: &mut dyn Responder,
    sink: &mut dyn Write,
) -> Result<ExperimentResult, ExperimentError> {
    require_mode(config, SamplingMode::FewShot)?;
    run_experiment(config, responder, sink)
}

/// The statistical battery for every (prompt, mode) stream in `records`, in
/// order of first appearance. Tests a stream is too short for are left out
/// with a note instead of failing the whole analysis.
pub fn analyze_records(
    records: &[ResponseRecord],
    options: &AnalysisOptions,
) -> Result<Vec<PromptResult>, ExperimentError> {
    if records.is_empty() {
        return Err(ExperimentError::EmptyTranscript);
    }
    crate::stats::check_alpha(options.alpha)?;
    let mut streams: Vec<(PromptId, SamplingMode)> = Vec::new();
    for r in records {
        let key = (r.prompt_id.clone(), r.mode());
        if !streams.contains(&key) {
            streams.push(key);
        }
    }
    streams
        .into_iter()
        .map(|(prompt_id, mode)| analyze_stream(records, prompt_id, mode, options))
        .collect()
}

fn analyze_stream(
    records: &[ResponseRecord],
    prompt_id: PromptId,
    mode: SamplingMode,
    options: &AnalysisOptions,
) -> Result<PromptResult, ExperimentError> {
    let filter = RecordFilter::new(prompt_id.clone(), mode);
    let sequence = sequence_from_records(records, &filter);
    let mut notes = Vec::new();

    let mut batches = Vec::new();
    let mut pooled_pairs = TransitionCounts::default();
    if mode == SamplingMode::FewShot {
        let indices: BTreeSet<u64> = records
            .iter()
            .filter(|r| filter.matches(r))
            .filter_map(ResponseRecord::batch_index)
            .collect();
        for b in indices {
            let seq = sequence_from_records(records, &filter.clone().batch(b));
            pooled_pairs = pooled_pairs + transition_counts(&seq);
            batches.push(analyze_batch(b, &seq, options)?);
        }
    }

    let (yes, no) = (sequence.yes_count() as u64, sequence.no_count() as u64);
    let uniformity = if yes + no > 0 {
        Some(chi_square_uniform(yes, no, options.alpha)?)
    } else {
        notes.push("no valid decisions; uniformity not tested".to_string());
        None
    };

    let markov = match mode {
        SamplingMode::OneShot if sequence.len() >= 2 => {
            Some(markov_independence_test(&sequence, options.alpha)?)
        }
        SamplingMode::FewShot if pooled_pairs.total() > 0 => Some(markov_test_from_counts(
            pooled_pairs,
            yes,
            yes + no,
            options.alpha,
        )?),
        _ => {
            notes.push("fewer than two consecutive decisions; independence not tested".to_string());
            None
        }
    };

    let recency = if sequence.len() >= 2 {
        Some(recency_analysis(&sequence, options.w_max, options.run_mode)?)
    } else {
        None
    };

    Ok(PromptResult {
        prompt_id,
        mode,
        yes_count: yes,
        no_count: no,
        invalid_count: sequence.excluded_invalid_count as u64,
        uniformity,
        markov,
        recency,
        batches,
        notes,
    })
}

fn analyze_batch(
    batch_index: u64,
    seq: &BinarySequence,
    options: &AnalysisOptions,
) -> Result<BatchResult, ExperimentError> {
    let (yes, no) = (seq.yes_count() as u64, seq.no_count() as u64);
    Ok(BatchResult {
        batch_index,
        yes_count: yes,
        no_count: no,
        invalid_count: seq.excluded_invalid_count as u64,
        length_mismatch: options
            .expected_batch_size
            .is_some_and(|n| n != seq.len()),
        uniformity: if yes + no > 0 {
            Some(chi_square_uniform(yes, no, options.alpha)?)
        } else {
            None
        },
        markov: if seq.len() >= 2 {
            Some(markov_independence_test(seq, options.alpha)?)
        } else {
            None
        },
    })
}

/// Rebuilds an experiment summary from a transcript alone.
pub fn summarize_records(
    records: &[ResponseRecord],
    options: &AnalysisOptions,
) -> Result<ExperimentResult, ExperimentError> {
    let prompts = analyze_records(records, options)?;
    let first = &records[0];
    let calls: BTreeMap<(u64, &str), ()> = records
        .iter()
        .map(|r| ((r.call_index, r.experiment_id.as_str()), ()))
        .collect();
    Ok(ExperimentResult {
        experiment_id: first.experiment_id.clone(),
        model_id: first.model_id.clone(),
        mode: first.mode(),
        temperature: first.temperature,
        alpha: options.alpha,
        calls: calls.len(),
        records: records.len(),
        prompts,
        warnings: Vec::new(),
        transcript_path: None,
    })
}
