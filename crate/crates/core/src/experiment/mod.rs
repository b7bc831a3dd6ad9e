//! Collection protocols and their analysis.
//!
//! One-shot runs ask for one decision per call, alternating prompts call by
//! call; few-shot runs ask for a whole comma-separated batch per call. Both
//! stream every response into a transcript and then run the statistical
//! battery per prompt (and per batch for few-shot). Temperature sweeps repeat
//! the one-shot protocol across settings, and recency comparisons pit a
//! sequence against a true-random reference.

mod compare;
mod config;
mod report;
mod responder;
mod result;
mod runner;
mod sweep;

use thiserror::Error;

use crate::client::ClientError;
use crate::crawl::CrawlError;
use crate::sources::SourceError;
use crate::stats::StatsError;
use crate::transcript::TranscriptError;

pub use compare::{compare_recency, RecencyComparison, WindowComparison};
pub use config::{
    default_prompts, CallSchedule, ExperimentConfig, PlannedCall, PromptSpec,
    DEFAULT_FEW_SHOT_TEMPLATE, Q1_TEXT, Q2_TEXT,
};
pub use report::{format_p_value, render_report, ReportFormat, ReportItem};
pub use responder::{
    build_responder, BoltzmannResponder, LiveResponder, MarkovResponder, ReplayResponder, Responder,
    SequenceResponder, SourceReply, SourceRequest,
};
pub use result::{
    inter_batch_summary, BatchResult, ExperimentResult, InterBatchSummary, PromptResult,
};
pub use runner::{
    analyze_records, run_experiment, run_few_shot, run_one_shot, summarize_records,
    AnalysisOptions,
};
pub use sweep::{
    run_temperature_sweep, run_temperature_sweep_with, sweep_seed, write_sweep_plot, SweepResult,
    SweepRow, DEFAULT_TEMPERATURES,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error(transparent)]
    Source(#[from] SourceError),
    #[error(transparent)]
    Transcript(#[from] TranscriptError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Crawl(#[from] CrawlError),
    #[error("source exhausted: {0}")]
    SourceExhausted(String),
    #[error("aborted after {completed_calls} completed calls: {source}")]
    Aborted {
        completed_calls: usize,
        #[source]
        source: Box<ExperimentError>,
    },
    #[error("inter-batch requires few-shot")]
    NotFewShot,
    #[error("no batches")]
    NoBatches,
    #[error("no records to analyze")]
    EmptyTranscript,
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl ExperimentError {
    /// True when the failure came from the transport or the source rather
    /// than from the caller's input.
    pub fn is_runtime(&self) -> bool {
        match self {
            ExperimentError::Aborted { .. }
            | ExperimentError::SourceExhausted(_)
            | ExperimentError::Transcript(_)
            | ExperimentError::Io { .. } => true,
            ExperimentError::Client(e) => !matches!(
                e,
                ClientError::InvalidTemperature(_) | ClientError::Config(_) | ClientError::MissingApiKey(_)
            ),
            ExperimentError::Crawl(e) => !matches!(e, CrawlError::Stats(_)),
            _ => false,
        }
    }
}
