//! Where decisions come from: synthetic samplers with known properties,
//! replayed transcripts, imported true-random files, and the parsers that
//! turn model text into decisions.

mod boltzmann;
mod external;
mod markov_chain;
mod parse;
mod rng;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::client::EndpointConfig;
use crate::types::{PromptId, SamplingMode};

pub use boltzmann::{boltzmann_probability, sample_boltzmann, BoltzmannParams};
pub use external::{format_sequence_file, import_external_random, parse_external_random};
pub use markov_chain::{sample_markov_chain, MarkovChainParams};
pub use parse::{parse_decision, parse_few_shot};
pub use rng::{derive_seed, DecisionRng};

#[derive(Debug, Error)]
pub enum SourceError {
    #[error("temperature must be positive and finite, got {0}")]
    InvalidTemperature(f64),
    #[error("logits must be finite")]
    NonFiniteLogits,
    #[error("{name} must lie in [0, 1], got {value}")]
    InvalidProbability { name: &'static str, value: f64 },
    #[error("{0}")]
    InvalidParameter(String),
    #[error("line {line}, token {token_index} ({token:?}): {reason}")]
    BadSequenceToken {
        line: usize,
        token_index: usize,
        token: String,
        reason: String,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Declarative description of a decision source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SourceKind {
    /// A chat-completions endpoint.
    Live(EndpointConfig),
    Boltzmann(BoltzmannParams),
    MarkovChain(MarkovChainParams),
    /// Raw responses taken from an existing transcript, in order.
    Replay {
        transcript: PathBuf,
        #[serde(default)]
        prompt_id: Option<PromptId>,
        #[serde(default)]
        mode: Option<SamplingMode>,
    },
    /// Decisions read from a true-random sequence file.
    ExternalRandom { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    #[serde(flatten)]
    pub kind: SourceKind,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl SourceSpec {
    pub fn new(kind: SourceKind) -> Self {
        SourceSpec { kind, seed: None }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn validate(&self) -> Result<(), SourceError> {
        match &self.kind {
            SourceKind::Boltzmann(p) => p.validate(),
            SourceKind::MarkovChain(p) => p.validate(),
            SourceKind::Live(cfg) => cfg
                .validate()
                .map_err(|e| SourceError::InvalidParameter(e.to_string())),
            SourceKind::Replay { .. } | SourceKind::ExternalRandom { .. } => Ok(()),
        }
    }

    pub fn is_live(&self) -> bool {
        matches!(self.kind, SourceKind::Live(_))
    }

    /// Model identifier recorded in transcripts.
    pub fn model_id(&self) -> String {
        match &self.kind {
            SourceKind::Live(cfg) => cfg.model_id.clone(),
            SourceKind::Boltzmann(p) => format!("boltzmann{:?}", p.logits),
            SourceKind::MarkovChain(p) => format!(
                "markov(p0={},pyy={},pyn={})",
                p.p_initial_yes, p.p_yes_given_yes, p.p_yes_given_no
            ),
            SourceKind::Replay { transcript, .. } => format!("replay:{}", transcript.display()),
            SourceKind::ExternalRandom { path } => format!("external:{}", path.display()),
        }
    }
}
