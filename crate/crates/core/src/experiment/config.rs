use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::client::{validate_temperature, FEW_SHOT_MAX_TOKENS, ONE_SHOT_MAX_TOKENS};
use crate::sources::SourceSpec;
use crate::stats::{RunMode, DEFAULT_ALPHA, DEFAULT_MAX_WINDOW};
use crate::types::{PromptId, SamplingMode};

pub const Q1_TEXT: &str = "yes or no";
pub const Q2_TEXT: &str = "Answer randomly, yes or no";
pub const DEFAULT_FEW_SHOT_TEMPLATE: &str =
    "Respond with exactly {batch_size} comma-separated answers, each either yes or no. {prompt_text}";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub prompt_id: PromptId,
    pub prompt_text: String,
}

impl PromptSpec {
    pub fn new(prompt_id: PromptId, prompt_text: impl Into<String>) -> Self {
        PromptSpec {
            prompt_id,
            prompt_text: prompt_text.into(),
        }
    }
}

pub fn default_prompts() -> Vec<PromptSpec> {
    vec![
        PromptSpec::new(PromptId::Q1, Q1_TEXT),
        PromptSpec::new(PromptId::Q2, Q2_TEXT),
    ]
}

fn default_mode() -> SamplingMode {
    SamplingMode::OneShot
}
fn default_samples() -> usize {
    100
}
fn default_batch_size() -> usize {
    100
}
fn default_batches() -> usize {
    10
}
fn default_delay_ms() -> u64 {
    1000
}
fn default_temperature() -> f64 {
    1.0
}
fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}
fn default_w_max() -> usize {
    DEFAULT_MAX_WINDOW
}
fn default_template() -> String {
    DEFAULT_FEW_SHOT_TEMPLATE.to_string()
}

/// Everything needed to run one collection protocol. Loaded from a JSON
/// document whose keys are these field names; omitted keys take the
/// defaults (100 samples per prompt, 10 batches of 100, 1 s between calls,
/// T = 1, α = 0.05, windows up to 5).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment_id: String,
    pub source: SourceSpec,
    #[serde(default = "default_prompts")]
    pub prompts: Vec<PromptSpec>,
    #[serde(default = "default_mode")]
    pub mode: SamplingMode,
    #[serde(default = "default_samples")]
    pub samples_per_prompt: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_batches")]
    pub batches: usize,
    #[serde(default = "default_delay_ms")]
    pub inter_call_delay_ms: u64,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_w_max")]
    pub recency_w_max: usize,
    #[serde(default)]
    pub run_mode: RunMode,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_template")]
    pub few_shot_template: String,
    #[serde(default)]
    pub max_output_tokens: Option<u32>,
}

impl ExperimentConfig {
    pub fn new(experiment_id: impl Into<String>, source: SourceSpec) -> Self {
        ExperimentConfig {
            experiment_id: experiment_id.into(),
            source,
            prompts: default_prompts(),
            mode: default_mode(),
            samples_per_prompt: default_samples(),
            batch_size: default_batch_size(),
            batches: default_batches(),
            inter_call_delay_ms: default_delay_ms(),
            temperature: default_temperature(),
            alpha: default_alpha(),
            recency_w_max: default_w_max(),
            run_mode: RunMode::default(),
            seed: None,
            few_shot_template: default_template(),
            max_output_tokens: None,
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self, ExperimentError> {
        serde_json::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn from_json_file(path: &Path) -> Result<Self, ExperimentError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::Config(m.to_string()));
        if self.experiment_id.is_empty() {
            return bad("experiment_id must not be empty");
        }
        if self.prompts.is_empty() {
            return bad("at least one prompt is required");
        }
        validate_temperature(self.temperature)?;
        if self.samples_per_prompt == 0 {
            return bad("samples_per_prompt must be positive");
        }
        if self.mode == SamplingMode::FewShot && (self.batch_size == 0 || self.batches == 0) {
            return bad("batch_size and batches must be positive");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if self.recency_w_max == 0 {
            return bad("recency_w_max must be at least 1");
        }
        self.source.validate()?;
        Ok(())
    }

    /// The few-shot prompt sent for `prompt_text`.
    pub fn few_shot_prompt(&self, prompt_text: &str) -> String {
        self.few_shot_template
            .replace("{batch_size}", &self.batch_size.to_string())
            .replace("{prompt_text}", prompt_text)
    }

    pub fn output_tokens(&self) -> u32 {
        self.max_output_tokens.unwrap_or(match self.mode {
            SamplingMode::OneShot => ONE_SHOT_MAX_TOKENS,
            SamplingMode::FewShot => FEW_SHOT_MAX_TOKENS,
        })
    }

    /// Ordered call plan. One-shot alternates prompts call by call; few-shot
    /// alternates prompts batch by batch.
    pub fn schedule(&self) -> CallSchedule {
        let rounds = match self.mode {
            SamplingMode::OneShot => self.samples_per_prompt,
            SamplingMode::FewShot => self.batches,
        };
        let mut calls = Vec::with_capacity(rounds * self.prompts.len());
        for round in 0..rounds {
            for prompt_index in 0..self.prompts.len() {
                calls.push(PlannedCall {
                    call_index: calls.len() as u64,
                    prompt_index,
                    batch_index: (self.mode == SamplingMode::FewShot).then_some(round as u64),
                });
            }
        }
        CallSchedule {
            mode: self.mode,
            calls,
            prompt_ids: self.prompts.iter().map(|p| p.prompt_id.clone()).collect(),
            delay_ms: self.inter_call_delay_ms,
            batch_size: (self.mode == SamplingMode::FewShot).then_some(self.batch_size),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlannedCall {
    pub call_index: u64,
    pub prompt_index: usize,
    pub batch_index: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CallSchedule {
    pub mode: SamplingMode,
    pub calls: Vec<PlannedCall>,
    pub prompt_ids: Vec<PromptId>,
    pub delay_ms: u64,
    pub batch_size: Option<usize>,
}

impl fmt::Display for CallSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prompts: Vec<&str> = self.prompt_ids.iter().map(PromptId::as_str).collect();
        write!(
            f,
            "{} calls, alternating {}, {}ms delay",
            self.calls.len(),
            prompts.join("/"),
            self.delay_ms
        )?;
        if let Some(b) = self.batch_size {
            write!(f, ", {b} decisions per call")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sources::{BoltzmannParams, SourceKind};

    fn fair() -> SourceSpec {
        SourceSpec::new(SourceKind::Boltzmann(BoltzmannParams::binary(0.0, 0.0, 1.0)))
    }

    #[test]
    fn defaults_from_minimal_json() {
        let cfg = ExperimentConfig::from_json_str(
            r#"{"experiment_id": "e1", "source": {"kind": "boltzmann", "logits": [0, 0], "temperature": 1}}"#,
        )
        .unwrap();
        assert_eq!(cfg.samples_per_prompt, 100);
        assert_eq!(cfg.batches, 10);
        assert_eq!(cfg.inter_call_delay_ms, 1000);
        assert_eq!(cfg.prompts, default_prompts());
        assert_eq!(cfg.mode, SamplingMode::OneShot);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn one_shot_schedule_alternates() {
        let cfg = ExperimentConfig::new("e", fair());
        let s = cfg.schedule();
        assert_eq!(s.calls.len(), 200);
        for c in &s.calls {
            assert_eq!(c.prompt_index as u64, c.call_index % 2);
            assert!(c.batch_index.is_none());
        }
        assert_eq!(s.to_string(), "200 calls, alternating Q1/Q2, 1000ms delay");
    }

    #[test]
    fn few_shot_schedule() {
        let mut cfg = ExperimentConfig::new("e", fair());
        cfg.mode = SamplingMode::FewShot;
        let s = cfg.schedule();
        assert_eq!(s.calls.len(), 20);
        let q1_batches: Vec<_> = s
            .calls
            .iter()
            .filter(|c| c.prompt_index == 0)
            .map(|c| c.batch_index.unwrap())
            .collect();
        assert_eq!(q1_batches, (0..10).collect::<Vec<_>>());
        assert_eq!(cfg.output_tokens(), 2048);
    }

    #[test]
    fn template_is_filled() {
        let cfg = ExperimentConfig::new("e", fair());
        assert_eq!(
            cfg.few_shot_prompt(Q1_TEXT),
            "Respond with exactly 100 comma-separated answers, each either yes or no. yes or no"
        );
    }

    #[test]
    fn rejects_hot_temperature() {
        let mut cfg = ExperimentConfig::new("e", fair());
        cfg.temperature = 2.5;
        assert!(matches!(cfg.validate(), Err(ExperimentError::Client(_))));
    }
}
