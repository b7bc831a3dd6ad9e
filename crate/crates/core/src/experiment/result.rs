use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::stats::{ChiSquareResult, MarkovTestResult, RecencyAnalysis};
use crate::types::{PromptId, SamplingMode};

/// Analysis of one few-shot call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchResult {
    pub batch_index: u64,
    pub yes_count: u64,
    pub no_count: u64,
    pub invalid_count: u64,
    /// Set when the valid decisions differ in number from the batch size asked for.
    pub length_mismatch: bool,
    pub uniformity: Option<ChiSquareResult>,
    pub markov: Option<MarkovTestResult>,
}

impl BatchResult {
    pub fn len(&self) -> u64 {
        self.yes_count + self.no_count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn yes_percent(&self) -> Option<f64> {
        (!self.is_empty()).then(|| 100.0 * self.yes_count as f64 / self.len() as f64)
    }
}

/// Spread of the per-batch statistics of one prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterBatchSummary {
    pub batches: usize,
    pub mean_yes_percent: f64,
    pub mean_chi_square: f64,
    pub max_chi_square: f64,
    pub batches_rejecting_hp1: usize,
    pub batches_rejecting_hp2: usize,
    /// Batches whose transition table has a zero marginal (no HP2 verdict).
    pub batches_degenerate_hp2: usize,
}

/// Battery for one prompt. Few-shot results pool the counts of all batches;
/// the pooled Markov table only contains pairs from within a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptResult {
    pub prompt_id: PromptId,
    pub mode: SamplingMode,
    pub yes_count: u64,
    pub no_count: u64,
    pub invalid_count: u64,
    pub uniformity: Option<ChiSquareResult>,
    pub markov: Option<MarkovTestResult>,
    pub recency: Option<RecencyAnalysis>,
    #[serde(default)]
    pub batches: Vec<BatchResult>,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl PromptResult {
    pub fn valid_count(&self) -> u64 {
        self.yes_count + self.no_count
    }

    pub fn p_yes(&self) -> Option<f64> {
        let n = self.valid_count();
        (n > 0).then(|| self.yes_count as f64 / n as f64)
    }

    /// Any HP1 rejection, pooled or per batch.
    pub fn rejects_uniformity(&self) -> bool {
        self.uniformity.is_some_and(|u| u.reject_null)
            || self
                .batches
                .iter()
                .any(|b| b.uniformity.is_some_and(|u| u.reject_null))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub experiment_id: String,
    pub model_id: String,
    pub mode: SamplingMode,
    pub temperature: f64,
    pub alpha: f64,
    pub calls: usize,
    pub records: usize,
    pub prompts: Vec<PromptResult>,
    #[serde(default)]
    pub warnings: Vec<String>,
    #[serde(default)]
    pub transcript_path: Option<String>,
}

impl ExperimentResult {
    pub fn prompt(&self, id: &PromptId) -> Option<&PromptResult> {
        self.prompts.iter().find(|p| &p.prompt_id == id)
    }

    pub fn any_uniformity_rejection(&self) -> bool {
        self.prompts.iter().any(PromptResult::rejects_uniformity)
    }
}

/// Means and maxima over a prompt's batches, with rejection tallies at the
/// alpha each batch was tested at.
pub fn inter_batch_summary(prompt: &PromptResult) -> Result<InterBatchSummary, ExperimentError> {
    if prompt.mode != SamplingMode::FewShot {
        return Err(ExperimentError::NotFewShot);
    }
    let batches = &prompt.batches;
    if batches.is_empty() {
        return Err(ExperimentError::NoBatches);
    }
    let percents: Vec<f64> = batches.iter().filter_map(BatchResult::yes_percent).collect();
    let chis: Vec<f64> = batches
        .iter()
        .filter_map(|b| b.uniformity.map(|u| u.statistic))
        .collect();
    let mean = |xs: &[f64]| {
        if xs.is_empty() {
            0.0
        } else {
            xs.iter().sum::<f64>() / xs.len() as f64
        }
    };
    Ok(InterBatchSummary {
        batches: batches.len(),
        mean_yes_percent: mean(&percents),
        mean_chi_square: mean(&chis),
        max_chi_square: chis.iter().copied().fold(0.0, f64::max),
        batches_rejecting_hp1: batches
            .iter()
            .filter(|b| b.uniformity.is_some_and(|u| u.reject_null))
            .count(),
        batches_rejecting_hp2: batches
            .iter()
            .filter(|b| b.markov.as_ref().and_then(|m| m.reject_null()) == Some(true))
            .count(),
        batches_degenerate_hp2: batches
            .iter()
            .filter(|b| b.markov.as_ref().is_some_and(|m| m.degenerate))
            .count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::chi_square_uniform;

    fn batch(i: u64, yes: u64, no: u64) -> BatchResult {
        BatchResult {
            batch_index: i,
            yes_count: yes,
            no_count: no,
            invalid_count: 0,
            length_mismatch: false,
            uniformity: Some(chi_square_uniform(yes, no, 0.05).unwrap()),
            markov: None,
        }
    }

    fn few_shot(batches: Vec<BatchResult>) -> PromptResult {
        PromptResult {
            prompt_id: PromptId::Q1,
            mode: SamplingMode::FewShot,
            yes_count: batches.iter().map(|b| b.yes_count).sum(),
            no_count: batches.iter().map(|b| b.no_count).sum(),
            invalid_count: 0,
            uniformity: None,
            markov: None,
            recency: None,
            batches,
            notes: vec![],
        }
    }

    #[test]
    fn identical_batches() {
        let p = few_shot((0..10).map(|i| batch(i, 52, 48)).collect());
        let s = inter_batch_summary(&p).unwrap();
        assert!((s.mean_yes_percent - 52.0).abs() < 1e-12);
        assert!((s.mean_chi_square - 0.16).abs() < 1e-12);
        assert!((s.max_chi_square - 0.16).abs() < 1e-12);
        assert_eq!(s.batches_rejecting_hp1, 0);
    }

    #[test]
    fn one_extreme_batch() {
        let mut bs: Vec<_> = (0..9).map(|i| batch(i, 50, 50)).collect();
        bs.push(batch(9, 90, 10));
        let s = inter_batch_summary(&few_shot(bs)).unwrap();
        assert_eq!(s.max_chi_square, 64.0);
        assert_eq!(s.batches_rejecting_hp1, 1);
    }

    #[test]
    fn wrong_mode_and_empty() {
        let mut p = few_shot(vec![]);
        assert!(matches!(inter_batch_summary(&p), Err(ExperimentError::NoBatches)));
        p.mode = SamplingMode::OneShot;
        assert!(matches!(inter_batch_summary(&p), Err(ExperimentError::NotFewShot)));
    }
}
