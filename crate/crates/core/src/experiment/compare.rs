use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::stats::{
    recency_analysis, switch_indicators, two_sample_t_test, RecencyAnalysis, RunMode, StatsError,
    TTestResult,
};
use crate::types::BinarySequence;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowComparison {
    pub window: usize,
    pub qualifying_a: usize,
    pub qualifying_b: usize,
    /// Absent when either side has too few qualifying positions to test.
    pub test: Option<TTestResult>,
    pub not_testable_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecencyComparison {
    pub recency_a: RecencyAnalysis,
    pub recency_b: RecencyAnalysis,
    pub windows: Vec<WindowComparison>,
}

impl RecencyComparison {
    pub fn any_rejection(&self) -> bool {
        self.windows
            .iter()
            .any(|w| w.test.as_ref().is_some_and(|t| t.reject_null))
    }
}

fn indicators(seq: &BinarySequence, w: usize, mode: RunMode) -> Vec<f64> {
    // A window longer than the sequence simply has no qualifying positions.
    switch_indicators(seq, w, mode).unwrap_or_default()
}

/// Welch t-tests of post-run switch indicators, window by window. A window
/// is testable when both sequences have at least two qualifying positions.
pub fn compare_recency(
    seq_a: &BinarySequence,
    seq_b: &BinarySequence,
    w_max: usize,
    alpha: f64,
    run_mode: RunMode,
) -> Result<RecencyComparison, ExperimentError> {
    crate::stats::check_alpha(alpha)?;
    for s in [seq_a, seq_b] {
        if s.len() < 2 {
            return Err(StatsError::SequenceTooShort {
                needed: 2,
                got: s.len(),
            }
            .into());
        }
    }
    let recency_a = recency_analysis(seq_a, w_max, run_mode)?;
    let recency_b = recency_analysis(seq_b, w_max, run_mode)?;
    let mut windows = Vec::with_capacity(w_max);
    for w in 1..=w_max {
        let a = indicators(seq_a, w, run_mode);
        let b = indicators(seq_b, w, run_mode);
        let (test, reason) = if a.len() < 2 || b.len() < 2 {
            (
                None,
                Some(format!(
                    "needs two qualifying positions per sequence, have {} and {}",
                    a.len(),
                    b.len()
                )),
            )
        } else {
            (Some(two_sample_t_test(&a, &b, alpha)?), None)
        };
        windows.push(WindowComparison {
            window: w,
            qualifying_a: a.len(),
            qualifying_b: b.len(),
            test,
            not_testable_reason: reason,
        });
    }
    Ok(RecencyComparison {
        recency_a,
        recency_b,
        windows,
    })
}
