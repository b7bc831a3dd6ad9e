//! The statistical battery: uniformity (chi-square goodness of fit), Markov
//! independence of adjacent decisions, switching-rate recency analysis and
//! Welch's two-sample t-test.
//!
//! Everything here is a pure function of its inputs.

mod chi_square;
mod markov;
mod recency;
mod ttest;

use thiserror::Error;

pub use chi_square::{chi_square_p_value, chi_square_uniform, ChiSquareResult};
pub use markov::{
    markov_independence_test, markov_test_from_counts, pearson_2x2, transition_counts,
    MarkovTestResult, TransitionCounts,
};
pub use recency::{
    baseline_switch_rate, recency_analysis, recency_effect, switch_indicators, window_switch_rate,
    RecencyAnalysis, RunMode, WindowRate, WindowRecency,
};
pub use ttest::{two_sample_t_test, TTestResult};

/// Significance level used throughout unless configured otherwise.
pub const DEFAULT_ALPHA: f64 = 0.05;

/// Largest run window analysed by default.
pub const DEFAULT_MAX_WINDOW: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("empty sample")]
    EmptySample,
    #[error("sequence too short: need at least {needed} decisions, got {got}")]
    SequenceTooShort { needed: usize, got: usize },
    #[error("window too large for sequence: w = {window}, length = {len}")]
    WindowTooLarge { window: usize, len: usize },
    #[error("insufficient sample: need at least 2 values, got {got}")]
    InsufficientSample { got: usize },
    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
}

pub(crate) fn check_alpha(alpha: f64) -> Result<(), StatsError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(StatsError::InvalidAlpha(alpha))
    }
}
