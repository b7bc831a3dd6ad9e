use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::types::{BinarySequence, Decision};

/// How a position is judged to "follow a run of length w".
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    /// The w preceding elements are equal.
    #[default]
    AtLeast,
    /// The w preceding elements are equal and the run does not extend further left.
    Exact,
}

impl RunMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RunMode::AtLeast => "at-least",
            RunMode::Exact => "exact",
        }
    }
}

impl std::str::FromStr for RunMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "at-least" => Ok(RunMode::AtLeast),
            "exact" => Ok(RunMode::Exact),
            other => Err(format!("unknown run mode {other:?} (expected at-least or exact)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowRate {
    pub switch_rate: Option<f64>,
    pub qualifying_positions: usize,
    pub switches: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowRecency {
    pub switch_rate: Option<f64>,
    pub qualifying_positions: usize,
    pub recency_effect: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecencyAnalysis {
    pub baseline_rate: f64,
    pub run_mode: RunMode,
    pub per_window: BTreeMap<usize, WindowRecency>,
}

fn require_len(seq: &BinarySequence, needed: usize) -> Result<(), StatsError> {
    if seq.len() < needed {
        Err(StatsError::SequenceTooShort {
            needed,
            got: seq.len(),
        })
    } else {
        Ok(())
    }
}

fn check_window(seq: &BinarySequence, w: usize) -> Result<(), StatsError> {
    if w < 1 || seq.len() < w + 1 {
        Err(StatsError::WindowTooLarge {
            window: w,
            len: seq.len(),
        })
    } else {
        Ok(())
    }
}

/// Fraction of adjacent pairs that differ.
pub fn baseline_switch_rate(seq: &BinarySequence) -> Result<f64, StatsError> {
    require_len(seq, 2)?;
    let switches = seq.items.windows(2).filter(|p| p[0] != p[1]).count();
    Ok(switches as f64 / (seq.len() - 1) as f64)
}

fn qualifies(items: &[Decision], i: usize, w: usize, mode: RunMode) -> bool {
    let run = &items[i - w..i];
    if run.iter().any(|&d| d != run[0]) {
        return false;
    }
    match mode {
        RunMode::AtLeast => true,
        RunMode::Exact => i == w || items[i - w - 1] != run[0],
    }
}

/// Switch indicator (1.0 = differs from predecessor) at every position that
/// follows a run of length `w`, in sequence order.
pub fn switch_indicators(
    seq: &BinarySequence,
    w: usize,
    run_mode: RunMode,
) -> Result<Vec<f64>, StatsError> {
    check_window(seq, w)?;
    let items = seq.as_slice();
    Ok((w..items.len())
        .filter(|&i| qualifies(items, i, w, run_mode))
        .map(|i| if items[i] != items[i - 1] { 1.0 } else { 0.0 })
        .collect())
}

/// Switching rate over the positions that follow a run of length `w`.
pub fn window_switch_rate(
    seq: &BinarySequence,
    w: usize,
    run_mode: RunMode,
) -> Result<WindowRate, StatsError> {
    let indicators = switch_indicators(seq, w, run_mode)?;
    let qualifying = indicators.len();
    let switches = indicators.iter().filter(|&&x| x == 1.0).count();
    Ok(WindowRate {
        switch_rate: (qualifying > 0).then(|| switches as f64 / qualifying as f64),
        qualifying_positions: qualifying,
        switches,
    })
}

/// Window switching rate minus the baseline rate. Positive values mean the
/// sequence switches more than usual after runs (negative recency).
pub fn recency_effect(
    seq: &BinarySequence,
    w: usize,
    run_mode: RunMode,
) -> Result<Option<f64>, StatsError> {
    let rate = window_switch_rate(seq, w, run_mode)?;
    let baseline = baseline_switch_rate(seq)?;
    Ok(rate.switch_rate.map(|r| r - baseline))
}

/// Baseline plus per-window results for w = 1..=w_max. Windows the sequence
/// is too short for are reported with absent rates rather than as errors.
pub fn recency_analysis(
    seq: &BinarySequence,
    w_max: usize,
    run_mode: RunMode,
) -> Result<RecencyAnalysis, StatsError> {
    let baseline_rate = baseline_switch_rate(seq)?;
    let mut per_window = BTreeMap::new();
    for w in 1..=w_max {
        let entry = match window_switch_rate(seq, w, run_mode) {
            Ok(rate) => WindowRecency {
                switch_rate: rate.switch_rate,
                qualifying_positions: rate.qualifying_positions,
                recency_effect: rate.switch_rate.map(|r| r - baseline_rate),
            },
            Err(_) => WindowRecency {
                switch_rate: None,
                qualifying_positions: 0,
                recency_effect: None,
            },
        };
        per_window.insert(w, entry);
    }
    Ok(RecencyAnalysis {
        baseline_rate,
        run_mode,
        per_window,
    })
}
