use std::ops::Add;

use serde::{Deserialize, Serialize};

use super::{check_alpha, ChiSquareResult, StatsError};
use crate::types::{BinarySequence, Decision};

/// Counts of ordered adjacent pairs (previous → current).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionCounts {
    pub n_yy: u64,
    pub n_yn: u64,
    pub n_ny: u64,
    pub n_nn: u64,
}

impl TransitionCounts {
    pub fn total(&self) -> u64 {
        self.n_yy + self.n_yn + self.n_ny + self.n_nn
    }

    /// Pairs whose previous element was Yes.
    pub fn from_yes(&self) -> u64 {
        self.n_yy + self.n_yn
    }

    pub fn from_no(&self) -> u64 {
        self.n_ny + self.n_nn
    }

    pub fn to_yes(&self) -> u64 {
        self.n_yy + self.n_ny
    }

    pub fn to_no(&self) -> u64 {
        self.n_yn + self.n_nn
    }

    fn record(&mut self, prev: Decision, cur: Decision) {
        match (prev, cur) {
            (Decision::Yes, Decision::Yes) => self.n_yy += 1,
            (Decision::Yes, Decision::No) => self.n_yn += 1,
            (Decision::No, Decision::Yes) => self.n_ny += 1,
            (Decision::No, Decision::No) => self.n_nn += 1,
        }
    }
}

impl Add for TransitionCounts {
    type Output = TransitionCounts;

    fn add(self, o: TransitionCounts) -> TransitionCounts {
        TransitionCounts {
            n_yy: self.n_yy + o.n_yy,
            n_yn: self.n_yn + o.n_yn,
            n_ny: self.n_ny + o.n_ny,
            n_nn: self.n_nn + o.n_nn,
        }
    }
}

impl std::iter::Sum for TransitionCounts {
    fn sum<I: Iterator<Item = TransitionCounts>>(iter: I) -> Self {
        iter.fold(TransitionCounts::default(), Add::add)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovTestResult {
    pub p_yes: f64,
    pub p_yes_given_yes: Option<f64>,
    pub counts: TransitionCounts,
    pub chi_square: Option<ChiSquareResult>,
    pub degenerate: bool,
    pub degeneracy_reason: Option<String>,
}

impl MarkovTestResult {
    /// Rejection of independence; `None` when the table is degenerate.
    pub fn reject_null(&self) -> Option<bool> {
        self.chi_square.map(|c| c.reject_null)
    }
}

pub fn transition_counts(seq: &BinarySequence) -> TransitionCounts {
    let mut counts = TransitionCounts::default();
    for pair in seq.items.windows(2) {
        counts.record(pair[0], pair[1]);
    }
    counts
}

/// Pearson statistic of the 2×2 previous × current table, without continuity
/// correction. `None` when any row or column marginal is zero.
pub fn pearson_2x2(c: &TransitionCounts) -> Option<f64> {
    let margins = [c.from_yes(), c.from_no(), c.to_yes(), c.to_no()];
    if margins.contains(&0) {
        return None;
    }
    let n = c.total() as f64;
    let ad = c.n_yy as f64 * c.n_nn as f64;
    let bc = c.n_yn as f64 * c.n_ny as f64;
    let denom = margins.iter().map(|&m| m as f64).product::<f64>();
    Some(n * (ad - bc).powi(2) / denom)
}

/// Tests whether each decision is independent of the one before it.
pub fn markov_independence_test(
    seq: &BinarySequence,
    alpha: f64,
) -> Result<MarkovTestResult, StatsError> {
    if seq.len() < 2 {
        return Err(StatsError::SequenceTooShort {
            needed: 2,
            got: seq.len(),
        });
    }
    markov_test_from_counts(
        transition_counts(seq),
        seq.yes_count() as u64,
        seq.len() as u64,
        alpha,
    )
}

/// Same test from already-tallied pairs, e.g. pooled over few-shot batches
/// without inventing transitions across batch boundaries.
pub fn markov_test_from_counts(
    counts: TransitionCounts,
    yes_count: u64,
    total: u64,
    alpha: f64,
) -> Result<MarkovTestResult, StatsError> {
    check_alpha(alpha)?;
    if counts.total() == 0 || total < 2 {
        return Err(StatsError::SequenceTooShort {
            needed: 2,
            got: total as usize,
        });
    }
    let p_yes = yes_count as f64 / total as f64;
    let p_yes_given_yes = match counts.from_yes() {
        0 => None,
        from_yes => Some(counts.n_yy as f64 / from_yes as f64),
    };
    let (chi_square, reason) = match pearson_2x2(&counts) {
        Some(stat) => (Some(ChiSquareResult::new(stat, 1, alpha)), None),
        None => (None, Some(degeneracy_reason(&counts))),
    };
    Ok(MarkovTestResult {
        p_yes,
        p_yes_given_yes,
        counts,
        degenerate: chi_square.is_none(),
        chi_square,
        degeneracy_reason: reason,
    })
}

fn degeneracy_reason(c: &TransitionCounts) -> String {
    let mut zero = Vec::new();
    if c.from_yes() == 0 {
        zero.push("no transitions from Yes");
    }
    if c.from_no() == 0 {
        zero.push("no transitions from No");
    }
    if c.to_yes() == 0 {
        zero.push("no transitions into Yes");
    }
    if c.to_no() == 0 {
        zero.push("no transitions into No");
    }
    format!("zero marginal in transition table: {}", zero.join(", "))
}
