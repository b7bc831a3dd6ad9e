use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ur;

use super::{check_alpha, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub degrees_of_freedom: u32,
    pub p_value: f64,
    pub alpha: f64,
    pub reject_null: bool,
}

impl ChiSquareResult {
    pub(crate) fn new(statistic: f64, degrees_of_freedom: u32, alpha: f64) -> Self {
        let p_value = chi_square_p_value(statistic, degrees_of_freedom);
        ChiSquareResult {
            statistic,
            degrees_of_freedom,
            p_value,
            alpha,
            reject_null: p_value < alpha,
        }
    }
}

/// Upper-tail probability of the chi-square distribution, `Q(df/2, x/2)`.
pub fn chi_square_p_value(statistic: f64, df: u32) -> f64 {
    assert!(df > 0, "chi-square needs at least one degree of freedom");
    if statistic.is_nan() {
        return f64::NAN;
    }
    if statistic <= 0.0 {
        return 1.0;
    }
    if statistic.is_infinite() {
        return 0.0;
    }
    gamma_ur(f64::from(df) / 2.0, statistic / 2.0).clamp(0.0, 1.0)
}

/// Pearson goodness-of-fit test of Yes/No counts against a fair coin, df = 1.
pub fn chi_square_uniform(
    yes_count: u64,
    no_count: u64,
    alpha: f64,
) -> Result<ChiSquareResult, StatsError> {
    check_alpha(alpha)?;
    let n = yes_count + no_count;
    if n == 0 {
        return Err(StatsError::EmptySample);
    }
    // Σ (O - E)² / E with E = n/2 reduces to (yes - no)² / n.
    let diff = yes_count as f64 - no_count as f64;
    let statistic = diff * diff / n as f64;
    Ok(ChiSquareResult::new(statistic, 1, alpha))
}
