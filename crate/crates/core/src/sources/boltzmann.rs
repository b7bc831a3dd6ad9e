use serde::{Deserialize, Serialize};

use super::{DecisionRng, SourceError};
use crate::types::{BinarySequence, Decision};

/// Fixed logits sampled through a temperature-scaled softmax.
///
/// For the binary task index 0 is Yes and index 1 is No.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoltzmannParams {
    pub logits: Vec<f64>,
    pub temperature: f64,
}

impl BoltzmannParams {
    pub fn binary(z_yes: f64, z_no: f64, temperature: f64) -> Self {
        BoltzmannParams {
            logits: vec![z_yes, z_no],
            temperature,
        }
    }

    pub fn validate(&self) -> Result<(), SourceError> {
        if self.logits.len() != 2 {
            return Err(SourceError::InvalidParameter(format!(
                "binary sampler needs exactly 2 logits (yes, no), got {}",
                self.logits.len()
            )));
        }
        boltzmann_probability(&self.logits, self.temperature).map(|_| ())
    }

    pub fn p_yes(&self) -> Result<f64, SourceError> {
        self.validate()?;
        Ok(boltzmann_probability(&self.logits, self.temperature)?[0])
    }
}

/// `exp(z_i / T) / Σ_j exp(z_j / T)`, evaluated after subtracting the largest
/// logit so nothing overflows.
pub fn boltzmann_probability(logits: &[f64], temperature: f64) -> Result<Vec<f64>, SourceError> {
    if temperature.is_nan() || temperature <= 0.0 || temperature.is_infinite() {
        return Err(SourceError::InvalidTemperature(temperature));
    }
    if logits.len() < 2 {
        return Err(SourceError::InvalidParameter(format!(
            "need at least 2 logits, got {}",
            logits.len()
        )));
    }
    if logits.iter().any(|z| !z.is_finite()) {
        return Err(SourceError::NonFiniteLogits);
    }
    let beta = 1.0 / temperature;
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logits.iter().map(|z| (beta * (z - max)).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// `n` independent draws with P(Yes) from the softmax; deterministic per seed.
pub fn sample_boltzmann(
    params: &BoltzmannParams,
    rng: &mut DecisionRng,
    n: usize,
) -> Result<BinarySequence, SourceError> {
    let p_yes = params.p_yes()?;
    Ok((0..n)
        .map(|_| if rng.bernoulli(p_yes) { Decision::Yes } else { Decision::No })
        .collect())
}
