use serde::{Deserialize, Serialize};

use super::{DecisionRng, SourceError};
use crate::types::{BinarySequence, Decision};

/// First-order two-state chain with a known dependence structure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkovChainParams {
    pub p_initial_yes: f64,
    pub p_yes_given_yes: f64,
    pub p_yes_given_no: f64,
}

impl MarkovChainParams {
    pub fn validate(&self) -> Result<(), SourceError> {
        for (name, p) in [
            ("p_initial_yes", self.p_initial_yes),
            ("p_yes_given_yes", self.p_yes_given_yes),
            ("p_yes_given_no", self.p_yes_given_no),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SourceError::InvalidProbability { name, value: p });
            }
        }
        Ok(())
    }

    /// Next decision given the previous one (or the initial draw).
    pub fn step(&self, prev: Option<Decision>, rng: &mut DecisionRng) -> Decision {
        let p = match prev {
            None => self.p_initial_yes,
            Some(Decision::Yes) => self.p_yes_given_yes,
            Some(Decision::No) => self.p_yes_given_no,
        };
        if rng.bernoulli(p) {
            Decision::Yes
        } else {
            Decision::No
        }
    }
}

pub fn sample_markov_chain(
    params: &MarkovChainParams,
    rng: &mut DecisionRng,
    n: usize,
) -> Result<BinarySequence, SourceError> {
    params.validate()?;
    if n == 0 {
        return Err(SourceError::InvalidParameter("n must be at least 1".into()));
    }
    let mut items = Vec::with_capacity(n);
    let mut prev = None;
    for _ in 0..n {
        let d = params.step(prev, rng);
        items.push(d);
        prev = Some(d);
    }
    Ok(BinarySequence::new(items))
}
