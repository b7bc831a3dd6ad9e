//! Domain types shared across the toolkit: decisions, parsed responses,
//! transcript records and the binary sequences derived from them.

use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

/// A single binary outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Yes,
    No,
}

impl Decision {
    pub fn is_yes(self) -> bool {
        matches!(self, Decision::Yes)
    }

    pub fn flipped(self) -> Decision {
        match self {
            Decision::Yes => Decision::No,
            Decision::No => Decision::Yes,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Yes => "yes",
            Decision::No => "no",
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of parsing one raw model output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Decision(Decision),
    Invalid,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Decision(d) => d.as_str(),
            Outcome::Invalid => "invalid",
        }
    }

    pub fn from_label(label: &str) -> Option<Outcome> {
        match label {
            "yes" => Some(Outcome::Decision(Decision::Yes)),
            "no" => Some(Outcome::Decision(Decision::No)),
            "invalid" => Some(Outcome::Invalid),
            _ => None,
        }
    }
}

/// A parsed response that always keeps the verbatim text it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedResponse {
    pub outcome: Outcome,
    pub raw_text: String,
}

impl ParsedResponse {
    pub fn decision(&self) -> Option<Decision> {
        match self.outcome {
            Outcome::Decision(d) => Some(d),
            Outcome::Invalid => None,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.decision().is_some()
    }
}

/// Which prompt a record answers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PromptId {
    Q1,
    Q2,
    Custom(String),
}

impl PromptId {
    pub fn as_str(&self) -> &str {
        match self {
            PromptId::Q1 => "Q1",
            PromptId::Q2 => "Q2",
            PromptId::Custom(s) => s,
        }
    }

    pub fn parse(s: &str) -> PromptId {
        match s {
            "Q1" => PromptId::Q1,
            "Q2" => PromptId::Q2,
            other => PromptId::Custom(other.to_string()),
        }
    }
}

impl fmt::Display for PromptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for PromptId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for PromptId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(PromptId::parse(&s))
    }
}

/// Sampling protocol: one decision per call, or many decisions in one call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMode {
    OneShot,
    FewShot,
}

impl SamplingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SamplingMode::OneShot => "one-shot",
            SamplingMode::FewShot => "few-shot",
        }
    }

    pub fn from_label(s: &str) -> Option<SamplingMode> {
        match s {
            "one-shot" => Some(SamplingMode::OneShot),
            "few-shot" => Some(SamplingMode::FewShot),
            _ => None,
        }
    }
}

impl fmt::Display for SamplingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Position of a few-shot record inside its batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BatchSlot {
    pub batch_index: u64,
    pub position_in_batch: u64,
}

/// One collected response with full provenance.
///
/// `slot` is present exactly for few-shot records, which keeps the
/// mode/batch-field consistency enforced by construction; the transcript
/// reader rejects lines that disagree.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseRecord {
    pub experiment_id: String,
    pub model_id: String,
    pub prompt_id: PromptId,
    pub prompt_text: String,
    pub call_index: u64,
    pub slot: Option<BatchSlot>,
    pub temperature: f64,
    pub parsed: ParsedResponse,
    pub timestamp: DateTime<Utc>,
    pub latency_ms: u64,
    pub seed: Option<u64>,
}

impl ResponseRecord {
    pub fn mode(&self) -> SamplingMode {
        if self.slot.is_some() {
            SamplingMode::FewShot
        } else {
            SamplingMode::OneShot
        }
    }

    pub fn batch_index(&self) -> Option<u64> {
        self.slot.map(|s| s.batch_index)
    }

    pub fn position_in_batch(&self) -> Option<u64> {
        self.slot.map(|s| s.position_in_batch)
    }

    /// Collection-order key: call, then batch, then position.
    pub fn order_key(&self) -> (u64, u64, u64) {
        match self.slot {
            Some(s) => (self.call_index, s.batch_index, s.position_in_batch),
            None => (self.call_index, 0, 0),
        }
    }
}

/// An ordered list of decisions with a tally of what was left out.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinarySequence {
    pub items: Vec<Decision>,
    pub excluded_invalid_count: usize,
}

impl BinarySequence {
    pub fn new(items: Vec<Decision>) -> Self {
        BinarySequence {
            items,
            excluded_invalid_count: 0,
        }
    }

    /// Builds a sequence from parsed responses, counting the invalid ones.
    pub fn from_parsed<'a, I>(parsed: I) -> Self
    where
        I: IntoIterator<Item = &'a ParsedResponse>,
    {
        let mut seq = BinarySequence::default();
        for p in parsed {
            match p.decision() {
                Some(d) => seq.items.push(d),
                None => seq.excluded_invalid_count += 1,
            }
        }
        seq
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn yes_count(&self) -> usize {
        self.items.iter().filter(|d| d.is_yes()).count()
    }

    pub fn no_count(&self) -> usize {
        self.items.len() - self.yes_count()
    }

    /// The Yes/No mirror of this sequence.
    pub fn flipped(&self) -> BinarySequence {
        BinarySequence {
            items: self.items.iter().map(|d| d.flipped()).collect(),
            excluded_invalid_count: self.excluded_invalid_count,
        }
    }

    pub fn as_slice(&self) -> &[Decision] {
        &self.items
    }
}

impl FromIterator<Decision> for BinarySequence {
    fn from_iter<T: IntoIterator<Item = Decision>>(iter: T) -> Self {
        BinarySequence::new(iter.into_iter().collect())
    }
}

/// The decisions returned by a single few-shot call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub batch_index: u64,
    pub sequence: BinarySequence,
    pub source_call_id: String,
}
