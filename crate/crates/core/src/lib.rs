//! Collect yes/no decisions from LLM endpoints and synthetic sources, and
//! test the resulting sequences for uniformity, Markov independence and
//! recency bias.

pub mod client;
pub mod crawl;
pub mod experiment;
pub mod sources;
pub mod stats;
pub mod transcript;
pub mod types;

pub use types::{
    Batch, BatchSlot, BinarySequence, Decision, Outcome, ParsedResponse, PromptId, ResponseRecord,
    SamplingMode,
};
