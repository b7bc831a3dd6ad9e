//! Adapters that answer prompts the way an endpoint would: with raw text.
//!
//! Synthetic responders render their draws as `yes`/`no` tokens joined by
//! ", " so that everything downstream goes through the same parsers as live
//! model output.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fs::File;
use std::io::BufReader;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use super::ExperimentError;
use crate::client::{CompletionRequest, LlmClient};
use crate::sources::{
    boltzmann_probability, import_external_random, BoltzmannParams, DecisionRng, MarkovChainParams,
    SourceKind, SourceSpec,
};
use crate::transcript::read_transcript;
use crate::types::{Decision, PromptId, SamplingMode};

#[derive(Debug, Clone)]
pub struct SourceRequest<'a> {
    pub prompt_id: &'a PromptId,
    pub prompt_text: &'a str,
    pub temperature: f64,
    pub max_output_tokens: u32,
    /// Decisions the protocol asks for in this call (1 for one-shot).
    pub decisions_requested: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceReply {
    pub raw_text: String,
    pub latency: Duration,
}

pub trait Responder {
    fn respond(&mut self, request: &SourceRequest<'_>) -> Result<SourceReply, ExperimentError>;

    fn model_id(&self) -> String;

    /// Seed recorded in transcripts; synthetic sources only.
    fn seed(&self) -> Option<u64> {
        None
    }
}

fn render(decisions: impl IntoIterator<Item = Decision>) -> String {
    decisions
        .into_iter()
        .map(Decision::as_str)
        .collect::<Vec<_>>()
        .join(", ")
}

fn timed<F: FnOnce() -> Result<String, ExperimentError>>(f: F) -> Result<SourceReply, ExperimentError> {
    let started = Instant::now();
    let raw_text = f()?;
    Ok(SourceReply {
        raw_text,
        latency: started.elapsed(),
    })
}

pub struct LiveResponder {
    client: LlmClient,
}

impl LiveResponder {
    pub fn new(client: LlmClient) -> Self {
        LiveResponder { client }
    }
}

impl Responder for LiveResponder {
    fn respond(&mut self, request: &SourceRequest<'_>) -> Result<SourceReply, ExperimentError> {
        let completion = self.client.complete(&CompletionRequest::new(
            request.prompt_text,
            request.temperature,
            request.max_output_tokens,
        ))?;
        Ok(SourceReply {
            raw_text: completion.raw_text,
            latency: completion.latency,
        })
    }

    fn model_id(&self) -> String {
        self.client.config().model_id.clone()
    }
}

/// Softmax sampler driven by the temperature of each request. A request
/// temperature of 0 is the greedy limit: always the larger logit.
pub struct BoltzmannResponder {
    logits: Vec<f64>,
    rng: DecisionRng,
    seed: u64,
}

impl BoltzmannResponder {
    pub fn new(params: &BoltzmannParams, seed: u64) -> Result<Self, ExperimentError> {
        params.validate()?;
        Ok(BoltzmannResponder {
            logits: params.logits.clone(),
            rng: DecisionRng::seeded(seed),
            seed,
        })
    }

    fn p_yes(&self, temperature: f64) -> Result<f64, ExperimentError> {
        if temperature == 0.0 {
            let (y, n) = (self.logits[0], self.logits[1]);
            return Ok(if y > n {
                1.0
            } else if y < n {
                0.0
            } else {
                0.5
            });
        }
        Ok(boltzmann_probability(&self.logits, temperature)?[0])
    }
}

impl Responder for BoltzmannResponder {
    fn respond(&mut self, request: &SourceRequest<'_>) -> Result<SourceReply, ExperimentError> {
        timed(|| {
            let p = self.p_yes(request.temperature)?;
            let rng = &mut self.rng;
            Ok(render((0..request.decisions_requested).map(|_| {
                if rng.bernoulli(p) {
                    Decision::Yes
                } else {
                    Decision::No
                }
            })))
        })
    }

    fn model_id(&self) -> String {
        format!("boltzmann{:?}", self.logits)
    }

    fn seed(&self) -> Option<u64> {
        Some(self.seed)
    }
}

/// Two-state chain; each prompt has its own chain that continues across calls.
pub struct MarkovResponder {
    params: MarkovChainParams,
    rng: DecisionRng,
    seed: u64,
    last: HashMap<PromptId, Decision>,
}

impl MarkovResponder {
    pub fn new(params: MarkovChainParams, seed: u64) -> Result<Self, ExperimentError> {
        params.validate()?;
        Ok(MarkovResponder {
            params,
            rng: DecisionRng::seeded(seed),
            seed,
            last: HashMap::new(),
        })
    }
}

impl Responder for MarkovResponder {
    fn respond(&mut self, request: &SourceRequest<'_>) -> Result<SourceReply, ExperimentError> {
        timed(|| {
            let mut prev = self.last.get(request.prompt_id).copied();
            let mut out = Vec::with_capacity(request.decisions_requested);
            for _ in 0..request.decisions_requested {
                let d = self.params.step(prev, &mut self.rng);
                out.push(d);
                prev = Some(d);
            }
            if let Some(d) = prev {
                self.last.insert(request.prompt_id.clone(), d);
            }
            Ok(render(out))
        })
    }

    fn model_id(&self) -> String {
        format!(
            "markov(p0={},pyy={},pyn={})",
            self.params.p_initial_yes, self.params.p_yes_given_yes, self.params.p_yes_given_no
        )
    }

    fn seed(&self) -> Option<u64> {
        Some(self.seed)
    }
}

/// Plays back the raw responses of an earlier transcript, per prompt, in
/// collection order. Few-shot calls are re-joined from their tokens.
pub struct ReplayResponder {
    model_id: String,
    queues: HashMap<PromptId, VecDeque<String>>,
    only: Option<PromptId>,
}

impl ReplayResponder {
    pub fn from_records(
        records: &[crate::types::ResponseRecord],
        prompt_id: Option<PromptId>,
        mode: Option<SamplingMode>,
    ) -> Self {
        let mut calls: BTreeMap<(PromptId, u64), Vec<(u64, String)>> = BTreeMap::new();
        for r in records {
            if mode.is_some_and(|m| m != r.mode()) {
                continue;
            }
            if prompt_id.as_ref().is_some_and(|p| *p != r.prompt_id) {
                continue;
            }
            calls
                .entry((r.prompt_id.clone(), r.call_index))
                .or_default()
                .push((r.position_in_batch().unwrap_or(0), r.parsed.raw_text.clone()));
        }
        let mut queues: HashMap<PromptId, VecDeque<String>> = HashMap::new();
        for ((prompt, _), mut tokens) in calls {
            tokens.sort_by_key(|(pos, _)| *pos);
            let text = tokens.into_iter().map(|(_, t)| t).collect::<Vec<_>>().join(", ");
            queues.entry(prompt).or_default().push_back(text);
        }
        ReplayResponder {
            model_id: records
                .first()
                .map(|r| format!("replay:{}", r.model_id))
                .unwrap_or_else(|| "replay".into()),
            queues,
            only: prompt_id,
        }
    }
}

impl Responder for ReplayResponder {
    fn respond(&mut self, request: &SourceRequest<'_>) -> Result<SourceReply, ExperimentError> {
        // With a prompt filter, that prompt's stream answers every request.
        let key = self.only.clone().unwrap_or_else(|| request.prompt_id.clone());
        timed(|| {
            self.queues
                .get_mut(&key)
                .and_then(VecDeque::pop_front)
                .ok_or_else(|| ExperimentError::SourceExhausted(format!("replay stream {key} is empty")))
        })
    }

    fn model_id(&self) -> String {
        self.model_id.clone()
    }
}

/// Serves decisions from an imported sequence, front to back, to every prompt.
pub struct SequenceResponder {
    label: String,
    items: VecDeque<Decision>,
}

impl SequenceResponder {
    pub fn new(label: impl Into<String>, items: impl IntoIterator<Item = Decision>) -> Self {
        SequenceResponder {
            label: label.into(),
            items: items.into_iter().collect(),
        }
    }
}

impl Responder for SequenceResponder {
    fn respond(&mut self, request: &SourceRequest<'_>) -> Result<SourceReply, ExperimentError> {
        timed(|| {
            if self.items.len() < request.decisions_requested {
                return Err(ExperimentError::SourceExhausted(format!(
                    "{} has {} decisions left, {} requested",
                    self.label,
                    self.items.len(),
                    request.decisions_requested
                )));
            }
            Ok(render(self.items.drain(..request.decisions_requested)))
        })
    }

    fn model_id(&self) -> String {
        self.label.clone()
    }
}

fn clock_seed() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0)
}

/// Builds the responder a spec describes. Synthetic sources use the spec's
/// seed, then `fallback_seed`, then the clock; the seed in use is recorded
/// in every transcript line.
pub fn build_responder(
    spec: &SourceSpec,
    fallback_seed: Option<u64>,
) -> Result<Box<dyn Responder>, ExperimentError> {
    spec.validate()?;
    let seed = spec.seed.or(fallback_seed).unwrap_or_else(clock_seed);
    Ok(match &spec.kind {
        SourceKind::Live(cfg) => Box::new(LiveResponder::new(LlmClient::from_env(cfg.clone())?)),
        SourceKind::Boltzmann(p) => Box::new(BoltzmannResponder::new(p, seed)?),
        SourceKind::MarkovChain(p) => Box::new(MarkovResponder::new(*p, seed)?),
        SourceKind::Replay {
            transcript,
            prompt_id,
            mode,
        } => {
            let file = File::open(transcript)
                .map_err(|e| ExperimentError::Config(format!("{}: {e}", transcript.display())))?;
            let records = read_transcript(BufReader::new(file))?;
            Box::new(ReplayResponder::from_records(&records, prompt_id.clone(), *mode))
        }
        SourceKind::ExternalRandom { path } => {
            let seq = import_external_random(path)?;
            Box::new(SequenceResponder::new(
                format!("external:{}", path.display()),
                seq.items,
            ))
        }
    })
}
