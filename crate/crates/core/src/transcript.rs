//! Newline-delimited JSON transcripts of every collected response.
//!
//! Each line is a flat object with exactly these keys: `schema_version`,
//! `experiment_id`, `model_id`, `prompt_id`, `prompt_text`, `mode`,
//! `call_index`, `batch_index`, `position_in_batch`, `temperature`,
//! `raw_response`, `parsed`, `timestamp`, `latency_ms`, `seed`.

use std::io::{self, BufRead, Write};

use chrono::{DateTime, SecondsFormat, Utc};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::types::{
    BatchSlot, BinarySequence, Outcome, ParsedResponse, PromptId, ResponseRecord, SamplingMode,
};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("transcript write failed after {written} records: {source}")]
    Write {
        written: usize,
        #[source]
        source: io::Error,
    },
    #[error("transcript read failed: {0}")]
    Read(#[from] io::Error),
    #[error("line {line}: field `{field}`: {message}")]
    Malformed {
        line: usize,
        field: String,
        message: String,
    },
    #[error("line {line}: unsupported schema_version {version:?}")]
    UnsupportedSchema { line: usize, version: String },
}

/// Encodes one record as a single JSON line (without the trailing newline).
pub fn encode_record(record: &ResponseRecord) -> String {
    let mut m = Map::new();
    m.insert("schema_version".into(), Value::from(SCHEMA_VERSION));
    m.insert("experiment_id".into(), Value::from(record.experiment_id.as_str()));
    m.insert("model_id".into(), Value::from(record.model_id.as_str()));
    m.insert("prompt_id".into(), Value::from(record.prompt_id.as_str()));
    m.insert("prompt_text".into(), Value::from(record.prompt_text.as_str()));
    m.insert("mode".into(), Value::from(record.mode().as_str()));
    m.insert("call_index".into(), Value::from(record.call_index));
    m.insert("batch_index".into(), record.batch_index().into());
    m.insert(
        "position_in_batch".into(),
        record.position_in_batch().into(),
    );
    m.insert("temperature".into(), Value::from(record.temperature));
    m.insert(
        "raw_response".into(),
        Value::from(record.parsed.raw_text.as_str()),
    );
    m.insert("parsed".into(), Value::from(record.parsed.outcome.as_str()));
    m.insert(
        "timestamp".into(),
        Value::from(format_timestamp(&record.timestamp)),
    );
    m.insert("latency_ms".into(), Value::from(record.latency_ms));
    m.insert("seed".into(), record.seed.into());
    Value::Object(m).to_string()
}

pub fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Streaming single-writer transcript sink.
pub struct TranscriptWriter<W: Write> {
    sink: W,
    written: usize,
}

impl<W: Write> TranscriptWriter<W> {
    pub fn new(sink: W) -> Self {
        TranscriptWriter { sink, written: 0 }
    }

    pub fn append(&mut self, record: &ResponseRecord) -> Result<(), TranscriptError> {
        let line = encode_record(record);
        writeln!(self.sink, "{line}").map_err(|source| TranscriptError::Write {
            written: self.written,
            source,
        })?;
        self.written += 1;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<(), TranscriptError> {
        self.sink.flush().map_err(|source| TranscriptError::Write {
            written: self.written,
            source,
        })
    }

    pub fn written(&self) -> usize {
        self.written
    }

    pub fn into_inner(self) -> W {
        self.sink
    }
}

/// Writes every record, one per line, and flushes. Returns the count written.
pub fn write_transcript<'a, I, W>(records: I, destination: W) -> Result<usize, TranscriptError>
where
    I: IntoIterator<Item = &'a ResponseRecord>,
    W: Write,
{
    let mut writer = TranscriptWriter::new(destination);
    for record in records {
        writer.append(record)?;
    }
    writer.flush()?;
    Ok(writer.written())
}

/// Reads all records in file order. Blank lines are skipped.
pub fn read_transcript<R: BufRead>(source: R) -> Result<Vec<ResponseRecord>, TranscriptError> {
    let mut out = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(decode_record(&line, idx + 1)?);
    }
    Ok(out)
}

/// Decodes one transcript line; `line_no` is used in error messages.
pub fn decode_record(line: &str, line_no: usize) -> Result<ResponseRecord, TranscriptError> {
    let value: Value = serde_json::from_str(line).map_err(|e| TranscriptError::Malformed {
        line: line_no,
        field: "<line>".into(),
        message: e.to_string(),
    })?;
    let Value::Object(obj) = value else {
        return Err(malformed(line_no, "<line>", "expected a JSON object"));
    };
    let f = Fields { obj: &obj, line: line_no };

    let version = f.string("schema_version")?;
    if version != SCHEMA_VERSION {
        return Err(TranscriptError::UnsupportedSchema {
            line: line_no,
            version,
        });
    }

    let mode_label = f.string("mode")?;
    let mode = SamplingMode::from_label(&mode_label)
        .ok_or_else(|| malformed(line_no, "mode", "expected \"one-shot\" or \"few-shot\""))?;
    let batch_index = f.opt_u64("batch_index")?;
    let position = f.opt_u64("position_in_batch")?;
    let slot = match (mode, batch_index, position) {
        (SamplingMode::OneShot, None, None) => None,
        (SamplingMode::FewShot, Some(b), Some(p)) => Some(BatchSlot {
            batch_index: b,
            position_in_batch: p,
        }),
        (SamplingMode::OneShot, _, _) => {
            return Err(malformed(
                line_no,
                "batch_index",
                "one-shot records must not carry batch fields",
            ))
        }
        (SamplingMode::FewShot, _, _) => {
            return Err(malformed(
                line_no,
                "batch_index",
                "few-shot records need batch_index and position_in_batch",
            ))
        }
    };

    let temperature = f.f64("temperature")?;
    if !(0.0..=2.0).contains(&temperature) {
        return Err(malformed(line_no, "temperature", "must be within [0, 2]"));
    }

    let parsed_label = f.string("parsed")?;
    let outcome = Outcome::from_label(&parsed_label)
        .ok_or_else(|| malformed(line_no, "parsed", "expected \"yes\", \"no\" or \"invalid\""))?;

    let ts_text = f.string("timestamp")?;
    let timestamp = DateTime::parse_from_rfc3339(&ts_text)
        .map_err(|e| malformed(line_no, "timestamp", &e.to_string()))?
        .with_timezone(&Utc);

    Ok(ResponseRecord {
        experiment_id: f.string("experiment_id")?,
        model_id: f.string("model_id")?,
        prompt_id: PromptId::parse(&f.string("prompt_id")?),
        prompt_text: f.string("prompt_text")?,
        call_index: f.u64("call_index")?,
        slot,
        temperature,
        parsed: ParsedResponse {
            outcome,
            raw_text: f.string("raw_response")?,
        },
        timestamp,
        latency_ms: f.u64("latency_ms")?,
        seed: f.opt_u64("seed")?,
    })
}

fn malformed(line: usize, field: &str, message: &str) -> TranscriptError {
    TranscriptError::Malformed {
        line,
        field: field.to_string(),
        message: message.to_string(),
    }
}

struct Fields<'a> {
    obj: &'a Map<String, Value>,
    line: usize,
}

impl Fields<'_> {
    fn get(&self, key: &str) -> Result<&Value, TranscriptError> {
        self.obj
            .get(key)
            .ok_or_else(|| malformed(self.line, key, "missing required field"))
    }

    fn string(&self, key: &str) -> Result<String, TranscriptError> {
        self.get(key)?
            .as_str()
            .map(str::to_owned)
            .ok_or_else(|| malformed(self.line, key, "expected a string"))
    }

    fn u64(&self, key: &str) -> Result<u64, TranscriptError> {
        self.get(key)?
            .as_u64()
            .ok_or_else(|| malformed(self.line, key, "expected a non-negative integer"))
    }

    fn opt_u64(&self, key: &str) -> Result<Option<u64>, TranscriptError> {
        match self.get(key)? {
            Value::Null => Ok(None),
            v => v
                .as_u64()
                .map(Some)
                .ok_or_else(|| malformed(self.line, key, "expected a non-negative integer or null")),
        }
    }

    fn f64(&self, key: &str) -> Result<f64, TranscriptError> {
        self.get(key)?
            .as_f64()
            .ok_or_else(|| malformed(self.line, key, "expected a number"))
    }
}

/// Selects records for one analysis stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordFilter {
    pub prompt_id: PromptId,
    pub mode: SamplingMode,
    pub batch_index: Option<u64>,
}

impl RecordFilter {
    pub fn new(prompt_id: PromptId, mode: SamplingMode) -> Self {
        RecordFilter {
            prompt_id,
            mode,
            batch_index: None,
        }
    }

    pub fn batch(mut self, batch_index: u64) -> Self {
        self.batch_index = Some(batch_index);
        self
    }

    pub fn matches(&self, record: &ResponseRecord) -> bool {
        record.prompt_id == self.prompt_id
            && record.mode() == self.mode
            && match self.batch_index {
                Some(b) => record.batch_index() == Some(b),
                None => true,
            }
    }
}

/// Decisions of the selected records in collection order; invalid responses
/// are tallied, not dropped silently.
pub fn sequence_from_records(records: &[ResponseRecord], filter: &RecordFilter) -> BinarySequence {
    let mut selected: Vec<&ResponseRecord> = records.iter().filter(|r| filter.matches(r)).collect();
    selected.sort_by_key(|r| r.order_key());
    BinarySequence::from_parsed(selected.into_iter().map(|r| &r.parsed))
}
