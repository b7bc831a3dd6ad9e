//! Plain-text sequence files, as exported by true-random services.
//!
//! Tokens are separated by whitespace. The alphabet is taken from the first
//! token: either `1`/`0` (1 = Yes, 0 = No) or `yes`/`no` in any case. A file
//! mixing the two is rejected.

use std::fs;
use std::path::Path;

use super::SourceError;
use crate::types::{BinarySequence, Decision};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Alphabet {
    Bits,
    Words,
}

fn detect(token: &str) -> Option<Alphabet> {
    match token {
        "0" | "1" => Some(Alphabet::Bits),
        t if t.eq_ignore_ascii_case("yes") || t.eq_ignore_ascii_case("no") => Some(Alphabet::Words),
        _ => None,
    }
}

fn decode(alphabet: Alphabet, token: &str) -> Option<Decision> {
    match alphabet {
        Alphabet::Bits => match token {
            "1" => Some(Decision::Yes),
            "0" => Some(Decision::No),
            _ => None,
        },
        Alphabet::Words => {
            if token.eq_ignore_ascii_case("yes") {
                Some(Decision::Yes)
            } else if token.eq_ignore_ascii_case("no") {
                Some(Decision::No)
            } else {
                None
            }
        }
    }
}

/// Parses sequence text. Token numbers in errors are 1-based over the whole file.
pub fn parse_external_random(text: &str) -> Result<BinarySequence, SourceError> {
    let mut alphabet = None;
    let mut items = Vec::new();
    let mut token_index = 0;
    for (line_idx, line) in text.lines().enumerate() {
        for token in line.split_whitespace() {
            token_index += 1;
            let bad = |reason: &str| SourceError::BadSequenceToken {
                line: line_idx + 1,
                token_index,
                token: token.to_string(),
                reason: reason.to_string(),
            };
            let alpha = match alphabet {
                Some(a) => a,
                None => {
                    let a = detect(token).ok_or_else(|| bad("expected 0/1 or yes/no"))?;
                    alphabet = Some(a);
                    a
                }
            };
            let decision = decode(alpha, token).ok_or_else(|| match detect(token) {
                Some(_) => bad("mixed alphabets in one file"),
                None => bad("token outside the file's alphabet"),
            })?;
            items.push(decision);
        }
    }
    Ok(BinarySequence::new(items))
}

pub fn import_external_random(path: &Path) -> Result<BinarySequence, SourceError> {
    let text = fs::read_to_string(path).map_err(|source| SourceError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_external_random(&text)
}

/// Renders a sequence in the `1`/`0` alphabet, 50 tokens per line.
pub fn format_sequence_file(seq: &BinarySequence) -> String {
    let mut out = String::with_capacity(seq.len() * 2 + seq.len() / 25);
    for chunk in seq.items.chunks(50) {
        let line: Vec<&str> = chunk
            .iter()
            .map(|d| if d.is_yes() { "1" } else { "0" })
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}
