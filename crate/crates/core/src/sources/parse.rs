//! Normalisation of raw model text into decisions.
//!
//! Only bare tokens count: after trimming whitespace and stripping
//! non-alphanumeric characters from both ends, the token must equal "yes" or
//! "no" ignoring case. Anything longer is Invalid, so a refusal that merely
//! contains the word "no" is never miscounted.

use crate::types::{Decision, Outcome, ParsedResponse};

fn classify(token: &str) -> Outcome {
    let core = token.trim_matches(|c: char| !c.is_alphanumeric());
    if core.eq_ignore_ascii_case("yes") {
        Outcome::Decision(Decision::Yes)
    } else if core.eq_ignore_ascii_case("no") {
        Outcome::Decision(Decision::No)
    } else {
        Outcome::Invalid
    }
}

/// Parses a one-shot reply. The raw text is kept verbatim.
pub fn parse_decision(raw: &str) -> ParsedResponse {
    ParsedResponse {
        outcome: classify(raw.trim()),
        raw_text: raw.to_string(),
    }
}

/// Parses a few-shot reply: splits on commas and line breaks, skips empty
/// tokens, and classifies each remaining token in order.
pub fn parse_few_shot(raw: &str) -> Vec<ParsedResponse> {
    raw.split([',', '\n', '\r'])
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| ParsedResponse {
            outcome: classify(t),
            raw_text: t.to_string(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Decision::{No, Yes};

    fn outcomes(v: &[ParsedResponse]) -> Vec<Outcome> {
        v.iter().map(|p| p.outcome).collect()
    }

    #[test]
    fn bare_tokens() {
        assert_eq!(parse_decision("Yes.").outcome, Outcome::Decision(Yes));
        assert_eq!(parse_decision("  NO\n").outcome, Outcome::Decision(No));
        assert_eq!(parse_decision("\"no\"").outcome, Outcome::Decision(No));
        assert_eq!(parse_decision("**Yes**!").outcome, Outcome::Decision(Yes));
    }

    #[test]
    fn verbose_replies_are_invalid() {
        let p = parse_decision("As an assistant, I'd say yes");
        assert_eq!(p.outcome, Outcome::Invalid);
        assert_eq!(p.raw_text, "As an assistant, I'd say yes");
        assert_eq!(parse_decision("").outcome, Outcome::Invalid);
        assert_eq!(parse_decision("yes no").outcome, Outcome::Invalid);
        assert_eq!(parse_decision("nope").outcome, Outcome::Invalid);
    }

    #[test]
    fn raw_text_is_verbatim() {
        let raw = "  Yes!\r\n";
        assert_eq!(parse_decision(raw).raw_text, raw);
    }

    #[test]
    fn few_shot_splits() {
        assert_eq!(
            outcomes(&parse_few_shot("yes, no, yes")),
            vec![Outcome::Decision(Yes), Outcome::Decision(No), Outcome::Decision(Yes)]
        );
        assert_eq!(
            outcomes(&parse_few_shot("Yes,no,  YES\n")),
            vec![Outcome::Decision(Yes), Outcome::Decision(No), Outcome::Decision(Yes)]
        );
    }

    #[test]
    fn semicolons_are_not_separators() {
        let parsed = parse_few_shot("yes; maybe, no");
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[0].outcome, Outcome::Invalid);
        assert_eq!(parsed[0].raw_text, "yes; maybe");
        assert_eq!(parsed[1].outcome, Outcome::Decision(No));
    }

    #[test]
    fn empty_tokens_skipped() {
        assert_eq!(parse_few_shot(",, yes,,\n\nno,").len(), 2);
        assert!(parse_few_shot("").is_empty());
    }
}
