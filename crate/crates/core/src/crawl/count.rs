use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct YesNoCount {
    pub yes_count: u64,
    pub no_count: u64,
    pub chars_scanned: usize,
}

/// Counts whole-word, case-insensitive "yes" and "no" in the first
/// `truncate_chars` characters (all of them when `None`).
///
/// A word is a maximal run of alphabetic characters, so "yesterday" and
/// "nothing" never count. The text is cut before tokenising: a word that
/// straddles the cut is judged by its visible prefix.
pub fn count_yes_no(text: &str, truncate_chars: Option<usize>) -> YesNoCount {
    let mut count = YesNoCount::default();
    let mut word = String::new();
    let flush = |word: &mut String, count: &mut YesNoCount| {
        if word.eq_ignore_ascii_case("yes") {
            count.yes_count += 1;
        } else if word.eq_ignore_ascii_case("no") {
            count.no_count += 1;
        }
        word.clear();
    };
    let limit = truncate_chars.unwrap_or(usize::MAX);
    for ch in text.chars().take(limit) {
        count.chars_scanned += 1;
        if ch.is_alphabetic() {
            // Only words of length ≤ 3 can match; stop growing past that.
            if word.len() <= 3 {
                word.push(ch);
            }
        } else if !word.is_empty() {
            flush(&mut word, &mut count);
        }
    }
    flush(&mut word, &mut count);
    count
}
