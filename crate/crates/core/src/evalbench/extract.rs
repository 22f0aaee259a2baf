use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::items::Letter;

static THINK_BLOCK: Lazy<Regex> = Lazy::new(|| Regex::new(r"(?s)<think>.*?</think>").unwrap());
const THINK_OPEN: &str = "<think>";

// Keywords match case-insensitively; the letter itself must be an uppercase
// A-D ending on a word boundary, so "answer is definitely" or "Answer: Based
// on" never yield a letter. Markdown emphasis around the letter is skipped.
static ANSWER_TIER: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"(?i:answer)[ isIS]*[:\-]?[\s*_]*\(?[*_]*([A-D])\b").unwrap());
static OPTION_TIER: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"(?i:option)[\s*_]*\(?[*_]*([A-D])\b").unwrap());
static OWN_LINE_TIER: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"(?m)^[ \t]*[*_]*\(?([A-D])\)?[*_]*[.:]?[ \t]*$").unwrap());
static TRAILING_TIER: Lazy<Regex> = Lazy::new(|| Regex::new(r"\b([A-D])\)?[*_]*\.?\s*\z").unwrap());

/// Removes every `<think>...</think>` region (non-greedy, spanning
/// newlines). An opening tag left without a closing tag removes everything
/// from the tag to the end of the text.
pub fn strip_think(text: &str) -> String {
    let mut out = THINK_BLOCK.replace_all(text, "").into_owned();
    if let Some(at) = out.find(THINK_OPEN) {
        out.truncate(at);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Extracted {
    Letter(Letter),
    Abstain,
}

impl Extracted {
    pub fn letter(self) -> Option<Letter> {
        match self {
            Extracted::Letter(l) => Some(l),
            Extracted::Abstain => None,
        }
    }

    pub fn label(self) -> String {
        match self {
            Extracted::Letter(l) => l.to_string(),
            Extracted::Abstain => "ABSTAIN".to_owned(),
        }
    }
}

fn last_capture(re: &Regex, text: &str) -> Option<(usize, Letter)> {
    re.captures_iter(text).last().map(|c| {
        let m = c.get(1).expect("group 1");
        let letter = m.as_str().chars().next().and_then(Letter::from_char);
        (m.start(), letter.expect("pattern only captures A-D"))
    })
}

/// Finds the final answer letter in think-stripped text. Tiers are tried in
/// order and the last match of the first matching tier wins:
/// 1. `Answer: X`, `the answer is (X)`, ...
/// 2. `Option X`
/// 3. a bare letter alone on a line or ending the text.
pub fn extract_answer(stripped: &str) -> Extracted {
    if let Some((_, l)) = last_capture(&ANSWER_TIER, stripped) {
        return Extracted::Letter(l);
    }
    if let Some((_, l)) = last_capture(&OPTION_TIER, stripped) {
        return Extracted::Letter(l);
    }
    let own_line = last_capture(&OWN_LINE_TIER, stripped);
    let trailing = last_capture(&TRAILING_TIER, stripped);
    match own_line
        .into_iter()
        .chain(trailing)
        .max_by_key(|(pos, _)| *pos)
    {
        Some((_, l)) => Extracted::Letter(l),
        None => Extracted::Abstain,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub item_id: String,
    pub stripped_text: String,
    pub extracted: Extracted,
    /// `None` for abstentions, which still count as wrong.
    pub correct: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ExtractionResult {
    pub fn from_response(item_id: &str, raw: &str, gold: Letter) -> Self {
        let stripped_text = strip_think(raw);
        let extracted = extract_answer(&stripped_text);
        ExtractionResult {
            item_id: item_id.to_owned(),
            correct: extracted.letter().map(|l| l == gold),
            stripped_text,
            extracted,
            note: None,
        }
    }

    /// An item whose response could not be obtained.
    pub fn failed(item_id: &str, note: impl Into<String>) -> Self {
        ExtractionResult {
            item_id: item_id.to_owned(),
            stripped_text: String::new(),
            extracted: Extracted::Abstain,
            correct: None,
            note: Some(note.into()),
        }
    }

    pub fn is_correct(&self) -> bool {
        self.correct == Some(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(s: &str) -> Extracted {
        extract_answer(&strip_think(s))
    }

    #[test]
    fn strips_multiline_block() {
        assert_eq!(
            strip_think("<think>reason\nlines</think>Answer: B"),
            "Answer: B"
        );
    }

    #[test]
    fn no_tags_is_identity() {
        assert_eq!(strip_think("Answer: C"), "Answer: C");
    }

    #[test]
    fn strips_each_block_non_greedily() {
        assert_eq!(strip_think("<think>a</think>X<think>b</think>Y"), "XY");
    }

    #[test]
    fn unclosed_tag_strips_to_end() {
        assert_eq!(strip_think("Answer: A\n<think>maybe B"), "Answer: A\n");
    }

    #[test]
    fn spliced_tags_do_not_survive() {
        let s = strip_think("<thi<think>x</think>nk>y</think>tail");
        assert!(!s.contains("<think>"));
        assert_eq!(strip_think(&s), s);
    }

    #[test]
    fn stray_close_tag_is_left_alone() {
        assert_eq!(strip_think("a</think>b"), "a</think>b");
    }

    #[test]
    fn canonical_answer_forms() {
        assert_eq!(ex("Answer: B"), Extracted::Letter(Letter::B));
        assert_eq!(ex("answer - d"), Extracted::Abstain);
        assert_eq!(ex("ANSWER-D"), Extracted::Letter(Letter::D));
        assert_eq!(ex("Final Answer: **C**"), Extracted::Letter(Letter::C));
        assert_eq!(
            ex("I considered A but the answer is (C)."),
            Extracted::Letter(Letter::C)
        );
    }

    #[test]
    fn answer_tier_beats_later_option_tier() {
        assert_eq!(
            ex("Answer: A. Option B is a distractor."),
            Extracted::Letter(Letter::A)
        );
    }

    #[test]
    fn keyword_followed_by_word_is_not_a_letter() {
        assert_eq!(ex("The answer is definitely unclear."), Extracted::Abstain);
        assert_eq!(ex("Answer: Based on section 16"), Extracted::Abstain);
    }

    #[test]
    fn option_tier() {
        assert_eq!(ex("I pick option (D) here"), Extracted::Letter(Letter::D));
        assert_eq!(
            ex("Option A fails; Option C holds"),
            Extracted::Letter(Letter::C)
        );
    }

    #[test]
    fn bare_letter_tier() {
        assert_eq!(
            ex("After review:\n\nB\n\nThat's it."),
            Extracted::Letter(Letter::B)
        );
        assert_eq!(ex("so we go with C."), Extracted::Letter(Letter::C));
        assert_eq!(ex("(A)"), Extracted::Letter(Letter::A));
    }

    #[test]
    fn abstains_without_a_letter() {
        assert_eq!(ex("No option fits."), Extracted::Abstain);
        assert_eq!(ex(""), Extracted::Abstain);
    }

    #[test]
    fn letters_inside_think_are_ignored() {
        assert_eq!(ex("<think>Answer: A</think>"), Extracted::Abstain);
        assert_eq!(
            ex("<think>Answer: A</think>Answer: D"),
            Extracted::Letter(Letter::D)
        );
    }

    #[test]
    fn abstain_is_not_correct() {
        let r = ExtractionResult::from_response("x", "no idea", Letter::A);
        assert_eq!(r.correct, None);
        assert!(!r.is_correct());
        let r = ExtractionResult::from_response("x", "Answer: A", Letter::A);
        assert!(r.is_correct());
    }
}
