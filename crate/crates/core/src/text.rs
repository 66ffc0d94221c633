//! Text primitives shared across the crate.
//!
//! All offsets in this crate are Unicode code-point indices (`char` counts),
//! never byte indices. This keeps stored spans independent of the encoding
//! and of any particular tokenizer.

/// Number of code points in `text`.
pub fn cp_len(text: &str) -> usize {
    text.chars().count()
}

/// Slice `text` by code-point offsets `[start, end)`.
///
/// Panics if `start > end` or `end` exceeds the code-point length; callers
/// validate offsets before slicing.
pub fn cp_slice(text: &str, start: usize, end: usize) -> String {
    assert!(start <= end, "cp_slice: start {start} > end {end}");
    text.chars().skip(start).take(end - start).collect()
}

/// A token-boundary function: maps text to `(start, end)` code-point offsets.
///
/// Tokenizers are injected so that models with different subword schemes can
/// reuse the alignment machinery. The crate ships [`whitespace_tokenize`] as
/// the default.
pub type Tokenizer = fn(&str) -> Vec<(usize, usize)>;

/// Split on Unicode whitespace, returning code-point offsets of each token.
pub fn whitespace_tokenize(text: &str) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    let mut idx = 0usize;
    for ch in text.chars() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s, idx));
            }
        } else if start.is_none() {
            start = Some(idx);
        }
        idx += 1;
    }
    if let Some(s) = start {
        out.push((s, idx));
    }
    out
}

/// Whitespace word count of `text` (the review-length unit used for scoring).
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Lowercase `word` and strip leading/trailing non-alphanumeric characters.
///
/// Used by the lexicon adapters and vocabulary construction so that
/// "interesting," and "Interesting" normalize to the same entry.
pub fn normalize_word(word: &str) -> String {
    word.trim_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase()
}

/// Sentence boundaries over `text` as code-point offsets.
///
/// Rule-based: a sentence ends at `.`, `!` or `?` (plus any immediately
/// following closing quotes/brackets) when followed by whitespace or end of
/// input, and at newlines. Leading/trailing whitespace is trimmed from each
/// sentence; empty segments are dropped.
pub fn segment_sentences(text: &str) -> Vec<(usize, usize)> {
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    let mut sentences = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < n {
        let ch = chars[i];
        let mut boundary = None;
        if ch == '\n' {
            boundary = Some(i); // newline excluded from the sentence
        } else if matches!(ch, '.' | '!' | '?') {
            let mut j = i + 1;
            while j < n && matches!(chars[j], '"' | '\'' | ')' | ']' | '}' | '”' | '’') {
                j += 1;
            }
            if j >= n || chars[j].is_whitespace() {
                boundary = Some(j); // trailing punctuation kept
            }
        }
        if let Some(end) = boundary {
            push_trimmed(&chars, start, end, &mut sentences);
            i = end.max(i + 1);
            start = i;
        } else {
            i += 1;
        }
    }
    push_trimmed(&chars, start, n, &mut sentences);
    sentences
}

fn push_trimmed(chars: &[char], mut start: usize, mut end: usize, out: &mut Vec<(usize, usize)>) {
    while start < end && chars[start].is_whitespace() {
        start += 1;
    }
    while end > start && chars[end - 1].is_whitespace() {
        end -= 1;
    }
    if end > start {
        out.push((start, end));
    }
}
