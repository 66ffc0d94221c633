//! Bridges between character spans, token spans, and BIO label sequences.
//!
//! Storage is character-offset based; models are token based. This module
//! owns every conversion between the two so that offsets survive the round
//! trip:
//!
//! ```text
//!   chars:   The evaluation is weak. Only one dataset is used.
//!            [-------claim_neg------)
//!   tokens:  The evaluation is weak.  Only one ...
//!             0    1         2  3     4    5
//!   BIO:      B-neg I-neg  I-neg I-neg O  O ...
//! ```
//!
//! It also owns the two chunking schemes used to fit long reviews into a
//! fixed encoder budget: non-overlapping chunks for tagging and strided
//! overlapping windows for evidence reading.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{ArgSpan, Polarity, SpanType};
use crate::text::{cp_slice, Tokenizer};

/// Token boundaries of one text as code-point ranges, in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenAlignment {
    tokens: Vec<(usize, usize)>,
}

impl TokenAlignment {
    pub fn new(text: &str, tokenize: Tokenizer) -> Self {
        TokenAlignment::from_offsets(tokenize(text))
    }

    /// Builds an alignment from explicit token ranges, which must be
    /// non-empty, sorted, and non-overlapping.
    pub fn from_offsets(tokens: Vec<(usize, usize)>) -> Self {
        for window in tokens.windows(2) {
            assert!(
                window[0].1 <= window[1].0,
                "token offsets must be sorted and disjoint: {window:?}"
            );
        }
        for &(start, end) in &tokens {
            assert!(start < end, "empty token at {start}");
        }
        TokenAlignment { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn offsets(&self) -> &[(usize, usize)] {
        &self.tokens
    }

    pub fn token_span(&self, index: usize) -> (usize, usize) {
        self.tokens[index]
    }

    pub fn token_text(&self, text: &str, index: usize) -> String {
        let (start, end) = self.tokens[index];
        cp_slice(text, start, end)
    }

    /// Index of the token containing character `pos`, if any.
    pub fn char_to_token(&self, pos: usize) -> Option<usize> {
        let i = self.tokens.partition_point(|&(_, end)| end <= pos);
        match self.tokens.get(i) {
            Some(&(start, _)) if start <= pos => Some(i),
            _ => None,
        }
    }

    /// Half-open token range of all tokens overlapping the character span
    /// `[start, end)`, or `None` when no token does.
    pub fn span_to_tokens(&self, start: usize, end: usize) -> Option<(usize, usize)> {
        if start >= end {
            return None;
        }
        let first = self.tokens.partition_point(|&(_, t_end)| t_end <= start);
        let last = self.tokens.partition_point(|&(t_start, _)| t_start < end);
        if first < last {
            Some((first, last))
        } else {
            None
        }
    }

    /// Character span covered by the half-open token range `[start, end)`.
    pub fn tokens_to_chars(&self, start: usize, end: usize) -> (usize, usize) {
        assert!(start < end && end <= self.tokens.len(), "bad token range {start}..{end}");
        (self.tokens[start].0, self.tokens[end - 1].1)
    }
}

/// Number of token classes in the claim tagging scheme.
pub const NUM_BIO_CLASSES: usize = 5;

/// One token label in the 5-class claim tagging scheme.
///
/// Class indices put `O` first so that an untrained model's argmax ties
/// resolve to the majority class:
/// `O`=0, `B-claim_pos`=1, `I-claim_pos`=2, `B-claim_neg`=3, `I-claim_neg`=4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BioTag {
    O,
    B(Polarity),
    I(Polarity),
}

impl BioTag {
    pub const ALL: [BioTag; NUM_BIO_CLASSES] = [
        BioTag::O,
        BioTag::B(Polarity::Positive),
        BioTag::I(Polarity::Positive),
        BioTag::B(Polarity::Negative),
        BioTag::I(Polarity::Negative),
    ];

    pub fn index(self) -> usize {
        match self {
            BioTag::O => 0,
            BioTag::B(Polarity::Positive) => 1,
            BioTag::I(Polarity::Positive) => 2,
            BioTag::B(Polarity::Negative) => 3,
            BioTag::I(Polarity::Negative) => 4,
        }
    }

    pub fn from_index(index: usize) -> Option<BioTag> {
        BioTag::ALL.get(index).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BioTag::O => "O",
            BioTag::B(Polarity::Positive) => "B-claim_pos",
            BioTag::I(Polarity::Positive) => "I-claim_pos",
            BioTag::B(Polarity::Negative) => "B-claim_neg",
            BioTag::I(Polarity::Negative) => "I-claim_neg",
        }
    }
}

impl fmt::Display for BioTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_str())
    }
}

impl FromStr for BioTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BioTag::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown BIO tag {s:?}"))
    }
}

/// Labels every token from the claim spans: the first token overlapping a
/// claim gets `B`, the rest of the claim's tokens get `I`, everything else
/// `O`. Evidence spans are ignored. Defined for non-overlapping claims;
/// claims that overlap no token contribute nothing.
pub fn encode_bio(alignment: &TokenAlignment, spans: &[ArgSpan]) -> Vec<BioTag> {
    let mut tags = vec![BioTag::O; alignment.len()];
    let mut claims: Vec<&ArgSpan> = spans.iter().filter(|s| s.span_type.is_claim()).collect();
    claims.sort_by_key(|s| (s.start_char, s.end_char));
    for claim in claims {
        let Some((first, last)) = alignment.span_to_tokens(claim.start_char, claim.end_char)
        else {
            continue;
        };
        let polarity = claim.span_type.polarity();
        tags[first] = BioTag::B(polarity);
        for tag in &mut tags[first + 1..last] {
            *tag = BioTag::I(polarity);
        }
    }
    tags
}

/// Decodes a tag sequence into claim token ranges `(polarity, start, end)`.
///
/// Segments open on `B`, extend over same-polarity `I`, and close on
/// anything else. A dangling `I` (after `O`, start, or the other polarity)
/// opens a new segment, so every non-`O` token lands in exactly one span.
pub fn decode_bio(tags: &[BioTag]) -> Vec<(Polarity, usize, usize)> {
    let mut spans = Vec::new();
    let mut open: Option<(Polarity, usize)> = None;
    for (i, &tag) in tags.iter().enumerate() {
        let continues = matches!((tag, open), (BioTag::I(p), Some((q, _))) if p == q);
        if continues {
            continue;
        }
        if let Some((polarity, start)) = open.take() {
            spans.push((polarity, start, i));
        }
        match tag {
            BioTag::O => {}
            BioTag::B(p) | BioTag::I(p) => open = Some((p, i)),
        }
    }
    if let Some((polarity, start)) = open {
        spans.push((polarity, start, tags.len()));
    }
    spans
}

/// Decodes tags all the way to claim [`ArgSpan`]s with character offsets and
/// per-polarity ordinals (1-based, in textual order).
pub fn tags_to_claims(alignment: &TokenAlignment, tags: &[BioTag]) -> Vec<ArgSpan> {
    let mut next = [1u32; 2];
    decode_bio(tags)
        .into_iter()
        .map(|(polarity, start, end)| {
            let (char_start, char_end) = alignment.tokens_to_chars(start, end);
            let ordinal = next[polarity as usize];
            next[polarity as usize] += 1;
            ArgSpan::new(SpanType::claim(polarity), char_start, char_end, ordinal)
        })
        .collect()
}

/// One token per line with its tag, tab separated, for manual inspection.
pub fn to_conll(text: &str, alignment: &TokenAlignment, tags: &[BioTag]) -> String {
    assert_eq!(alignment.len(), tags.len(), "one tag per token");
    let mut out = String::new();
    for (i, &tag) in tags.iter().enumerate() {
        out.push_str(&alignment.token_text(text, i));
        out.push('\t');
        out.push_str(tag.as_str());
        out.push('\n');
    }
    out
}

/// Invalid chunking parameters.
#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ChunkError {
    #[error("chunk length must be positive")]
    ZeroLength,
    #[error("stride {stride} must be positive and smaller than chunk length {max_len}")]
    BadStride { stride: usize, max_len: usize },
}

/// Non-overlapping token chunks `[0, L), [L, 2L), …` covering all `n_tokens`.
/// Used for tagging, where every token needs exactly one prediction.
pub fn tagging_chunks(n_tokens: usize, max_len: usize) -> Result<Vec<(usize, usize)>, ChunkError> {
    if max_len == 0 {
        return Err(ChunkError::ZeroLength);
    }
    Ok((0..n_tokens)
        .step_by(max_len)
        .map(|start| (start, (start + max_len).min(n_tokens)))
        .collect())
}

/// Overlapping windows starting at multiples of `stride`, each `max_len`
/// tokens long (the last may be shorter). Generation stops with the first
/// window that reaches the end. Used for evidence reading, where a span must
/// fit inside a single window: any span of at most `max_len - stride` tokens
/// is fully contained in at least one window.
pub fn linkage_windows(
    n_tokens: usize,
    max_len: usize,
    stride: usize,
) -> Result<Vec<(usize, usize)>, ChunkError> {
    if max_len == 0 {
        return Err(ChunkError::ZeroLength);
    }
    if stride == 0 || stride >= max_len {
        return Err(ChunkError::BadStride { stride, max_len });
    }
    let mut windows = Vec::new();
    if n_tokens == 0 {
        return Ok(windows);
    }
    let mut start = 0;
    loop {
        let end = (start + max_len).min(n_tokens);
        windows.push((start, end));
        if start + max_len >= n_tokens {
            break;
        }
        start += stride;
    }
    Ok(windows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Polarity::{Negative, Positive};
    use crate::text::whitespace_tokenize;
    use proptest::prelude::*;

    fn align(text: &str) -> TokenAlignment {
        TokenAlignment::new(text, whitespace_tokenize)
    }

    #[test]
    fn char_token_lookups() {
        let text = "The naïve method fails.";
        let a = align(text);
        assert_eq!(a.len(), 4);
        assert_eq!(a.char_to_token(0), Some(0));
        assert_eq!(a.char_to_token(3), None);
        assert_eq!(a.char_to_token(4), Some(1));
        assert_eq!(a.token_text(text, 1), "naïve");
        assert_eq!(a.span_to_tokens(4, 16), Some((1, 3)));
        assert_eq!(a.tokens_to_chars(1, 3), (4, 16));
        assert_eq!(a.span_to_tokens(3, 4), None);
        assert_eq!(a.span_to_tokens(5, 5), None);
    }

    #[test]
    fn encode_then_decode_recovers_claims_at_token_granularity() {
        // Claims that end mid-token (here: before a trailing period) widen
        // to the token boundary when decoded, so compare token ranges.
        let review = crate::testkit::sample_annotated_review();
        let a = align(&review.review.text);
        let tags = encode_bio(&a, &review.spans);
        let decoded = tags_to_claims(&a, &tags);
        let gold: Vec<&ArgSpan> = review.claims().collect();
        assert_eq!(decoded.len(), gold.len());
        for (d, g) in decoded.iter().zip(&gold) {
            assert_eq!(d.span_type, g.span_type);
            assert_eq!(d.claim_id, g.claim_id);
            assert_eq!(
                a.span_to_tokens(d.start_char, d.end_char),
                a.span_to_tokens(g.start_char, g.end_char)
            );
        }
    }

    #[test]
    fn adjacent_claims_stay_separate() {
        let tags = vec![
            BioTag::B(Negative),
            BioTag::I(Negative),
            BioTag::B(Negative),
            BioTag::B(Positive),
            BioTag::I(Positive),
        ];
        assert_eq!(
            decode_bio(&tags),
            vec![(Negative, 0, 2), (Negative, 2, 3), (Positive, 3, 5)]
        );
    }

    #[test]
    fn dangling_i_opens_a_span() {
        let tags = vec![
            BioTag::I(Positive),
            BioTag::I(Positive),
            BioTag::O,
            BioTag::B(Negative),
            BioTag::I(Positive),
        ];
        assert_eq!(
            decode_bio(&tags),
            vec![(Positive, 0, 2), (Negative, 3, 4), (Positive, 4, 5)]
        );
    }

    #[test]
    fn tag_names_round_trip() {
        for tag in BioTag::ALL {
            assert_eq!(tag.as_str().parse::<BioTag>().unwrap(), tag);
            assert_eq!(BioTag::from_index(tag.index()), Some(tag));
        }
        assert_eq!(BioTag::O.index(), 0);
        assert!("B-claim".parse::<BioTag>().is_err());
    }

    #[test]
    fn conll_dump_lists_token_tag_pairs() {
        let text = "Nice work here.";
        let a = align(text);
        let tags = vec![BioTag::B(Positive), BioTag::I(Positive), BioTag::O];
        assert_eq!(
            to_conll(text, &a, &tags),
            "Nice\tB-claim_pos\nwork\tI-claim_pos\nhere.\tO\n"
        );
    }

    #[test]
    fn tagging_chunks_partition_exactly() {
        assert_eq!(tagging_chunks(0, 512).unwrap(), vec![]);
        assert_eq!(tagging_chunks(5, 512).unwrap(), vec![(0, 5)]);
        assert_eq!(
            tagging_chunks(1100, 512).unwrap(),
            vec![(0, 512), (512, 1024), (1024, 1100)]
        );
        assert_eq!(tagging_chunks(3, 0).unwrap_err(), ChunkError::ZeroLength);
    }

    #[test]
    fn linkage_windows_follow_the_stride_rule() {
        assert_eq!(linkage_windows(0, 512, 128).unwrap(), vec![]);
        assert_eq!(linkage_windows(400, 512, 128).unwrap(), vec![(0, 400)]);
        assert_eq!(
            linkage_windows(700, 512, 128).unwrap(),
            vec![(0, 512), (128, 640), (256, 700)]
        );
        assert!(matches!(
            linkage_windows(5, 128, 128),
            Err(ChunkError::BadStride { .. })
        ));
        assert!(matches!(
            linkage_windows(5, 128, 0),
            Err(ChunkError::BadStride { .. })
        ));
    }

    /// Random token-aligned claim layouts for the round-trip property:
    /// alternating gaps and claims over a tokenized text.
    fn claim_layout() -> impl Strategy<Value = (usize, Vec<(usize, usize, bool)>)> {
        // (n_tokens, claims as (start, len, positive))
        (1usize..60).prop_flat_map(|n| {
            let claims = proptest::collection::vec(
                (0usize..n, 1usize..6, any::<bool>()),
                0..6,
            );
            (Just(n), claims)
        })
    }

    proptest! {
        #[test]
        fn bio_round_trip_is_exact((n_tokens, raw) in claim_layout()) {
            // Tokens are 1 char wide with 1-char gaps: token i = [2i, 2i+1).
            let offsets: Vec<(usize, usize)> = (0..n_tokens).map(|i| (2 * i, 2 * i + 1)).collect();
            let alignment = TokenAlignment::from_offsets(offsets);

            // Drop overlapping claims, keep first-come.
            let mut used = vec![false; n_tokens];
            let mut claims = Vec::new();
            let mut ordinals = [1u32; 2];
            let mut sorted = raw;
            sorted.sort_by_key(|&(start, len, _)| (start, len));
            for (start, len, positive) in sorted {
                let end = (start + len).min(n_tokens);
                if start >= end || used[start..end].iter().any(|&u| u) {
                    continue;
                }
                used[start..end].iter_mut().for_each(|u| *u = true);
                let polarity = if positive { Positive } else { Negative };
                let ordinal = ordinals[polarity as usize];
                ordinals[polarity as usize] += 1;
                claims.push(ArgSpan::new(
                    SpanType::claim(polarity),
                    2 * start,
                    2 * (end - 1) + 1,
                    ordinal,
                ));
            }

            let tags = encode_bio(&alignment, &claims);
            let decoded = tags_to_claims(&alignment, &tags);
            prop_assert_eq!(decoded, claims);
        }

        #[test]
        fn chunk_invariants_hold(
            n_tokens in 0usize..5000,
            max_len in 1usize..600,
            stride_frac in 1usize..100,
        ) {
            let chunks = tagging_chunks(n_tokens, max_len).unwrap();
            // Exact partition.
            let mut expected_start = 0;
            for &(start, end) in &chunks {
                prop_assert_eq!(start, expected_start);
                prop_assert!(end > start && end - start <= max_len);
                expected_start = end;
            }
            prop_assert_eq!(expected_start, n_tokens);

            if max_len >= 2 {
                let stride = (max_len * stride_frac / 100).clamp(1, max_len - 1);
                let windows = linkage_windows(n_tokens, max_len, stride).unwrap();
                if n_tokens == 0 {
                    prop_assert!(windows.is_empty());
                    return Ok(());
                }
                // Starts at multiples of the stride, full coverage, and the
                // final window reaches the end.
                for (i, &(start, end)) in windows.iter().enumerate() {
                    prop_assert_eq!(start, i * stride);
                    prop_assert_eq!(end, (start + max_len).min(n_tokens));
                }
                let (last_start, last_end) = *windows.last().unwrap();
                prop_assert_eq!(last_end, n_tokens);
                prop_assert!(last_start + max_len >= n_tokens);
                if windows.len() > 1 {
                    let penultimate = windows[windows.len() - 2].0;
                    prop_assert!(penultimate + max_len < n_tokens);
                }
                // Containment: any span short enough fits in one window.
                if max_len > stride {
                    let fit = max_len - stride;
                    for span_start in 0..n_tokens {
                        let span_end = (span_start + fit).min(n_tokens);
                        prop_assert!(
                            windows.iter().any(|&(s, e)| s <= span_start && span_end <= e),
                            "span {}..{} fits no window {:?}",
                            span_start, span_end, windows
                        );
                    }
                }
            }
        }
    }
}
