//! Non-learned reference systems for both subtasks.
//!
//! Claim tagging reduces to sentence sentiment: an opinionated sentence is
//! treated as one claim covering the whole sentence. Evidence linkage
//! reduces to similarity search: the candidate sentence most similar to the
//! claim is returned as its evidence. Both take the sentence segmenter and
//! the judgment function as injected closures, so callers can plug in
//! external classifiers; the bundled [`lexicon_sentiment`] and
//! [`token_overlap_similarity`] adapters are pure functions of their inputs
//! and make the baselines fully deterministic.

use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotatedReview, ArgSpan, Polarity, Review, SpanType};
use crate::linker::EvidenceAnswer;
use crate::spans::TokenAlignment;
use crate::text::{cp_len, cp_slice, normalize_word, segment_sentences, whitespace_tokenize};

/// Sentence boundaries as code-point offsets, ordered and non-overlapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceSegmentation {
    sentences: Vec<(usize, usize)>,
}

impl SentenceSegmentation {
    /// Wraps precomputed boundaries.
    ///
    /// Panics when a sentence is empty, out of order, overlapping, or
    /// reaches past the end of `text`.
    pub fn from_bounds(text: &str, sentences: Vec<(usize, usize)>) -> Self {
        let n = cp_len(text);
        let mut prev_end = 0;
        for &(start, end) in &sentences {
            assert!(start < end, "empty sentence ({start}, {end})");
            assert!(start >= prev_end, "sentences overlap or are unordered");
            assert!(end <= n, "sentence ({start}, {end}) exceeds text length {n}");
            prev_end = end;
        }
        SentenceSegmentation { sentences }
    }

    pub fn sentences(&self) -> &[(usize, usize)] {
        &self.sentences
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }
}

/// Punctuation-and-newline segmenter, the default for both baselines.
pub fn rule_based_segmenter(text: &str) -> SentenceSegmentation {
    SentenceSegmentation::from_bounds(text, segment_sentences(text))
}

/// Sentence-level sentiment as the claim baseline sees it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sentiment {
    Positive,
    Negative,
    Neutral,
}

/// Turns every opinionated sentence into one claim spanning that sentence.
///
/// Positive sentiment yields a positive claim, negative a negative claim,
/// neutral nothing. Claim ordinals count up per polarity in sentence order.
pub fn sentiment_claim_baseline(
    review: &Review,
    segmenter: impl Fn(&str) -> SentenceSegmentation,
    mut sentiment_fn: impl FnMut(&str) -> Sentiment,
) -> Vec<ArgSpan> {
    let segmentation = segmenter(&review.text);
    let mut next_ordinal = [1u32; 2];
    let mut claims = Vec::new();
    for &(start, end) in segmentation.sentences() {
        let sentence = cp_slice(&review.text, start, end);
        let polarity = match sentiment_fn(&sentence) {
            Sentiment::Positive => Polarity::Positive,
            Sentiment::Negative => Polarity::Negative,
            Sentiment::Neutral => continue,
        };
        let ordinal = next_ordinal[polarity as usize];
        next_ordinal[polarity as usize] += 1;
        claims.push(ArgSpan::new(SpanType::claim(polarity), start, end, ordinal));
    }
    claims
}

/// Picks the candidate sentence most similar to the claim as its evidence.
///
/// Sentences overlapping the claim are excluded so the claim cannot select
/// itself. The winning sentence comes back as an inclusive token range over
/// the review's whitespace tokens, carrying its similarity as the score.
/// Ties go to the earliest sentence. Returns null only when no candidate
/// sentence exists (the review is just the claim).
pub fn similarity_evidence_baseline(
    review: &Review,
    claim: &ArgSpan,
    segmenter: impl Fn(&str) -> SentenceSegmentation,
    mut sim_fn: impl FnMut(&str, &str) -> f64,
) -> EvidenceAnswer {
    assert!(
        claim.end_char <= cp_len(&review.text),
        "claim exceeds review bounds"
    );
    let claim_text = cp_slice(&review.text, claim.start_char, claim.end_char);
    let alignment = TokenAlignment::new(&review.text, whitespace_tokenize);
    let segmentation = segmenter(&review.text);
    let mut best: Option<(f64, usize, usize)> = None;
    for &(start, end) in segmentation.sentences() {
        if start < claim.end_char && claim.start_char < end {
            continue;
        }
        let Some((first, last)) = alignment.span_to_tokens(start, end) else {
            continue;
        };
        let score = sim_fn(&cp_slice(&review.text, start, end), &claim_text);
        if best.is_none_or(|(s, _, _)| score > s) {
            best = Some((score, first, last - 1));
        }
    }
    match best {
        Some((score, first, last)) => EvidenceAnswer::span(first, last).with_score(score),
        None => EvidenceAnswer::null(),
    }
}

/// Runs both baselines end to end on one review.
///
/// Claims come from [`sentiment_claim_baseline`]; each gets the evidence
/// sentence picked by [`similarity_evidence_baseline`], converted back to
/// character offsets. Claims may share an evidence sentence, so the output
/// is a prediction, not a valid gold annotation.
pub fn baseline_annotate(
    review: &Review,
    segmenter: impl Fn(&str) -> SentenceSegmentation,
    sentiment_fn: impl FnMut(&str) -> Sentiment,
    mut sim_fn: impl FnMut(&str, &str) -> f64,
) -> AnnotatedReview {
    let mut spans = sentiment_claim_baseline(review, &segmenter, sentiment_fn);
    let alignment = TokenAlignment::new(&review.text, whitespace_tokenize);
    let mut evidence = Vec::new();
    for claim in &spans {
        let answer = similarity_evidence_baseline(review, claim, &segmenter, &mut sim_fn);
        if let Some((first, last)) = answer.token_range() {
            let (start, end) = alignment.tokens_to_chars(first, last + 1);
            evidence.push(ArgSpan::new(
                SpanType::evidence(claim.span_type.polarity()),
                start,
                end,
                claim.claim_id,
            ));
        }
    }
    spans.extend(evidence);
    AnnotatedReview::new(review.clone(), spans)
}

/// Review-tuned sentiment words; [`lexicon_sentiment`] counts hits per side.
pub const POSITIVE_WORDS: &[&str] = &[
    "clear", "compelling", "convincing", "effective", "elegant", "excellent", "good", "great",
    "impressive", "insightful", "interesting", "novel", "robust", "solid", "sound", "strong",
    "thorough", "useful", "valuable", "well",
];

pub const NEGATIVE_WORDS: &[&str] = &[
    "bad", "confusing", "flawed", "inadequate", "incomplete", "incorrect", "insufficient",
    "limited", "misleading", "missing", "noisy", "overstated", "poor", "questionable", "shallow",
    "trivial", "unclear", "vague", "weak", "wrong",
];

/// Counts lexicon hits per polarity; the majority side wins, balance is
/// neutral. Words are lowercased and stripped of surrounding punctuation.
pub fn lexicon_sentiment(sentence: &str) -> Sentiment {
    let mut pos = 0usize;
    let mut neg = 0usize;
    for word in sentence.split_whitespace() {
        let w = normalize_word(word);
        if POSITIVE_WORDS.contains(&w.as_str()) {
            pos += 1;
        } else if NEGATIVE_WORDS.contains(&w.as_str()) {
            neg += 1;
        }
    }
    match pos.cmp(&neg) {
        std::cmp::Ordering::Greater => Sentiment::Positive,
        std::cmp::Ordering::Less => Sentiment::Negative,
        std::cmp::Ordering::Equal => Sentiment::Neutral,
    }
}

/// Bag-of-words F1 between two texts on normalized words, counting
/// multiplicity. 0.0 when either side has no words.
pub fn token_overlap_similarity(a: &str, b: &str) -> f64 {
    let bag = |text: &str| {
        let mut counts = std::collections::BTreeMap::new();
        for word in text.split_whitespace() {
            let w = normalize_word(word);
            if !w.is_empty() {
                *counts.entry(w).or_insert(0usize) += 1;
            }
        }
        counts
    };
    let (ba, bb) = (bag(a), bag(b));
    let na: usize = ba.values().sum();
    let nb: usize = bb.values().sum();
    if na == 0 || nb == 0 {
        return 0.0;
    }
    let overlap: usize = ba
        .iter()
        .map(|(w, &c)| c.min(*bb.get(w).unwrap_or(&0)))
        .sum();
    2.0 * overlap as f64 / (na + nb) as f64
}
