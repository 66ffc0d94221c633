//! Inter-annotator agreement on span annotations, and the consensus merge
//! that turns three independent annotation layers into one gold layer.
//!
//! # Unitizing agreement
//!
//! Annotators do not label pre-segmented items; each one freely partitions
//! the review into typed units (the four span types) and gaps. Agreement is
//! therefore measured with a unitizing coefficient in the Krippendorff
//! alpha family:
//!
//! ```text
//!   alpha = 1 − observed_disagreement / expected_disagreement
//! ```
//!
//! pooled over reviews, categories, and annotator pairs. The exact variant
//! implemented here is documented at [`unitizing_alpha`]; the test suite
//! validates it against a literal brute-force implementation of the same
//! definition rather than against any published tool's output.
//!
//! # Consensus
//!
//! Gold data comes from three annotators per review. Claims are merged by
//! exact token-level majority vote over the 5-class BIO labeling
//! ([`consensus_claims`]). Each merged claim is then matched back to the
//! annotator claims it came from by a 60% word-overlap rule
//! ([`match_claims`]), and their linked evidence is merged by token-level
//! majority vote ([`consensus_evidence`]).

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::Rng;
use serde::Serialize;

use crate::corpus::{
    read_records, validate_review, AnnotatedReview, ArgSpan, CorpusError, Review, SpanType,
    Violation,
};
use crate::metrics::{token_classes, token_confusion, ConfusionMatrix};
use crate::spans::{encode_bio, tags_to_claims, BioTag, TokenAlignment};
use crate::text::whitespace_tokenize;

/// One annotator's spans over a shared review.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatorLayer {
    pub annotator_id: String,
    pub spans: Vec<ArgSpan>,
}

/// A review annotated independently by several annotators.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiAnnotated {
    pub review: Review,
    pub layers: Vec<AnnotatorLayer>,
}

#[derive(Debug, thiserror::Error)]
pub enum AgreementError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("record for review {id:?} on line {line} has no annotator_id")]
    MissingAnnotatorId { id: String, line: usize },
    #[error("annotator {annotator_id:?} appears twice for review {id:?}")]
    DuplicateAnnotator { id: String, annotator_id: String },
    #[error("records for review {id:?} disagree on text or metadata")]
    InconsistentReview { id: String },
    #[error("layer {annotator_id:?} of review {id:?} violates span invariants: {violations:?}")]
    InvalidLayer {
        id: String,
        annotator_id: String,
        violations: Vec<Violation>,
    },
    #[error("review {id:?} has {got} annotation layer(s); agreement needs at least 2")]
    NotEnoughAnnotators { id: String, got: usize },
    #[error("consensus is defined for exactly 3 layers, got {got}")]
    NotThreeLayers { got: usize },
    #[error("review {id:?} has an empty continuum (no tokens)")]
    EmptyContinuum { id: String },
    #[error("unit {start}..{end} exceeds continuum length {n}")]
    UnitOutOfBounds { start: usize, end: usize, n: usize },
    #[error("span {start}..{end} by {annotator_id:?} in review {id:?} covers no tokens")]
    SpanWithoutTokens {
        id: String,
        annotator_id: String,
        start: usize,
        end: usize,
    },
    #[error("no reviews to measure agreement on")]
    NoReviews,
}

/// Loads a multi-annotator corpus: the regular JSONL format where every
/// record carries an `annotator_id` and the same review id appears once per
/// annotator. Records of one review must agree on text and metadata; each
/// layer must satisfy the span invariants on its own.
pub fn load_multi_annotator(path: impl AsRef<Path>) -> Result<Vec<MultiAnnotated>, AgreementError> {
    let records = read_records(path.as_ref()).map_err(AgreementError::Corpus)?;
    let mut order: Vec<String> = Vec::new();
    let mut grouped: BTreeMap<String, MultiAnnotated> = BTreeMap::new();
    for (line, record) in records {
        let (annotated, annotator_id) = record.into_annotated();
        let annotator_id = annotator_id.ok_or_else(|| AgreementError::MissingAnnotatorId {
            id: annotated.review.id.clone(),
            line,
        })?;
        let violations = validate_review(&annotated);
        if !violations.is_empty() {
            return Err(AgreementError::InvalidLayer {
                id: annotated.review.id,
                annotator_id,
                violations,
            });
        }
        let AnnotatedReview { review, spans } = annotated;
        let layer = AnnotatorLayer {
            annotator_id,
            spans,
        };
        match grouped.get_mut(&review.id) {
            None => {
                order.push(review.id.clone());
                grouped.insert(
                    review.id.clone(),
                    MultiAnnotated {
                        review,
                        layers: vec![layer],
                    },
                );
            }
            Some(existing) => {
                if existing.review.text != review.text
                    || existing.review.venue != review.venue
                    || existing.review.year != review.year
                {
                    return Err(AgreementError::InconsistentReview { id: review.id });
                }
                if existing
                    .layers
                    .iter()
                    .any(|l| l.annotator_id == layer.annotator_id)
                {
                    return Err(AgreementError::DuplicateAnnotator {
                        id: review.id,
                        annotator_id: layer.annotator_id,
                    });
                }
                existing.layers.push(layer);
            }
        }
    }
    Ok(order.into_iter().map(|id| grouped.remove(&id).unwrap()).collect())
}

/// A typed unit on a positional continuum, half-open.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Unit {
    pub category: SpanType,
    pub start: usize,
    pub end: usize,
}

impl Unit {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    fn intersects(&self, other: &Unit) -> bool {
        self.start < other.end && other.start < self.end
    }
}

/// One review's annotation layers reduced to typed units over a token
/// continuum of `n_positions` tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuumLayers {
    pub n_positions: usize,
    pub layers: Vec<Vec<Unit>>,
}

/// Converts a multi-annotated review to token-continuum units under
/// whitespace tokenization.
pub fn review_continuum(review: &MultiAnnotated) -> Result<ContinuumLayers, AgreementError> {
    let alignment = TokenAlignment::new(&review.review.text, whitespace_tokenize);
    if alignment.is_empty() {
        return Err(AgreementError::EmptyContinuum {
            id: review.review.id.clone(),
        });
    }
    let mut layers = Vec::with_capacity(review.layers.len());
    for layer in &review.layers {
        let mut units = Vec::with_capacity(layer.spans.len());
        for span in &layer.spans {
            let (first, last) = alignment
                .span_to_tokens(span.start_char, span.end_char)
                .ok_or_else(|| AgreementError::SpanWithoutTokens {
                    id: review.review.id.clone(),
                    annotator_id: layer.annotator_id.clone(),
                    start: span.start_char,
                    end: span.end_char,
                })?;
            units.push(Unit {
                category: span.span_type,
                start: first,
                end: last,
            });
        }
        layers.push(units);
    }
    Ok(ContinuumLayers {
        n_positions: alignment.len(),
        layers,
    })
}

/// Unitizing agreement over a set of reviews, each carrying at least two
/// annotation layers.
///
/// The definition, in full:
///
/// * Categories are the four span types; every position not covered by a
///   category unit is gap. Each category is scored in its own pass.
/// * For one review, one category, and one unordered pair of annotators,
///   the observed disagreement sums, over unit pairs `u`, `v` of that
///   category from the two annotators:
///   `(Δstart)² + (Δend)²` for every intersecting pair, plus `len(u)²` for
///   every unit that intersects no unit of the other annotator (it lies
///   entirely in the other's gap).
/// * The expected disagreement is the exact expectation of the observed
///   value when every unit independently keeps its length and category but
///   is repositioned uniformly over the continuum ([`chance_reposition`]
///   draws from exactly this distribution).
/// * `alpha = 1 − Σobserved / Σexpected`, both sums pooled over all
///   reviews, categories, and pairs. No units anywhere → 1 (agreement on
///   all-gap is perfect).
///
/// Identical layers give exactly 1.0. Chance-level annotation gives 0 in
/// expectation. Values below 0 mean systematic disagreement. Overlapping
/// units within one layer are accepted (chance repositioning can produce
/// them); callers wanting gold-data validation do it upstream.
pub fn unitizing_alpha(reviews: &[ContinuumLayers]) -> Result<f64, AgreementError> {
    if reviews.is_empty() {
        return Err(AgreementError::NoReviews);
    }
    let mut observed = 0.0;
    let mut expected = 0.0;
    for review in reviews {
        let n = review.n_positions;
        if n == 0 {
            return Err(AgreementError::EmptyContinuum { id: String::new() });
        }
        if review.layers.len() < 2 {
            return Err(AgreementError::NotEnoughAnnotators {
                id: String::new(),
                got: review.layers.len(),
            });
        }
        for units in &review.layers {
            for unit in units {
                if unit.end > n || unit.start >= unit.end {
                    return Err(AgreementError::UnitOutOfBounds {
                        start: unit.start,
                        end: unit.end,
                        n,
                    });
                }
            }
        }
        for category in SpanType::ALL {
            let per_layer: Vec<Vec<Unit>> = review
                .layers
                .iter()
                .map(|units| {
                    units
                        .iter()
                        .filter(|u| u.category == category)
                        .copied()
                        .collect()
                })
                .collect();
            for i in 0..per_layer.len() {
                for j in i + 1..per_layer.len() {
                    observed += observed_pair(&per_layer[i], &per_layer[j]);
                    expected += expected_pair(&per_layer[i], &per_layer[j], n);
                }
            }
        }
    }
    if expected == 0.0 {
        // No repositionable disagreement mass at all; only attainable with
        // observed == 0 (see expected_pair), i.e. perfect agreement.
        return Ok(1.0);
    }
    Ok(1.0 - observed / expected)
}

fn observed_pair(a: &[Unit], b: &[Unit]) -> f64 {
    let mut sum: i64 = 0;
    for u in a {
        let mut intersected = false;
        for v in b {
            if u.intersects(v) {
                intersected = true;
                let ds = u.start as i64 - v.start as i64;
                let de = u.end as i64 - v.end as i64;
                sum += ds * ds + de * de;
            }
        }
        if !intersected {
            sum += (u.len() * u.len()) as i64;
        }
    }
    for v in b {
        if !a.iter().any(|u| u.intersects(v)) {
            sum += (v.len() * v.len()) as i64;
        }
    }
    sum as f64
}

fn expected_pair(a: &[Unit], b: &[Unit], n: usize) -> f64 {
    let mut sum = 0.0;
    for u in a {
        for v in b {
            sum += expected_pair_term(u.len(), v.len(), n);
        }
        sum += expected_lonely(u.len(), b, n);
    }
    for v in b {
        sum += expected_lonely(v.len(), a, n);
    }
    sum
}

/// `E[((Δstart)² + (Δend)²) · 1{intersect}]` for two units of lengths `a`
/// and `b` placed independently and uniformly on a continuum of length `n`.
///
/// With `d = start_a − start_b`, the units intersect iff `1−a ≤ d ≤ b−1`,
/// and for fixed `d` the number of placements is
/// `min(n−a, n−b+d) − max(0, d) + 1`. The numerator is summed exactly in
/// integers.
fn expected_pair_term(a: usize, b: usize, n: usize) -> f64 {
    let (a_i, b_i, n_i) = (a as i64, b as i64, n as i64);
    let mut numerator: i128 = 0;
    for d in (1 - a_i)..=(b_i - 1) {
        let lo = 0.max(d);
        let hi = (n_i - a_i).min(n_i - b_i + d);
        if hi < lo {
            continue;
        }
        let count = (hi - lo + 1) as i128;
        let d_end = d + a_i - b_i;
        numerator += count * ((d as i128) * (d as i128) + (d_end as i128) * (d_end as i128));
    }
    let placements = (n_i - a_i + 1) as i128 * (n_i - b_i + 1) as i128;
    numerator as f64 / placements as f64
}

/// `E[len(u)² · 1{u intersects no unit of the other layer}]` under the same
/// placement model. The miss events share u's position, so the expectation
/// sums the conditional product over every position of `u` explicitly.
fn expected_lonely(len_u: usize, others: &[Unit], n: usize) -> f64 {
    let positions = n - len_u + 1;
    let mut total = 0.0;
    for s in 0..positions {
        let mut product = 1.0;
        for v in others {
            let b = v.len();
            let n_b = (n - b + 1) as f64;
            // Positions t of v with [t, t+b) disjoint from [s, s+len_u):
            // t + b ≤ s or t ≥ s + len_u, within 0..=n−b.
            let left = if s >= b { (n - b).min(s - b) + 1 } else { 0 };
            let right = if s + len_u <= n - b {
                n - b - (s + len_u) + 1
            } else {
                0
            };
            product *= (left + right) as f64 / n_b;
            if product == 0.0 {
                break;
            }
        }
        total += product;
    }
    (len_u * len_u) as f64 * total / positions as f64
}

/// Draws from the chance model behind [`unitizing_alpha`]'s expected
/// disagreement: every unit keeps its category and length and is
/// repositioned independently and uniformly over the continuum.
pub fn chance_reposition(review: &ContinuumLayers, rng: &mut impl Rng) -> ContinuumLayers {
    let n = review.n_positions;
    let layers = review
        .layers
        .iter()
        .map(|units| {
            units
                .iter()
                .map(|unit| {
                    let len = unit.len();
                    let start = rng.random_range(0..=(n - len));
                    Unit {
                        category: unit.category,
                        start,
                        end: start + len,
                    }
                })
                .collect()
        })
        .collect();
    ContinuumLayers {
        n_positions: n,
        layers,
    }
}

/// Agreement summary over a multi-annotator corpus.
#[derive(Debug, Clone, Serialize)]
pub struct AgreementReport {
    pub u_alpha: f64,
    pub n_reviews: usize,
    pub n_annotators: usize,
    pub pairwise_confusion: Vec<PairConfusion>,
}

/// Token-level confusion between two annotators over all reviews both
/// annotated, using the 5-way claim/evidence/none token classes.
#[derive(Debug, Clone, Serialize)]
pub struct PairConfusion {
    pub annotator_a: String,
    pub annotator_b: String,
    pub matrix: ConfusionMatrix,
}

/// Computes [`unitizing_alpha`] plus pairwise confusion matrices for a
/// loaded multi-annotator corpus.
pub fn agreement_report(corpus: &[MultiAnnotated]) -> Result<AgreementReport, AgreementError> {
    if corpus.is_empty() {
        return Err(AgreementError::NoReviews);
    }
    for review in corpus {
        if review.layers.len() < 2 {
            return Err(AgreementError::NotEnoughAnnotators {
                id: review.review.id.clone(),
                got: review.layers.len(),
            });
        }
    }
    let continua: Vec<ContinuumLayers> = corpus
        .iter()
        .map(review_continuum)
        .collect::<Result<_, _>>()?;
    let u_alpha = unitizing_alpha(&continua)?;

    let annotators: BTreeSet<String> = corpus
        .iter()
        .flat_map(|r| r.layers.iter().map(|l| l.annotator_id.clone()))
        .collect();
    let mut pairwise_confusion = Vec::new();
    let ids: Vec<&String> = annotators.iter().collect();
    for (i, a) in ids.iter().enumerate() {
        for b in &ids[i + 1..] {
            let mut matrix = ConfusionMatrix {
                counts: [[0; 5]; 5],
            };
            for review in corpus {
                let layer_a = review.layers.iter().find(|l| &&l.annotator_id == a);
                let layer_b = review.layers.iter().find(|l| &&l.annotator_id == b);
                let (Some(layer_a), Some(layer_b)) = (layer_a, layer_b) else {
                    continue;
                };
                let alignment = TokenAlignment::new(&review.review.text, whitespace_tokenize);
                let classes_a = token_classes(&alignment, &layer_a.spans);
                let classes_b = token_classes(&alignment, &layer_b.spans);
                let m = token_confusion(&classes_a, &classes_b).expect("same alignment");
                for (row, other) in matrix.counts.iter_mut().zip(m.counts) {
                    for (cell, o) in row.iter_mut().zip(other) {
                        *cell += o;
                    }
                }
            }
            pairwise_confusion.push(PairConfusion {
                annotator_a: (*a).clone(),
                annotator_b: (*b).clone(),
                matrix,
            });
        }
    }

    Ok(AgreementReport {
        u_alpha,
        n_reviews: corpus.len(),
        n_annotators: annotators.len(),
        pairwise_confusion,
    })
}

/// Merges exactly three annotators' claims by token-level majority vote
/// over the 5-class BIO labeling: a token keeps a label iff at least two
/// annotators assigned exactly that label (`B` and `I` are distinct);
/// otherwise it becomes `O`. The voted sequence is then decoded to spans.
pub fn consensus_claims(
    layers: &[AnnotatorLayer],
    alignment: &TokenAlignment,
) -> Result<Vec<ArgSpan>, AgreementError> {
    if layers.len() != 3 {
        return Err(AgreementError::NotThreeLayers { got: layers.len() });
    }
    let tag_rows: Vec<Vec<BioTag>> = layers
        .iter()
        .map(|layer| encode_bio(alignment, &layer.spans))
        .collect();
    let mut voted = Vec::with_capacity(alignment.len());
    for ((&a, &b), &c) in tag_rows[0].iter().zip(&tag_rows[1]).zip(&tag_rows[2]) {
        let tag = if a == b || a == c {
            a
        } else if b == c {
            b
        } else {
            BioTag::O
        };
        voted.push(tag);
    }
    Ok(tags_to_claims(alignment, &voted))
}

/// Word-overlap matching between a merged claim and one annotator's claims.
///
/// An annotator claim matches iff at least `threshold` of its
/// whitespace-delimited words overlap the merged claim, where a word counts
/// as overlapping when any of its characters falls inside the merged span.
/// The denominator is the annotator claim's own word count.
pub fn match_claims<'a>(
    merged: &ArgSpan,
    annotator_claims: &'a [ArgSpan],
    alignment: &TokenAlignment,
    threshold: f64,
) -> Vec<&'a ArgSpan> {
    annotator_claims
        .iter()
        .filter(|claim| {
            if !claim.span_type.is_claim() {
                return false;
            }
            let Some((first, last)) = alignment.span_to_tokens(claim.start_char, claim.end_char)
            else {
                return false;
            };
            let total = last - first;
            let overlapping = (first..last)
                .filter(|&t| {
                    let (ts, te) = alignment.token_span(t);
                    ts < merged.end_char && merged.start_char < te
                })
                .count();
            overlapping as f64 / total as f64 >= threshold
        })
        .collect()
}

/// Default word-overlap threshold for [`match_claims`].
pub const MATCH_THRESHOLD: f64 = 0.6;

/// Merges evidence for already-merged claims. For each merged claim, every
/// annotator contributes the union of the evidence tokens linked to their
/// matching claims; tokens kept by at least two of the three annotators
/// form the majority set, and the final evidence is its longest contiguous
/// run (earliest wins ties). No majority tokens → the claim stays
/// unsupported.
pub fn consensus_evidence(
    merged_claims: &[ArgSpan],
    layers: &[AnnotatorLayer],
    alignment: &TokenAlignment,
    threshold: f64,
) -> Result<Vec<ArgSpan>, AgreementError> {
    if layers.len() != 3 {
        return Err(AgreementError::NotThreeLayers { got: layers.len() });
    }
    let mut out = Vec::new();
    for merged in merged_claims {
        let mut votes = vec![0u8; alignment.len()];
        for layer in layers {
            let matched = match_claims(merged, &layer.spans, alignment, threshold);
            let mut member = vec![false; alignment.len()];
            for claim in matched {
                let evidence = layer.spans.iter().find(|s| {
                    s.span_type.is_evidence() && s.claim_key() == claim.claim_key()
                });
                if let Some(ev) = evidence {
                    if let Some((first, last)) =
                        alignment.span_to_tokens(ev.start_char, ev.end_char)
                    {
                        member[first..last].iter_mut().for_each(|m| *m = true);
                    }
                }
            }
            for (vote, &m) in votes.iter_mut().zip(&member) {
                *vote += u8::from(m);
            }
        }
        let majority: Vec<bool> = votes.iter().map(|&v| v >= 2).collect();
        if let Some((start, end)) = longest_run(&majority) {
            let (char_start, char_end) = alignment.tokens_to_chars(start, end);
            out.push(ArgSpan::new(
                SpanType::evidence(merged.span_type.polarity()),
                char_start,
                char_end,
                merged.claim_id,
            ));
        }
    }
    Ok(out)
}

fn longest_run(mask: &[bool]) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    let mut start = None;
    for (i, &m) in mask.iter().chain(std::iter::once(&false)).enumerate() {
        match (m, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if best.is_none_or(|(bs, be)| i - s > be - bs) {
                    best = Some((s, i));
                }
                start = None;
            }
            _ => {}
        }
    }
    best
}

/// Runs the full consensus merge for one multi-annotated review (exactly
/// three layers) and returns it as a regular gold review.
pub fn consensus_review(review: &MultiAnnotated) -> Result<AnnotatedReview, AgreementError> {
    let alignment = TokenAlignment::new(&review.review.text, whitespace_tokenize);
    let claims = consensus_claims(&review.layers, &alignment)?;
    let evidence = consensus_evidence(&claims, &review.layers, &alignment, MATCH_THRESHOLD)?;
    let mut spans = claims;
    spans.extend(evidence);
    Ok(AnnotatedReview::new(review.review.clone(), spans))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Polarity;
    use crate::testkit::{self, ReviewBuilder};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit(category: SpanType, start: usize, end: usize) -> Unit {
        Unit {
            category,
            start,
            end,
        }
    }

    fn layers_of(review: &AnnotatedReview, ids: &[&str]) -> MultiAnnotated {
        MultiAnnotated {
            review: review.review.clone(),
            layers: ids
                .iter()
                .map(|id| AnnotatorLayer {
                    annotator_id: id.to_string(),
                    spans: review.spans.clone(),
                })
                .collect(),
        }
    }

    #[test]
    fn identical_layers_agree_perfectly() {
        let review = testkit::sample_annotated_review();
        let multi = layers_of(&review, &["a", "b", "c"]);
        let continuum = review_continuum(&multi).unwrap();
        assert_eq!(unitizing_alpha(&[continuum]).unwrap(), 1.0);
    }

    #[test]
    fn identical_empty_layers_agree_perfectly() {
        let continuum = ContinuumLayers {
            n_positions: 10,
            layers: vec![vec![], vec![]],
        };
        assert_eq!(unitizing_alpha(&[continuum]).unwrap(), 1.0);
    }

    #[test]
    fn one_sided_annotation_scores_zero() {
        // One annotator marks a unit, the other marks nothing: observed
        // disagreement equals its expectation, so alpha is 0.
        let continuum = ContinuumLayers {
            n_positions: 20,
            layers: vec![vec![unit(SpanType::ClaimPos, 3, 8)], vec![]],
        };
        let alpha = unitizing_alpha(&[continuum]).unwrap();
        assert_abs_diff_eq!(alpha, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn annotator_order_does_not_matter() {
        let continuum = ContinuumLayers {
            n_positions: 30,
            layers: vec![
                vec![unit(SpanType::ClaimPos, 0, 5), unit(SpanType::ClaimNeg, 10, 18)],
                vec![unit(SpanType::ClaimPos, 1, 6)],
                vec![unit(SpanType::ClaimNeg, 11, 17), unit(SpanType::ClaimPos, 20, 24)],
            ],
        };
        let alpha = unitizing_alpha(std::slice::from_ref(&continuum)).unwrap();
        let mut flipped = continuum.clone();
        flipped.layers.reverse();
        let alpha_flipped = unitizing_alpha(&[flipped]).unwrap();
        assert_abs_diff_eq!(alpha, alpha_flipped, epsilon = 1e-12);
    }

    #[test]
    fn categories_do_not_cross_match() {
        // Same positions, different categories: each category pass sees one
        // lonely unit against an empty layer, which is no better and no
        // worse than chance. Cross-category confusion scores 0, not 1.
        let continuum = ContinuumLayers {
            n_positions: 20,
            layers: vec![
                vec![unit(SpanType::ClaimPos, 5, 10)],
                vec![unit(SpanType::ClaimNeg, 5, 10)],
            ],
        };
        let alpha = unitizing_alpha(&[continuum]).unwrap();
        assert_abs_diff_eq!(alpha, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn systematic_boundary_offsets_go_negative() {
        // Barely-intersecting same-category units disagree on boundaries by
        // far more than chance placement would.
        let continuum = ContinuumLayers {
            n_positions: 20,
            layers: vec![
                vec![unit(SpanType::ClaimPos, 0, 10)],
                vec![unit(SpanType::ClaimPos, 9, 19)],
            ],
        };
        let alpha = unitizing_alpha(&[continuum]).unwrap();
        assert!(alpha < -1.0, "alpha = {alpha}");
    }

    #[test]
    fn overlapping_same_category_units_agree_more_than_chance() {
        let continuum = ContinuumLayers {
            n_positions: 50,
            layers: vec![
                vec![unit(SpanType::EvidenceNeg, 10, 20)],
                vec![unit(SpanType::EvidenceNeg, 11, 21)],
            ],
        };
        let alpha = unitizing_alpha(&[continuum]).unwrap();
        assert!(alpha > 0.8, "alpha = {alpha}");
        assert!(alpha < 1.0);
    }

    #[test]
    fn alpha_rejects_degenerate_inputs() {
        assert!(matches!(
            unitizing_alpha(&[]),
            Err(AgreementError::NoReviews)
        ));
        let single = ContinuumLayers {
            n_positions: 10,
            layers: vec![vec![]],
        };
        assert!(matches!(
            unitizing_alpha(&[single]),
            Err(AgreementError::NotEnoughAnnotators { .. })
        ));
        let empty = ContinuumLayers {
            n_positions: 0,
            layers: vec![vec![], vec![]],
        };
        assert!(matches!(
            unitizing_alpha(&[empty]),
            Err(AgreementError::EmptyContinuum { .. })
        ));
        let bad_unit = ContinuumLayers {
            n_positions: 5,
            layers: vec![vec![unit(SpanType::ClaimPos, 3, 9)], vec![]],
        };
        assert!(matches!(
            unitizing_alpha(&[bad_unit]),
            Err(AgreementError::UnitOutOfBounds { .. })
        ));
    }

    #[test]
    fn expected_pair_term_matches_enumeration() {
        for (a, b, n) in [(2usize, 3usize, 8usize), (1, 1, 5), (4, 4, 6), (3, 5, 12)] {
            let mut total = 0.0;
            let mut count = 0.0;
            for s in 0..=(n - a) {
                for t in 0..=(n - b) {
                    count += 1.0;
                    if s < t + b && t < s + a {
                        let ds = s as f64 - t as f64;
                        let de = (s + a) as f64 - (t + b) as f64;
                        total += ds * ds + de * de;
                    }
                }
            }
            assert_abs_diff_eq!(
                expected_pair_term(a, b, n),
                total / count,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn expected_lonely_matches_enumeration() {
        // Two other units: the miss events are dependent through u's
        // position, which the joint enumeration captures.
        let n = 9;
        let u_len = 3;
        let others = vec![unit(SpanType::ClaimPos, 0, 2), unit(SpanType::ClaimPos, 0, 4)];
        let mut total = 0.0;
        let mut count = 0.0;
        for s in 0..=(n - u_len) {
            for t1 in 0..=(n - 2) {
                for t2 in 0..=(n - 4) {
                    count += 1.0;
                    let miss1 = t1 + 2 <= s || t1 >= s + u_len;
                    let miss2 = t2 + 4 <= s || t2 >= s + u_len;
                    if miss1 && miss2 {
                        total += (u_len * u_len) as f64;
                    }
                }
            }
        }
        assert_abs_diff_eq!(
            expected_lonely(u_len, &others, n),
            total / count,
            epsilon = 1e-12
        );
    }

    #[test]
    fn shuffled_units_score_zero_on_average() {
        let continuum = ContinuumLayers {
            n_positions: 120,
            layers: vec![
                vec![
                    unit(SpanType::ClaimPos, 4, 10),
                    unit(SpanType::ClaimNeg, 30, 45),
                    unit(SpanType::EvidenceNeg, 46, 60),
                    unit(SpanType::ClaimPos, 90, 96),
                ],
                vec![
                    unit(SpanType::ClaimPos, 5, 11),
                    unit(SpanType::ClaimNeg, 31, 44),
                    unit(SpanType::EvidenceNeg, 47, 61),
                ],
                vec![
                    unit(SpanType::ClaimPos, 3, 9),
                    unit(SpanType::EvidencePos, 70, 80),
                    unit(SpanType::ClaimNeg, 29, 46),
                ],
            ],
        };
        let reviews: Vec<ContinuumLayers> = (0..10).map(|_| continuum.clone()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut mean = 0.0;
        let trials = 100;
        for _ in 0..trials {
            let shuffled: Vec<ContinuumLayers> = reviews
                .iter()
                .map(|r| chance_reposition(r, &mut rng))
                .collect();
            mean += unitizing_alpha(&shuffled).unwrap();
        }
        mean /= trials as f64;
        assert!(mean.abs() < 0.05, "mean shuffled alpha = {mean}");
    }

    #[test]
    fn consensus_majority_rules() {
        let text = "alpha beta gamma delta epsilon zeta";
        let alignment = TokenAlignment::new(text, whitespace_tokenize);
        let claim = |s: usize, e: usize| {
            let (cs, ce) = alignment.tokens_to_chars(s, e);
            ArgSpan::new(SpanType::ClaimNeg, cs, ce, 1)
        };
        let layer = |spans: Vec<ArgSpan>| AnnotatorLayer {
            annotator_id: "x".to_string(),
            spans,
        };

        // Three identical layers → identical spans.
        let layers = vec![
            layer(vec![claim(1, 4)]),
            layer(vec![claim(1, 4)]),
            layer(vec![claim(1, 4)]),
        ];
        let merged = consensus_claims(&layers, &alignment).unwrap();
        assert_eq!(merged, vec![claim(1, 4)]);

        // Two annotators mark tokens 1..4, one marks nothing → majority keeps it.
        let layers = vec![
            layer(vec![claim(1, 4)]),
            layer(vec![claim(1, 4)]),
            layer(vec![]),
        ];
        assert_eq!(consensus_claims(&layers, &alignment).unwrap(), vec![claim(1, 4)]);

        // Three-way disagreement on every token → nothing survives.
        let pos = |s: usize, e: usize| {
            let (cs, ce) = alignment.tokens_to_chars(s, e);
            ArgSpan::new(SpanType::ClaimPos, cs, ce, 1)
        };
        let layers = vec![
            layer(vec![claim(1, 4)]),
            layer(vec![pos(1, 4)]),
            layer(vec![]),
        ];
        assert_eq!(consensus_claims(&layers, &alignment).unwrap(), vec![]);

        // Permuting layers never changes the result.
        let layers = vec![
            layer(vec![claim(0, 3)]),
            layer(vec![claim(1, 4)]),
            layer(vec![claim(1, 3)]),
        ];
        let merged = consensus_claims(&layers, &alignment).unwrap();
        for perm in [[0, 1, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
            let permuted: Vec<AnnotatorLayer> =
                perm.iter().map(|&i| layers[i].clone()).collect();
            assert_eq!(consensus_claims(&permuted, &alignment).unwrap(), merged);
        }

        assert!(matches!(
            consensus_claims(&layers[..2], &alignment),
            Err(AgreementError::NotThreeLayers { got: 2 })
        ));
    }

    #[test]
    fn majority_vote_distinguishes_b_from_i() {
        // Two annotators see one long claim over tokens 0..4; one sees two
        // claims split at token 2. At token 2 the votes are I, I, B → I
        // wins and the merge keeps one long claim.
        let text = "alpha beta gamma delta";
        let alignment = TokenAlignment::new(text, whitespace_tokenize);
        let long = |id: &str| AnnotatorLayer {
            annotator_id: id.to_string(),
            spans: vec![ArgSpan::new(
                SpanType::ClaimNeg,
                0,
                alignment.tokens_to_chars(0, 4).1,
                1,
            )],
        };
        let split = AnnotatorLayer {
            annotator_id: "c".to_string(),
            spans: vec![
                ArgSpan::new(SpanType::ClaimNeg, 0, alignment.tokens_to_chars(0, 2).1, 1),
                ArgSpan::new(
                    SpanType::ClaimNeg,
                    alignment.tokens_to_chars(2, 4).0,
                    alignment.tokens_to_chars(2, 4).1,
                    2,
                ),
            ],
        };
        let merged =
            consensus_claims(&[long("a"), long("b"), split], &alignment).unwrap();
        assert_eq!(merged.len(), 1);
        assert_eq!(
            (merged[0].start_char, merged[0].end_char),
            (0, alignment.tokens_to_chars(0, 4).1)
        );
    }

    #[test]
    fn match_claims_overlap_boundary() {
        // Ten-word text; merged claim covers words 0..6, annotator claim all
        // ten words: ratio exactly 6/10 → matches at threshold 0.6.
        let text = "w0 w1 w2 w3 w4 w5 w6 w7 w8 w9";
        let alignment = TokenAlignment::new(text, whitespace_tokenize);
        let merged = ArgSpan::new(
            SpanType::ClaimNeg,
            0,
            alignment.tokens_to_chars(0, 6).1,
            1,
        );
        let annotator = vec![ArgSpan::new(SpanType::ClaimNeg, 0, 29, 1)];
        assert_eq!(
            match_claims(&merged, &annotator, &alignment, MATCH_THRESHOLD).len(),
            1
        );

        // Five of ten words → 0.5 < 0.6 → no match.
        let merged_short = ArgSpan::new(
            SpanType::ClaimNeg,
            0,
            alignment.tokens_to_chars(0, 5).1,
            1,
        );
        assert!(match_claims(&merged_short, &annotator, &alignment, MATCH_THRESHOLD).is_empty());

        // Identical span always matches; zero overlap never does.
        assert_eq!(
            match_claims(&merged, &[merged], &alignment, MATCH_THRESHOLD).len(),
            1
        );
        let disjoint = vec![ArgSpan::new(
            SpanType::ClaimNeg,
            alignment.tokens_to_chars(7, 9).0,
            alignment.tokens_to_chars(7, 9).1,
            1,
        )];
        assert!(match_claims(&merged, &disjoint, &alignment, MATCH_THRESHOLD).is_empty());
    }

    #[test]
    fn consensus_evidence_votes_tokens() {
        // Tokens: 0..3 claim region, evidence candidates over 4..12.
        let text = "c0 c1 c2 e0 e1 e2 e3 e4 e5 e6 e7 e8";
        let alignment = TokenAlignment::new(text, whitespace_tokenize);
        let chars = |s, e| alignment.tokens_to_chars(s, e);
        let claim_span = {
            let (cs, ce) = chars(0, 3);
            ArgSpan::new(SpanType::ClaimNeg, cs, ce, 1)
        };
        let evidence = |s, e| {
            let (cs, ce) = chars(s, e);
            ArgSpan::new(SpanType::EvidenceNeg, cs, ce, 1)
        };
        let layer = |id: &str, spans: Vec<ArgSpan>| AnnotatorLayer {
            annotator_id: id.to_string(),
            spans,
        };

        // Identical evidence from all three → that span.
        let layers = vec![
            layer("a", vec![claim_span, evidence(4, 9)]),
            layer("b", vec![claim_span, evidence(4, 9)]),
            layer("c", vec![claim_span, evidence(4, 9)]),
        ];
        let merged = consensus_claims(&layers, &alignment).unwrap();
        let ev = consensus_evidence(&merged, &layers, &alignment, MATCH_THRESHOLD).unwrap();
        assert_eq!(ev, vec![evidence(4, 9)]);

        // Only one annotator links evidence → no majority → unsupported.
        let layers = vec![
            layer("a", vec![claim_span, evidence(4, 9)]),
            layer("b", vec![claim_span]),
            layer("c", vec![claim_span]),
        ];
        let merged = consensus_claims(&layers, &alignment).unwrap();
        let ev = consensus_evidence(&merged, &layers, &alignment, MATCH_THRESHOLD).unwrap();
        assert!(ev.is_empty());

        // Two overlapping spans, one disjoint → the overlap of the two wins.
        let layers = vec![
            layer("a", vec![claim_span, evidence(4, 8)]),
            layer("b", vec![claim_span, evidence(6, 11)]),
            layer("c", vec![claim_span, evidence(11, 12)]),
        ];
        let merged = consensus_claims(&layers, &alignment).unwrap();
        let ev = consensus_evidence(&merged, &layers, &alignment, MATCH_THRESHOLD).unwrap();
        assert_eq!(ev, vec![evidence(6, 8)]);

        // Consensus evidence stays inside the union of contributors.
        let union_start = chars(4, 12).0;
        let union_end = chars(4, 12).1;
        assert!(ev[0].start_char >= union_start && ev[0].end_char <= union_end);
    }

    #[test]
    fn longest_run_prefers_earliest_on_ties() {
        assert_eq!(longest_run(&[false, true, true, false, true, true]), Some((1, 3)));
        assert_eq!(longest_run(&[true, false, true, true]), Some((2, 4)));
        assert_eq!(longest_run(&[false, false]), None);
        assert_eq!(longest_run(&[]), None);
    }

    #[test]
    fn multi_annotator_loader_groups_and_validates() {
        let review = testkit::sample_annotated_review();
        let multi = layers_of(&review, &["a", "b", "c"]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("multi.jsonl");
        let mut lines = Vec::new();
        for layer in &multi.layers {
            let record = crate::corpus::ReviewRecord::from_annotated(
                &AnnotatedReview::new(multi.review.clone(), layer.spans.clone()),
                Some(&layer.annotator_id),
            );
            lines.push(serde_json::to_string(&record).unwrap());
        }
        std::fs::write(&path, lines.join("\n")).unwrap();

        let loaded = load_multi_annotator(&path).unwrap();
        assert_eq!(loaded.len(), 1);
        assert_eq!(loaded[0].layers.len(), 3);
        assert_eq!(loaded[0].layers[0].annotator_id, "a");
        assert_eq!(loaded[0], multi);

        let report = agreement_report(&loaded).unwrap();
        assert_eq!(report.u_alpha, 1.0);
        assert_eq!(report.n_reviews, 1);
        assert_eq!(report.n_annotators, 3);
        assert_eq!(report.pairwise_confusion.len(), 3);
        for pair in &report.pairwise_confusion {
            let m = &pair.matrix;
            let diag: usize = (0..5).map(|i| m.counts[i][i]).sum();
            assert_eq!(diag, m.total());
        }
    }

    #[test]
    fn loader_rejects_missing_or_duplicate_annotators() {
        let review = ReviewBuilder::new("r1").plain("Some text here.").build();
        let dir = tempfile::tempdir().unwrap();

        let path = dir.path().join("missing.jsonl");
        let record = crate::corpus::ReviewRecord::from_annotated(&review, None);
        std::fs::write(&path, serde_json::to_string(&record).unwrap()).unwrap();
        assert!(matches!(
            load_multi_annotator(&path),
            Err(AgreementError::MissingAnnotatorId { .. })
        ));

        let path = dir.path().join("dup.jsonl");
        let record = crate::corpus::ReviewRecord::from_annotated(&review, Some("a"));
        let line = serde_json::to_string(&record).unwrap();
        std::fs::write(&path, format!("{line}\n{line}\n")).unwrap();
        assert!(matches!(
            load_multi_annotator(&path),
            Err(AgreementError::DuplicateAnnotator { .. })
        ));
    }

    #[test]
    fn consensus_review_roundtrip_on_identical_layers() {
        let review = testkit::sample_annotated_review();
        let multi = layers_of(&review, &["a", "b", "c"]);
        let merged = consensus_review(&multi).unwrap();
        // Claims survive at token granularity and evidence links intact.
        assert_eq!(merged.claims().count(), 4);
        assert_eq!(merged.evidence().count(), 2);
        assert!(merged.evidence_for(Polarity::Negative, 1).is_some());
        assert!(merged.evidence_for(Polarity::Negative, 2).is_some());
        assert!(validate_review(&merged).is_empty());
    }
}
