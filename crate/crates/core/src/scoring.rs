//! Review-level substantiation scoring and corpus-level statistics.
//!
//! A review that makes claims without backing them up is less useful to
//! authors and editors than one that justifies them. The substantiation
//! score captures this in one number per review:
//!
//! ```text
//!   score = (%supported claims / 100) × review length in words
//! ```
//!
//! A review with no claims at all is treated as fully objective
//! (100% supported), so long factual reviews score high and long opinionated
//! but unsupported reviews score low. Validation against human ratings goes
//! through Spearman rank correlation ([`correlate_human`]).

use std::collections::BTreeMap;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::corpus::{AnnotatedReview, Polarity};
use crate::text::word_count;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ScoringError {
    #[error("inputs differ in length: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("need at least {need} paired values, got {got}")]
    TooFewValues { need: usize, got: usize },
    #[error("correlation is undefined for constant input")]
    ConstantInput,
    #[error("corpus is empty")]
    EmptyCorpus,
}

/// Substantiation accounting for one review.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubstanRecord {
    pub review_id: String,
    pub n_claims_pos: usize,
    pub n_claims_neg: usize,
    pub n_supported_pos: usize,
    pub n_supported_neg: usize,
    /// Percentage of claims with linked evidence; 100 when there are no
    /// claims at all.
    pub pct_supported: f64,
    /// Whitespace word count of the review text.
    pub review_len_words: usize,
    /// `(pct_supported / 100) × review_len_words`.
    pub score: f64,
}

impl SubstanRecord {
    pub fn n_claims(&self) -> usize {
        self.n_claims_pos + self.n_claims_neg
    }

    pub fn n_supported(&self) -> usize {
        self.n_supported_pos + self.n_supported_neg
    }
}

/// Counts claims and their evidence links and computes the score. A claim
/// is supported iff an evidence span links to it.
pub fn substan_score(review: &AnnotatedReview) -> SubstanRecord {
    let mut n_claims = [0usize; 2];
    let mut n_supported = [0usize; 2];
    for claim in review.claims() {
        let polarity = claim.span_type.polarity();
        n_claims[polarity as usize] += 1;
        if review.evidence_for(polarity, claim.claim_id).is_some() {
            n_supported[polarity as usize] += 1;
        }
    }
    let total_claims = n_claims[0] + n_claims[1];
    let pct_supported = if total_claims == 0 {
        100.0
    } else {
        100.0 * (n_supported[0] + n_supported[1]) as f64 / total_claims as f64
    };
    let review_len_words = word_count(&review.review.text);
    SubstanRecord {
        review_id: review.review.id.clone(),
        n_claims_pos: n_claims[Polarity::Positive as usize],
        n_claims_neg: n_claims[Polarity::Negative as usize],
        n_supported_pos: n_supported[Polarity::Positive as usize],
        n_supported_neg: n_supported[Polarity::Negative as usize],
        pct_supported,
        review_len_words,
        score: pct_supported / 100.0 * review_len_words as f64,
    }
}

/// Per-(venue, year) means of claim counts, supported percentages, and
/// review length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VenueStats {
    pub venue: String,
    pub year: i32,
    pub mean_claims_pos: f64,
    pub mean_claims_neg: f64,
    pub mean_claims_all: f64,
    /// Mean over reviews with ≥1 positive claim; NaN when no review has one.
    pub mean_pct_supported_pos: f64,
    /// Mean over reviews with ≥1 negative claim; NaN when no review has one.
    pub mean_pct_supported_neg: f64,
    /// Mean over reviews with ≥1 claim of either polarity.
    pub mean_pct_supported_all: f64,
    pub mean_len_words: f64,
    pub n_reviews: usize,
}

/// Groups the corpus by (venue, year) and averages per-review statistics.
///
/// Claim counts and review length average over every review in the group.
/// Supported percentages average only over reviews that have claims of the
/// relevant polarity (or any claims, for the `all` column): a review that
/// makes no claims says nothing about how well claims are supported.
/// Groups come back sorted by venue, then year.
pub fn corpus_stats(corpus: &[AnnotatedReview]) -> Result<Vec<VenueStats>, ScoringError> {
    if corpus.is_empty() {
        return Err(ScoringError::EmptyCorpus);
    }
    let mut groups: BTreeMap<(String, i32), Vec<SubstanRecord>> = BTreeMap::new();
    for review in corpus {
        groups
            .entry((review.review.venue.clone(), review.review.year))
            .or_default()
            .push(substan_score(review));
    }
    Ok(groups
        .into_iter()
        .map(|((venue, year), records)| {
            let n = records.len();
            let mean = |f: &dyn Fn(&SubstanRecord) -> f64| {
                records.iter().map(f).sum::<f64>() / n as f64
            };
            let mean_where = |keep: &dyn Fn(&SubstanRecord) -> bool,
                              value: &dyn Fn(&SubstanRecord) -> f64| {
                let kept: Vec<f64> = records.iter().filter(|r| keep(r)).map(value).collect();
                kept.iter().sum::<f64>() / kept.len() as f64
            };
            let pct = |supported: usize, claims: usize| 100.0 * supported as f64 / claims as f64;
            VenueStats {
                venue,
                year,
                mean_claims_pos: mean(&|r| r.n_claims_pos as f64),
                mean_claims_neg: mean(&|r| r.n_claims_neg as f64),
                mean_claims_all: mean(&|r| r.n_claims() as f64),
                mean_pct_supported_pos: mean_where(
                    &|r| r.n_claims_pos > 0,
                    &|r| pct(r.n_supported_pos, r.n_claims_pos),
                ),
                mean_pct_supported_neg: mean_where(
                    &|r| r.n_claims_neg > 0,
                    &|r| pct(r.n_supported_neg, r.n_claims_neg),
                ),
                mean_pct_supported_all: mean_where(
                    &|r| r.n_claims() > 0,
                    &|r| pct(r.n_supported(), r.n_claims()),
                ),
                mean_len_words: mean(&|r| r.review_len_words as f64),
                n_reviews: n,
            }
        })
        .collect())
}

/// Spearman rank correlation with average ranks for ties, plus a two-sided
/// p-value from the t approximation `t = ρ·√((n−2)/(1−ρ²))` on n−2 degrees
/// of freedom. Needs at least 3 pairs and non-constant inputs.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<(f64, f64), ScoringError> {
    if xs.len() != ys.len() {
        return Err(ScoringError::LengthMismatch {
            a: xs.len(),
            b: ys.len(),
        });
    }
    if xs.len() < 3 {
        return Err(ScoringError::TooFewValues {
            need: 3,
            got: xs.len(),
        });
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let rho = pearson(&rx, &ry)?;
    let n = xs.len() as f64;
    let p = if rho.abs() >= 1.0 {
        0.0
    } else {
        let t = rho * ((n - 2.0) / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, n - 2.0).expect("df > 0");
        2.0 * dist.cdf(-t.abs())
    };
    Ok((rho, p))
}

/// [`spearman`] between substantiation scores and integer human ratings.
pub fn correlate_human(
    records: &[SubstanRecord],
    ratings: &[i32],
) -> Result<(f64, f64), ScoringError> {
    if records.len() != ratings.len() {
        return Err(ScoringError::LengthMismatch {
            a: records.len(),
            b: ratings.len(),
        });
    }
    let xs: Vec<f64> = records.iter().map(|r| r.score).collect();
    let ys: Vec<f64> = ratings.iter().map(|&r| f64::from(r)).collect();
    spearman(&xs, &ys)
}

/// Pairs every review carrying a human substantiation rating with its score
/// and correlates the two.
pub fn correlate_corpus(corpus: &[AnnotatedReview]) -> Result<(f64, f64), ScoringError> {
    let mut scores = Vec::new();
    let mut ratings = Vec::new();
    for review in corpus {
        if let Some(rating) = review.review.human_substantiation {
            scores.push(substan_score(review).score);
            ratings.push(f64::from(rating));
        }
    }
    spearman(&scores, &ratings)
}

/// 1-based ranks; tied values share the average of their rank positions.
fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        // Positions i..=j (0-based) share ranks i+1..=j+1.
        let shared = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = shared;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, ScoringError> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx).powi(2);
        vy += (y - my).powi(2);
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(ScoringError::ConstantInput);
    }
    Ok(cov / (vx * vy).sqrt())
}
