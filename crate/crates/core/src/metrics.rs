//! Evaluation: span-level claim scoring, evidence exact-match/overlap
//! scoring, token-level confusion and pipeline analysis, and a two-sided
//! Welch t-test for comparing run means.
//!
//! Every function here is pure and deterministic, and each definition is
//! simple enough to restate as a brute-force oracle; the test suite holds
//! the implementations to exact equality with those oracles.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::corpus::{AnnotatedReview, ArgSpan, SpanType};
use crate::linker::EvidenceAnswer;
use crate::spans::TokenAlignment;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricsError {
    #[error("label sequences differ in length: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("gold and prediction corpora disagree at position {index}: {gold:?} vs {pred:?}")]
    ReviewMismatch {
        index: usize,
        gold: String,
        pred: String,
    },
    #[error("need at least {need} values, got {got}")]
    TooFewValues { need: usize, got: usize },
    #[error("both samples have zero variance; t statistic is undefined")]
    ZeroVariance,
}

/// Raw matching counts behind a precision/recall/F1 triple.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PrfCounts {
    pub tp: usize,
    pub n_pred: usize,
    pub n_gold: usize,
}

impl PrfCounts {
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.n_pred)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.n_gold)
    }

    pub fn f1(&self) -> f64 {
        let p = self.precision();
        let r = self.recall();
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    fn add(&mut self, other: PrfCounts) {
        self.tp += other.tp;
        self.n_pred += other.n_pred;
        self.n_gold += other.n_gold;
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Exact-match claim span scores, per claim type and macro-averaged.
#[derive(Debug, Clone, Serialize)]
pub struct SpanPrf {
    pub per_type: BTreeMap<SpanType, PrfCounts>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

/// Scores predicted claim spans against gold for one review. A prediction
/// is a true positive only when its type, start, and end all match a gold
/// span exactly; duplicates match at most once (multiset intersection).
pub fn span_prf(gold: &[ArgSpan], pred: &[ArgSpan]) -> SpanPrf {
    span_prf_many([(gold, pred)])
}

/// [`span_prf`] accumulated over many (gold, pred) review pairs.
///
/// The macro average runs over the two claim types, excluding a type with
/// neither gold nor predicted spans anywhere. When both types are excluded
/// (no claims at all on either side) the prediction is vacuously perfect
/// and all macro values are 1.
pub fn span_prf_many<'a>(
    pairs: impl IntoIterator<Item = (&'a [ArgSpan], &'a [ArgSpan])>,
) -> SpanPrf {
    let claim_types = [SpanType::ClaimPos, SpanType::ClaimNeg];
    let mut per_type: BTreeMap<SpanType, PrfCounts> =
        claim_types.iter().map(|&t| (t, PrfCounts::default())).collect();
    for (gold, pred) in pairs {
        for &claim_type in &claim_types {
            per_type
                .get_mut(&claim_type)
                .unwrap()
                .add(match_counts(gold, pred, claim_type));
        }
    }

    let included: Vec<&PrfCounts> = per_type
        .values()
        .filter(|c| c.n_gold > 0 || c.n_pred > 0)
        .collect();
    let (macro_precision, macro_recall, macro_f1) = if included.is_empty() {
        (1.0, 1.0, 1.0)
    } else {
        let n = included.len() as f64;
        (
            included.iter().map(|c| c.precision()).sum::<f64>() / n,
            included.iter().map(|c| c.recall()).sum::<f64>() / n,
            included.iter().map(|c| c.f1()).sum::<f64>() / n,
        )
    };
    SpanPrf {
        per_type,
        macro_precision,
        macro_recall,
        macro_f1,
    }
}

fn match_counts(gold: &[ArgSpan], pred: &[ArgSpan], claim_type: SpanType) -> PrfCounts {
    let key = |s: &&ArgSpan| (s.start_char, s.end_char);
    let mut gold_multiset: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut n_gold = 0;
    for span in gold.iter().filter(|s| s.span_type == claim_type) {
        *gold_multiset.entry(key(&span)).or_default() += 1;
        n_gold += 1;
    }
    let mut tp = 0;
    let mut n_pred = 0;
    for span in pred.iter().filter(|s| s.span_type == claim_type) {
        n_pred += 1;
        if let Some(left) = gold_multiset.get_mut(&key(&span)) {
            if *left > 0 {
                *left -= 1;
                tp += 1;
            }
        }
    }
    PrfCounts { tp, n_pred, n_gold }
}

/// Exact match and token-overlap F1 between two evidence answers.
///
/// Both null is a perfect prediction, `(1, 1)`. Null on exactly one side is
/// a total miss, `(0, 0)`. For two spans, EM requires identical inclusive
/// token ranges and F1 is `2·overlap / (len_pred + len_gold)` in tokens.
/// Answer scores are ignored.
pub fn evidence_em_f1(gold: &EvidenceAnswer, pred: &EvidenceAnswer) -> (f64, f64) {
    match (gold.token_range(), pred.token_range()) {
        (None, None) => (1.0, 1.0),
        (None, Some(_)) | (Some(_), None) => (0.0, 0.0),
        (Some((gs, ge)), Some((ps, pe))) => {
            let em = if (gs, ge) == (ps, pe) { 1.0 } else { 0.0 };
            let overlap = (ge.min(pe) + 1).saturating_sub(gs.max(ps));
            let f1 = 2.0 * overlap as f64 / ((ge - gs + 1) + (pe - ps + 1)) as f64;
            (em, f1)
        }
    }
}

/// Mean EM and F1 over a set of answer pairs.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EvidenceEval {
    pub em: f64,
    pub f1: f64,
    pub n: usize,
}

pub fn evidence_eval_many<'a>(
    pairs: impl IntoIterator<Item = (&'a EvidenceAnswer, &'a EvidenceAnswer)>,
) -> EvidenceEval {
    let mut em_sum = 0.0;
    let mut f1_sum = 0.0;
    let mut n = 0;
    for (gold, pred) in pairs {
        let (em, f1) = evidence_em_f1(gold, pred);
        em_sum += em;
        f1_sum += f1;
        n += 1;
    }
    if n == 0 {
        EvidenceEval { em: 1.0, f1: 1.0, n }
    } else {
        EvidenceEval {
            em: em_sum / n as f64,
            f1: f1_sum / n as f64,
            n,
        }
    }
}

/// Number of token classes in pipeline-level evaluation.
pub const NUM_TOKEN_CLASSES: usize = 5;

/// The class of a single token once claims and evidence are both placed.
/// `None` marks tokens outside every span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenClass {
    ClaimPos,
    ClaimNeg,
    EvidencePos,
    EvidenceNeg,
    None,
}

impl TokenClass {
    pub const ALL: [TokenClass; NUM_TOKEN_CLASSES] = [
        TokenClass::ClaimPos,
        TokenClass::ClaimNeg,
        TokenClass::EvidencePos,
        TokenClass::EvidenceNeg,
        TokenClass::None,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TokenClass::ClaimPos => "claim_pos",
            TokenClass::ClaimNeg => "claim_neg",
            TokenClass::EvidencePos => "evidence_pos",
            TokenClass::EvidenceNeg => "evidence_neg",
            TokenClass::None => "none",
        }
    }

    fn from_span_type(span_type: SpanType) -> TokenClass {
        match span_type {
            SpanType::ClaimPos => TokenClass::ClaimPos,
            SpanType::ClaimNeg => TokenClass::ClaimNeg,
            SpanType::EvidencePos => TokenClass::EvidencePos,
            SpanType::EvidenceNeg => TokenClass::EvidenceNeg,
        }
    }
}

impl fmt::Display for TokenClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_str())
    }
}

/// Assigns every token its class from a span set. Claims take precedence
/// over evidence when spans from lenient (predicted) data overlap.
pub fn token_classes(alignment: &TokenAlignment, spans: &[ArgSpan]) -> Vec<TokenClass> {
    let mut classes = vec![TokenClass::None; alignment.len()];
    let mut ordered: Vec<&ArgSpan> = spans.iter().collect();
    // Evidence first so that claims overwrite it.
    ordered.sort_by_key(|s| (s.span_type.is_claim(), s.start_char, s.end_char));
    for span in ordered {
        if let Some((first, last)) = alignment.span_to_tokens(span.start_char, span.end_char) {
            let class = TokenClass::from_span_type(span.span_type);
            classes[first..last].iter_mut().for_each(|c| *c = class);
        }
    }
    classes
}

/// Token-level confusion counts between two labelings of the same tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    /// `counts[a][b]` = tokens labeled `ALL[a]` on one side, `ALL[b]` on the other.
    pub counts: [[usize; NUM_TOKEN_CLASSES]; NUM_TOKEN_CLASSES],
}

impl ConfusionMatrix {
    pub fn labels() -> [&'static str; NUM_TOKEN_CLASSES] {
        TokenClass::ALL.map(TokenClass::as_str)
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    /// Rows rescaled to sum to 1; an all-zero row stays zero.
    pub fn row_normalized(&self) -> [[f64; NUM_TOKEN_CLASSES]; NUM_TOKEN_CLASSES] {
        self.counts.map(|row| {
            let total: usize = row.iter().sum();
            row.map(|c| ratio(c, total))
        })
    }
}

/// Counts `(label_a, label_b)` pairs position by position.
pub fn token_confusion(
    labels_a: &[TokenClass],
    labels_b: &[TokenClass],
) -> Result<ConfusionMatrix, MetricsError> {
    if labels_a.len() != labels_b.len() {
        return Err(MetricsError::LengthMismatch {
            a: labels_a.len(),
            b: labels_b.len(),
        });
    }
    let mut counts = [[0usize; NUM_TOKEN_CLASSES]; NUM_TOKEN_CLASSES];
    for (&a, &b) in labels_a.iter().zip(labels_b) {
        counts[a.index()][b.index()] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

/// Token-level precision/recall/F1 for the four span classes, measured on
/// the end-to-end output where evidence predictions depend on claim
/// predictions. This is where upstream tagging errors become visible as
/// downstream evidence misses.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineEval {
    pub per_class: BTreeMap<TokenClass, PrfCounts>,
    pub n_tokens: usize,
}

/// Compares two corpora review by review at the token level. `gold` and
/// `pred` must hold the same reviews (same ids, same order, same text);
/// only their spans may differ. Tokenization is whitespace-based.
pub fn pipeline_eval(
    gold: &[AnnotatedReview],
    pred: &[AnnotatedReview],
) -> Result<PipelineEval, MetricsError> {
    if gold.len() != pred.len() {
        return Err(MetricsError::LengthMismatch {
            a: gold.len(),
            b: pred.len(),
        });
    }
    let mut per_class: BTreeMap<TokenClass, PrfCounts> = TokenClass::ALL
        .into_iter()
        .filter(|&c| c != TokenClass::None)
        .map(|c| (c, PrfCounts::default()))
        .collect();
    let mut n_tokens = 0;
    for (index, (g, p)) in gold.iter().zip(pred).enumerate() {
        if g.review.id != p.review.id || g.review.text != p.review.text {
            return Err(MetricsError::ReviewMismatch {
                index,
                gold: g.review.id.clone(),
                pred: p.review.id.clone(),
            });
        }
        let alignment = TokenAlignment::new(&g.review.text, crate::text::whitespace_tokenize);
        let gold_classes = token_classes(&alignment, &g.spans);
        let pred_classes = token_classes(&alignment, &p.spans);
        n_tokens += alignment.len();
        for (class, counts) in per_class.iter_mut() {
            for (&gc, &pc) in gold_classes.iter().zip(&pred_classes) {
                counts.add(PrfCounts {
                    tp: usize::from(gc == *class && pc == *class),
                    n_gold: usize::from(gc == *class),
                    n_pred: usize::from(pc == *class),
                });
            }
        }
    }
    Ok(PipelineEval { per_class, n_tokens })
}

/// Two-sided Welch t-test for the difference of two run-score means.
/// Returns `(t, p)`. Requires two values per side and nonzero variance in
/// at least one sample.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<(f64, f64), MetricsError> {
    for sample in [a, b] {
        if sample.len() < 2 {
            return Err(MetricsError::TooFewValues {
                need: 2,
                got: sample.len(),
            });
        }
    }
    let (mean_a, var_a) = mean_var(a);
    let (mean_b, var_b) = mean_var(b);
    let sa = var_a / a.len() as f64;
    let sb = var_b / b.len() as f64;
    if sa + sb == 0.0 {
        return Err(MetricsError::ZeroVariance);
    }
    let t = (mean_a - mean_b) / (sa + sb).sqrt();
    let df = (sa + sb).powi(2)
        / (sa.powi(2) / (a.len() as f64 - 1.0) + sb.powi(2) / (b.len() as f64 - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    let p = 2.0 * dist.cdf(-t.abs());
    Ok((t, p))
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}
