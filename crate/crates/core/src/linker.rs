//! Evidence linkage: given a claim, find the review span that backs it.
//!
//! The task is cast as extractive reading. For each claim the model reads
//! the sequence
//!
//! ```text
//!   [CLS] claim tokens [SEP] review tokens
//! ```
//!
//! and predicts a start and an end position over the review tokens, or the
//! `[CLS]` position to say "this claim has no evidence". Reviews longer than
//! the encoder budget are read through overlapping windows
//! ([`crate::spans::linkage_windows`]) and the best-scoring answer across
//! windows wins.
//!
//! Training mirrors the tagger: one seeded generator drives initialization
//! and batch order, gradients accumulate per batch for AdamW under a
//! triangular learning-rate schedule, and early stopping watches exact
//! match on a held-out tenth of the reviews. Every window of every query is
//! one training sequence whose start/end targets point at the gold span
//! when the window fully contains it and at the sentinel otherwise.

use std::path::Path;

use ndarray::{Array2, ArrayView1};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{split_corpus, AnnotatedReview, ArgSpan, SpanType};
use crate::encoder::{
    read_weights, write_weights, EncoderBackend, EncoderCore, EncoderError, EncoderSpec, Vocab,
    CLS_ID, SEP_ID,
};
use crate::metrics::evidence_em_f1;
use crate::nn::{position_cross_entropy, AdamW, AnyParam, Linear, Tensors};
use crate::spans::{linkage_windows, TokenAlignment};
use crate::tagger::{EpochRecord, TrainingLog};
use crate::text::{whitespace_tokenize, Tokenizer};

pub const LINKER_TASK: &str = "evidence_linkage";

/// Output order of the two-column position head, pinned in artifacts.
const HEAD_ORDER: [&str; 2] = ["start", "end"];

/// The outcome of evidence linkage for one claim. Token indices are
/// inclusive positions into the review's tokens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EvidenceAnswer {
    /// The claim is unsupported.
    Null { score: f64 },
    /// The evidence spans review tokens `start_token..=end_token`.
    Span {
        start_token: usize,
        end_token: usize,
        score: f64,
    },
}

impl EvidenceAnswer {
    pub fn null() -> Self {
        EvidenceAnswer::Null { score: 0.0 }
    }

    pub fn span(start_token: usize, end_token: usize) -> Self {
        assert!(start_token <= end_token, "inverted span {start_token}..={end_token}");
        EvidenceAnswer::Span {
            start_token,
            end_token,
            score: 0.0,
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, EvidenceAnswer::Null { .. })
    }

    /// Inclusive review-token range, when the answer is a span.
    pub fn token_range(&self) -> Option<(usize, usize)> {
        match *self {
            EvidenceAnswer::Null { .. } => None,
            EvidenceAnswer::Span {
                start_token,
                end_token,
                ..
            } => Some((start_token, end_token)),
        }
    }

    pub fn score(&self) -> f64 {
        match *self {
            EvidenceAnswer::Null { score } | EvidenceAnswer::Span { score, .. } => score,
        }
    }

    pub fn with_score(self, score: f64) -> Self {
        match self {
            EvidenceAnswer::Null { .. } => EvidenceAnswer::Null { score },
            EvidenceAnswer::Span {
                start_token,
                end_token,
                ..
            } => EvidenceAnswer::Span {
                start_token,
                end_token,
                score,
            },
        }
    }
}

/// One linkage instance: a claim, the review it came from, and (for
/// training data) the gold answer.
///
/// The model-side sequence is `sentinel + claim_tokens + sentinel +
/// review_tokens`; it is materialized per window at scoring time, so the
/// query stores the two token lists separately.
#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceQuery {
    /// The claim being asked about, with its character span and ordinal.
    pub claim: ArgSpan,
    pub claim_tokens: Vec<String>,
    pub review_tokens: Vec<String>,
    /// Gold answer, attached when built from annotated data.
    pub gold: Option<EvidenceAnswer>,
}

impl EvidenceQuery {
    /// Length of the model-side sequence including the two sentinels.
    pub fn concatenated_len(&self) -> usize {
        self.claim_tokens.len() + self.review_tokens.len() + 2
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LinkerError {
    #[error("claim {polarity} {claim_id} in review {review_id:?} covers no tokens")]
    ClaimWithoutTokens {
        review_id: String,
        polarity: crate::corpus::Polarity,
        claim_id: u32,
    },
    #[error("evidence for claim {polarity} {claim_id} in review {review_id:?} covers no tokens")]
    EvidenceWithoutTokens {
        review_id: String,
        polarity: crate::corpus::Polarity,
        claim_id: u32,
    },
    #[error(
        "claim of {claim_tokens} tokens plus sentinels exceeds the window length {max_len}"
    )]
    ClaimTooLong { claim_tokens: usize, max_len: usize },
    #[error("review has no tokens")]
    EmptyReview,
    #[error("no training queries in the corpus")]
    EmptyTraining,
    #[error(transparent)]
    Chunk(#[from] crate::spans::ChunkError),
    #[error("invalid config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error("model artifact: {0}")]
    Io(#[from] std::io::Error),
    #[error("model artifact: {0}")]
    Json(#[from] serde_json::Error),
    #[error("artifact is for task {got:?}, expected {want:?}")]
    WrongTask { got: String, want: String },
    #[error("artifact head order {got:?} does not match this build")]
    HeadOrder { got: Vec<String> },
}

/// Builds one query per gold claim, in claim order, with gold answers
/// attached: the claim's linked evidence mapped to inclusive token indices,
/// or null when the claim has no evidence.
pub fn build_queries(
    review: &AnnotatedReview,
    alignment: &TokenAlignment,
) -> Result<Vec<EvidenceQuery>, LinkerError> {
    let claims: Vec<ArgSpan> = review.claims().copied().collect();
    let mut queries = build_claim_queries(&review.review.text, &claims, alignment, &review.review.id)?;
    for query in &mut queries {
        let (polarity, claim_id) = query.claim.claim_key();
        let gold = match review.evidence_for(polarity, claim_id) {
            None => EvidenceAnswer::null(),
            Some(ev) => {
                let (first, last) = alignment
                    .span_to_tokens(ev.start_char, ev.end_char)
                    .ok_or_else(|| LinkerError::EvidenceWithoutTokens {
                        review_id: review.review.id.clone(),
                        polarity,
                        claim_id,
                    })?;
                EvidenceAnswer::span(first, last - 1)
            }
        };
        query.gold = Some(gold);
    }
    Ok(queries)
}

/// Builds queries for externally supplied (e.g. predicted) claims, without
/// gold answers. Non-claim spans in `claims` are ignored.
pub fn build_claim_queries(
    text: &str,
    claims: &[ArgSpan],
    alignment: &TokenAlignment,
    review_id: &str,
) -> Result<Vec<EvidenceQuery>, LinkerError> {
    let review_tokens: Vec<String> = (0..alignment.len())
        .map(|i| alignment.token_text(text, i))
        .collect();
    let mut claims: Vec<&ArgSpan> = claims.iter().filter(|s| s.span_type.is_claim()).collect();
    claims.sort_by_key(|s| (s.start_char, s.end_char, s.span_type, s.claim_id));
    claims
        .into_iter()
        .map(|&claim| {
            let (first, last) = alignment
                .span_to_tokens(claim.start_char, claim.end_char)
                .ok_or_else(|| LinkerError::ClaimWithoutTokens {
                    review_id: review_id.to_string(),
                    polarity: claim.span_type.polarity(),
                    claim_id: claim.claim_id,
                })?;
            Ok(EvidenceQuery {
                claim,
                claim_tokens: review_tokens[first..last].to_vec(),
                review_tokens: review_tokens.clone(),
                gold: None,
            })
        })
        .collect()
}

/// Training and inference knobs for the linkage model. The training fields
/// mirror the tagger's; the last three control windowed reading and the
/// null answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkerConfig {
    pub encoder_id: String,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub weight_decay: f64,
    pub early_stop_patience: usize,
    pub seed: u64,
    /// Sequence budget per window, counting the claim and both sentinels.
    pub max_len: usize,
    /// Review-token spacing between window starts; clamped per query so it
    /// stays below the window's review budget.
    pub stride: usize,
    /// Longest answer considered, in review tokens.
    pub max_answer_len: usize,
    /// Added to the null score before it competes with span scores;
    /// positive values favor abstaining.
    pub null_bias: f64,
}

impl Default for LinkerConfig {
    fn default() -> Self {
        LinkerConfig {
            encoder_id: "tiny".to_string(),
            learning_rate: 3e-3,
            batch_size: 8,
            max_epochs: 10,
            weight_decay: 0.01,
            early_stop_patience: 3,
            seed: 13,
            max_len: 512,
            stride: 128,
            max_answer_len: 200,
            null_bias: 0.0,
        }
    }
}

impl LinkerConfig {
    pub fn validate(&self) -> Result<(), LinkerError> {
        let fail = |msg: &str| Err(LinkerError::BadConfig(msg.to_string()));
        if self.batch_size < 1 {
            return fail("batch_size must be at least 1");
        }
        if self.max_epochs < 1 {
            return fail("max_epochs must be at least 1");
        }
        // Written to also reject NaN.
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return fail("weight_decay must be non-negative and finite");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail("learning_rate must be positive and finite");
        }
        if self.max_len < 8 {
            return fail("max_len must be at least 8");
        }
        if self.stride < 1 {
            return fail("stride must be at least 1");
        }
        if self.max_answer_len < 1 {
            return fail("max_answer_len must be at least 1");
        }
        if !self.null_bias.is_finite() {
            return fail("null_bias must be finite");
        }
        Ok(())
    }
}

/// Trained linkage model. Cheap to clone; clone per worker for parallel
/// scoring, since scoring mutates internal caches.
#[derive(Debug, Clone)]
pub struct LinkerModel {
    pub config: LinkerConfig,
    pub vocab: Vocab,
    pub log: TrainingLog,
    encoder: EncoderCore,
    head: Linear,
}

impl Tensors for LinkerModel {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut dyn AnyParam)) {
        self.encoder.visit_params(f);
        self.head.visit_params(f);
    }
}

impl LinkerModel {
    /// Predicts with the window geometry the model was trained with.
    pub fn predict(&mut self, q: &EvidenceQuery) -> Result<EvidenceAnswer, LinkerError> {
        let (max_len, stride, cap) = (
            self.config.max_len,
            self.config.stride,
            self.config.max_answer_len,
        );
        predict_evidence(self, q, max_len, stride, cap)
    }

    fn predict_plan(&mut self, plan: &QueryPlan, max_answer_len: usize) -> EvidenceAnswer {
        let off = plan.prefix.len();
        let mut best: Option<EvidenceAnswer> = None;
        for &(ws, we) in &plan.windows {
            let feats = self.encoder.forward(&plan.window_ids(ws, we));
            let logits = self.head.apply(&feats);
            let cand = window_best(
                logits.column(0),
                logits.column(1),
                off,
                ws,
                we - ws,
                max_answer_len,
                self.config.null_bias,
            );
            if best.as_ref().is_none_or(|cur| prefer(cur, &cand)) {
                best = Some(cand);
            }
        }
        best.expect("a plan always has at least one window")
    }
}

/// One query resolved against a vocabulary and a window geometry: the
/// encoded `[CLS] claim [SEP]` prefix, the encoded review, the review-token
/// ranges of the windows, and the gold answer when known.
struct QueryPlan {
    prefix: Vec<usize>,
    review_ids: Vec<usize>,
    windows: Vec<(usize, usize)>,
    gold: Option<EvidenceAnswer>,
}

impl QueryPlan {
    fn window_ids(&self, ws: usize, we: usize) -> Vec<usize> {
        let mut ids = Vec::with_capacity(self.prefix.len() + we - ws);
        ids.extend_from_slice(&self.prefix);
        ids.extend_from_slice(&self.review_ids[ws..we]);
        ids
    }
}

fn plan_query(
    q: &EvidenceQuery,
    vocab: &Vocab,
    max_len: usize,
    stride: usize,
) -> Result<QueryPlan, LinkerError> {
    let claim_ids = vocab.encode(&q.claim_tokens);
    if claim_ids.len() + 2 >= max_len {
        return Err(LinkerError::ClaimTooLong {
            claim_tokens: claim_ids.len(),
            max_len,
        });
    }
    if q.review_tokens.is_empty() {
        return Err(LinkerError::EmptyReview);
    }
    let budget = max_len - claim_ids.len() - 2;
    let n = q.review_tokens.len();
    let windows = if n <= budget {
        vec![(0, n)]
    } else {
        linkage_windows(n, budget, stride.min(budget - 1).max(1))?
    };
    let mut prefix = Vec::with_capacity(claim_ids.len() + 2);
    prefix.push(CLS_ID);
    prefix.extend_from_slice(&claim_ids);
    prefix.push(SEP_ID);
    Ok(QueryPlan {
        prefix,
        review_ids: vocab.encode(&q.review_tokens),
        windows,
        gold: q.gold,
    })
}

/// One training sequence: a window of a query with its position targets.
struct WindowItem {
    ids: Vec<usize>,
    start_target: usize,
    end_target: usize,
}

fn window_items(plan: &QueryPlan) -> Vec<WindowItem> {
    let off = plan.prefix.len();
    let gold = plan.gold.unwrap_or(EvidenceAnswer::null());
    plan.windows
        .iter()
        .map(|&(ws, we)| {
            let (start_target, end_target) = match gold.token_range() {
                Some((gs, ge)) if ws <= gs && ge < we => (off + gs - ws, off + ge - ws),
                _ => (0, 0),
            };
            WindowItem {
                ids: plan.window_ids(ws, we),
                start_target,
                end_target,
            }
        })
        .collect()
}

fn corpus_plans(
    reviews: &[&AnnotatedReview],
    vocab: &Vocab,
    config: &LinkerConfig,
) -> Result<Vec<QueryPlan>, LinkerError> {
    let mut plans = Vec::new();
    for r in reviews {
        let alignment = TokenAlignment::new(&r.review.text, whitespace_tokenize);
        for q in build_queries(r, &alignment)? {
            plans.push(plan_query(&q, vocab, config.max_len, config.stride)?);
        }
    }
    Ok(plans)
}

fn mean_exact_match(model: &mut LinkerModel, plans: &[QueryPlan]) -> f64 {
    if plans.is_empty() {
        return 0.0;
    }
    let cap = model.config.max_answer_len;
    let mut sum = 0.0;
    for plan in plans {
        let gold = plan.gold.unwrap_or(EvidenceAnswer::null());
        let pred = model.predict_plan(plan, cap);
        sum += evidence_em_f1(&gold, &pred).0;
    }
    sum / plans.len() as f64
}

/// Best answer within one window, in review-token coordinates.
///
/// Scans every (start, end) pair with `start <= end` and `end - start <
/// max_answer_len`, scoring each as `start_logit + end_logit`; ties keep
/// the earliest start, then the shortest span. The sentinel's score plus
/// the null bias wins only when it strictly exceeds the best pair.
fn window_best(
    start: ArrayView1<f64>,
    end: ArrayView1<f64>,
    off: usize,
    window_start: usize,
    window_len: usize,
    max_answer_len: usize,
    null_bias: f64,
) -> EvidenceAnswer {
    let null_score = start[0] + end[0] + null_bias;
    let mut best: Option<(usize, usize, f64)> = None;
    for i in 0..window_len {
        for j in i..(i + max_answer_len).min(window_len) {
            let score = start[off + i] + end[off + j];
            if best.is_none_or(|(_, _, b)| score > b) {
                best = Some((i, j, score));
            }
        }
    }
    match best {
        Some((i, j, score)) if null_score <= score => EvidenceAnswer::Span {
            start_token: window_start + i,
            end_token: window_start + j,
            score,
        },
        _ => EvidenceAnswer::Null { score: null_score },
    }
}

/// Whether `cand` beats `cur` in cross-window aggregation: higher score
/// wins; an exact tie prefers a span over null and otherwise keeps the
/// earlier window.
fn prefer(cur: &EvidenceAnswer, cand: &EvidenceAnswer) -> bool {
    cand.score() > cur.score() || (cand.score() == cur.score() && cur.is_null() && !cand.is_null())
}

/// Trains a fresh model. Deterministic given (corpus, config, seed): every
/// random choice draws from one seeded generator in a fixed order.
pub fn train_linker(
    corpus: &[AnnotatedReview],
    config: &LinkerConfig,
    backend: &dyn EncoderBackend,
) -> Result<LinkerModel, LinkerError> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(LinkerError::EmptyTraining);
    }
    let vocab = Vocab::build(corpus.iter().map(|r| r.review.text.as_str()));
    let encoder = backend.instantiate(&config.encoder_id, vocab.len(), config.seed)?;
    if config.max_len > encoder.spec.max_positions {
        return Err(LinkerError::BadConfig(format!(
            "max_len {} exceeds encoder positions {}",
            config.max_len, encoder.spec.max_positions
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let head = Linear::new(&mut rng, encoder.spec.dim, 2);

    let early = config.early_stop_patience < config.max_epochs;
    let (train_own, val_own) = if early {
        split_corpus(corpus.to_vec(), 0.1, config.seed).expect("0.1 is a valid fraction")
    } else {
        (corpus.to_vec(), Vec::new())
    };
    // With no usable carve-out, validate on the training data itself.
    let (train_refs, val_refs): (Vec<&AnnotatedReview>, Vec<&AnnotatedReview>) =
        if train_own.is_empty() || val_own.is_empty() {
            (corpus.iter().collect(), corpus.iter().collect())
        } else {
            (train_own.iter().collect(), val_own.iter().collect())
        };

    let train_plans = corpus_plans(&train_refs, &vocab, config)?;
    let val_plans = corpus_plans(&val_refs, &vocab, config)?;
    let items: Vec<WindowItem> = train_plans.iter().flat_map(window_items).collect();
    if items.is_empty() {
        return Err(LinkerError::EmptyTraining);
    }

    let mut model = LinkerModel {
        config: config.clone(),
        vocab,
        log: TrainingLog::default(),
        encoder,
        head,
    };
    let mut opt = AdamW::new(config.learning_rate, config.weight_decay);
    let mut log = TrainingLog::default();
    let mut best = f64::NEG_INFINITY;
    let mut epochs_since_best = 0;

    let steps_per_epoch = items.len().div_ceil(config.batch_size);
    let total_steps = (steps_per_epoch * config.max_epochs) as f64;
    // Same triangular schedule as the tagger: warm up over the first tenth
    // of the step budget, then decay linearly to zero.
    let warmup = (total_steps / 10.0).max(1.0);
    let mut step = 0usize;

    for epoch in 1..=config.max_epochs {
        let mut order: Vec<usize> = (0..items.len()).collect();
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            step += 1;
            let s = step as f64;
            opt.lr = config.learning_rate
                * (s / warmup).min((total_steps - s) / (total_steps - warmup).max(1.0));
            for &i in batch {
                let item = &items[i];
                let feats = model.encoder.forward(&item.ids);
                let logits = model.head.forward(&feats);
                let (start_loss, dstart) =
                    position_cross_entropy(&logits.column(0).to_owned(), item.start_target);
                let (end_loss, dend) =
                    position_cross_entropy(&logits.column(1).to_owned(), item.end_target);
                let mut dlogits = Array2::zeros((item.ids.len(), 2));
                dlogits.column_mut(0).assign(&dstart);
                dlogits.column_mut(1).assign(&dend);
                dlogits /= batch.len() as f64;
                let dfeats = model.head.backward(&dlogits);
                model.encoder.backward(&dfeats);
                loss_sum += start_loss + end_loss;
            }
            opt.step(&mut model);
        }
        let val_metric = mean_exact_match(&mut model, &val_plans);
        log.epochs.push(EpochRecord {
            epoch,
            train_loss: loss_sum / items.len() as f64,
            val_metric,
        });
        if val_metric > best {
            best = val_metric;
            log.best_epoch = epoch;
            epochs_since_best = 0;
        } else {
            epochs_since_best += 1;
            if early && epochs_since_best >= config.early_stop_patience {
                log.stopped_early = true;
                break;
            }
        }
    }
    model.log = log;
    Ok(model)
}

/// Answers one query: reads the review through windows of `max_len` total
/// tokens spaced `stride` apart, keeps each window's best answer, and
/// returns the best across windows in review-token coordinates.
pub fn predict_evidence(
    model: &mut LinkerModel,
    q: &EvidenceQuery,
    max_len: usize,
    stride: usize,
    max_answer_len: usize,
) -> Result<EvidenceAnswer, LinkerError> {
    let positions = model.encoder.spec.max_positions;
    if max_len > positions {
        return Err(LinkerError::BadConfig(format!(
            "max_len {max_len} exceeds encoder positions {positions}"
        )));
    }
    let plan = plan_query(q, &model.vocab, max_len, stride)?;
    Ok(model.predict_plan(&plan, max_answer_len))
}

/// Links evidence for externally supplied claims: one prediction per claim,
/// with results mapped back to character spans. Polarity and ordinal are
/// inherited from the claim, never predicted; null answers contribute no
/// span.
pub fn link_claims(
    model: &mut LinkerModel,
    text: &str,
    claims: &[ArgSpan],
    tokenizer: Tokenizer,
    review_id: &str,
) -> Result<Vec<ArgSpan>, LinkerError> {
    let alignment = TokenAlignment::new(text, tokenizer);
    let queries = build_claim_queries(text, claims, &alignment, review_id)?;
    let mut evidence = Vec::new();
    for q in &queries {
        if let Some((start, end)) = model.predict(q)?.token_range() {
            let (cs, ce) = alignment.tokens_to_chars(start, end + 1);
            let (polarity, claim_id) = q.claim.claim_key();
            evidence.push(ArgSpan::new(SpanType::evidence(polarity), cs, ce, claim_id));
        }
    }
    Ok(evidence)
}

#[derive(Serialize, Deserialize)]
struct LinkerManifest {
    task: String,
    version: String,
    config: LinkerConfig,
    encoder: EncoderSpec,
    // Defaulted so a foreign artifact still parses far enough for the task
    // check to produce the clearer error.
    #[serde(default)]
    head_order: Vec<String>,
    vocab: Vec<String>,
    log: TrainingLog,
}

/// Writes `config.json` (manifest) and `weights.json` under `dir`.
pub fn save_linker(model: &mut LinkerModel, dir: &Path) -> Result<(), LinkerError> {
    std::fs::create_dir_all(dir)?;
    let manifest = LinkerManifest {
        task: LINKER_TASK.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: model.config.clone(),
        encoder: model.encoder.spec.clone(),
        head_order: HEAD_ORDER.iter().map(|s| s.to_string()).collect(),
        vocab: model.vocab.words().to_vec(),
        log: model.log.clone(),
    };
    let out = std::fs::File::create(dir.join("config.json"))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(out), &manifest)?;
    write_weights(&dir.join("weights.json"), model)?;
    Ok(())
}

pub fn load_linker(dir: &Path) -> Result<LinkerModel, LinkerError> {
    let manifest: LinkerManifest = serde_json::from_reader(std::io::BufReader::new(
        std::fs::File::open(dir.join("config.json"))?,
    ))?;
    if manifest.task != LINKER_TASK {
        return Err(LinkerError::WrongTask {
            got: manifest.task,
            want: LINKER_TASK.to_string(),
        });
    }
    if manifest.head_order != HEAD_ORDER {
        return Err(LinkerError::HeadOrder {
            got: manifest.head_order,
        });
    }
    let vocab = Vocab::from_words(manifest.vocab);
    let encoder = EncoderCore::new(manifest.encoder, vocab.len(), 0);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let head = Linear::new(&mut rng, encoder.spec.dim, 2);
    let mut model = LinkerModel {
        config: manifest.config,
        vocab,
        log: manifest.log,
        encoder,
        head,
    };
    read_weights(&dir.join("weights.json"), &mut model)?;
    Ok(model)
}
