//! Claim tagging: a trainable encoder with a 5-way per-token head.
//!
//! Training runs single-threaded over one sequence at a time, accumulating
//! gradients into batches for AdamW. Long reviews are cut into
//! non-overlapping chunks that each fit the model's token budget; a claim
//! crossing a chunk boundary is seen as two halves, an accepted cost of
//! chunked scoring. Prediction mirrors the same chunking, takes the argmax
//! class per token (ties resolve to the lowest class index, which puts the
//! outside class first), and decodes the label sequence back into spans.
//!
//! Early stopping watches span-level macro F1 on a held-out tenth of the
//! training corpus. Setting `early_stop_patience >= max_epochs` disables
//! it; the carve-out is then skipped so every review trains, and the logged
//! metric is measured on the training set itself.

use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{split_corpus, AnnotatedReview, ArgSpan, Review};
use crate::encoder::{
    read_weights, write_weights, EncoderBackend, EncoderCore, EncoderError, EncoderSpec, Vocab,
};
use crate::metrics::span_prf_many;
use crate::nn::{token_cross_entropy, AdamW, AnyParam, Linear, Tensors};
use crate::spans::{encode_bio, tagging_chunks, tags_to_claims, BioTag, TokenAlignment, NUM_BIO_CLASSES};
use crate::text::{whitespace_tokenize, Tokenizer};

pub const TAGGER_TASK: &str = "claim_tagging";

#[derive(Debug, thiserror::Error)]
pub enum TaggerError {
    #[error("invalid config: {0}")]
    BadConfig(String),
    #[error("training corpus has no tokens")]
    EmptyCorpus,
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error("model artifact: {0}")]
    Io(#[from] std::io::Error),
    #[error("model artifact: {0}")]
    Json(#[from] serde_json::Error),
    #[error("artifact is for task {got:?}, expected {want:?}")]
    WrongTask { got: String, want: String },
    #[error("artifact class order {got:?} does not match this build")]
    ClassOrder { got: Vec<String> },
}

/// Loss weighting across the 5 token classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeighting {
    /// Every class weighs the same.
    #[default]
    Uniform,
    /// Weight each class by `total / (n_classes · count)` over the training
    /// targets, countering the outside-class majority.
    InverseFrequency,
    /// Square root of the inverse-frequency weights: still favors rare
    /// classes but keeps outside-class mistakes expensive enough to
    /// suppress spurious one-token claims.
    InverseSqrtFrequency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaggerConfig {
    pub encoder_id: String,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub weight_decay: f64,
    pub early_stop_patience: usize,
    pub seed: u64,
    /// Token budget per scored sequence; longer reviews are chunked.
    pub max_len: usize,
    pub class_weighting: ClassWeighting,
}

impl Default for TaggerConfig {
    fn default() -> Self {
        TaggerConfig {
            encoder_id: "tiny".to_string(),
            learning_rate: 3e-3,
            batch_size: 8,
            max_epochs: 10,
            weight_decay: 0.01,
            early_stop_patience: 3,
            seed: 13,
            max_len: 512,
            class_weighting: ClassWeighting::Uniform,
        }
    }
}

impl TaggerConfig {
    pub fn validate(&self) -> Result<(), TaggerError> {
        let fail = |msg: &str| Err(TaggerError::BadConfig(msg.to_string()));
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
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_metric: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
    /// Epoch with the best validation metric, 1-based; 0 before training.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// Trained tagging model. Cheap to clone; clone per worker for parallel
/// scoring, since scoring mutates internal caches.
#[derive(Debug, Clone)]
pub struct TaggerModel {
    pub config: TaggerConfig,
    pub vocab: Vocab,
    pub log: TrainingLog,
    encoder: EncoderCore,
    head: Linear,
}

impl Tensors for TaggerModel {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut dyn AnyParam)) {
        self.encoder.visit_params(f);
        self.head.visit_params(f);
    }
}

impl TaggerModel {
    /// Class scores per token: one row per input token, 5 columns in
    /// [`BioTag::ALL`] order.
    pub fn score(&mut self, tokens: &[String]) -> Array2<f64> {
        let ids = self.vocab.encode(tokens);
        let feats = self.encoder.forward(&ids);
        self.head.apply(&feats)
    }
}

/// One training sequence: a chunk of a review, pre-encoded.
struct Seq {
    ids: Vec<usize>,
    targets: Vec<usize>,
}

fn sequences(reviews: &[&AnnotatedReview], vocab: &Vocab, max_len: usize) -> Vec<Seq> {
    let mut seqs = Vec::new();
    for r in reviews {
        let alignment = TokenAlignment::new(&r.review.text, whitespace_tokenize);
        if alignment.is_empty() {
            continue;
        }
        let tags = encode_bio(&alignment, &r.spans);
        let chunks = tagging_chunks(alignment.len(), max_len).expect("validated max_len");
        for (start, end) in chunks {
            let tokens: Vec<String> = (start..end)
                .map(|i| alignment.token_text(&r.review.text, i))
                .collect();
            seqs.push(Seq {
                ids: vocab.encode(&tokens),
                targets: tags[start..end].iter().map(|t| t.index()).collect(),
            });
        }
    }
    seqs
}

fn inverse_frequency_weights(seqs: &[Seq]) -> Vec<f64> {
    let mut counts = [0usize; NUM_BIO_CLASSES];
    for seq in seqs {
        for &t in &seq.targets {
            counts[t] += 1;
        }
    }
    let total: usize = counts.iter().sum();
    counts
        .iter()
        .map(|&c| total as f64 / (NUM_BIO_CLASSES as f64 * c.max(1) as f64))
        .collect()
}

fn macro_f1(model: &mut TaggerModel, reviews: &[&AnnotatedReview]) -> f64 {
    let pairs: Vec<(Vec<ArgSpan>, Vec<ArgSpan>)> = reviews
        .iter()
        .map(|r| {
            let pred = predict_claims(model, &r.review, whitespace_tokenize);
            (r.claims().cloned().collect(), pred)
        })
        .collect();
    span_prf_many(pairs.iter().map(|(g, p)| (g.as_slice(), p.as_slice()))).macro_f1
}

/// Trains a fresh model. Deterministic given (corpus, config, seed): every
/// random choice draws from one seeded generator in a fixed order.
pub fn train_tagger(
    corpus: &[AnnotatedReview],
    config: &TaggerConfig,
    backend: &dyn EncoderBackend,
) -> Result<TaggerModel, TaggerError> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(TaggerError::EmptyCorpus);
    }
    let vocab = Vocab::build(corpus.iter().map(|r| r.review.text.as_str()));
    let encoder = backend.instantiate(&config.encoder_id, vocab.len(), config.seed)?;
    if config.max_len > encoder.spec.max_positions {
        return Err(TaggerError::BadConfig(format!(
            "max_len {} exceeds encoder positions {}",
            config.max_len, encoder.spec.max_positions
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let head = Linear::new(&mut rng, encoder.spec.dim, NUM_BIO_CLASSES);

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

    let train_seqs = sequences(&train_refs, &vocab, config.max_len);
    if train_seqs.is_empty() {
        return Err(TaggerError::EmptyCorpus);
    }
    let class_weights = match config.class_weighting {
        ClassWeighting::Uniform => None,
        ClassWeighting::InverseFrequency => Some(inverse_frequency_weights(&train_seqs)),
        ClassWeighting::InverseSqrtFrequency => Some(
            inverse_frequency_weights(&train_seqs)
                .iter()
                .map(|w| w.sqrt())
                .collect(),
        ),
    };

    let mut model = TaggerModel {
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

    let steps_per_epoch = train_seqs.len().div_ceil(config.batch_size);
    let total_steps = (steps_per_epoch * config.max_epochs) as f64;
    // Triangular schedule: warm up over the first tenth of the step budget,
    // then decay linearly to zero; settles the optimizer instead of
    // oscillating around the minimum.
    let warmup = (total_steps / 10.0).max(1.0);
    let mut step = 0usize;

    for epoch in 1..=config.max_epochs {
        let mut order: Vec<usize> = (0..train_seqs.len()).collect();
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            step += 1;
            let s = step as f64;
            opt.lr = config.learning_rate
                * (s / warmup).min((total_steps - s) / (total_steps - warmup).max(1.0));
            for &i in batch {
                let seq = &train_seqs[i];
                let feats = model.encoder.forward(&seq.ids);
                let logits = model.head.forward(&feats);
                let (loss, mut dlogits) =
                    token_cross_entropy(&logits, &seq.targets, class_weights.as_deref());
                dlogits /= batch.len() as f64;
                let dfeats = model.head.backward(&dlogits);
                model.encoder.backward(&dfeats);
                loss_sum += loss;
            }
            opt.step(&mut model);
        }
        let val_metric = macro_f1(&mut model, &val_refs);
        log.epochs.push(EpochRecord {
            epoch,
            train_loss: loss_sum / train_seqs.len() as f64,
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

/// Tags a review and decodes the claims: align, chunk, score, per-token
/// argmax, concatenate, decode. Never returns overlapping spans.
pub fn predict_claims(model: &mut TaggerModel, review: &Review, tokenizer: Tokenizer) -> Vec<ArgSpan> {
    let alignment = TokenAlignment::new(&review.text, tokenizer);
    if alignment.is_empty() {
        return Vec::new();
    }
    let chunks = tagging_chunks(alignment.len(), model.config.max_len).expect("validated max_len");
    let mut tags = Vec::with_capacity(alignment.len());
    for (start, end) in chunks {
        let tokens: Vec<String> = (start..end)
            .map(|i| alignment.token_text(&review.text, i))
            .collect();
        let logits = model.score(&tokens);
        for row in logits.rows() {
            let mut arg = 0;
            for (k, &v) in row.iter().enumerate() {
                if v > row[arg] {
                    arg = k;
                }
            }
            tags.push(BioTag::from_index(arg).expect("5-column head"));
        }
    }
    debug_assert_eq!(tags.len(), alignment.len());
    tags_to_claims(&alignment, &tags)
}

#[derive(Serialize, Deserialize)]
struct TaggerManifest {
    task: String,
    version: String,
    config: TaggerConfig,
    encoder: EncoderSpec,
    class_order: Vec<String>,
    vocab: Vec<String>,
    log: TrainingLog,
}

/// Writes `config.json` (manifest) and `weights.json` under `dir`.
pub fn save_tagger(model: &mut TaggerModel, dir: &Path) -> Result<(), TaggerError> {
    std::fs::create_dir_all(dir)?;
    let manifest = TaggerManifest {
        task: TAGGER_TASK.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: model.config.clone(),
        encoder: model.encoder.spec.clone(),
        class_order: BioTag::ALL.iter().map(|t| t.as_str().to_string()).collect(),
        vocab: model.vocab.words().to_vec(),
        log: model.log.clone(),
    };
    let out = std::fs::File::create(dir.join("config.json"))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(out), &manifest)?;
    write_weights(&dir.join("weights.json"), model)?;
    Ok(())
}

pub fn load_tagger(dir: &Path) -> Result<TaggerModel, TaggerError> {
    let manifest: TaggerManifest = serde_json::from_reader(std::io::BufReader::new(
        std::fs::File::open(dir.join("config.json"))?,
    ))?;
    if manifest.task != TAGGER_TASK {
        return Err(TaggerError::WrongTask {
            got: manifest.task,
            want: TAGGER_TASK.to_string(),
        });
    }
    let expected: Vec<String> = BioTag::ALL.iter().map(|t| t.as_str().to_string()).collect();
    if manifest.class_order != expected {
        return Err(TaggerError::ClassOrder {
            got: manifest.class_order,
        });
    }
    let vocab = Vocab::from_words(manifest.vocab);
    let encoder = EncoderCore::new(manifest.encoder, vocab.len(), 0);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let head = Linear::new(&mut rng, encoder.spec.dim, NUM_BIO_CLASSES);
    let mut model = TaggerModel {
        config: manifest.config,
        vocab,
        log: manifest.log,
        encoder,
        head,
    };
    read_weights(&dir.join("weights.json"), &mut model)?;
    Ok(model)
}
