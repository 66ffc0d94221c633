//! Trainable text encoder behind the tagging and linkage models.
//!
//! The encoder is a small pre-norm transformer built from the [`crate::nn`]
//! layers, instantiated from a named preset by an [`EncoderBackend`].
//! Checkpoints load nothing from the network: the backend creates fresh
//! seeded weights and task training does the rest, so everything stays
//! deterministic and self-contained.
//!
//! The vocabulary is word-level: tokens are lowercased and stripped of
//! surrounding punctuation, unknown words map to a reserved id, and two
//! further sentinels mark sequence start and claim/review separation in
//! query-style inputs.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::nn::{AnyParam, Embedding, LayerNorm, Tensors, TransformerBlock};
use crate::text::normalize_word;

pub const UNK_ID: usize = 0;
pub const CLS_ID: usize = 1;
pub const SEP_ID: usize = 2;
const RESERVED: [&str; 3] = ["<unk>", "<cls>", "<sep>"];

#[derive(Debug, thiserror::Error)]
pub enum EncoderError {
    #[error("unknown encoder id {id:?}; known: {known:?}")]
    UnknownEncoder { id: String, known: Vec<&'static str> },
    #[error("weight count mismatch: artifact has {got} tensors, model needs {need}")]
    TensorCount { got: usize, need: usize },
    #[error("tensor {index} shape mismatch: artifact {got:?}, model {need:?}")]
    TensorShape {
        index: usize,
        got: Vec<usize>,
        need: Vec<usize>,
    },
    #[error("reading artifact: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing artifact: {0}")]
    Json(#[from] serde_json::Error),
}

/// Word-level vocabulary with reserved unknown/start/separator ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    words: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl Vocab {
    /// Collects every distinct normalized word of `texts`, sorted, after
    /// the reserved ids.
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let mut seen = std::collections::BTreeSet::new();
        for text in texts {
            for word in text.split_whitespace() {
                let w = normalize_word(word);
                if !w.is_empty() {
                    seen.insert(w);
                }
            }
        }
        let words: Vec<String> = RESERVED
            .iter()
            .map(|s| s.to_string())
            .chain(seen)
            .collect();
        Vocab::from_words(words)
    }

    /// Rebuilds a vocabulary from its serialized word list.
    pub fn from_words(words: Vec<String>) -> Self {
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Vocab { words, index }
    }

    pub fn id(&self, token: &str) -> usize {
        let w = normalize_word(token);
        if w.is_empty() {
            return UNK_ID;
        }
        self.index.get(&w).copied().unwrap_or(UNK_ID)
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t)).collect()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        false // reserved ids always present
    }
}

/// Architecture hyperparameters, stored verbatim in model artifacts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderSpec {
    pub id: String,
    pub dim: usize,
    pub n_heads: usize,
    pub n_layers: usize,
    pub ff_hidden: usize,
    pub max_positions: usize,
}

const PRESET_IDS: [&str; 5] = ["shallow", "wide", "tiny", "small", "base"];

impl EncoderSpec {
    /// Resolves a named preset.
    pub fn preset(id: &str) -> Result<Self, EncoderError> {
        let (dim, n_heads, n_layers, ff_hidden) = match id {
            "shallow" => (64, 4, 1, 128),
            "wide" => (128, 8, 1, 256),
            "tiny" => (32, 4, 2, 64),
            "small" => (64, 4, 3, 128),
            "base" => (128, 8, 4, 256),
            _ => {
                return Err(EncoderError::UnknownEncoder {
                    id: id.to_string(),
                    known: PRESET_IDS.to_vec(),
                })
            }
        };
        Ok(EncoderSpec {
            id: id.to_string(),
            dim,
            n_heads,
            n_layers,
            ff_hidden,
            max_positions: 512,
        })
    }
}

/// Token-and-position embedding plus transformer stack; maps ids to
/// per-token feature rows.
#[derive(Debug, Clone)]
pub struct EncoderCore {
    pub spec: EncoderSpec,
    tok: Embedding,
    pos: Embedding,
    blocks: Vec<TransformerBlock>,
    norm: LayerNorm,
}

impl EncoderCore {
    pub fn new(spec: EncoderSpec, vocab_size: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        EncoderCore {
            tok: Embedding::new(&mut rng, vocab_size, spec.dim),
            pos: Embedding::new(&mut rng, spec.max_positions, spec.dim),
            blocks: (0..spec.n_layers)
                .map(|_| TransformerBlock::new(&mut rng, spec.dim, spec.n_heads, spec.ff_hidden))
                .collect(),
            norm: LayerNorm::new(spec.dim),
            spec,
        }
    }

    /// Per-token features, one row per input id.
    pub fn forward(&mut self, ids: &[usize]) -> Array2<f64> {
        assert!(!ids.is_empty(), "encoder input must be non-empty");
        assert!(
            ids.len() <= self.spec.max_positions,
            "sequence of {} exceeds {} positions",
            ids.len(),
            self.spec.max_positions
        );
        let positions: Vec<usize> = (0..ids.len()).collect();
        let mut x = self.tok.forward(ids) + self.pos.forward(&positions);
        for block in &mut self.blocks {
            x = block.forward(&x);
        }
        self.norm.forward(&x)
    }

    /// Backpropagates through the stack from the cached forward pass.
    pub fn backward(&mut self, dy: &Array2<f64>) {
        let mut dx = self.norm.backward(dy);
        for block in self.blocks.iter_mut().rev() {
            dx = block.backward(&dx);
        }
        self.tok.backward(&dx);
        self.pos.backward(&dx);
    }
}

impl Tensors for EncoderCore {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut dyn AnyParam)) {
        self.tok.visit_params(f);
        self.pos.visit_params(f);
        for block in &mut self.blocks {
            block.visit_params(f);
        }
        self.norm.visit_params(f);
    }
}

/// Factory turning a checkpoint identifier into a ready encoder.
pub trait EncoderBackend {
    fn instantiate(
        &self,
        encoder_id: &str,
        vocab_size: usize,
        seed: u64,
    ) -> Result<EncoderCore, EncoderError>;
}

/// The bundled backend: named presets with seeded fresh weights.
#[derive(Debug, Clone, Copy, Default)]
pub struct BuiltinBackend;

impl EncoderBackend for BuiltinBackend {
    fn instantiate(
        &self,
        encoder_id: &str,
        vocab_size: usize,
        seed: u64,
    ) -> Result<EncoderCore, EncoderError> {
        Ok(EncoderCore::new(
            EncoderSpec::preset(encoder_id)?,
            vocab_size,
            seed,
        ))
    }
}

/// Flat weight dump; tensor order is the model's fixed traversal order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightsFile {
    pub tensors: Vec<TensorBlob>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorBlob {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

pub fn dump_weights(model: &mut dyn Tensors) -> WeightsFile {
    let mut tensors = Vec::new();
    model.visit_params(&mut |p| {
        tensors.push(TensorBlob {
            shape: p.shape(),
            data: p.flat(),
        });
    });
    WeightsFile { tensors }
}

pub fn load_weights(model: &mut dyn Tensors, file: &WeightsFile) -> Result<(), EncoderError> {
    let mut need = 0;
    model.visit_params(&mut |_| need += 1);
    if file.tensors.len() != need {
        return Err(EncoderError::TensorCount {
            got: file.tensors.len(),
            need,
        });
    }
    let mut index = 0;
    let mut bad: Option<EncoderError> = None;
    model.visit_params(&mut |p| {
        let blob = &file.tensors[index];
        if blob.shape != p.shape() {
            if bad.is_none() {
                bad = Some(EncoderError::TensorShape {
                    index,
                    got: blob.shape.clone(),
                    need: p.shape(),
                });
            }
        } else if bad.is_none() {
            p.load_flat(&blob.data);
        }
        index += 1;
    });
    match bad {
        Some(err) => Err(err),
        None => Ok(()),
    }
}

pub fn write_weights(path: &Path, model: &mut dyn Tensors) -> Result<(), EncoderError> {
    let file = dump_weights(model);
    let out = std::fs::File::create(path)?;
    serde_json::to_writer(std::io::BufWriter::new(out), &file)?;
    Ok(())
}

pub fn read_weights(path: &Path, model: &mut dyn Tensors) -> Result<(), EncoderError> {
    let file: WeightsFile =
        serde_json::from_reader(std::io::BufReader::new(std::fs::File::open(path)?))?;
    load_weights(model, &file)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocab_reserves_sentinels_and_sorts_words() {
        let vocab = Vocab::build(["The weak proofs.", "Weak, weak proofs!"]);
        assert_eq!(vocab.words()[..3], ["<unk>", "<cls>", "<sep>"]);
        assert_eq!(vocab.words()[3..], ["proofs", "the", "weak"]);
        assert_eq!(vocab.id("WEAK"), vocab.id("weak,"));
        assert_eq!(vocab.id("unseen"), UNK_ID);
        assert_eq!(vocab.id("...."), UNK_ID);
        assert_eq!(vocab.len(), 6);
    }

    #[test]
    fn vocab_round_trips_through_word_list() {
        let vocab = Vocab::build(["alpha beta gamma"]);
        let again = Vocab::from_words(vocab.words().to_vec());
        assert_eq!(vocab, again);
        let ids = again.encode(&["beta".into(), "delta".into()]);
        assert_eq!(ids, vec![again.id("beta"), UNK_ID]);
    }

    #[test]
    fn presets_resolve_and_unknown_ids_fail() {
        for id in PRESET_IDS {
            let spec = EncoderSpec::preset(id).unwrap();
            assert_eq!(spec.id, id);
            assert_eq!(spec.dim % spec.n_heads, 0);
        }
        assert!(matches!(
            EncoderSpec::preset("bert-large"),
            Err(EncoderError::UnknownEncoder { .. })
        ));
    }

    #[test]
    fn encoder_output_has_one_row_per_token() {
        let mut enc = BuiltinBackend.instantiate("tiny", 10, 3).unwrap();
        let out = enc.forward(&[1, 4, 4, 9, 0]);
        assert_eq!(out.dim(), (5, 32));
        assert!(out.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn same_seed_same_weights_different_seed_different() {
        let mut a = BuiltinBackend.instantiate("tiny", 10, 3).unwrap();
        let mut b = BuiltinBackend.instantiate("tiny", 10, 3).unwrap();
        let mut c = BuiltinBackend.instantiate("tiny", 10, 4).unwrap();
        let ids = [1, 5, 2];
        assert_eq!(a.forward(&ids), b.forward(&ids));
        assert_ne!(a.forward(&ids), c.forward(&ids));
    }

    #[test]
    fn weights_round_trip_exactly_through_json() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("weights.json");
        let mut a = BuiltinBackend.instantiate("tiny", 12, 5).unwrap();
        write_weights(&path, &mut a).unwrap();
        let mut b = BuiltinBackend.instantiate("tiny", 12, 99).unwrap();
        read_weights(&path, &mut b).unwrap();
        let ids = [0, 3, 11, 2];
        assert_eq!(a.forward(&ids), b.forward(&ids));
    }

    #[test]
    fn weight_loading_checks_count_and_shape() {
        let mut a = BuiltinBackend.instantiate("tiny", 12, 5).unwrap();
        let mut file = dump_weights(&mut a);
        file.tensors.pop();
        assert!(matches!(
            load_weights(&mut a, &file),
            Err(EncoderError::TensorCount { .. })
        ));
        let mut b = BuiltinBackend.instantiate("tiny", 13, 5).unwrap();
        let file = dump_weights(&mut b);
        assert!(matches!(
            load_weights(&mut a, &file),
            Err(EncoderError::TensorShape { index: 0, .. })
        ));
    }

    #[test]
    fn gradient_flows_through_the_whole_encoder() {
        // One AdamW step against a pull-to-zero objective must change the
        // output; a second identical run must match it exactly.
        use crate::nn::AdamW;
        let run = || {
            let mut enc = BuiltinBackend.instantiate("tiny", 8, 11).unwrap();
            let mut opt = AdamW::new(1e-2, 0.0);
            let ids = [3, 1, 7];
            let before = enc.forward(&ids).mapv(|v| v * v).sum();
            for _ in 0..5 {
                let out = enc.forward(&ids);
                enc.backward(&(out * 2.0));
                opt.step(&mut enc);
            }
            let after = enc.forward(&ids).mapv(|v| v * v).sum();
            (before, after)
        };
        let (before, after) = run();
        assert!(after < before, "{after} !< {before}");
        assert_eq!(run(), (before, after));
    }
}
