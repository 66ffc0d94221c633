//! Claim-evidence pair extraction and substantiation analysis for scientific
//! peer reviews.
//!
//! A peer review makes subjective *claims* ("the evaluation is weak") and may
//! back them with *evidence* ("only one dataset is used"). This crate
//! implements the full measurement pipeline around that structure:
//!
//! * [`corpus`]: the annotated-review data model and JSONL corpus format.
//! * [`spans`]: character/token alignment, BIO encoding, and chunking.
//! * [`tagger`]: a trainable sequence tagger that finds claim spans.
//! * [`linker`]: a trainable extractive reader that attaches evidence spans
//!   to claims, with null answers for unsupported claims.
//! * [`baselines`]: lexicon and overlap baselines for both subtasks.
//! * [`metrics`]: span and evidence scoring, confusion analysis, and
//!   significance testing.
//! * [`agreement`]: inter-annotator unitizing agreement and the consensus
//!   merge used to build gold data from multiple annotators.
//! * [`scoring`]: the review-level substantiation score and its validation
//!   against human ratings.
//! * [`render`]: small dependency-free PNG plots of evaluation output.
//! * [`testkit`]: deterministic synthetic corpora for tests and demos.
//!
//! All span offsets throughout the crate are Unicode code-point indices,
//! never bytes. Everything that involves randomness takes an explicit seed
//! and is reproducible to the byte.

pub mod agreement;
pub mod baselines;
pub mod corpus;
pub mod encoder;
pub mod linker;
pub mod metrics;
pub mod nn;
pub mod render;
pub mod scoring;
pub mod spans;
pub mod tagger;
pub mod testkit;
pub mod text;

pub use corpus::{AnnotatedReview, ArgSpan, Polarity, Review, SpanType};
