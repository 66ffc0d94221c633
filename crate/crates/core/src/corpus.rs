//! Data model for annotated peer reviews and the on-disk corpus format.
//!
//! A corpus is UTF-8 newline-delimited JSON, one object per review:
//!
//! ```json
//! {"id": "acl17_0001", "venue": "ACL", "year": 2017, "text": "...",
//!  "spans": [{"type": "claim_neg", "start": 120, "end": 188, "claim_id": 1}],
//!  "human_substantiation": 2, "human_difficulty": 1}
//! ```
//!
//! Span offsets are Unicode code-point indices into `text`. Character
//! offsets are canonical in storage; any tokenization is a derived view.
//! Claims carry their own per-polarity ordinal in `claim_id`; evidence spans
//! carry the ordinal of the claim they support. Multi-annotator files may add
//! an `annotator_id` per record (see [`crate::agreement`]).

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::ops::RangeInclusive;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::text::cp_len;

/// Polarity of a claim or of the claim an evidence span supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarity {
    Positive,
    Negative,
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Polarity::Positive => write!(f, "pos"),
            Polarity::Negative => write!(f, "neg"),
        }
    }
}

/// The four annotated span types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SpanType {
    #[serde(rename = "claim_pos")]
    ClaimPos,
    #[serde(rename = "claim_neg")]
    ClaimNeg,
    #[serde(rename = "evidence_pos")]
    EvidencePos,
    #[serde(rename = "evidence_neg")]
    EvidenceNeg,
}

impl SpanType {
    pub const ALL: [SpanType; 4] = [
        SpanType::ClaimPos,
        SpanType::ClaimNeg,
        SpanType::EvidencePos,
        SpanType::EvidenceNeg,
    ];

    pub fn is_claim(self) -> bool {
        matches!(self, SpanType::ClaimPos | SpanType::ClaimNeg)
    }

    pub fn is_evidence(self) -> bool {
        !self.is_claim()
    }

    pub fn polarity(self) -> Polarity {
        match self {
            SpanType::ClaimPos | SpanType::EvidencePos => Polarity::Positive,
            SpanType::ClaimNeg | SpanType::EvidenceNeg => Polarity::Negative,
        }
    }

    pub fn claim(polarity: Polarity) -> SpanType {
        match polarity {
            Polarity::Positive => SpanType::ClaimPos,
            Polarity::Negative => SpanType::ClaimNeg,
        }
    }

    pub fn evidence(polarity: Polarity) -> SpanType {
        match polarity {
            Polarity::Positive => SpanType::EvidencePos,
            Polarity::Negative => SpanType::EvidenceNeg,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SpanType::ClaimPos => "claim_pos",
            SpanType::ClaimNeg => "claim_neg",
            SpanType::EvidencePos => "evidence_pos",
            SpanType::EvidenceNeg => "evidence_neg",
        }
    }
}

impl fmt::Display for SpanType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_str())
    }
}

/// One peer review with optional human ratings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Review {
    pub id: String,
    pub venue: String,
    pub year: i32,
    pub text: String,
    /// Human substantiation rating, when collected (default range 1–3).
    pub human_substantiation: Option<i32>,
    /// Human annotation-difficulty rating, when collected.
    pub human_difficulty: Option<i32>,
}

/// A typed, polarized character span.
///
/// `start_char`/`end_char` are code-point offsets, inclusive/exclusive.
/// For claims, `claim_id` is the claim's own ordinal within its polarity;
/// for evidence, the ordinal of the supported claim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArgSpan {
    #[serde(rename = "type")]
    pub span_type: SpanType,
    #[serde(rename = "start")]
    pub start_char: usize,
    #[serde(rename = "end")]
    pub end_char: usize,
    pub claim_id: u32,
}

impl ArgSpan {
    pub fn new(span_type: SpanType, start_char: usize, end_char: usize, claim_id: u32) -> Self {
        ArgSpan {
            span_type,
            start_char,
            end_char,
            claim_id,
        }
    }

    /// Key identifying the claim this span is (or supports): polarity + ordinal.
    pub fn claim_key(&self) -> (Polarity, u32) {
        (self.span_type.polarity(), self.claim_id)
    }

    pub fn len_chars(&self) -> usize {
        self.end_char.saturating_sub(self.start_char)
    }

    pub fn overlaps(&self, other: &ArgSpan) -> bool {
        self.start_char < other.end_char && other.start_char < self.end_char
    }
}

/// A review plus its annotated spans, sorted by `start_char`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedReview {
    pub review: Review,
    pub spans: Vec<ArgSpan>,
}

impl AnnotatedReview {
    /// Builds the pair and sorts spans by `(start_char, type, claim_id)`.
    pub fn new(review: Review, mut spans: Vec<ArgSpan>) -> Self {
        spans.sort_by_key(|s| (s.start_char, s.end_char, s.span_type, s.claim_id));
        AnnotatedReview { review, spans }
    }

    pub fn claims(&self) -> impl Iterator<Item = &ArgSpan> {
        self.spans.iter().filter(|s| s.span_type.is_claim())
    }

    pub fn evidence(&self) -> impl Iterator<Item = &ArgSpan> {
        self.spans.iter().filter(|s| s.span_type.is_evidence())
    }

    /// The evidence span supporting the claim `(polarity, ordinal)`, if any.
    pub fn evidence_for(&self, polarity: Polarity, claim_id: u32) -> Option<&ArgSpan> {
        self.evidence()
            .find(|e| e.span_type.polarity() == polarity && e.claim_id == claim_id)
    }
}

/// A violated corpus invariant. Violations are data, not failures:
/// [`validate_review`] reports them; [`load_corpus`] turns them into errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    /// Index into `spans` of the offending span, when one is identifiable.
    pub span_index: Option<usize>,
    pub rule: ViolationRule,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationRule {
    EmptyId,
    EmptyText,
    RatingOutOfRange,
    SpanOutOfBounds,
    SpanEmpty,
    ClaimOverlap,
    EvidenceOverlap,
    DuplicateClaimOrdinal,
    DanglingEvidence,
    MultipleEvidence,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.span_index {
            Some(i) => write!(f, "span {}: {:?}: {}", i, self.rule, self.message),
            None => write!(f, "{:?}: {}", self.rule, self.message),
        }
    }
}

/// Options controlling validation and loading.
#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Accepted range for `human_substantiation` ratings.
    pub rating_range: RangeInclusive<i32>,
    /// When false, records are not checked against the span invariants.
    /// Prediction files may legitimately violate gold-data invariants
    /// (e.g. two predicted claims sharing one evidence sentence).
    pub validate: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            rating_range: 1..=3,
            validate: true,
        }
    }
}

impl LoadOptions {
    pub fn lenient() -> Self {
        LoadOptions {
            validate: false,
            ..LoadOptions::default()
        }
    }
}

/// Errors from corpus I/O and validation.
#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON on line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("duplicate review id {id:?} on line {line}")]
    DuplicateId { id: String, line: usize },
    #[error("review {id:?} violates corpus invariants: {}", format_violations(.violations))]
    Invalid {
        id: String,
        violations: Vec<Violation>,
    },
    #[error("corpus is empty")]
    Empty,
    #[error("test fraction must lie strictly between 0 and 1, got {0}")]
    BadFraction(f64),
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// On-disk record. Kept separate from the domain types so the file schema
/// stays explicit and stable.
#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct ReviewRecord {
    pub id: String,
    pub venue: String,
    pub year: i32,
    pub text: String,
    #[serde(default)]
    pub spans: Vec<ArgSpan>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub human_substantiation: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub human_difficulty: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub annotator_id: Option<String>,
}

impl ReviewRecord {
    pub(crate) fn into_annotated(self) -> (AnnotatedReview, Option<String>) {
        let ReviewRecord {
            id,
            venue,
            year,
            text,
            spans,
            human_substantiation,
            human_difficulty,
            annotator_id,
        } = self;
        let review = Review {
            id,
            venue,
            year,
            text,
            human_substantiation,
            human_difficulty,
        };
        (AnnotatedReview::new(review, spans), annotator_id)
    }

    pub(crate) fn from_annotated(r: &AnnotatedReview, annotator_id: Option<&str>) -> Self {
        ReviewRecord {
            id: r.review.id.clone(),
            venue: r.review.venue.clone(),
            year: r.review.year,
            text: r.review.text.clone(),
            spans: r.spans.clone(),
            human_substantiation: r.review.human_substantiation,
            human_difficulty: r.review.human_difficulty,
            annotator_id: annotator_id.map(str::to_owned),
        }
    }
}

pub(crate) fn read_records(path: &Path) -> Result<Vec<(usize, ReviewRecord)>, CorpusError> {
    let file = std::fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = std::io::BufReader::new(file);
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ReviewRecord = serde_json::from_str(&line)
            .map_err(|source| CorpusError::Json { line: line_no, source })?;
        records.push((line_no, record));
    }
    Ok(records)
}

/// Load a corpus file, validating every record. Order is preserved.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<AnnotatedReview>, CorpusError> {
    load_corpus_with(path, &LoadOptions::default())
}

/// [`load_corpus`] with explicit [`LoadOptions`].
pub fn load_corpus_with(
    path: impl AsRef<Path>,
    options: &LoadOptions,
) -> Result<Vec<AnnotatedReview>, CorpusError> {
    let records = read_records(path.as_ref())?;
    let mut seen = HashSet::new();
    let mut corpus = Vec::with_capacity(records.len());
    for (line, record) in records {
        if !seen.insert(record.id.clone()) {
            return Err(CorpusError::DuplicateId {
                id: record.id,
                line,
            });
        }
        let (annotated, _) = record.into_annotated();
        if options.validate {
            let violations = validate_review_with(&annotated, options);
            if !violations.is_empty() {
                return Err(CorpusError::Invalid {
                    id: annotated.review.id,
                    violations,
                });
            }
        }
        corpus.push(annotated);
    }
    Ok(corpus)
}

/// Write a corpus as newline-delimited JSON. Round-trips byte-faithfully
/// through [`load_corpus`].
pub fn save_corpus(
    path: impl AsRef<Path>,
    corpus: &[AnnotatedReview],
) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut writer = std::io::BufWriter::new(file);
    for review in corpus {
        let record = ReviewRecord::from_annotated(review, None);
        let json = serde_json::to_string(&record).expect("corpus records serialize");
        writeln!(writer, "{json}").map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    Ok(())
}

/// Check all span and review invariants; empty result means the record is valid.
pub fn validate_review(r: &AnnotatedReview) -> Vec<Violation> {
    validate_review_with(r, &LoadOptions::default())
}

/// [`validate_review`] with explicit options (rating range).
pub fn validate_review_with(r: &AnnotatedReview, options: &LoadOptions) -> Vec<Violation> {
    let mut out = Vec::new();
    let push = |out: &mut Vec<Violation>, span_index, rule, message: String| {
        out.push(Violation {
            span_index,
            rule,
            message,
        });
    };

    if r.review.id.is_empty() {
        push(&mut out, None, ViolationRule::EmptyId, "review id is empty".into());
    }
    if r.review.text.is_empty() {
        push(&mut out, None, ViolationRule::EmptyText, "review text is empty".into());
    }
    if let Some(rating) = r.review.human_substantiation {
        if !options.rating_range.contains(&rating) {
            push(
                &mut out,
                None,
                ViolationRule::RatingOutOfRange,
                format!(
                    "human_substantiation {rating} outside {:?}",
                    options.rating_range
                ),
            );
        }
    }

    let text_len = cp_len(&r.review.text);
    for (i, span) in r.spans.iter().enumerate() {
        if span.start_char >= span.end_char {
            push(
                &mut out,
                Some(i),
                ViolationRule::SpanEmpty,
                format!("start {} must be < end {}", span.start_char, span.end_char),
            );
        }
        if span.end_char > text_len {
            push(
                &mut out,
                Some(i),
                ViolationRule::SpanOutOfBounds,
                format!("end {} exceeds text length {}", span.end_char, text_len),
            );
        }
    }

    // Pairwise overlap within claims and within evidence.
    let indexed: Vec<(usize, &ArgSpan)> = r.spans.iter().enumerate().collect();
    for (pos, &(i, a)) in indexed.iter().enumerate() {
        for &(j, b) in &indexed[pos + 1..] {
            if a.span_type.is_claim() == b.span_type.is_claim() && a.overlaps(b) {
                let rule = if a.span_type.is_claim() {
                    ViolationRule::ClaimOverlap
                } else {
                    ViolationRule::EvidenceOverlap
                };
                push(
                    &mut out,
                    Some(j),
                    rule,
                    format!("spans {i} and {j} overlap"),
                );
            }
        }
    }

    // Claim ordinals unique per polarity; evidence resolves and is unique per claim.
    let mut claim_keys = HashSet::new();
    for (i, span) in r.spans.iter().enumerate() {
        if span.span_type.is_claim() && !claim_keys.insert(span.claim_key()) {
            push(
                &mut out,
                Some(i),
                ViolationRule::DuplicateClaimOrdinal,
                format!(
                    "claim ordinal {} duplicated for polarity {}",
                    span.claim_id,
                    span.span_type.polarity()
                ),
            );
        }
    }
    let mut evidence_keys = HashSet::new();
    for (i, span) in r.spans.iter().enumerate() {
        if !span.span_type.is_evidence() {
            continue;
        }
        if !claim_keys.contains(&span.claim_key()) {
            push(
                &mut out,
                Some(i),
                ViolationRule::DanglingEvidence,
                format!(
                    "evidence references {} claim {} which does not exist",
                    span.span_type.polarity(),
                    span.claim_id
                ),
            );
        }
        if !evidence_keys.insert(span.claim_key()) {
            push(
                &mut out,
                Some(i),
                ViolationRule::MultipleEvidence,
                format!(
                    "claim {} {} already has evidence; evidence is one contiguous span per claim",
                    span.span_type.polarity(),
                    span.claim_id
                ),
            );
        }
    }

    out
}

/// Deterministic seeded train/test split. `|test| = round(test_fraction * n)`;
/// both partitions keep the original corpus order.
pub fn split_corpus(
    corpus: Vec<AnnotatedReview>,
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<AnnotatedReview>, Vec<AnnotatedReview>), CorpusError> {
    if corpus.is_empty() {
        return Err(CorpusError::Empty);
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(CorpusError::BadFraction(test_fraction));
    }
    let n = corpus.len();
    let n_test = ((test_fraction * n as f64).round() as usize).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut rng);
    let test_set: HashSet<usize> = indices.into_iter().take(n_test).collect();
    let mut train = Vec::with_capacity(n - n_test);
    let mut test = Vec::with_capacity(n_test);
    for (i, review) in corpus.into_iter().enumerate() {
        if test_set.contains(&i) {
            test.push(review);
        } else {
            train.push(review);
        }
    }
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit;

    fn simple_review(id: &str, text: &str, spans: Vec<ArgSpan>) -> AnnotatedReview {
        AnnotatedReview::new(
            Review {
                id: id.to_string(),
                venue: "ACL".to_string(),
                year: 2017,
                text: text.to_string(),
                human_substantiation: None,
                human_difficulty: None,
            },
            spans,
        )
    }

    #[test]
    fn load_single_record_without_spans() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        std::fs::write(
            &path,
            r#"{"id":"r1","venue":"ACL","year":2017,"text":"A fine paper.","spans":[]}"#,
        )
        .unwrap();
        let corpus = load_corpus(&path).unwrap();
        assert_eq!(corpus.len(), 1);
        assert!(corpus[0].spans.is_empty());
        assert_eq!(corpus[0].review.text, "A fine paper.");
    }

    #[test]
    fn sample_annotated_review_loads_with_resolving_links() {
        // Two positive claims, two negative claims, two negative evidence
        // spans linked to negative claims 1 and 2.
        let review = testkit::sample_annotated_review();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        save_corpus(&path, std::slice::from_ref(&review)).unwrap();
        let corpus = load_corpus(&path).unwrap();
        assert_eq!(corpus.len(), 1);
        let loaded = &corpus[0];
        assert_eq!(loaded.spans.len(), 6);
        assert_eq!(loaded.claims().count(), 4);
        for ev in loaded.evidence() {
            assert_eq!(ev.span_type, SpanType::EvidenceNeg);
            assert!(loaded
                .claims()
                .any(|c| c.claim_key() == ev.claim_key()));
        }
        assert_eq!(loaded, &review);
    }

    #[test]
    fn dangling_evidence_is_a_load_error_naming_the_record() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        std::fs::write(
            &path,
            r#"{"id":"bad1","venue":"ACL","year":2017,"text":"Claim here. Evidence there.","spans":[{"type":"claim_neg","start":0,"end":11,"claim_id":1},{"type":"evidence_neg","start":12,"end":27,"claim_id":2}]}"#,
        )
        .unwrap();
        let err = load_corpus(&path).unwrap_err();
        match err {
            CorpusError::Invalid { id, violations } => {
                assert_eq!(id, "bad1");
                assert!(violations
                    .iter()
                    .any(|v| v.rule == ViolationRule::DanglingEvidence));
            }
            other => panic!("expected Invalid, got {other:?}"),
        }
    }

    #[test]
    fn malformed_json_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        std::fs::write(
            &path,
            "{\"id\":\"r1\",\"venue\":\"ACL\",\"year\":2017,\"text\":\"ok\",\"spans\":[]}\nnot json\n",
        )
        .unwrap();
        match load_corpus(&path).unwrap_err() {
            CorpusError::Json { line, .. } => assert_eq!(line, 2),
            other => panic!("expected Json error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_ids_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        let line = r#"{"id":"r1","venue":"ACL","year":2017,"text":"ok","spans":[]}"#;
        std::fs::write(&path, format!("{line}\n{line}\n")).unwrap();
        assert!(matches!(
            load_corpus(&path).unwrap_err(),
            CorpusError::DuplicateId { line: 2, .. }
        ));
    }

    #[test]
    fn validate_flags_claim_overlap() {
        let r = simple_review(
            "r1",
            "The method is interesting and strong.",
            vec![
                ArgSpan::new(SpanType::ClaimPos, 0, 20, 1),
                ArgSpan::new(SpanType::ClaimPos, 10, 30, 2),
            ],
        );
        let violations = validate_review(&r);
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].rule, ViolationRule::ClaimOverlap);
    }

    #[test]
    fn validate_flags_polarity_mismatch_as_dangling() {
        let r = simple_review(
            "r1",
            "Bad claim. Some justification.",
            vec![
                ArgSpan::new(SpanType::ClaimNeg, 0, 10, 1),
                ArgSpan::new(SpanType::EvidencePos, 11, 30, 1),
            ],
        );
        let violations = validate_review(&r);
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].rule, ViolationRule::DanglingEvidence);
    }

    #[test]
    fn validate_accepts_clean_review() {
        let r = simple_review(
            "r1",
            "Good idea. It works on three datasets.",
            vec![
                ArgSpan::new(SpanType::ClaimPos, 0, 10, 1),
                ArgSpan::new(SpanType::EvidencePos, 11, 38, 1),
            ],
        );
        assert!(validate_review(&r).is_empty());
    }

    #[test]
    fn multiple_evidence_per_claim_rejected() {
        let r = simple_review(
            "r1",
            "Weak evaluation. Only one dataset. No ablations either.",
            vec![
                ArgSpan::new(SpanType::ClaimNeg, 0, 16, 1),
                ArgSpan::new(SpanType::EvidenceNeg, 17, 34, 1),
                ArgSpan::new(SpanType::EvidenceNeg, 35, 56, 1),
            ],
        );
        let violations = validate_review(&r);
        assert!(violations
            .iter()
            .any(|v| v.rule == ViolationRule::MultipleEvidence));
    }

    #[test]
    fn rating_range_is_configurable() {
        let mut r = simple_review("r1", "ok", vec![]);
        r.review.human_substantiation = Some(5);
        assert!(validate_review(&r)
            .iter()
            .any(|v| v.rule == ViolationRule::RatingOutOfRange));
        let options = LoadOptions {
            rating_range: 1..=5,
            ..LoadOptions::default()
        };
        assert!(validate_review_with(&r, &options).is_empty());
    }

    #[test]
    fn split_sizes_match_rounded_fraction() {
        let corpus: Vec<AnnotatedReview> = (0..550)
            .map(|i| simple_review(&format!("r{i}"), "text", vec![]))
            .collect();
        let (train, test) = split_corpus(corpus, 0.2, 7).unwrap();
        assert_eq!(train.len(), 440);
        assert_eq!(test.len(), 110);
    }

    #[test]
    fn split_is_deterministic_and_partitions() {
        let corpus: Vec<AnnotatedReview> = (0..10)
            .map(|i| simple_review(&format!("r{i}"), "text", vec![]))
            .collect();
        let (train_a, test_a) = split_corpus(corpus.clone(), 0.2, 99).unwrap();
        let (train_b, test_b) = split_corpus(corpus.clone(), 0.2, 99).unwrap();
        assert_eq!(train_a, train_b);
        assert_eq!(test_a, test_b);

        let mut ids: Vec<&str> = train_a
            .iter()
            .chain(test_a.iter())
            .map(|r| r.review.id.as_str())
            .collect();
        ids.sort();
        let mut expected: Vec<String> = (0..10).map(|i| format!("r{i}")).collect();
        expected.sort();
        assert_eq!(ids, expected.iter().map(String::as_str).collect::<Vec<_>>());
    }

    #[test]
    fn split_five_reviews_gives_four_one() {
        let corpus: Vec<AnnotatedReview> = (0..5)
            .map(|i| simple_review(&format!("r{i}"), "text", vec![]))
            .collect();
        let (train, test) = split_corpus(corpus.clone(), 0.2, 3).unwrap();
        assert_eq!((train.len(), test.len()), (4, 1));
        let mut union: Vec<String> = train
            .iter()
            .chain(test.iter())
            .map(|r| r.review.id.clone())
            .collect();
        union.sort();
        let mut expected: Vec<String> = corpus.iter().map(|r| r.review.id.clone()).collect();
        expected.sort();
        assert_eq!(union, expected);
    }

    #[test]
    fn split_rejects_empty_and_bad_fraction() {
        assert!(matches!(
            split_corpus(vec![], 0.2, 1).unwrap_err(),
            CorpusError::Empty
        ));
        let corpus = vec![simple_review("r1", "t", vec![])];
        assert!(matches!(
            split_corpus(corpus, 1.0, 1).unwrap_err(),
            CorpusError::BadFraction(_)
        ));
    }
}
