//! Fixtures and synthetic corpora for tests, examples, and demos.
//!
//! Real annotated review data cannot ship with the crate, so everything here
//! is generated. The synthetic reviews are templated English with the same
//! shape as real data: filler sentences, claim sentences with lexical
//! sentiment signals, and evidence sentences that follow the claims they
//! support. Three template families are deliberately hard for a
//! lexicon-based tagger and easy for a trained one:
//!
//! * claims whose sentiment word is a synonym outside the common lexicon
//!   ([`words::POS_SYNONYMS`], [`words::NEG_SYNONYMS`]),
//! * neutral "trap" sentences that contain a lexicon word,
//! * claims covering only part of their sentence.

use std::ops::RangeInclusive;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{AnnotatedReview, ArgSpan, Polarity, Review, SpanType};
use crate::text::cp_len;

/// Sentiment words used by the synthetic templates, split by whether a
/// lexicon-based tagger is expected to know them.
pub mod words {
    /// Positive words a generic sentiment lexicon contains.
    pub const POS_SIGNALS: &[&str] = &[
        "good",
        "strong",
        "clear",
        "novel",
        "interesting",
        "solid",
        "convincing",
        "thorough",
    ];

    /// Negative words a generic sentiment lexicon contains.
    pub const NEG_SIGNALS: &[&str] = &[
        "weak",
        "unclear",
        "poor",
        "limited",
        "confusing",
        "insufficient",
        "questionable",
        "noisy",
    ];

    /// Positive words deliberately absent from the lexicon.
    pub const POS_SYNONYMS: &[&str] = &[
        "stellar",
        "commendable",
        "praiseworthy",
        "admirable",
        "polished",
    ];

    /// Negative words deliberately absent from the lexicon.
    pub const NEG_SYNONYMS: &[&str] = &["lackluster", "subpar", "wanting", "shoddy", "muddled"];
}

/// Incrementally builds an [`AnnotatedReview`] sentence by sentence,
/// tracking code-point offsets and per-polarity claim ordinals.
#[derive(Debug)]
pub struct ReviewBuilder {
    id: String,
    venue: String,
    year: i32,
    rating: Option<i32>,
    difficulty: Option<i32>,
    text: String,
    spans: Vec<ArgSpan>,
    next_ordinal: [u32; 2],
}

impl ReviewBuilder {
    pub fn new(id: &str) -> Self {
        ReviewBuilder {
            id: id.to_string(),
            venue: "SynthConf".to_string(),
            year: 2024,
            rating: None,
            difficulty: None,
            text: String::new(),
            spans: Vec::new(),
            next_ordinal: [1, 1],
        }
    }

    pub fn venue(mut self, venue: &str) -> Self {
        self.venue = venue.to_string();
        self
    }

    pub fn year(mut self, year: i32) -> Self {
        self.year = year;
        self
    }

    pub fn rating(mut self, rating: i32) -> Self {
        self.rating = Some(rating);
        self
    }

    pub fn difficulty(mut self, difficulty: i32) -> Self {
        self.difficulty = Some(difficulty);
        self
    }

    /// Appends a sentence with no annotation.
    pub fn plain(mut self, sentence: &str) -> Self {
        self.append(sentence);
        self
    }

    /// Appends a sentence annotated whole as a claim. Ordinals count up
    /// per polarity in insertion order, starting at 1.
    pub fn claim(mut self, polarity: Polarity, sentence: &str) -> Self {
        let (start, end) = self.append(sentence);
        let ordinal = self.take_ordinal(polarity);
        self.spans
            .push(ArgSpan::new(SpanType::claim(polarity), start, end, ordinal));
        self
    }

    /// Appends `prefix + claim + suffix` as one sentence, annotating only the
    /// middle part.
    pub fn claim_in(mut self, polarity: Polarity, prefix: &str, claim: &str, suffix: &str) -> Self {
        let sentence = format!("{prefix}{claim}{suffix}");
        let (start, _) = self.append(&sentence);
        let claim_start = start + cp_len(prefix);
        let claim_end = claim_start + cp_len(claim);
        let ordinal = self.take_ordinal(polarity);
        self.spans.push(ArgSpan::new(
            SpanType::claim(polarity),
            claim_start,
            claim_end,
            ordinal,
        ));
        self
    }

    /// Appends a sentence annotated whole as evidence for the claim
    /// `(polarity, ordinal)`.
    pub fn evidence(mut self, polarity: Polarity, ordinal: u32, sentence: &str) -> Self {
        let (start, end) = self.append(sentence);
        self.spans.push(ArgSpan::new(
            SpanType::evidence(polarity),
            start,
            end,
            ordinal,
        ));
        self
    }

    /// Ordinal the next claim of `polarity` will receive.
    pub fn next_claim_ordinal(&self, polarity: Polarity) -> u32 {
        self.next_ordinal[polarity as usize]
    }

    pub fn build(self) -> AnnotatedReview {
        AnnotatedReview::new(
            Review {
                id: self.id,
                venue: self.venue,
                year: self.year,
                text: self.text,
                human_substantiation: self.rating,
                human_difficulty: self.difficulty,
            },
            self.spans,
        )
    }

    fn append(&mut self, sentence: &str) -> (usize, usize) {
        if !self.text.is_empty() {
            self.text.push(' ');
        }
        let start = cp_len(&self.text);
        self.text.push_str(sentence);
        (start, start + cp_len(sentence))
    }

    fn take_ordinal(&mut self, polarity: Polarity) -> u32 {
        let slot = &mut self.next_ordinal[polarity as usize];
        let ordinal = *slot;
        *slot += 1;
        ordinal
    }
}

/// A handcrafted review with the canonical annotation shape: two positive
/// claims left unsupported, two negative claims each backed by one evidence
/// sentence.
pub fn sample_annotated_review() -> AnnotatedReview {
    ReviewBuilder::new("sample_0001")
        .venue("SynthConf")
        .year(2024)
        .rating(2)
        .plain("This paper proposes a span based tagger for citation intent.")
        .claim(Polarity::Positive, "The writing is clear and easy to follow.")
        .claim(Polarity::Positive, "The idea of reusing one encoder is novel.")
        .claim_in(
            Polarity::Negative,
            "However, ",
            "the evaluation is limited",
            ".",
        )
        .evidence(
            Polarity::Negative,
            1,
            "Only one dataset is used in the experiments.",
        )
        .claim(
            Polarity::Negative,
            "The comparison to prior work is also insufficient.",
        )
        .evidence(
            Polarity::Negative,
            2,
            "Two recent published baselines are absent from table 3.",
        )
        .build()
}

/// Parameters for [`synthetic_corpus`].
#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    pub n_reviews: usize,
    /// Sentences per review, drawn uniformly.
    pub sentences: RangeInclusive<usize>,
    pub venue: String,
    pub year: i32,
    pub id_prefix: String,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_reviews: 100,
            sentences: 5..=9,
            venue: "SynthConf".to_string(),
            year: 2024,
            id_prefix: "synth_".to_string(),
            seed: 0,
        }
    }
}

const TOPICS: &[&str] = &[
    "method",
    "evaluation",
    "analysis",
    "writing",
    "motivation",
    "experimental setup",
    "presentation",
    "case study",
];

const FILLERS: &[&str] = &[
    "This paper studies argument mining for peer reviewed papers.",
    "The authors build on prior work from several groups.",
    "Section 2 introduces the task setup and the notation.",
    "The model is trained on a public corpus of abstracts.",
    "An overview of the pipeline appears in figure 1.",
    "The submission follows the standard conference template.",
    "Related work is organized around two research threads.",
    "The appendix lists the preprocessing steps in detail.",
];

/// Neutral sentences that contain a lexicon word.
const TRAP_FILLERS: &[&str] = &[
    "A strong emphasis is placed on reproducibility throughout.",
    "The good practices checklist is filled out in the appendix.",
    "The limited memory variant is sketched for completeness.",
    "Prior work on noisy labels is surveyed in section 4.",
    "Figures use a clear sans serif font for labels.",
    "The poor man's bootstrap is cited as an alternative estimator.",
];

const EVIDENCE_NEG: &[&str] = &[
    "Only one dataset is used in the experiments.",
    "Table 2 reports a single run without any variance.",
    "The comparison omits two recent published systems.",
    "No ablation isolates the contribution of each part.",
    "The proof of lemma 3 skips the boundary case.",
    "The gains in table 5 look noisy across random seeds.",
];

const EVIDENCE_POS: &[&str] = &[
    "Results improve on all three public benchmarks.",
    "The appendix includes every hyperparameter and seed.",
    "Code and data are released under an open license.",
    "Figure 4 shows consistent curves across splits.",
    "The user study covers forty participants in total.",
    "The margins in table 6 stay solid across seeds.",
];

fn claim_sentence(rng: &mut ChaCha8Rng, polarity: Polarity, word: &str) -> String {
    let topic = TOPICS.choose(rng).unwrap();
    match (polarity, rng.random_range(0..4u8)) {
        (Polarity::Positive, 0) => format!("The {topic} is {word}."),
        (Polarity::Positive, 1) => format!("The {topic} looks {word} overall."),
        (Polarity::Positive, 2) => format!("I find the {topic} really {word}."),
        (Polarity::Positive, _) => format!("Overall the {topic} is {word} and carefully done."),
        (Polarity::Negative, 0) => format!("The {topic} is {word}."),
        (Polarity::Negative, 1) => format!("The {topic} seems {word} to me."),
        (Polarity::Negative, 2) => format!("I find the {topic} rather {word}."),
        (Polarity::Negative, _) => {
            format!("Unfortunately the {topic} is {word} in its current form.")
        }
    }
}

// Partial claims start and end on token boundaries (prefix ends with a
// space, suffix starts with one) so char-exact spans stay reachable for
// token-level taggers, while still defeating sentence-level baselines.
fn partial_claim(rng: &mut ChaCha8Rng, polarity: Polarity, word: &str) -> (String, String, String) {
    let topic = TOPICS.choose(rng).unwrap();
    match (polarity, rng.random_range(0..2u8)) {
        (Polarity::Positive, 0) => (
            "Despite a few rough passages, ".to_string(),
            format!("the {topic} is {word}"),
            " on balance.".to_string(),
        ),
        (Polarity::Positive, _) => (
            "Setting minor quibbles aside, ".to_string(),
            format!("the {topic} stays {word}"),
            " throughout.".to_string(),
        ),
        (Polarity::Negative, 0) => (
            "Although the rebuttal helped, ".to_string(),
            format!("the {topic} remains {word}"),
            " after revision.".to_string(),
        ),
        (Polarity::Negative, _) => (
            "While I enjoyed reading it, ".to_string(),
            format!("the {topic} is {word}"),
            " in places.".to_string(),
        ),
    }
}

/// Generates a deterministic corpus of synthetic annotated reviews.
///
/// Reviews are valid by construction: claims never overlap, every evidence
/// span follows its claim, and each claim has at most one evidence span.
/// `human_substantiation` is derived from the supported-claim ratio so
/// rating/score correlations are positive by design.
pub fn synthetic_corpus(config: &SyntheticConfig) -> Vec<AnnotatedReview> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    (0..config.n_reviews)
        .map(|i| synthetic_review(config, i, &mut rng))
        .collect()
}

fn synthetic_review(config: &SyntheticConfig, index: usize, rng: &mut ChaCha8Rng) -> AnnotatedReview {
    let budget = rng.random_range(config.sentences.clone());
    let mut builder = ReviewBuilder::new(&format!("{}{index:04}", config.id_prefix))
        .venue(&config.venue)
        .year(config.year)
        .plain(FILLERS.choose(rng).unwrap());
    let mut produced = 1;
    let mut claims = 0u32;
    let mut supported = 0u32;

    while produced < budget {
        let roll = rng.random_range(0..100u8);
        if roll < 25 {
            builder = builder.plain(FILLERS.choose(rng).unwrap());
            produced += 1;
        } else if roll < 40 {
            builder = builder.plain(TRAP_FILLERS.choose(rng).unwrap());
            produced += 1;
        } else {
            let with_evidence = roll >= 65 && produced + 1 < budget;
            let polarity = if rng.random_bool(0.5) {
                Polarity::Positive
            } else {
                Polarity::Negative
            };
            let ordinal = builder.next_claim_ordinal(polarity);
            builder = add_claim(builder, rng, polarity);
            claims += 1;
            produced += 1;
            if with_evidence {
                let pool = match polarity {
                    Polarity::Positive => EVIDENCE_POS,
                    Polarity::Negative => EVIDENCE_NEG,
                };
                builder = builder.evidence(polarity, ordinal, pool.choose(rng).unwrap());
                supported += 1;
                produced += 1;
            }
        }
    }

    let rating = if claims == 0 {
        3
    } else {
        let ratio = f64::from(supported) / f64::from(claims);
        if ratio >= 0.75 {
            3
        } else if ratio >= 0.35 {
            2
        } else {
            1
        }
    };
    builder.rating(rating).build()
}

fn add_claim(builder: ReviewBuilder, rng: &mut ChaCha8Rng, polarity: Polarity) -> ReviewBuilder {
    let kind = rng.random_range(0..10u8);
    let word = match (polarity, kind >= 8) {
        (Polarity::Positive, false) => words::POS_SIGNALS.choose(rng).unwrap(),
        (Polarity::Positive, true) => words::POS_SYNONYMS.choose(rng).unwrap(),
        (Polarity::Negative, false) => words::NEG_SIGNALS.choose(rng).unwrap(),
        (Polarity::Negative, true) => words::NEG_SYNONYMS.choose(rng).unwrap(),
    };
    if (6..8).contains(&kind) {
        let (prefix, claim, suffix) = partial_claim(rng, polarity, word);
        builder.claim_in(polarity, &prefix, &claim, &suffix)
    } else {
        builder.claim(polarity, &claim_sentence(rng, polarity, word))
    }
}
