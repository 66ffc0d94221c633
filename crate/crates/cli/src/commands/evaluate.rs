//! `evaluate` and `agreement`: score predictions against gold annotations
//! and measure inter-annotator reliability.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use substan::agreement::{agreement_report, consensus_review, load_multi_annotator};
use substan::corpus::{
    load_corpus, load_corpus_with, save_corpus, AnnotatedReview, LoadOptions,
};
use substan::linker::EvidenceAnswer;
use substan::metrics::{
    evidence_eval_many, pipeline_eval, span_prf_many, token_classes, token_confusion,
    ConfusionMatrix, EvidenceEval, PrfCounts,
};
use substan::render::{heatmap, write_png};
use substan::spans::TokenAlignment;
use substan::text::whitespace_tokenize;

use crate::error::CliError;
use crate::manifest::{ensure_dir, write_json, RunManifest};

#[derive(Args)]
pub struct EvaluateArgs {
    /// Gold corpus (JSON lines, validated).
    pub gold: PathBuf,
    /// Predictions over the same reviews (JSON lines, loaded leniently:
    /// model output owes no structural guarantees).
    pub pred: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Serialize)]
struct ClassReport {
    precision: f64,
    recall: f64,
    f1: f64,
    tp: usize,
    n_gold: usize,
    n_pred: usize,
}

impl From<&PrfCounts> for ClassReport {
    fn from(c: &PrfCounts) -> Self {
        ClassReport {
            precision: c.precision(),
            recall: c.recall(),
            f1: c.f1(),
            tp: c.tp,
            n_gold: c.n_gold,
            n_pred: c.n_pred,
        }
    }
}

#[derive(Serialize)]
struct EvaluateReport {
    n_reviews: usize,
    claims: ClaimSection,
    evidence: EvidenceEval,
    pipeline: PipelineSection,
}

#[derive(Serialize)]
struct ClaimSection {
    per_type: BTreeMap<String, ClassReport>,
    macro_precision: f64,
    macro_recall: f64,
    macro_f1: f64,
}

#[derive(Serialize)]
struct PipelineSection {
    per_class: BTreeMap<String, ClassReport>,
    n_tokens: usize,
}

/// Orders `pred` to match `gold` review by review. The two files must
/// cover exactly the same reviews with identical texts.
fn pair_corpora(
    gold: &[AnnotatedReview],
    pred: Vec<AnnotatedReview>,
) -> Result<Vec<AnnotatedReview>, CliError> {
    let mut by_id: BTreeMap<String, AnnotatedReview> = pred
        .into_iter()
        .map(|r| (r.review.id.clone(), r))
        .collect();
    let mut ordered = Vec::with_capacity(gold.len());
    for g in gold {
        let p = by_id.remove(&g.review.id).ok_or_else(|| {
            CliError::Data(format!("predictions miss review {:?}", g.review.id))
        })?;
        if p.review.text != g.review.text {
            return Err(CliError::Data(format!(
                "review {:?} has different texts in gold and predictions",
                g.review.id
            )));
        }
        ordered.push(p);
    }
    if let Some(extra) = by_id.keys().next() {
        return Err(CliError::Data(format!(
            "predictions contain review {extra:?} that is not in the gold corpus"
        )));
    }
    Ok(ordered)
}

/// Evidence answers for every gold claim, in both corpora, keyed by the
/// claim's `(polarity, ordinal)`. A missing or token-free evidence span
/// counts as a null answer; predicted claims that match no gold claim are
/// ignored here (they are already punished by the claim scores).
fn evidence_pairs(
    gold: &[AnnotatedReview],
    pred: &[AnnotatedReview],
) -> Vec<(EvidenceAnswer, EvidenceAnswer)> {
    let answer = |r: &AnnotatedReview, alignment: &TokenAlignment, polarity, ordinal| {
        r.evidence_for(polarity, ordinal)
            .and_then(|ev| alignment.span_to_tokens(ev.start_char, ev.end_char))
            .map_or(EvidenceAnswer::null(), |(first, last)| {
                EvidenceAnswer::span(first, last - 1)
            })
    };
    let mut pairs = Vec::new();
    for (g, p) in gold.iter().zip(pred) {
        let alignment = TokenAlignment::new(&g.review.text, whitespace_tokenize);
        for claim in g.claims() {
            let (polarity, ordinal) = claim.claim_key();
            pairs.push((
                answer(g, &alignment, polarity, ordinal),
                answer(p, &alignment, polarity, ordinal),
            ));
        }
    }
    pairs
}

fn confusion_over(
    gold: &[AnnotatedReview],
    pred: &[AnnotatedReview],
) -> Result<ConfusionMatrix, CliError> {
    let mut gold_labels = Vec::new();
    let mut pred_labels = Vec::new();
    for (g, p) in gold.iter().zip(pred) {
        let alignment = TokenAlignment::new(&g.review.text, whitespace_tokenize);
        gold_labels.extend(token_classes(&alignment, &g.spans));
        pred_labels.extend(token_classes(&alignment, &p.spans));
    }
    Ok(token_confusion(&gold_labels, &pred_labels)?)
}

fn confusion_sidecar(matrix: &ConfusionMatrix, extra: serde_json::Value) -> serde_json::Value {
    let mut value = serde_json::json!({
        "rows": "gold",
        "columns": "predicted",
        "labels": ConfusionMatrix::labels(),
        "counts": matrix.counts,
    });
    if let (Some(map), Some(more)) = (value.as_object_mut(), extra.as_object()) {
        map.extend(more.clone());
    }
    value
}

pub fn evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    let gold = load_corpus(&args.gold)?;
    let pred = load_corpus_with(&args.pred, &LoadOptions::lenient())?;
    let pred = pair_corpora(&gold, pred)?;

    let claim_pairs: Vec<(Vec<_>, Vec<_>)> = gold
        .iter()
        .zip(&pred)
        .map(|(g, p)| {
            (
                g.claims().copied().collect(),
                p.claims().copied().collect(),
            )
        })
        .collect();
    let claims = span_prf_many(claim_pairs.iter().map(|(g, p)| (g.as_slice(), p.as_slice())));
    let evidence = evidence_eval_many(evidence_pairs(&gold, &pred).iter().map(|(g, p)| (g, p)));
    let pipeline = pipeline_eval(&gold, &pred)?;
    let confusion = confusion_over(&gold, &pred)?;

    let report = EvaluateReport {
        n_reviews: gold.len(),
        claims: ClaimSection {
            per_type: claims
                .per_type
                .iter()
                .map(|(t, c)| (t.as_str().to_string(), ClassReport::from(c)))
                .collect(),
            macro_precision: claims.macro_precision,
            macro_recall: claims.macro_recall,
            macro_f1: claims.macro_f1,
        },
        evidence,
        pipeline: PipelineSection {
            per_class: pipeline
                .per_class
                .iter()
                .map(|(c, counts)| (c.as_str().to_string(), ClassReport::from(counts)))
                .collect(),
            n_tokens: pipeline.n_tokens,
        },
    };

    ensure_dir(&args.out_dir)?;
    write_json(&args.out_dir, "report.json", &report)?;
    let rows: Vec<Vec<f64>> = confusion.row_normalized().iter().map(|r| r.to_vec()).collect();
    write_png(&args.out_dir.join("confusion.png"), &heatmap(&rows, 24)?)?;
    write_json(
        &args.out_dir,
        "confusion.png.json",
        &confusion_sidecar(&confusion, serde_json::json!({})),
    )?;

    let mut manifest = RunManifest::new("evaluate");
    manifest.input("gold", &args.gold)?;
    manifest.input("pred", &args.pred)?;
    manifest.set_config(&serde_json::json!({}))?;
    manifest.output("report.json");
    manifest.output("confusion.png");
    manifest.output("confusion.png.json");
    manifest.write(&args.out_dir)?;

    println!(
        "claims macro F1 {:.4} | evidence EM {:.4} F1 {:.4} over {} answer(s)",
        report.claims.macro_f1, report.evidence.em, report.evidence.f1, report.evidence.n
    );
    Ok(())
}

#[derive(Args)]
pub struct AgreementArgs {
    /// Multi-annotator corpus: one JSON line per (review, annotator),
    /// carrying an `annotator_id` field.
    pub corpus: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Also write the majority-vote merge of all annotators.
    #[arg(long)]
    pub consensus: bool,
}

pub fn agreement(args: &AgreementArgs) -> Result<(), CliError> {
    let corpus = load_multi_annotator(&args.corpus)?;
    let report = agreement_report(&corpus)?;

    ensure_dir(&args.out_dir)?;
    write_json(&args.out_dir, "report.json", &report)?;
    let mut manifest = RunManifest::new("agreement");
    manifest.input("corpus", &args.corpus)?;
    manifest.set_config(&serde_json::json!({ "consensus": args.consensus }))?;
    manifest.output("report.json");

    for (i, pair) in report.pairwise_confusion.iter().enumerate() {
        let rows: Vec<Vec<f64>> = pair
            .matrix
            .row_normalized()
            .iter()
            .map(|r| r.to_vec())
            .collect();
        let png = format!("pair-{i}.png");
        write_png(&args.out_dir.join(&png), &heatmap(&rows, 24)?)?;
        write_json(
            &args.out_dir,
            &format!("{png}.json"),
            &confusion_sidecar(
                &pair.matrix,
                serde_json::json!({
                    "rows": pair.annotator_a,
                    "columns": pair.annotator_b,
                }),
            ),
        )?;
        manifest.output(&png);
        manifest.output(&format!("{png}.json"));
    }

    if args.consensus {
        let merged: Vec<AnnotatedReview> = corpus
            .iter()
            .map(consensus_review)
            .collect::<Result<_, _>>()?;
        save_corpus(args.out_dir.join("consensus.jsonl"), &merged)?;
        manifest.output("consensus.jsonl");
    }
    manifest.write(&args.out_dir)?;

    println!(
        "unitizing alpha {:.4} over {} review(s), {} annotator(s)",
        report.u_alpha, report.n_reviews, report.n_annotators
    );
    Ok(())
}
