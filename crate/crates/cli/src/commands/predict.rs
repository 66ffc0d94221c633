//! `predict` and `baseline`: annotate raw reviews with claim and evidence
//! spans, either from trained artifacts or from the lexicon heuristics.

use std::path::PathBuf;

use clap::Args;

use substan::baselines::{
    baseline_annotate, lexicon_sentiment, rule_based_segmenter, token_overlap_similarity,
};
use substan::corpus::{load_corpus, save_corpus, AnnotatedReview, ArgSpan};
use substan::linker::{link_claims, load_linker};
use substan::tagger::{load_tagger, predict_claims};
use substan::text::whitespace_tokenize;

use crate::error::CliError;
use crate::manifest::{ensure_dir, RunManifest};

#[derive(Args)]
pub struct PredictArgs {
    /// Reviews to annotate (JSON lines). Existing spans are read only when
    /// `--use-gold-claims` asks for them.
    pub corpus: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Claim tagging model directory.
    #[arg(long)]
    pub tagger: Option<PathBuf>,
    /// Evidence linkage model directory.
    #[arg(long)]
    pub linker: Option<PathBuf>,
    /// Link evidence to the corpus's own claim spans instead of tagging.
    #[arg(long)]
    pub use_gold_claims: bool,
}

pub fn predict(args: &PredictArgs) -> Result<(), CliError> {
    if args.tagger.is_none() && args.linker.is_none() {
        return Err(CliError::Usage(
            "predict needs --tagger, --linker, or both".to_string(),
        ));
    }
    if args.use_gold_claims {
        if args.tagger.is_some() {
            return Err(CliError::Usage(
                "--use-gold-claims and --tagger are two different claim sources; pick one"
                    .to_string(),
            ));
        }
        if args.linker.is_none() {
            return Err(CliError::Usage(
                "--use-gold-claims only makes sense with --linker".to_string(),
            ));
        }
    } else if args.linker.is_some() && args.tagger.is_none() {
        return Err(CliError::Usage(
            "--linker needs a claim source: add --tagger or --use-gold-claims".to_string(),
        ));
    }

    let corpus = load_corpus(&args.corpus)?;
    let mut tagger = args.tagger.as_deref().map(load_tagger).transpose()?;
    let mut linker = args.linker.as_deref().map(load_linker).transpose()?;

    let mut predictions = Vec::with_capacity(corpus.len());
    for item in &corpus {
        let claims: Vec<ArgSpan> = match &mut tagger {
            Some(model) => predict_claims(model, &item.review, whitespace_tokenize),
            None if args.use_gold_claims => item.claims().copied().collect(),
            None => Vec::new(),
        };
        let mut spans = claims.clone();
        if let Some(model) = &mut linker {
            spans.extend(link_claims(
                model,
                &item.review.text,
                &claims,
                whitespace_tokenize,
                &item.review.id,
            )?);
        }
        predictions.push(AnnotatedReview::new(item.review.clone(), spans));
    }

    ensure_dir(&args.out_dir)?;
    save_corpus(args.out_dir.join("predictions.jsonl"), &predictions)?;

    let mut manifest = RunManifest::new("predict");
    manifest.input("corpus", &args.corpus)?;
    for (role, dir) in [("tagger", &args.tagger), ("linker", &args.linker)] {
        if let Some(dir) = dir {
            manifest.input(&format!("{role}_config"), &dir.join("config.json"))?;
            manifest.input(&format!("{role}_weights"), &dir.join("weights.json"))?;
        }
    }
    manifest.set_config(&serde_json::json!({
        "use_gold_claims": args.use_gold_claims,
    }))?;
    manifest.output("predictions.jsonl");
    manifest.write(&args.out_dir)?;

    let n_spans: usize = predictions.iter().map(|r| r.spans.len()).sum();
    println!(
        "annotated {} review(s) with {} span(s)",
        predictions.len(),
        n_spans
    );
    Ok(())
}

#[derive(Args)]
pub struct BaselineArgs {
    /// Reviews to annotate (JSON lines).
    pub corpus: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Heuristic family; only the word-list adapter ships built in.
    #[arg(long, default_value = "lexicon")]
    pub adapter: String,
}

pub fn baseline(args: &BaselineArgs) -> Result<(), CliError> {
    if args.adapter != "lexicon" {
        return Err(CliError::Usage(format!(
            "unknown adapter {:?}; available: lexicon",
            args.adapter
        )));
    }
    let corpus = load_corpus(&args.corpus)?;
    let predictions: Vec<AnnotatedReview> = corpus
        .iter()
        .map(|item| {
            baseline_annotate(
                &item.review,
                rule_based_segmenter,
                lexicon_sentiment,
                token_overlap_similarity,
            )
        })
        .collect();

    ensure_dir(&args.out_dir)?;
    save_corpus(args.out_dir.join("predictions.jsonl"), &predictions)?;

    let mut manifest = RunManifest::new("baseline");
    manifest.input("corpus", &args.corpus)?;
    manifest.set_config(&serde_json::json!({ "adapter": args.adapter }))?;
    manifest.output("predictions.jsonl");
    manifest.write(&args.out_dir)?;

    let n_spans: usize = predictions.iter().map(|r| r.spans.len()).sum();
    println!(
        "annotated {} review(s) with {} span(s)",
        predictions.len(),
        n_spans
    );
    Ok(())
}
