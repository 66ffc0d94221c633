//! Corpus-level commands: `validate`, `split`, `stats`, and `score`.

use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use substan::corpus::{
    load_corpus, load_corpus_with, save_corpus, split_corpus, validate_review, LoadOptions,
};
use substan::render::{boxplot, write_png};
use substan::scoring::{corpus_stats, correlate_corpus, substan_score, ScoringError};

use crate::error::CliError;
use crate::manifest::{ensure_dir, write_json, RunManifest};

#[derive(Args)]
pub struct ValidateArgs {
    /// Corpus file (JSON lines).
    pub corpus: PathBuf,
    /// Only check that the file parses; skip the gold-data span
    /// invariants, which prediction files may legitimately violate.
    #[arg(long)]
    pub lenient: bool,
    /// Also write a JSON violation report into this directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Serialize)]
struct ValidationReport {
    n_reviews: usize,
    n_violations: usize,
    violations: Vec<ReviewViolations>,
}

#[derive(Serialize)]
struct ReviewViolations {
    review_id: String,
    violations: Vec<substan::corpus::Violation>,
}

pub fn validate(args: &ValidateArgs) -> Result<(), CliError> {
    let corpus = load_corpus_with(&args.corpus, &LoadOptions::lenient())?;
    let mut report = ValidationReport {
        n_reviews: corpus.len(),
        n_violations: 0,
        violations: Vec::new(),
    };
    if !args.lenient {
        for review in &corpus {
            let violations = validate_review(review);
            if violations.is_empty() {
                continue;
            }
            for v in &violations {
                println!("{}: {v}", review.review.id);
            }
            report.n_violations += violations.len();
            report.violations.push(ReviewViolations {
                review_id: review.review.id.clone(),
                violations,
            });
        }
    }
    if let Some(dir) = &args.out_dir {
        ensure_dir(dir)?;
        write_json(dir, "validation.json", &report)?;
        let mut manifest = RunManifest::new("validate");
        manifest.input("corpus", &args.corpus)?;
        manifest.set_config(&serde_json::json!({ "lenient": args.lenient }))?;
        manifest.output("validation.json");
        manifest.write(dir)?;
    }
    println!(
        "{} reviews, {} violations",
        report.n_reviews, report.n_violations
    );
    if report.n_violations > 0 {
        return Err(CliError::Data(format!(
            "{} invariant violations in {}",
            report.n_violations,
            args.corpus.display()
        )));
    }
    Ok(())
}

#[derive(Args)]
pub struct SplitArgs {
    /// Corpus file (JSON lines).
    pub corpus: PathBuf,
    /// Fraction of reviews moved to the test side.
    #[arg(long, default_value_t = 0.2)]
    pub fraction: f64,
    #[arg(long, default_value_t = 13)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub fn split(args: &SplitArgs) -> Result<(), CliError> {
    let corpus = load_corpus(&args.corpus)?;
    let (train, test) = split_corpus(corpus, args.fraction, args.seed)?;
    ensure_dir(&args.out_dir)?;
    save_corpus(args.out_dir.join("train.jsonl"), &train)?;
    save_corpus(args.out_dir.join("test.jsonl"), &test)?;

    let mut manifest = RunManifest::new("split");
    manifest.input("corpus", &args.corpus)?;
    manifest.set_config(&serde_json::json!({
        "fraction": args.fraction,
        "seed": args.seed,
    }))?;
    manifest.seed = Some(args.seed);
    manifest.output("train.jsonl");
    manifest.output("test.jsonl");
    manifest.write(&args.out_dir)?;

    println!("train {} / test {}", train.len(), test.len());
    Ok(())
}

#[derive(Args)]
pub struct StatsArgs {
    /// Corpus file (JSON lines).
    pub corpus: PathBuf,
    /// Grouping key; rows are per venue and year.
    #[arg(long, default_value = "venue")]
    pub group_by: String,
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub fn stats(args: &StatsArgs) -> Result<(), CliError> {
    if args.group_by != "venue" {
        return Err(CliError::Usage(format!(
            "unknown group key {:?}; supported: venue",
            args.group_by
        )));
    }
    let corpus = load_corpus(&args.corpus)?;
    let rows = corpus_stats(&corpus)?;

    ensure_dir(&args.out_dir)?;
    let mut writer = csv::Writer::from_path(args.out_dir.join("stats.csv"))?;
    writer.write_record([
        "venue",
        "year",
        "n_reviews",
        "claims_pos",
        "claims_neg",
        "claims_all",
        "pct_supported_pos",
        "pct_supported_neg",
        "pct_supported_all",
        "len_words",
    ])?;
    for row in &rows {
        writer.write_record([
            row.venue.clone(),
            row.year.to_string(),
            row.n_reviews.to_string(),
            fmt_cell(row.mean_claims_pos),
            fmt_cell(row.mean_claims_neg),
            fmt_cell(row.mean_claims_all),
            fmt_cell(row.mean_pct_supported_pos),
            fmt_cell(row.mean_pct_supported_neg),
            fmt_cell(row.mean_pct_supported_all),
            fmt_cell(row.mean_len_words),
        ])?;
    }
    writer.flush()?;

    let mut manifest = RunManifest::new("stats");
    manifest.input("corpus", &args.corpus)?;
    manifest.set_config(&serde_json::json!({ "group_by": args.group_by }))?;
    manifest.output("stats.csv");
    manifest.write(&args.out_dir)?;

    for row in &rows {
        println!(
            "{} {}: {} reviews, {:.2} claims, {:.2}% supported, {:.0} words",
            row.venue,
            row.year,
            row.n_reviews,
            row.mean_claims_all,
            row.mean_pct_supported_all,
            row.mean_len_words
        );
    }
    Ok(())
}

/// Full-precision float cell; undefined means (no qualifying reviews) stay
/// empty rather than printing NaN.
fn fmt_cell(value: f64) -> String {
    if value.is_nan() {
        String::new()
    } else {
        value.to_string()
    }
}

#[derive(Args)]
pub struct ScoreArgs {
    /// Corpus file (JSON lines).
    pub corpus: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Serialize)]
struct ScoreReport {
    n_reviews: usize,
    mean_score: f64,
    /// Spearman correlation against human substantiation ratings, when the
    /// corpus carries enough of them.
    correlation: Option<Correlation>,
    correlation_note: Option<String>,
}

#[derive(Serialize)]
struct Correlation {
    spearman_rho: f64,
    p_value: f64,
    n: usize,
}

pub fn score(args: &ScoreArgs) -> Result<(), CliError> {
    let corpus = load_corpus(&args.corpus)?;
    if corpus.is_empty() {
        return Err(CliError::Data("corpus is empty".to_string()));
    }
    let records: Vec<_> = corpus.iter().map(substan_score).collect();

    ensure_dir(&args.out_dir)?;
    let mut writer = csv::Writer::from_path(args.out_dir.join("scores.csv"))?;
    for record in &records {
        writer.serialize(record)?;
    }
    writer.flush()?;

    let rated = corpus
        .iter()
        .filter(|r| r.review.human_substantiation.is_some())
        .count();
    let (correlation, correlation_note) = match correlate_corpus(&corpus) {
        Ok((rho, p)) => (
            Some(Correlation {
                spearman_rho: rho,
                p_value: p,
                n: rated,
            }),
            None,
        ),
        Err(e @ (ScoringError::TooFewValues { .. } | ScoringError::ConstantInput)) => {
            (None, Some(e.to_string()))
        }
        Err(e) => return Err(e.into()),
    };
    let report = ScoreReport {
        n_reviews: records.len(),
        mean_score: records.iter().map(|r| r.score).sum::<f64>() / records.len().max(1) as f64,
        correlation,
        correlation_note,
    };
    write_json(&args.out_dir, "report.json", &report)?;

    // Score distributions per (venue, year), matching the stats grouping.
    let mut groups: std::collections::BTreeMap<(String, i32), Vec<f64>> = Default::default();
    for (review, record) in corpus.iter().zip(&records) {
        groups
            .entry((review.review.venue.clone(), review.review.year))
            .or_default()
            .push(record.score);
    }
    let labels: Vec<String> = groups.keys().map(|(v, y)| format!("{v} {y}")).collect();
    let values: Vec<Vec<f64>> = groups.into_values().collect();
    let img = boxplot(&values, 240, 21)?;
    write_png(&args.out_dir.join("scores_by_group.png"), &img)?;
    write_json(
        &args.out_dir,
        "scores_by_group.png.json",
        &serde_json::json!({
            "groups": labels,
            "orientation": "left to right, larger scores higher",
        }),
    )?;

    let mut manifest = RunManifest::new("score");
    manifest.input("corpus", &args.corpus)?;
    manifest.set_config(&serde_json::Value::Null)?;
    manifest.output("scores.csv");
    manifest.output("report.json");
    manifest.output("scores_by_group.png");
    manifest.output("scores_by_group.png.json");
    manifest.write(&args.out_dir)?;

    match &report.correlation {
        Some(c) => println!(
            "{} reviews, mean score {:.1}, spearman rho {:.4} (p = {:.4}, n = {})",
            report.n_reviews, report.mean_score, c.spearman_rho, c.p_value, c.n
        ),
        None => println!(
            "{} reviews, mean score {:.1}, correlation unavailable: {}",
            report.n_reviews,
            report.mean_score,
            report.correlation_note.as_deref().unwrap_or("no ratings")
        ),
    }
    Ok(())
}
