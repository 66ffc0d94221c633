//! `train-tagger` and `train-linker`: config merging, multi-run
//! orchestration, and run-report emission.
//!
//! With `--runs N` the command trains N models from consecutive seeds
//! (base, base+1, ...), writes each artifact under `run-<i>/model`, and
//! reports per-run metrics plus their mean. A single run writes its
//! artifact to `model/` directly. `--compare` takes another run report and
//! adds a two-sided Welch t-test between the two metric samples.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use substan::corpus::{load_corpus, AnnotatedReview};
use substan::encoder::BuiltinBackend;
use substan::linker::{
    build_queries, save_linker, train_linker, LinkerConfig, LinkerModel,
};
use substan::metrics::{evidence_eval_many, span_prf_many, welch_t_test};
use substan::render::{boxplot, write_png};
use substan::spans::TokenAlignment;
use substan::tagger::{
    predict_claims, save_tagger, train_tagger, ClassWeighting, TaggerConfig, TaggerModel,
    TrainingLog,
};
use substan::text::whitespace_tokenize;

use crate::error::CliError;
use crate::manifest::{ensure_dir, write_json, RunManifest};

#[derive(Clone, Copy, ValueEnum)]
pub enum WeightingArg {
    Uniform,
    InverseFrequency,
    InverseSqrtFrequency,
}

impl From<WeightingArg> for ClassWeighting {
    fn from(w: WeightingArg) -> Self {
        match w {
            WeightingArg::Uniform => ClassWeighting::Uniform,
            WeightingArg::InverseFrequency => ClassWeighting::InverseFrequency,
            WeightingArg::InverseSqrtFrequency => ClassWeighting::InverseSqrtFrequency,
        }
    }
}

/// Flags shared by both train commands.
#[derive(Args)]
pub struct TrainCommonArgs {
    /// Training corpus (JSON lines).
    pub corpus: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// JSON config file; the flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub encoder: Option<String>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Train this many models from consecutive seeds.
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
    /// Held-out corpus for the per-run metric; without it the metric is
    /// the best validation value from the training log.
    #[arg(long)]
    pub eval: Option<PathBuf>,
    /// Another run report (runs.json) to t-test this one against.
    #[arg(long)]
    pub compare: Option<PathBuf>,
}

#[derive(Args)]
pub struct TrainTaggerArgs {
    #[command(flatten)]
    pub common: TrainCommonArgs,
    #[arg(long, value_enum)]
    pub class_weighting: Option<WeightingArg>,
}

#[derive(Args)]
pub struct TrainLinkerArgs {
    #[command(flatten)]
    pub common: TrainCommonArgs,
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long)]
    pub max_answer_len: Option<usize>,
    #[arg(long)]
    pub null_bias: Option<f64>,
}

#[derive(Serialize, Deserialize)]
pub struct RunsReport {
    pub task: String,
    pub metric: String,
    pub per_run: Vec<RunRecord>,
    pub mean: f64,
    pub std: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_test: Option<TTest>,
}

#[derive(Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub metric: f64,
    pub best_epoch: usize,
    pub epochs_trained: usize,
    pub stopped_early: bool,
}

#[derive(Serialize, Deserialize)]
pub struct TTest {
    pub against: String,
    pub t: f64,
    pub p: f64,
}

fn load_config_file<T: serde::de::DeserializeOwned + Default>(
    path: Option<&Path>,
) -> Result<T, CliError> {
    match path {
        None => Ok(T::default()),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Data(format!("cannot read config {}: {e}", path.display()))
            })?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
        }
    }
}

fn override_field<T: Copy>(slot: &mut T, flag: Option<T>) {
    if let Some(value) = flag {
        *slot = value;
    }
}

fn merged_tagger_config(args: &TrainTaggerArgs) -> Result<TaggerConfig, CliError> {
    let mut config: TaggerConfig = load_config_file(args.common.config.as_deref())?;
    if let Some(encoder) = &args.common.encoder {
        config.encoder_id = encoder.clone();
    }
    override_field(&mut config.learning_rate, args.common.learning_rate);
    override_field(&mut config.batch_size, args.common.batch_size);
    override_field(&mut config.max_epochs, args.common.epochs);
    override_field(&mut config.early_stop_patience, args.common.patience);
    override_field(&mut config.weight_decay, args.common.weight_decay);
    override_field(&mut config.seed, args.common.seed);
    override_field(&mut config.max_len, args.common.max_len);
    override_field(
        &mut config.class_weighting,
        args.class_weighting.map(ClassWeighting::from),
    );
    Ok(config)
}

fn merged_linker_config(args: &TrainLinkerArgs) -> Result<LinkerConfig, CliError> {
    let mut config: LinkerConfig = load_config_file(args.common.config.as_deref())?;
    if let Some(encoder) = &args.common.encoder {
        config.encoder_id = encoder.clone();
    }
    override_field(&mut config.learning_rate, args.common.learning_rate);
    override_field(&mut config.batch_size, args.common.batch_size);
    override_field(&mut config.max_epochs, args.common.epochs);
    override_field(&mut config.early_stop_patience, args.common.patience);
    override_field(&mut config.weight_decay, args.common.weight_decay);
    override_field(&mut config.seed, args.common.seed);
    override_field(&mut config.max_len, args.common.max_len);
    override_field(&mut config.stride, args.stride);
    override_field(&mut config.max_answer_len, args.max_answer_len);
    override_field(&mut config.null_bias, args.null_bias);
    Ok(config)
}

/// Best validation metric recorded in a training log.
fn logged_metric(log: &TrainingLog) -> f64 {
    log.epochs
        .get(log.best_epoch.wrapping_sub(1))
        .map_or(0.0, |e| e.val_metric)
}

fn tagger_metric(model: &mut TaggerModel, eval: Option<&[AnnotatedReview]>) -> f64 {
    match eval {
        None => logged_metric(&model.log),
        Some(corpus) => {
            let pairs: Vec<(Vec<_>, Vec<_>)> = corpus
                .iter()
                .map(|r| {
                    let pred = predict_claims(model, &r.review, whitespace_tokenize);
                    (r.claims().cloned().collect(), pred)
                })
                .collect();
            span_prf_many(pairs.iter().map(|(g, p)| (g.as_slice(), p.as_slice()))).macro_f1
        }
    }
}

fn linker_metric(
    model: &mut LinkerModel,
    eval: Option<&[AnnotatedReview]>,
) -> Result<f64, CliError> {
    match eval {
        None => Ok(logged_metric(&model.log)),
        Some(corpus) => {
            let mut pairs = Vec::new();
            for r in corpus {
                let alignment = TokenAlignment::new(&r.review.text, whitespace_tokenize);
                for q in build_queries(r, &alignment)? {
                    let pred = model.predict(&q)?;
                    pairs.push((q.gold.expect("gold corpus queries carry answers"), pred));
                }
            }
            Ok(evidence_eval_many(pairs.iter().map(|(g, p)| (g, p))).em)
        }
    }
}

struct RunsSummary {
    report: RunsReport,
    model_dirs: Vec<String>,
}

/// Shared multi-run scaffolding: trains via `train_one`, which returns the
/// per-run metric after saving the artifact into the given directory.
fn orchestrate(
    common: &TrainCommonArgs,
    base_seed: u64,
    task: &str,
    metric_name: &str,
    mut train_one: impl FnMut(u64, &Path) -> Result<(f64, TrainingLog), CliError>,
) -> Result<RunsSummary, CliError> {
    if common.runs < 1 {
        return Err(CliError::Usage("--runs must be at least 1".to_string()));
    }
    ensure_dir(&common.out_dir)?;
    let mut per_run = Vec::new();
    let mut model_dirs = Vec::new();
    for run in 0..common.runs {
        let model_dir = if common.runs == 1 {
            "model".to_string()
        } else {
            format!("run-{run}/model")
        };
        let dir = common.out_dir.join(&model_dir);
        ensure_dir(&dir)?;
        // Consecutive seeds: the mean-of-runs protocol varies only the
        // randomization, never the data or the config.
        let seed = base_seed + run as u64;
        let (metric, log) = train_one(seed, &dir)?;
        per_run.push(RunRecord {
            run,
            seed,
            metric,
            best_epoch: log.best_epoch,
            epochs_trained: log.epochs.len(),
            stopped_early: log.stopped_early,
        });
        model_dirs.push(model_dir);
    }

    let metrics: Vec<f64> = per_run.iter().map(|r| r.metric).collect();
    let mean = metrics.iter().sum::<f64>() / metrics.len() as f64;
    let var = metrics.iter().map(|m| (m - mean).powi(2)).sum::<f64>()
        / (metrics.len() as f64 - 1.0).max(1.0);
    let t_test = match &common.compare {
        None => None,
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Data(format!("cannot read run report {}: {e}", path.display()))
            })?;
            let other: RunsReport = serde_json::from_str(&text)?;
            let theirs: Vec<f64> = other.per_run.iter().map(|r| r.metric).collect();
            let (t, p) = welch_t_test(&metrics, &theirs)?;
            Some(TTest {
                against: path.display().to_string(),
                t,
                p,
            })
        }
    };

    let report = RunsReport {
        task: task.to_string(),
        metric: metric_name.to_string(),
        per_run,
        mean,
        std: var.sqrt(),
        t_test,
    };
    write_json(&common.out_dir, "runs.json", &report)?;
    if metrics.len() >= 2 {
        let img = boxplot(&[metrics], 240, 21)?;
        write_png(&common.out_dir.join("runs.png"), &img)?;
        write_json(
            &common.out_dir,
            "runs.png.json",
            &serde_json::json!({ "metric": metric_name, "n_runs": report.per_run.len() }),
        )?;
    }
    Ok(RunsSummary { report, model_dirs })
}

fn finish_manifest(
    command: &str,
    common: &TrainCommonArgs,
    config: &impl Serialize,
    summary: &RunsSummary,
) -> Result<(), CliError> {
    let mut manifest = RunManifest::new(command);
    manifest.input("corpus", &common.corpus)?;
    if let Some(eval) = &common.eval {
        manifest.input("eval", eval)?;
    }
    if let Some(compare) = &common.compare {
        manifest.input("compare", compare)?;
    }
    manifest.set_config(config)?;
    manifest.seed = summary.report.per_run.first().map(|r| r.seed);
    manifest.output("runs.json");
    for dir in &summary.model_dirs {
        manifest.output(&format!("{dir}/config.json"));
        manifest.output(&format!("{dir}/weights.json"));
    }
    manifest.write(&common.out_dir)?;

    let report = &summary.report;
    println!(
        "{} run(s): {} mean {:.4} (std {:.4})",
        report.per_run.len(),
        report.metric,
        report.mean,
        report.std
    );
    if let Some(tt) = &report.t_test {
        println!("t-test vs {}: t = {:.4}, p = {:.4}", tt.against, tt.t, tt.p);
    }
    Ok(())
}

pub fn train_tagger_cmd(args: &TrainTaggerArgs) -> Result<(), CliError> {
    let config = merged_tagger_config(args)?;
    config.validate()?;
    let corpus = load_corpus(&args.common.corpus)?;
    let eval = args
        .common
        .eval
        .as_ref()
        .map(load_corpus)
        .transpose()?;

    let summary = orchestrate(
        &args.common,
        config.seed,
        "claim_tagging",
        "span_macro_f1",
        |seed, dir| {
            let run_config = TaggerConfig { seed, ..config.clone() };
            let mut model = train_tagger(&corpus, &run_config, &BuiltinBackend)?;
            save_tagger(&mut model, dir)?;
            Ok((tagger_metric(&mut model, eval.as_deref()), model.log.clone()))
        },
    )?;
    finish_manifest("train-tagger", &args.common, &config, &summary)
}

pub fn train_linker_cmd(args: &TrainLinkerArgs) -> Result<(), CliError> {
    let config = merged_linker_config(args)?;
    config.validate()?;
    let corpus = load_corpus(&args.common.corpus)?;
    let eval = args
        .common
        .eval
        .as_ref()
        .map(load_corpus)
        .transpose()?;

    let summary = orchestrate(
        &args.common,
        config.seed,
        "evidence_linkage",
        "evidence_em",
        |seed, dir| {
            let run_config = LinkerConfig { seed, ..config.clone() };
            let mut model = train_linker(&corpus, &run_config, &BuiltinBackend)?;
            save_linker(&mut model, dir)?;
            let metric = linker_metric(&mut model, eval.as_deref())?;
            Ok((metric, model.log.clone()))
        },
    )?;
    finish_manifest("train-linker", &args.common, &config, &summary)
}
