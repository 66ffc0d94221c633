//! Command line front end for the review-substantiation toolkit.
//!
//! Exit codes: 0 success, 1 usage error, 2 bad data, 3 runtime failure.
//! Every command that writes artifacts also writes a `manifest.json`
//! recording input digests, the resolved config, and the output list, so a
//! rerun with the same inputs is byte-identical and auditable.

mod commands;
mod error;
mod manifest;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use commands::corpus_ops::{ScoreArgs, SplitArgs, StatsArgs, ValidateArgs};
use commands::evaluate::{AgreementArgs, EvaluateArgs};
use commands::predict::{BaselineArgs, PredictArgs};
use commands::report::ReportArgs;
use commands::train::{TrainLinkerArgs, TrainTaggerArgs};
use error::CliError;

#[derive(Parser)]
#[command(name = "substan", version, about = "Claim and evidence analysis for peer reviews")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a corpus against the span and rating invariants.
    Validate(ValidateArgs),
    /// Split a corpus into train and test files.
    Split(SplitArgs),
    /// Train a claim tagging model.
    TrainTagger(TrainTaggerArgs),
    /// Train an evidence linkage model.
    TrainLinker(TrainLinkerArgs),
    /// Annotate reviews with trained models.
    Predict(PredictArgs),
    /// Annotate reviews with the lexicon heuristics.
    Baseline(BaselineArgs),
    /// Score predictions against gold annotations.
    Evaluate(EvaluateArgs),
    /// Inter-annotator reliability and consensus merging.
    Agreement(AgreementArgs),
    /// Per-review substantiation scores and rating correlation.
    Score(ScoreArgs),
    /// Corpus descriptive statistics.
    Stats(StatsArgs),
    /// Collate earlier outputs into one summary.
    Report(ReportArgs),
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Validate(args) => commands::corpus_ops::validate(args),
        Command::Split(args) => commands::corpus_ops::split(args),
        Command::TrainTagger(args) => commands::train::train_tagger_cmd(args),
        Command::TrainLinker(args) => commands::train::train_linker_cmd(args),
        Command::Predict(args) => commands::predict::predict(args),
        Command::Baseline(args) => commands::predict::baseline(args),
        Command::Evaluate(args) => commands::evaluate::evaluate(args),
        Command::Agreement(args) => commands::evaluate::agreement(args),
        Command::Score(args) => commands::corpus_ops::score(args),
        Command::Stats(args) => commands::corpus_ops::stats(args),
        Command::Report(args) => commands::report::report(args),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version are successful outcomes; everything else a
            // clap parser rejects is a usage error (exit 1, not clap's 2).
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    if let Err(err) = run(&cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code().into());
    }
}
