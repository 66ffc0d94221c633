//! `report`: gather the JSON artifacts of earlier commands into one
//! summary. Strictly a collation step; nothing is recomputed, so the
//! summary always agrees with the per-directory files it cites.

use std::path::{Path, PathBuf};

use clap::Args;
use serde_json::Value;

use crate::error::CliError;
use crate::manifest::{ensure_dir, write_json, RunManifest};

#[derive(Args)]
pub struct ReportArgs {
    /// Output directories of earlier commands, each holding a manifest.json.
    #[arg(long, required = true, num_args = 1..)]
    pub from: Vec<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn read_value(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

/// One collated source directory: its manifest plus whichever result files
/// it produced.
fn collect(dir: &Path) -> Result<Value, CliError> {
    let manifest = read_value(&dir.join("manifest.json"))?;
    let mut entry = serde_json::json!({
        "dir": dir.display().to_string(),
        "manifest": manifest,
    });
    let map = entry.as_object_mut().expect("entry is an object");
    for result in ["report.json", "runs.json", "validation.json"] {
        let path = dir.join(result);
        if path.exists() {
            let key = result.trim_end_matches(".json");
            map.insert(key.to_string(), read_value(&path)?);
        }
    }
    Ok(entry)
}

fn markdown_summary(entries: &[Value]) -> String {
    let mut md = String::from("# Run summary\n");
    for entry in entries {
        let command = entry
            .pointer("/manifest/command")
            .and_then(Value::as_str)
            .unwrap_or("?");
        let dir = entry["dir"].as_str().unwrap_or("?");
        md.push_str(&format!("\n## {command} ({dir})\n\n"));
        let mut lines = Vec::new();
        for (pointer, label) in [
            ("/runs/mean", "metric mean"),
            ("/runs/std", "metric std"),
            ("/report/claims/macro_f1", "claims macro F1"),
            ("/report/evidence/em", "evidence EM"),
            ("/report/evidence/f1", "evidence F1"),
            ("/report/u_alpha", "unitizing alpha"),
            ("/report/correlation/spearman_rho", "Spearman rho"),
            ("/validation/n_violations", "violations"),
        ] {
            if let Some(v) = entry.pointer(pointer) {
                lines.push(format!("- {label}: {v}\n"));
            }
        }
        if lines.is_empty() {
            lines.push("- no headline numbers; see manifest outputs\n".to_string());
        }
        for line in lines {
            md.push_str(&line);
        }
    }
    md
}

pub fn report(args: &ReportArgs) -> Result<(), CliError> {
    let entries = args
        .from
        .iter()
        .map(|dir| collect(dir))
        .collect::<Result<Vec<_>, _>>()?;

    ensure_dir(&args.out_dir)?;
    write_json(
        &args.out_dir,
        "summary.json",
        &serde_json::json!({ "sources": entries }),
    )?;
    std::fs::write(args.out_dir.join("summary.md"), markdown_summary(&entries))?;

    let mut manifest = RunManifest::new("report");
    for (i, dir) in args.from.iter().enumerate() {
        manifest.input(&format!("source_{i}"), &dir.join("manifest.json"))?;
    }
    manifest.set_config(&serde_json::json!({}))?;
    manifest.output("summary.json");
    manifest.output("summary.md");
    manifest.write(&args.out_dir)?;

    println!("collated {} source(s)", entries.len());
    Ok(())
}
