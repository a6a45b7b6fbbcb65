use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use decwatt_core::jsonl;
use decwatt_core::pipeline::{
    apply_review, clean, flag_anomalies, flatten, inconsistent_records, merge_by_model, summary_statistics,
    AnomalyFlag, ModelAggregate, RulesConfig, SampleRecord,
};
use decwatt_core::{Execution, RawSample};

/// Cleans collected samples, merges them per model and summarizes the result.
#[derive(Debug, Parser)]
#[command(name = "decwatt-pipeline", version)]
struct Cli {
    /// Run on the calling thread only.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Flag anomalies and drop the records the review rejects.
    Clean(Io),
    /// Aggregate cleaned records per model.
    Merge(Io),
    /// Win rates and non-realtime shares per resolution.
    Stats(Io),
}

#[derive(Debug, Args)]
struct Io {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Review file (JSONL flags with dispositions); pending flags are written here.
    #[arg(long)]
    review: Option<PathBuf>,
}

/// Exit code when flags await review.
const NEEDS_REVIEW: u8 = 2;

fn read<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    jsonl::read_file(path).with_context(|| format!("reading {}", path.display()))
}

fn write<T: serde::Serialize>(path: &Path, items: &[T]) -> Result<()> {
    jsonl::write_file(path, items).with_context(|| format!("writing {}", path.display()))
}

fn run_clean(io: &Io, exec: Execution) -> Result<ExitCode> {
    let samples: Vec<RawSample> = read(&io.input)?;
    let records = flatten(&samples);
    let bad = inconsistent_records(&records, 1e-9);
    if !bad.is_empty() {
        anyhow::bail!("{} record(s) do not recompute from their windows, first: {:?}", bad.len(), bad[0]);
    }
    let flags = flag_anomalies(&records, &RulesConfig::default(), exec);
    let review: Vec<AnomalyFlag> = match &io.review {
        Some(p) if p.exists() => read(p)?,
        _ => Vec::new(),
    };
    let decided = apply_review(&flags, &review);
    match clean(&records, &decided) {
        Ok(out) => {
            write(&io.out, &out.kept)?;
            println!(
                "records {} kept {} dropped {} flagged {} anomaly_rate {:.4}",
                out.total,
                out.kept.len(),
                out.dropped.len(),
                out.flagged,
                out.anomaly_rate()
            );
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => {
            match &io.review {
                Some(p) => {
                    write(p, &decided)?;
                    eprintln!("{e}; set each disposition in {} and rerun", p.display());
                }
                None => eprintln!("{e}; pass --review <path> to write them out"),
            }
            Ok(ExitCode::from(NEEDS_REVIEW))
        }
    }
}

fn run_merge(io: &Io, exec: Execution) -> Result<ExitCode> {
    let records: Vec<SampleRecord> = read(&io.input)?;
    let aggs = merge_by_model(&records, exec);
    write(&io.out, &aggs)?;
    let cells: usize = aggs.iter().map(|m| m.cells.len()).sum();
    println!("models {} cells {}", aggs.len(), cells);
    Ok(ExitCode::SUCCESS)
}

fn run_stats(io: &Io) -> Result<ExitCode> {
    let aggs: Vec<ModelAggregate> = read(&io.input)?;
    let report = summary_statistics(&aggs);
    let mut bytes = serde_json::to_vec_pretty(&report)?;
    bytes.push(b'\n');
    std::fs::write(&io.out, bytes).with_context(|| format!("writing {}", io.out.display()))?;
    println!("models {} devices {}", report.models, report.devices);
    for r in &report.resolutions {
        println!(
            "{} models {} software_wins {}/{} ({:.4})",
            r.resolution, r.models, r.software_wins.numerator, r.software_wins.denominator, r.software_wins.value
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    let res = match &cli.command {
        Command::Clean(io) => run_clean(io, exec),
        Command::Merge(io) => run_merge(io, exec),
        Command::Stats(io) => run_stats(io),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
