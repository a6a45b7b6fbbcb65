use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use decwatt_core::jsonl;
use decwatt_core::pipeline::{Metric, ModelAggregate};
use decwatt_core::report::svg::{ranking_svg, rating_svg, scatter_svg};
use decwatt_core::report::{
    model_rating, power_speed_scatter, ranking_csv, rating_csv, scatter_csv, top_ranking, write_pair,
};
use decwatt_core::Resolution;

/// Renders rankings, per-model ratings and power/speed charts as CSV and SVG.
#[derive(Debug, Parser)]
#[command(name = "decwatt-report", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Per-model aggregates (JSONL) from `decwatt-pipeline merge`.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output directory for the CSV and SVG pair.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Models ranked by their best decoder.
    Top {
        #[arg(long, default_value = "play")]
        metric: Metric,
        #[arg(long)]
        res: Resolution,
        #[arg(long, default_value_t = 30)]
        n: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Every decoder of one model across resolutions.
    Model {
        #[arg(long)]
        name: String,
        #[command(flatten)]
        common: Common,
    },
    /// Playback consumption against decoding speed for one model.
    Scatter {
        #[arg(long)]
        model: String,
        #[command(flatten)]
        common: Common,
    },
}

/// File-name friendly form of a model name.
fn slug(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '-' })
        .collect();
    s.split('-').filter(|p| !p.is_empty()).collect::<Vec<_>>().join("-")
}

fn load(path: &Path) -> Result<Vec<ModelAggregate>> {
    jsonl::read_file(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(dir: &Path, stem: &str, csv: &[u8], svg: &str) -> Result<()> {
    write_pair(dir, stem, csv, svg)?;
    println!("{}", dir.join(format!("{stem}.csv")).display());
    println!("{}", dir.join(format!("{stem}.svg")).display());
    Ok(())
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Top { metric, res, n, common } => {
            let aggs = load(&common.input)?;
            let rows = top_ranking(&aggs, metric, res, n)?;
            let stem = format!("top_{}_{}", metric.as_str(), res.as_str());
            emit(&common.out, &stem, &ranking_csv(&rows, metric)?, &ranking_svg(&rows, metric, res))
        }
        Command::Model { name, common } => {
            let aggs = load(&common.input)?;
            let rating = model_rating(&aggs, &name)?;
            let stem = format!("model_{}", slug(&rating.model));
            emit(&common.out, &stem, &rating_csv(&rating)?, &rating_svg(&rating))
        }
        Command::Scatter { model, common } => {
            let aggs = load(&common.input)?;
            let chart = power_speed_scatter(&aggs, &model)?;
            let stem = format!("scatter_{}", slug(&chart.model));
            emit(&common.out, &stem, &scatter_csv(&chart)?, &scatter_svg(&chart))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
