use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use decwatt_core::assets::load_dir;
use decwatt_core::checkpoint::{DeviceSource, SessionCheckpoint};
use decwatt_core::device::Device;
use decwatt_core::session::{measure_screen_baseline, run_campaign, CampaignOptions, CampaignOutcome, SessionConfig};
use decwatt_core::sim::{SimConfig, SimDevice};
use decwatt_core::trace::{DeviceTrace, ReplayDevice};
use decwatt_core::{DecoderRecord, SubmissionStatus};

/// Runs decoder power measurement campaigns against a simulated or recorded device.
#[derive(Debug, Parser)]
#[command(name = "decwatt-session", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Start a new campaign over every decoder and matching bitstream.
    Run(RunArgs),
    /// Continue a campaign from its checkpoint.
    Resume(ResumeArgs),
    /// Measure only the display-on idle baseline.
    Baseline(BaselineArgs),
}

#[derive(Debug, Args)]
struct DeviceArgs {
    /// Simulated device configuration (TOML).
    #[arg(long, conflicts_with = "trace", required_unless_present = "trace")]
    sim: Option<PathBuf>,
    /// Recorded level trace to replay (JSONL).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Invocation {
    /// Stop after this many pairs; the rest stays pending in the checkpoint.
    #[arg(long)]
    max_pairs: Option<usize>,
    /// Write the submission document here (JSON).
    #[arg(long)]
    submission: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Directory of bitstream catalogues (*.toml).
    #[arg(long)]
    assets: PathBuf,
    /// Battery percent to spend per pair.
    #[arg(long, default_value_t = 3)]
    drop: u8,
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long, default_value = "campaign")]
    campaign_id: String,
    /// Replace an existing checkpoint instead of refusing.
    #[arg(long)]
    force: bool,
    #[command(flatten)]
    device: DeviceArgs,
    #[command(flatten)]
    invocation: Invocation,
}

#[derive(Debug, Args)]
struct ResumeArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Recharge the simulated device to this level before continuing.
    #[arg(long)]
    recharge_to: Option<u8>,
    #[command(flatten)]
    invocation: Invocation,
}

#[derive(Debug, Args)]
struct BaselineArgs {
    #[command(flatten)]
    device: DeviceArgs,
    /// Level transitions to observe after the anchor.
    #[arg(long, default_value_t = 3)]
    drop: u8,
}

/// A device opened from its source, kept concrete so sim state can be saved.
enum Opened {
    Sim(SimDevice),
    Replay(ReplayDevice),
}

impl Opened {
    fn device(&mut self) -> &mut dyn Device {
        match self {
            Opened::Sim(d) => d,
            Opened::Replay(d) => d,
        }
    }
}

fn open_source(src: &DeviceSource) -> Result<Opened> {
    Ok(match src {
        DeviceSource::Sim { config, state: None } => Opened::Sim(SimDevice::new(config.clone())?),
        DeviceSource::Sim { config, state: Some(s) } => Opened::Sim(SimDevice::restore(config.clone(), s)?),
        DeviceSource::Trace { path } => {
            let f = fs::File::open(path).with_context(|| format!("opening trace {path}"))?;
            Opened::Replay(ReplayDevice::new(DeviceTrace::read_from(std::io::BufReader::new(f))?))
        }
    })
}

fn source_from(args: &DeviceArgs) -> Result<DeviceSource> {
    match (&args.sim, &args.trace) {
        (Some(p), _) => Ok(DeviceSource::Sim {
            config: SimConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
            state: None,
        }),
        (None, Some(p)) => Ok(DeviceSource::Trace {
            path: p.display().to_string(),
        }),
        (None, None) => bail!("either --sim or --trace is required"),
    }
}

fn summary_line(r: &DecoderRecord) -> String {
    let m = &r.metrics;
    format!(
        "{} {} play {:.4} %/h decode {:.4} mA speed {:.1} fps{}",
        r.decoder.name,
        r.asset.name,
        m.delta_play,
        m.delta_decode_ma,
        m.speed_fps,
        if r.flags.partial { " (partial)" } else { "" }
    )
}

fn campaign(mut opened: Opened, ckpt: SessionCheckpoint, path: &Path, inv: &Invocation) -> Result<ExitCode> {
    let options = CampaignOptions {
        campaign_id: ckpt.campaign_id.clone(),
        session: ckpt.settings.session.clone(),
        stop_after_pairs: inv.max_pairs,
    };
    let assets = ckpt.settings.assets.clone();
    let CampaignOutcome {
        submission,
        mut checkpoint,
    } = run_campaign(opened.device(), &assets, Some(ckpt), &options, |c| {
        c.save(path).map_err(std::io::Error::other)
    })?;
    if let (Opened::Sim(dev), Some(DeviceSource::Sim { state, .. })) = (&opened, checkpoint.settings.device.as_mut()) {
        *state = Some(dev.state());
    }
    checkpoint.save(path)?;

    for r in &submission.records {
        println!("{}", summary_line(r));
    }
    for u in &checkpoint.untestable {
        println!("untestable {}: {}", u.pair, u.reason);
    }
    if let Some(s) = &checkpoint.suspension {
        let at = s.pair.as_ref().map(|p| format!(" at {p}")).unwrap_or_default();
        println!("suspended{at}: {}", s.reason);
    }
    println!(
        "status {} completeness {}/{} ({:.4})",
        submission.status,
        submission.tested_pairs(),
        submission.available_pairs,
        submission.completeness
    );
    if let Some(out) = &inv.submission {
        let mut bytes = serde_json::to_vec_pretty(&submission)?;
        bytes.push(b'\n');
        fs::write(out, bytes).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(if submission.status == SubmissionStatus::Complete {
        ExitCode::SUCCESS
    } else {
        // resumable, not a failure
        ExitCode::from(3)
    })
}

fn run(args: RunArgs) -> Result<ExitCode> {
    if args.checkpoint.exists() && !args.force {
        bail!(
            "checkpoint {} already exists; use `resume` or pass --force",
            args.checkpoint.display()
        );
    }
    let assets = load_dir(&args.assets)?;
    let source = source_from(&args.device)?;
    let session = SessionConfig {
        drop_target: args.drop,
        baseline_min_drop: args.drop,
        ..SessionConfig::default()
    };
    let mut ckpt = SessionCheckpoint::new(&args.campaign_id, session, assets);
    ckpt.settings.device = Some(source.clone());
    campaign(open_source(&source)?, ckpt, &args.checkpoint, &args.invocation)
}

fn resume(args: ResumeArgs) -> Result<ExitCode> {
    let ckpt = SessionCheckpoint::load(&args.checkpoint)
        .with_context(|| format!("loading {}", args.checkpoint.display()))?;
    let Some(source) = ckpt.settings.device.clone() else {
        bail!("checkpoint does not record its device source");
    };
    let mut opened = open_source(&source)?;
    if let Some(level) = args.recharge_to {
        match &mut opened {
            Opened::Sim(d) => d.recharge_to(level),
            Opened::Replay(_) => bail!("--recharge-to only applies to simulated devices"),
        }
    }
    campaign(opened, ckpt, &args.checkpoint, &args.invocation)
}

fn baseline(args: BaselineArgs) -> Result<ExitCode> {
    let mut opened = open_source(&source_from(&args.device)?)?;
    let config = SessionConfig::default();
    let v = measure_screen_baseline(opened.device(), args.drop, &config)?;
    println!("delta_screen {v:.4} %/h");
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Run(a) => run(a),
        Command::Resume(a) => resume(a),
        Command::Baseline(a) => baseline(a),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
