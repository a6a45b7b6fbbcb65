//! Campaign checkpoints.
//!
//! Stored as versioned line-delimited JSON: a header, the display baseline once
//! measured, one line per settled pair, and a trailing suspension line when the
//! campaign stopped early. Files are replaced atomically.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::session::{SessionConfig, SuspendReason};
use crate::sim::{SimConfig, SimState};
use crate::submission::{DecoderRecord, PairKey};
use crate::types::VideoAsset;

pub const CHECKPOINT_FORMAT: &str = "decwatt-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Where a resumed campaign gets its device from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
#[allow(clippy::large_enum_variant)]
pub enum DeviceSource {
    Sim {
        config: SimConfig,
        /// Device state when the checkpoint was last written by a finished invocation.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        state: Option<SimState>,
    },
    Trace { path: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSettings {
    pub session: SessionConfig,
    pub assets: Vec<VideoAsset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub device: Option<DeviceSource>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UntestablePair {
    pub pair: PairKey,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suspension {
    /// Pair that was running or about to run.
    pub pair: Option<PairKey>,
    pub reason: SuspendReason,
    pub level: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partial: Option<DecoderRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionCheckpoint {
    pub campaign_id: String,
    pub settings: CampaignSettings,
    pub screen_baseline: Option<f64>,
    /// The baseline timed out without a transition and was recorded as zero.
    pub baseline_stalled: bool,
    pub completed: Vec<DecoderRecord>,
    pub untestable: Vec<UntestablePair>,
    pub suspension: Option<Suspension>,
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("checkpoint: {0}")]
    Format(String),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "kebab-case")]
enum Line {
    Header {
        format: String,
        version: u32,
        campaign_id: String,
        settings: CampaignSettings,
    },
    Baseline {
        delta_screen: f64,
        stalled: bool,
    },
    Completed {
        result: DecoderRecord,
    },
    Untestable(UntestablePair),
    Suspended(Suspension),
}

impl SessionCheckpoint {
    pub fn new(campaign_id: &str, session: SessionConfig, assets: Vec<VideoAsset>) -> Self {
        SessionCheckpoint {
            campaign_id: campaign_id.to_string(),
            settings: CampaignSettings {
                session,
                assets,
                device: None,
            },
            screen_baseline: None,
            baseline_stalled: false,
            completed: Vec::new(),
            untestable: Vec::new(),
            suspension: None,
        }
    }

    /// Completed or known-untestable pairs are never run again.
    pub fn is_settled(&self, key: &PairKey) -> bool {
        self.completed.iter().any(|r| r.decoder.name == key.decoder && r.asset.name == key.asset)
            || self.untestable.iter().any(|u| &u.pair == key)
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<(), CheckpointError> {
        let mut lines = vec![Line::Header {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            campaign_id: self.campaign_id.clone(),
            settings: self.settings.clone(),
        }];
        if let Some(v) = self.screen_baseline {
            lines.push(Line::Baseline {
                delta_screen: v,
                stalled: self.baseline_stalled,
            });
        }
        lines.extend(self.completed.iter().cloned().map(|result| Line::Completed { result }));
        lines.extend(self.untestable.iter().cloned().map(Line::Untestable));
        lines.extend(self.suspension.clone().map(Line::Suspended));
        for (i, line) in lines.iter().enumerate() {
            serde_json::to_writer(&mut out, line).map_err(|source| CheckpointError::Json { line: i + 1, source })?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("serializing to memory");
        buf
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self, CheckpointError> {
        let mut ckpt: Option<SessionCheckpoint> = None;
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: Line = serde_json::from_str(&line).map_err(|source| CheckpointError::Json { line: i + 1, source })?;
            if let Line::Header {
                format,
                version,
                campaign_id,
                settings,
            } = parsed
            {
                if format != CHECKPOINT_FORMAT {
                    return Err(CheckpointError::Format(format!("not a checkpoint: `{format}`")));
                }
                if version != CHECKPOINT_VERSION {
                    return Err(CheckpointError::Format(format!("unsupported version {version}")));
                }
                if ckpt.is_some() {
                    return Err(CheckpointError::Format("duplicate header".into()));
                }
                let mut c = SessionCheckpoint::new(&campaign_id, settings.session.clone(), Vec::new());
                c.settings = settings;
                ckpt = Some(c);
                continue;
            }
            let c = ckpt
                .as_mut()
                .ok_or_else(|| CheckpointError::Format("records before header".into()))?;
            match parsed {
                Line::Header { .. } => unreachable!(),
                Line::Baseline { delta_screen, stalled } => {
                    c.screen_baseline = Some(delta_screen);
                    c.baseline_stalled = stalled;
                }
                Line::Completed { result } => c.completed.push(result),
                Line::Untestable(u) => c.untestable.push(u),
                Line::Suspended(s) => c.suspension = Some(s),
            }
        }
        ckpt.ok_or_else(|| CheckpointError::Format("empty checkpoint".into()))
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let f = fs::File::open(path)?;
        Self::read_from(BufReader::new(f))
    }

    /// Writes to a sibling temporary file and renames it over `path`.
    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let tmp = path.with_extension("tmp");
        {
            let mut f = fs::File::create(&tmp)?;
            self.write_to(&mut f)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }
}
