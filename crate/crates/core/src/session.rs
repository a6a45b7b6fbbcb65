//! Measurement campaign driver.
//!
//! Every measurement is anchored at an observed battery-level transition, never
//! at the level seen on startup, because the sub-percent charge behind the first
//! reading is unknown. The window closes at the transition where the drop since
//! the anchor reaches the target.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checkpoint::{SessionCheckpoint, Suspension, UntestablePair};
use crate::device::{Device, DeviceProbe, FramePosition, HarnessError, ProbeError};
use crate::metrics::{check_validity, MeasurementWindow, MetricsError, ValidityVerdict, MIN_DROP, MIN_LEVEL};
use crate::submission::{
    cmp_pairs, completeness_ratio, DecoderRecord, PairKey, Submission, SubmissionStatus,
};
use crate::types::{DecoderDescriptor, DeviceProfile, VideoAsset};

fn default_drop_target() -> u8 {
    3
}
fn default_poll_interval() -> f64 {
    1.0
}
fn default_stall_timeout() -> f64 {
    6.0 * 3600.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    /// Battery percent to spend per (decoder, bitstream) pair, counted from the anchor.
    #[serde(default = "default_drop_target")]
    pub drop_target: u8,
    /// Minimum spacing between battery polls inside the decode loop; loop boundaries always poll.
    #[serde(default = "default_poll_interval")]
    pub poll_interval_s: f64,
    /// Longest tolerated gap between level transitions.
    #[serde(default = "default_stall_timeout")]
    pub stall_timeout_s: f64,
    /// Transitions to observe, after the anchor, for the display baseline.
    #[serde(default = "default_drop_target")]
    pub baseline_min_drop: u8,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            drop_target: default_drop_target(),
            poll_interval_s: default_poll_interval(),
            stall_timeout_s: default_stall_timeout(),
            baseline_min_drop: default_drop_target(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SuspendReason {
    Charging,
    LevelWindow { level: u8 },
    ProbeLost,
    Stalled,
    Interrupted,
}

impl std::fmt::Display for SuspendReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SuspendReason::Charging => f.write_str("charger attached"),
            SuspendReason::LevelWindow { level } => {
                write!(f, "battery level {level}% outside the measurement window")
            }
            SuspendReason::ProbeLost => f.write_str("device probe lost"),
            SuspendReason::Stalled => f.write_str("battery level stopped changing"),
            SuspendReason::Interrupted => f.write_str("interrupted by operator"),
        }
    }
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("device not ready: {0}")]
    Invalid(ValidityVerdict),
    #[error("drop target {0}% is below the required minimum")]
    InvalidDropTarget(u8),
    #[error("decoder untestable: {0}")]
    Untestable(String),
    #[error("measurement suspended: {reason}")]
    Suspended {
        reason: SuspendReason,
        /// Window measured up to the last transition, when one exists past the anchor.
        partial: Option<Box<DecoderRecord>>,
    },
    #[error("display baseline aborted: charger attached")]
    AbortedBaseline,
    #[error("no battery transition within {elapsed_s:.0}s")]
    StalledProbe { elapsed_s: f64 },
    #[error("probe lost: {0}")]
    ProbeLost(#[from] ProbeError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("asset list is empty")]
    NoAssets,
    #[error("invalid asset: {0}")]
    InvalidAsset(String),
    #[error("writing checkpoint: {0}")]
    CheckpointWrite(#[source] std::io::Error),
}

#[derive(Debug, Clone, Copy)]
struct Mark {
    level: u8,
    t: f64,
    iteration: u64,
    frame: u64,
}

fn ready_check<D: DeviceProbe + ?Sized>(device: &mut D, planned_drop: u8) -> Result<DeviceProfile, SessionError> {
    let profile = device.profile()?;
    let verdict = check_validity(&profile, f64::from(planned_drop));
    if verdict.is_valid() {
        Ok(profile)
    } else {
        Err(SessionError::Invalid(verdict))
    }
}

/// Display-on idle consumption in percent per hour.
///
/// The first transition only anchors the measurement; the rate is taken over
/// the following `min_drop` levels.
pub fn measure_screen_baseline<D: DeviceProbe + ?Sized>(
    device: &mut D,
    min_drop: u8,
    config: &SessionConfig,
) -> Result<f64, SessionError> {
    let min_drop = min_drop.max(1);
    ready_check(device, min_drop.max(MIN_DROP as u8))?;
    let mut last_level = device.battery_level()?;
    let mut last_change = device.now();
    let mut anchor: Option<(u8, f64)> = None;
    loop {
        device.wait(config.poll_interval_s)?;
        if device.is_charging()? {
            return Err(SessionError::AbortedBaseline);
        }
        let level = device.battery_level()?;
        let now = device.now();
        if level < last_level {
            if f64::from(level) < MIN_LEVEL {
                return Err(SessionError::Suspended {
                    reason: SuspendReason::LevelWindow { level },
                    partial: None,
                });
            }
            match anchor {
                None => anchor = Some((level, now)),
                Some((a_level, a_t)) if a_level - level >= min_drop => {
                    let hours = (now - a_t) / 3600.0;
                    return Ok(f64::from(a_level - level) / hours);
                }
                Some(_) => {}
            }
            last_level = level;
            last_change = now;
        }
        if now - last_change > config.stall_timeout_s {
            return Err(SessionError::StalledProbe {
                elapsed_s: now - last_change,
            });
        }
    }
}

fn position_after(pos: FramePosition, n_seq: u64) -> (u64, u64) {
    if pos.frame + 1 >= n_seq {
        (pos.iteration + 1, 0)
    } else {
        (pos.iteration, pos.frame + 1)
    }
}

fn window_between(a: &Mark, b: &Mark, n_seq: u64) -> MeasurementWindow {
    MeasurementWindow {
        level_start: f64::from(a.level),
        level_end: f64::from(b.level),
        time_start: a.t,
        time_end: b.t,
        iter_start: a.iteration,
        iter_end: b.iteration,
        frame_start: a.frame,
        frame_end: b.frame,
        seq_frames: n_seq,
    }
}

fn harness_err(e: HarnessError) -> SessionError {
    match e {
        HarnessError::Probe(p) => SessionError::ProbeLost(p),
        other => SessionError::Untestable(other.to_string()),
    }
}

/// Loop-decodes `asset` with `decoder` until the battery has dropped by the target
/// since the anchoring transition.
pub fn measure_decoder<D: Device + ?Sized>(
    device: &mut D,
    decoder: &DecoderDescriptor,
    asset: &VideoAsset,
    delta_screen: f64,
    config: &SessionConfig,
) -> Result<DecoderRecord, SessionError> {
    if f64::from(config.drop_target) < MIN_DROP {
        return Err(SessionError::InvalidDropTarget(config.drop_target));
    }
    let profile = ready_check(device, config.drop_target)?;
    let capacity = profile.battery_capacity_mah;
    device.open(decoder, asset).map_err(harness_err)?;
    let result = decode_until_drop(device, decoder, asset, delta_screen, capacity, config);
    device.close();
    result
}

fn decode_until_drop<D: Device + ?Sized>(
    device: &mut D,
    decoder: &DecoderDescriptor,
    asset: &VideoAsset,
    delta_screen: f64,
    capacity: f64,
    config: &SessionConfig,
) -> Result<DecoderRecord, SessionError> {
    let n_seq = asset.n_seq;
    let mut last_level = device.battery_level()?;
    let mut last_poll = device.now();
    let mut last_change = last_poll;
    let mut anchor: Option<Mark> = None;
    let mut latest: Option<Mark> = None;

    let partial = |anchor: &Option<Mark>, latest: &Option<Mark>| -> Option<Box<DecoderRecord>> {
        let (a, b) = (anchor.as_ref()?, latest.as_ref()?);
        let mut rec = DecoderRecord::from_window(
            decoder.clone(),
            asset.clone(),
            window_between(a, b, n_seq),
            delta_screen,
            capacity,
        )
        .ok()?;
        rec.flags.partial = true;
        Some(Box::new(rec))
    };

    loop {
        let pos = match device.decode_next_frame() {
            Ok(p) => p,
            Err(HarnessError::Probe(_)) => {
                return Err(SessionError::Suspended {
                    reason: SuspendReason::ProbeLost,
                    partial: partial(&anchor, &latest),
                })
            }
            Err(e) => return Err(SessionError::Untestable(e.to_string())),
        };
        let (iteration, frame) = position_after(pos, n_seq);
        let now = device.now();
        if frame != 0 && now - last_poll < config.poll_interval_s {
            continue;
        }
        last_poll = now;

        let polled = device
            .is_charging()
            .and_then(|c| device.battery_level().map(|l| (c, l)));
        let (charging, level) = match polled {
            Ok(v) => v,
            Err(_) => {
                return Err(SessionError::Suspended {
                    reason: SuspendReason::ProbeLost,
                    partial: partial(&anchor, &latest),
                })
            }
        };
        if charging {
            return Err(SessionError::Suspended {
                reason: SuspendReason::Charging,
                partial: partial(&anchor, &latest),
            });
        }
        if level < last_level {
            if f64::from(level) < MIN_LEVEL {
                return Err(SessionError::Suspended {
                    reason: SuspendReason::LevelWindow { level },
                    partial: partial(&anchor, &latest),
                });
            }
            let mark = Mark {
                level,
                t: now,
                iteration,
                frame,
            };
            match anchor {
                None => anchor = Some(mark),
                Some(a) => {
                    if a.level - level >= config.drop_target {
                        let window = window_between(&a, &mark, n_seq);
                        return Ok(DecoderRecord::from_window(
                            decoder.clone(),
                            asset.clone(),
                            window,
                            delta_screen,
                            capacity,
                        )?);
                    }
                    latest = Some(mark);
                }
            }
            last_level = level;
            last_change = now;
        }
        if now - last_change > config.stall_timeout_s {
            return Err(SessionError::Suspended {
                reason: SuspendReason::Stalled,
                partial: partial(&anchor, &latest),
            });
        }
    }
}

/// Every (decoder, bitstream) pair the device can be asked to measure, in campaign order.
pub fn plan_pairs(decoders: &[DecoderDescriptor], assets: &[VideoAsset]) -> Vec<(DecoderDescriptor, VideoAsset)> {
    let mut pairs: Vec<(DecoderDescriptor, VideoAsset)> = decoders
        .iter()
        .flat_map(|d| {
            assets
                .iter()
                .filter(move |a| a.standard == d.standard)
                .map(move |a| (d.clone(), a.clone()))
        })
        .collect();
    pairs.sort_by(|a, b| cmp_pairs((&a.0, &a.1), (&b.0, &b.1)));
    pairs.dedup_by(|a, b| a.0.name == b.0.name && a.1.name == b.1.name);
    pairs
}

#[derive(Debug, Clone)]
pub struct CampaignOptions {
    pub campaign_id: String,
    pub session: SessionConfig,
    /// Stop after measuring this many pairs in this invocation.
    pub stop_after_pairs: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct CampaignOutcome {
    pub submission: Submission,
    pub checkpoint: SessionCheckpoint,
}

impl CampaignOutcome {
    pub fn finished(&self) -> bool {
        self.submission.status == SubmissionStatus::Complete
    }
}

/// Runs (or resumes) a campaign over every pair not yet settled in the checkpoint.
///
/// `on_checkpoint` is called synchronously whenever the checkpoint changes: after
/// the baseline, after each pair, and on suspension.
pub fn run_campaign<D, F>(
    device: &mut D,
    assets: &[VideoAsset],
    checkpoint: Option<SessionCheckpoint>,
    options: &CampaignOptions,
    mut on_checkpoint: F,
) -> Result<CampaignOutcome, SessionError>
where
    D: Device + ?Sized,
    F: FnMut(&SessionCheckpoint) -> std::io::Result<()>,
{
    if assets.is_empty() {
        return Err(SessionError::NoAssets);
    }
    for a in assets {
        a.validate().map_err(SessionError::InvalidAsset)?;
    }
    if f64::from(options.session.drop_target) < MIN_DROP {
        return Err(SessionError::InvalidDropTarget(options.session.drop_target));
    }
    let mut ckpt = checkpoint.unwrap_or_else(|| SessionCheckpoint::new(&options.campaign_id, options.session.clone(), assets.to_vec()));
    ckpt.suspension = None;
    let mut profile = device.profile()?;
    let plan = plan_pairs(&device.decoders(), assets);
    let config = &options.session;

    let mut save = |c: &SessionCheckpoint| on_checkpoint(c).map_err(SessionError::CheckpointWrite);

    let mut suspension: Option<Suspension> = None;
    if ckpt.screen_baseline.is_none() {
        match measure_screen_baseline(device, config.baseline_min_drop, config) {
            Ok(v) => ckpt.screen_baseline = Some(v),
            Err(SessionError::StalledProbe { .. }) => {
                // no transition while idle: the display draw is below what the level can resolve
                ckpt.screen_baseline = Some(0.0);
                ckpt.baseline_stalled = true;
            }
            Err(e) => suspension = Some(Suspension::before_pair(None, suspend_reason_of(&e)?, device)),
        }
        save(&ckpt)?;
    }

    let mut measured = 0usize;
    if suspension.is_none() {
        let delta_screen = ckpt.screen_baseline.unwrap_or(0.0);
        for (decoder, asset) in &plan {
            let key = PairKey {
                decoder: decoder.name.clone(),
                asset: asset.name.clone(),
            };
            if ckpt.is_settled(&key) {
                continue;
            }
            if options.stop_after_pairs.is_some_and(|n| measured >= n) {
                suspension = Some(Suspension::before_pair(Some(key), SuspendReason::Interrupted, device));
                break;
            }
            match measure_decoder(device, decoder, asset, delta_screen, config) {
                Ok(rec) => {
                    ckpt.completed.push(rec);
                    measured += 1;
                }
                Err(SessionError::Untestable(reason)) => {
                    ckpt.untestable.push(UntestablePair { pair: key, reason });
                }
                Err(SessionError::Metrics(e)) => {
                    ckpt.untestable.push(UntestablePair {
                        pair: key,
                        reason: e.to_string(),
                    });
                }
                Err(SessionError::Suspended { reason, partial }) => {
                    suspension = Some(Suspension {
                        pair: Some(key),
                        reason,
                        level: device.battery_level().ok(),
                        partial: partial.map(|b| *b),
                    });
                }
                Err(e) => {
                    suspension = Some(Suspension::before_pair(Some(key), suspend_reason_of(&e)?, device));
                }
            }
            if suspension.is_some() {
                break;
            }
            save(&ckpt)?;
        }
    }

    if let Ok(p) = device.profile() {
        profile = p;
    }
    ckpt.suspension = suspension;
    if ckpt.suspension.is_some() {
        save(&ckpt)?;
    }

    let order = |r: &DecoderRecord| {
        plan.iter()
            .position(|(d, a)| d.name == r.decoder.name && a.name == r.asset.name)
            .unwrap_or(usize::MAX)
    };
    let mut records = ckpt.completed.clone();
    records.sort_by_key(|r| order(r));
    let tested = records.len();
    if let Some(p) = ckpt.suspension.as_ref().and_then(|s| s.partial.clone()) {
        records.push(p);
    }
    let settled = plan
        .iter()
        .filter(|(d, a)| {
            ckpt.is_settled(&PairKey {
                decoder: d.name.clone(),
                asset: a.name.clone(),
            })
        })
        .count();
    let status = if settled == plan.len() {
        SubmissionStatus::Complete
    } else {
        SubmissionStatus::Partial
    };
    let submission = Submission {
        campaign_id: ckpt.campaign_id.clone(),
        profile,
        records,
        available_pairs: plan.len() as u32,
        completeness: completeness_ratio(tested, plan.len()),
        client_time_s: device.now(),
        status,
    };
    Ok(CampaignOutcome {
        submission,
        checkpoint: ckpt,
    })
}

/// Maps errors that end a campaign invocation to a suspension reason; other errors propagate.
fn suspend_reason_of(e: &SessionError) -> Result<SuspendReason, SessionError> {
    match e {
        SessionError::Invalid(v) => {
            if v.violates(crate::metrics::Requirement::Autonomous) {
                Ok(SuspendReason::Charging)
            } else {
                Ok(SuspendReason::LevelWindow { level: 0 })
            }
        }
        SessionError::AbortedBaseline => Ok(SuspendReason::Charging),
        SessionError::Suspended { reason, .. } => Ok(*reason),
        SessionError::StalledProbe { .. } => Ok(SuspendReason::Stalled),
        SessionError::ProbeLost(_) => Ok(SuspendReason::ProbeLost),
        SessionError::InvalidDropTarget(t) => Err(SessionError::InvalidDropTarget(*t)),
        other => Err(SessionError::Untestable(other.to_string())),
    }
}

impl Suspension {
    fn before_pair<D: DeviceProbe + ?Sized>(pair: Option<PairKey>, reason: SuspendReason, device: &mut D) -> Self {
        let level = device.battery_level().ok();
        let reason = match reason {
            SuspendReason::LevelWindow { .. } => SuspendReason::LevelWindow {
                level: level.unwrap_or(0),
            },
            r => r,
        };
        Suspension {
            pair,
            reason,
            level,
            partial: None,
        }
    }
}
