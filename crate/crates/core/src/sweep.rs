//! Batch estimator runs against the simulator's closed-form truth.

use serde::{Deserialize, Serialize};

use crate::device::DeviceProbe;
use crate::par::{self, Execution};
use crate::session::{measure_decoder, measure_screen_baseline, SessionConfig, SessionError};
use crate::sim::{ground_truth, SimConfig, SimDevice, SimError};
use crate::submission::DecoderRecord;
use crate::types::{PowerMetrics, VideoAsset};

#[derive(Debug, Clone)]
pub struct SweepCase {
    pub label: String,
    pub config: SimConfig,
    pub decoder: String,
    pub asset: VideoAsset,
    pub session: SessionConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateErrors {
    /// |estimated − true| / true for the decoder current.
    pub decode_rel: f64,
    pub play_rel: f64,
    /// Absolute speed error, fps.
    pub speed_abs: f64,
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub label: String,
    pub truth: PowerMetrics,
    pub result: Result<DecoderRecord, String>,
}

impl SweepOutcome {
    pub fn errors(&self) -> Option<EstimateErrors> {
        let m = &self.result.as_ref().ok()?.metrics;
        Some(EstimateErrors {
            decode_rel: ((m.delta_decode_ma - self.truth.delta_decode_ma) / self.truth.delta_decode_ma).abs(),
            play_rel: ((m.delta_play - self.truth.delta_play) / self.truth.delta_play).abs(),
            speed_abs: (m.speed_fps - self.truth.speed_fps).abs(),
        })
    }
}

/// Measures the display baseline and then one decoder on a fresh simulated device.
pub fn run_case(case: &SweepCase) -> SweepOutcome {
    let truth = case
        .config
        .decoder(&case.decoder)
        .map(|d| ground_truth(&case.config, d, &case.asset));
    let truth = match truth {
        Ok(t) => t,
        Err(e) => {
            return SweepOutcome {
                label: case.label.clone(),
                truth: PowerMetrics {
                    delta_seq: f64::NAN,
                    speed_fps: f64::NAN,
                    delta_play: f64::NAN,
                    delta_decode_ma: f64::NAN,
                    delta_screen: f64::NAN,
                },
                result: Err(e.to_string()),
            }
        }
    };
    let result = simulate(case).map_err(|e| e.to_string());
    SweepOutcome {
        label: case.label.clone(),
        truth,
        result,
    }
}

#[derive(Debug, thiserror::Error)]
enum CaseError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Session(#[from] SessionError),
}

fn simulate(case: &SweepCase) -> Result<DecoderRecord, CaseError> {
    let mut dev = SimDevice::new(case.config.clone())?;
    let screen = measure_screen_baseline(&mut dev, case.session.baseline_min_drop, &case.session)?;
    let descriptor = case.config.decoder(&case.decoder)?.descriptor();
    Ok(measure_decoder(&mut dev, &descriptor, &case.asset, screen, &case.session)?)
}

pub fn run_sweep(cases: &[SweepCase], exec: Execution) -> Vec<SweepOutcome> {
    par::map(cases, exec, run_case)
}

/// One measurement of a repeated-run experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RepeatRun {
    /// Level at the anchoring transition.
    pub start_level: f64,
    pub record: DecoderRecord,
}

/// Repeats the same measurement on one device as it discharges.
///
/// The display baseline is measured once; before each run the device idles
/// until its level is at or below the next entry of `start_levels`.
pub fn repeat_on_device(
    config: &SimConfig,
    decoder: &str,
    asset: &VideoAsset,
    start_levels: &[u8],
    session: &SessionConfig,
) -> Result<Vec<RepeatRun>, String> {
    let mut dev = SimDevice::new(config.clone()).map_err(|e| e.to_string())?;
    let descriptor = config.decoder(decoder).map_err(|e| e.to_string())?.descriptor();
    let screen = measure_screen_baseline(&mut dev, session.baseline_min_drop, session).map_err(|e| e.to_string())?;
    let mut runs = Vec::with_capacity(start_levels.len());
    for &target in start_levels {
        while dev.battery_level().map_err(|e| e.to_string())? > target {
            dev.wait(10.0).map_err(|e| e.to_string())?;
        }
        let record = measure_decoder(&mut dev, &descriptor, asset, screen, session).map_err(|e| e.to_string())?;
        runs.push(RepeatRun {
            start_level: record.window.level_start,
            record,
        });
    }
    Ok(runs)
}

/// Runs [`repeat_on_device`] for several devices.
pub fn repeat_on_devices(
    configs: &[SimConfig],
    decoder: &str,
    asset: &VideoAsset,
    start_levels: &[u8],
    session: &SessionConfig,
    exec: Execution,
) -> Vec<Result<Vec<RepeatRun>, String>> {
    par::map(configs, exec, |c| repeat_on_device(c, decoder, asset, start_levels, session))
}
