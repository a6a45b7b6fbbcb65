//! Power and speed estimation from battery-level transitions.
//!
//! A measurement window is bounded by two observed battery-level transitions.
//! At each transition the decode loop position (iteration and frame index) and
//! the monotonic time are recorded; everything else is derived from those eight
//! numbers plus the bitstream length.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{DeviceProfile, PowerMetrics, VideoAsset};

/// Lowest battery level at which measurements are trusted.
pub const MIN_LEVEL: f64 = 20.0;
/// Highest battery level at which measurements are trusted.
pub const MAX_LEVEL: f64 = 95.0;
/// Minimum battery expenditure for one decoder/bitstream measurement, percent.
pub const MIN_DROP: f64 = 3.0;

const SECONDS_PER_HOUR: f64 = 3600.0;

/// Battery and decode-loop state captured at the two bounding level transitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementWindow {
    /// Battery level at the opening transition, percent.
    pub level_start: f64,
    /// Battery level at the closing transition, percent.
    pub level_end: f64,
    /// Monotonic time of the opening transition, seconds.
    pub time_start: f64,
    pub time_end: f64,
    /// Loop iteration at the opening transition.
    pub iter_start: u64,
    pub iter_end: u64,
    /// Frame index within the bitstream at the opening transition.
    pub frame_start: u64,
    pub frame_end: u64,
    /// Frames in the bitstream.
    pub seq_frames: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowDefect {
    EmptySequence,
    FrameOutOfRange,
    NoFramesDecoded,
    LevelNotDropped,
    TimeNotAdvanced,
}

impl std::fmt::Display for WindowDefect {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let msg = match self {
            WindowDefect::EmptySequence => "sequence has no frames",
            WindowDefect::FrameOutOfRange => "frame index outside the sequence",
            WindowDefect::NoFramesDecoded => "no frames decoded between transitions",
            WindowDefect::LevelNotDropped => "battery level did not drop",
            WindowDefect::TimeNotAdvanced => "end time is not after start time",
        };
        f.write_str(msg)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("invalid measurement window: {0}")]
    InvalidWindow(WindowDefect),
    #[error("decoding speed must be positive, got {0}")]
    NonPositiveSpeed(f64),
    #[error("playback frame rate must be positive, got {0}")]
    NonPositiveFps(f64),
    #[error("bitstream must have frames")]
    EmptyAsset,
    #[error("battery capacity must be positive, got {0}")]
    NonPositiveCapacity(f64),
}

impl MeasurementWindow {
    /// Frames decoded between the two transitions.
    pub fn decoded_frames(&self) -> i128 {
        (i128::from(self.iter_end) - i128::from(self.iter_start)) * i128::from(self.seq_frames)
            + i128::from(self.frame_end)
            - i128::from(self.frame_start)
    }

    pub fn elapsed(&self) -> f64 {
        self.time_end - self.time_start
    }

    pub fn level_drop(&self) -> f64 {
        self.level_start - self.level_end
    }

    pub fn validate(&self) -> Result<(), MetricsError> {
        let defect = if self.seq_frames == 0 {
            Some(WindowDefect::EmptySequence)
        } else if self.frame_start >= self.seq_frames || self.frame_end >= self.seq_frames {
            Some(WindowDefect::FrameOutOfRange)
        } else if self.decoded_frames() <= 0 {
            Some(WindowDefect::NoFramesDecoded)
        } else if !(self.level_start > self.level_end) {
            Some(WindowDefect::LevelNotDropped)
        } else if !(self.time_end > self.time_start) {
            Some(WindowDefect::TimeNotAdvanced)
        } else {
            None
        };
        match defect {
            Some(d) => Err(MetricsError::InvalidWindow(d)),
            None => Ok(()),
        }
    }
}

/// Battery percent spent per full decode of the bitstream.
pub fn compute_delta_seq(w: &MeasurementWindow) -> Result<f64, MetricsError> {
    w.validate()?;
    Ok(w.level_drop() / w.decoded_frames() as f64 * w.seq_frames as f64)
}

/// Average decoding speed over the window, frames per second.
pub fn compute_decode_speed(w: &MeasurementWindow) -> Result<f64, MetricsError> {
    w.validate()?;
    Ok(w.decoded_frames() as f64 / w.elapsed())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaybackEstimate {
    /// Percent of battery per hour of playback.
    pub percent_per_hour: f64,
    /// False when the decoder cannot keep up with the playback frame rate.
    pub realtime: bool,
}

/// Battery percent per hour of real-time playback.
///
/// When the decoder is faster than playback, the display keeps drawing its idle
/// baseline for the part of each second the decoder is not busy.
pub fn compute_delta_play(
    delta_seq: f64,
    speed_fps: f64,
    asset: &VideoAsset,
    delta_screen: f64,
) -> Result<PlaybackEstimate, MetricsError> {
    if !(speed_fps > 0.0) {
        return Err(MetricsError::NonPositiveSpeed(speed_fps));
    }
    if !(asset.fps > 0.0) {
        return Err(MetricsError::NonPositiveFps(asset.fps));
    }
    if asset.n_seq == 0 {
        return Err(MetricsError::EmptyAsset);
    }
    let decode_part = delta_seq * (asset.fps / asset.n_seq as f64) * SECONDS_PER_HOUR;
    let idle_fraction = (1.0 - asset.fps / speed_fps).max(0.0);
    Ok(PlaybackEstimate {
        percent_per_hour: decode_part + delta_screen * idle_fraction,
        realtime: speed_fps >= asset.fps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeEstimate {
    pub milliamps: f64,
    /// Set when the display baseline is at least the measured draw.
    pub suspect: bool,
}

/// Decoder-only current in milliamps.
///
/// Percent quantities are converted to fractions before scaling by capacity.
pub fn compute_delta_decode(
    delta_seq: f64,
    speed_fps: f64,
    asset: &VideoAsset,
    delta_screen: f64,
    capacity_mah: f64,
) -> Result<DecodeEstimate, MetricsError> {
    if !(capacity_mah > 0.0) {
        return Err(MetricsError::NonPositiveCapacity(capacity_mah));
    }
    if !(speed_fps > 0.0) {
        return Err(MetricsError::NonPositiveSpeed(speed_fps));
    }
    if asset.n_seq == 0 {
        return Err(MetricsError::EmptyAsset);
    }
    let total_per_hour = delta_seq * (speed_fps / asset.n_seq as f64) * SECONDS_PER_HOUR;
    let milliamps = capacity_mah * (total_per_hour - delta_screen) / 100.0;
    Ok(DecodeEstimate {
        milliamps,
        suspect: !(milliamps > 0.0),
    })
}

/// Quality flags attached to computed metrics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricFlags {
    #[serde(default)]
    pub non_realtime: bool,
    #[serde(default)]
    pub suspect: bool,
}

/// Runs all four formulas over one window.
pub fn metrics_from_window(
    w: &MeasurementWindow,
    asset: &VideoAsset,
    delta_screen: f64,
    capacity_mah: f64,
) -> Result<(PowerMetrics, MetricFlags), MetricsError> {
    let delta_seq = compute_delta_seq(w)?;
    let speed = compute_decode_speed(w)?;
    let play = compute_delta_play(delta_seq, speed, asset, delta_screen)?;
    let decode = compute_delta_decode(delta_seq, speed, asset, delta_screen, capacity_mah)?;
    Ok((
        PowerMetrics {
            delta_seq,
            speed_fps: speed,
            delta_play: play.percent_per_hour,
            delta_decode_ma: decode.milliamps,
            delta_screen,
        },
        MetricFlags {
            non_realtime: !play.realtime,
            suspect: decode.suspect,
        },
    ))
}

/// Preconditions for a trustworthy measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Requirement {
    /// The device must run on battery.
    Autonomous,
    /// The battery level must stay within the trusted window.
    LevelWindow,
    /// Each measurement must spend a minimum share of the battery.
    MinimumDrop,
}

impl std::fmt::Display for Requirement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Requirement::Autonomous => write!(f, "device is charging; it must run on battery"),
            Requirement::LevelWindow => write!(
                f,
                "battery level outside the {MIN_LEVEL}..={MAX_LEVEL} percent window"
            ),
            Requirement::MinimumDrop => {
                write!(f, "planned drop below the {MIN_DROP} percent minimum")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidityVerdict {
    pub violations: Vec<Requirement>,
}

impl ValidityVerdict {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violates(&self, r: Requirement) -> bool {
        self.violations.contains(&r)
    }
}

impl std::fmt::Display for ValidityVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Lists every violated measurement precondition. Spanning several charge cycles is allowed.
pub fn check_validity(profile: &DeviceProfile, planned_drop: f64) -> ValidityVerdict {
    let mut violations = Vec::new();
    if profile.charging {
        violations.push(Requirement::Autonomous);
    }
    if !(profile.battery_level >= MIN_LEVEL && profile.battery_level <= MAX_LEVEL) {
        violations.push(Requirement::LevelWindow);
    }
    if !(planned_drop >= MIN_DROP) {
        violations.push(Requirement::MinimumDrop);
    }
    ValidityVerdict { violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Standard;

    fn asset(fps: f64, n_seq: u64) -> VideoAsset {
        VideoAsset {
            name: "t".into(),
            width: 640,
            height: 480,
            fps,
            n_seq,
            standard: Standard::H264,
            si_mean: 0.0,
            ti_mean: 0.0,
            bitrate_kbps: 0.0,
            gop_seconds: None,
        }
    }

    fn window(b0: f64, b1: f64, n0i: u64, n1i: u64, f0: u64, f1: u64, n_seq: u64) -> MeasurementWindow {
        MeasurementWindow {
            level_start: b0,
            level_end: b1,
            time_start: 0.0,
            time_end: 100.0,
            iter_start: n0i,
            iter_end: n1i,
            frame_start: f0,
            frame_end: f1,
            seq_frames: n_seq,
        }
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn profile(level: f64, charging: bool) -> DeviceProfile {
        DeviceProfile {
            model: "m".into(),
            manufacturer: "x".into(),
            serial_number: "s".into(),
            build_host: "h".into(),
            battery_capacity_mah: 4000.0,
            voltage_v: 3.8,
            battery_level: level,
            os_version: "11".into(),
            charging,
        }
    }

    #[test]
    fn delta_seq_worked_example() {
        let w = window(80.0, 77.0, 2, 10, 100, 300, 500);
        assert_eq!(w.decoded_frames(), 4200);
        let d = compute_delta_seq(&w).unwrap();
        assert!(rel(d, 3.0 / 4200.0 * 500.0) < 1e-12);
        assert!(rel(d, 0.357_142_857_142_857_1) < 1e-12);
    }

    #[test]
    fn one_sequence_identity() {
        let w = window(50.0, 49.0, 4, 5, 0, 0, 731);
        assert_eq!(compute_delta_seq(&w).unwrap(), 1.0);
    }

    #[test]
    fn zero_frames_is_invalid() {
        let w = window(50.0, 47.0, 3, 3, 10, 10, 100);
        assert_eq!(
            compute_delta_seq(&w),
            Err(MetricsError::InvalidWindow(WindowDefect::NoFramesDecoded))
        );
    }

    #[test]
    fn speed_examples() {
        let mut w = window(80.0, 77.0, 0, 2, 0, 0, 500);
        w.time_end = 40.0;
        assert_eq!(compute_decode_speed(&w).unwrap(), 25.0);

        let mut w = window(80.0, 77.0, 2, 10, 100, 300, 500);
        w.time_start = 16.0;
        w.time_end = 100.0;
        assert!(rel(compute_decode_speed(&w).unwrap(), 50.0) < 1e-12);

        let mut w = window(80.0, 77.0, 7, 8, 5, 5, 250);
        w.time_start = 3.0;
        w.time_end = 13.0;
        assert_eq!(compute_decode_speed(&w).unwrap(), 25.0);
    }

    #[test]
    fn speed_requires_forward_time() {
        let mut w = window(80.0, 77.0, 0, 2, 0, 0, 500);
        w.time_end = w.time_start;
        assert_eq!(
            compute_decode_speed(&w),
            Err(MetricsError::InvalidWindow(WindowDefect::TimeNotAdvanced))
        );
    }

    #[test]
    fn delta_play_examples() {
        let a = asset(25.0, 500);
        let p = compute_delta_play(0.05, 50.0, &a, 2.0).unwrap();
        assert!(rel(p.percent_per_hour, 10.0) < 1e-12);
        assert!(p.realtime);

        // clamp boundary: no compensation at exactly the playback rate
        let p = compute_delta_play(0.05, 25.0, &a, 2.0).unwrap();
        assert_eq!(p.percent_per_hour, 0.05 * (25.0 / 500.0) * 3600.0);
        assert!(p.realtime);

        let p = compute_delta_play(0.05, 20.0, &a, 2.0).unwrap();
        assert_eq!(p.percent_per_hour, 0.05 * (25.0 / 500.0) * 3600.0);
        assert!(!p.realtime);
    }

    #[test]
    fn delta_play_rejects_bad_inputs() {
        let a = asset(25.0, 500);
        assert!(matches!(
            compute_delta_play(0.05, 0.0, &a, 2.0),
            Err(MetricsError::NonPositiveSpeed(_))
        ));
        assert!(matches!(
            compute_delta_play(0.05, 30.0, &asset(0.0, 500), 2.0),
            Err(MetricsError::NonPositiveFps(_))
        ));
    }

    #[test]
    fn delta_decode_examples() {
        let a = asset(25.0, 500);
        let d = compute_delta_decode(0.05, 50.0, &a, 2.0, 4000.0).unwrap();
        assert!(rel(d.milliamps, 640.0) < 1e-12);
        assert!(!d.suspect);

        // baseline equals the total draw
        let d = compute_delta_decode(0.05, 50.0, &a, 0.05 * 0.1 * 3600.0, 4000.0).unwrap();
        assert_eq!(d.milliamps, 0.0);
        assert!(d.suspect);

        let d = compute_delta_decode(0.05, 50.0, &a, 20.0, 4000.0).unwrap();
        assert!(d.milliamps < 0.0 && d.suspect);

        assert!(matches!(
            compute_delta_decode(0.05, 50.0, &a, 2.0, 0.0),
            Err(MetricsError::NonPositiveCapacity(_))
        ));
    }

    #[test]
    fn validity_examples() {
        let v = check_validity(&profile(96.0, false), 3.0);
        assert_eq!(v.violations, vec![Requirement::LevelWindow]);
        let v = check_validity(&profile(19.0, false), 3.0);
        assert_eq!(v.violations, vec![Requirement::LevelWindow]);
        assert!(check_validity(&profile(50.0, false), 3.0).is_valid());
        assert!(check_validity(&profile(20.0, false), 3.0).is_valid());
        assert!(check_validity(&profile(95.0, false), 3.0).is_valid());

        let v = check_validity(&profile(10.0, true), 2.0);
        assert_eq!(
            v.violations,
            vec![
                Requirement::Autonomous,
                Requirement::LevelWindow,
                Requirement::MinimumDrop
            ]
        );
        assert_eq!(v, check_validity(&profile(10.0, true), 2.0));
    }

    #[test]
    fn full_window_metrics() {
        let mut w = window(80.0, 77.0, 2, 10, 100, 300, 500);
        w.time_start = 16.0;
        w.time_end = 100.0;
        let (m, flags) = metrics_from_window(&w, &asset(25.0, 500), 2.0, 4000.0).unwrap();
        assert!(rel(m.speed_fps, 50.0) < 1e-12);
        assert!(!flags.non_realtime);
        assert!(!flags.suspect);
        assert_eq!(m.delta_screen, 2.0);
    }
}
