//! Measurement results as exchanged between clients, the collector and the pipeline.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::metrics::{metrics_from_window, MeasurementWindow, MetricFlags, MetricsError};
use crate::types::{DecoderDescriptor, DeviceProfile, PowerMetrics, VideoAsset};

/// One (decoder, bitstream) combination of a campaign.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PairKey {
    pub decoder: String,
    pub asset: String,
}

impl fmt::Display for PairKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} @ {}", self.decoder, self.asset)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordFlags {
    /// Decoder slower than the playback frame rate.
    #[serde(default)]
    pub non_realtime: bool,
    /// Display baseline at or above the measured draw.
    #[serde(default)]
    pub suspect: bool,
    /// Window closed before the target drop was reached.
    #[serde(default)]
    pub partial: bool,
    /// A charger was seen during the run.
    #[serde(default)]
    pub charging_observed: bool,
}

impl RecordFlags {
    pub fn from_metric_flags(f: MetricFlags) -> Self {
        RecordFlags {
            non_realtime: f.non_realtime,
            suspect: f.suspect,
            ..RecordFlags::default()
        }
    }
}

/// Result of measuring one decoder on one bitstream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoderRecord {
    pub decoder: DecoderDescriptor,
    pub asset: VideoAsset,
    pub metrics: PowerMetrics,
    pub window: MeasurementWindow,
    #[serde(default)]
    pub flags: RecordFlags,
}

impl DecoderRecord {
    pub fn from_window(
        decoder: DecoderDescriptor,
        asset: VideoAsset,
        window: MeasurementWindow,
        delta_screen: f64,
        capacity_mah: f64,
    ) -> Result<Self, MetricsError> {
        let (metrics, flags) = metrics_from_window(&window, &asset, delta_screen, capacity_mah)?;
        Ok(DecoderRecord {
            decoder,
            asset,
            metrics,
            window,
            flags: RecordFlags::from_metric_flags(flags),
        })
    }

    pub fn pair(&self) -> PairKey {
        PairKey {
            decoder: self.decoder.name.clone(),
            asset: self.asset.name.clone(),
        }
    }

    /// Recomputes the metrics from the stored window.
    pub fn recompute(&self, capacity_mah: f64) -> Result<(PowerMetrics, MetricFlags), MetricsError> {
        metrics_from_window(&self.window, &self.asset, self.metrics.delta_screen, capacity_mah)
    }

    /// True when the stored metrics match a recomputation to relative `tol` (0 means bit-exact).
    pub fn is_consistent(&self, capacity_mah: f64, tol: f64) -> bool {
        let Ok((m, f)) = self.recompute(capacity_mah) else {
            return false;
        };
        let close = |a: f64, b: f64| {
            if tol == 0.0 {
                a.to_bits() == b.to_bits()
            } else {
                (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
            }
        };
        close(m.delta_seq, self.metrics.delta_seq)
            && close(m.speed_fps, self.metrics.speed_fps)
            && close(m.delta_play, self.metrics.delta_play)
            && close(m.delta_decode_ma, self.metrics.delta_decode_ma)
            && f.non_realtime == self.flags.non_realtime
            && f.suspect == self.flags.suspect
    }
}

/// Campaign ordering: decoder name, then bitstream size ascending.
pub fn cmp_pairs(a: (&DecoderDescriptor, &VideoAsset), b: (&DecoderDescriptor, &VideoAsset)) -> Ordering {
    a.0.name
        .cmp(&b.0.name)
        .then_with(|| a.1.cmp_by_size(b.1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubmissionStatus {
    Partial,
    Complete,
    Cancelled,
}

impl fmt::Display for SubmissionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SubmissionStatus::Partial => "partial",
            SubmissionStatus::Complete => "complete",
            SubmissionStatus::Cancelled => "cancelled",
        })
    }
}

/// One device's results, possibly incomplete.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Submission {
    pub campaign_id: String,
    pub profile: DeviceProfile,
    pub records: Vec<DecoderRecord>,
    /// Number of (decoder, bitstream) pairs the device offers.
    pub available_pairs: u32,
    /// Fully measured pairs divided by available pairs.
    pub completeness: f64,
    /// Device monotonic time when the submission was assembled, seconds.
    pub client_time_s: f64,
    pub status: SubmissionStatus,
}

impl Submission {
    pub fn tested_pairs(&self) -> usize {
        self.records.iter().filter(|r| !r.flags.partial).count()
    }

    pub fn expected_completeness(&self) -> f64 {
        completeness_ratio(self.tested_pairs(), self.available_pairs as usize)
    }
}

pub fn completeness_ratio(tested: usize, available: usize) -> f64 {
    if available == 0 {
        0.0
    } else {
        tested as f64 / available as f64
    }
}

/// Device identity used for de-duplication; the serial is stored salted and hashed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SampleKey {
    pub serial_hash: String,
    pub build_host: String,
}

impl SampleKey {
    /// Short form for listings: hash prefix and build host.
    pub fn redacted(&self) -> String {
        let hex = self
            .serial_hash
            .strip_prefix("sha256:")
            .unwrap_or(&self.serial_hash);
        let prefix: String = hex.chars().take(12).collect();
        format!("{prefix}/{}", self.build_host)
    }
}

impl fmt::Display for SampleKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.serial_hash, self.build_host)
    }
}

/// One accepted sample as exported by the collector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSample {
    pub key: SampleKey,
    pub submission: Submission,
}
