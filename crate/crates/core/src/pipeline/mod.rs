//! From raw collector exports to a cleaned, per-model dataset.
//!
//! Records are flattened out of their submissions, checked against the
//! estimator, flagged by rule, reviewed by an operator, merged by device model
//! and summarized.

mod aggregate;
mod anomaly;
mod stats;

pub use aggregate::{cmp_cells, merge_by_model, pick_best, AggregateCell, ModelAggregate, Stat};
pub use anomaly::{
    apply_review, clean, flag_anomalies, is_auto_dropped, median, median_abs_deviation,
    AnomalyFlag, CleanOutcome, Disposition, RuleId, RulesConfig, Unreviewed,
};
pub use stats::{summary_statistics, Fraction, ResolutionStats, StatsReport};

use serde::{Deserialize, Serialize};

use crate::submission::{DecoderRecord, RawSample, SampleKey};

/// Which power figure a ranking or rule looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Battery percent per hour of playback.
    Play,
    /// Decoder-only current, mA.
    Decode,
}

impl Metric {
    pub fn of(self, m: &crate::types::PowerMetrics) -> f64 {
        match self {
            Metric::Play => m.delta_play,
            Metric::Decode => m.delta_decode_ma,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Play => "play",
            Metric::Decode => "decode",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Metric::Play => "%/h",
            Metric::Decode => "mA",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = crate::types::ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "play" => Ok(Metric::Play),
            "decode" => Ok(Metric::Decode),
            _ => Err(crate::types::ParseEnumError {
                kind: "metric",
                value: s.to_string(),
            }),
        }
    }
}

/// Identifies one decoder record inside the dataset.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RecordRef {
    pub sample: SampleKey,
    pub decoder: String,
    pub asset: String,
}

/// A decoder record with the device context the pipeline needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample: SampleKey,
    pub model: String,
    pub manufacturer: String,
    pub capacity_mah: f64,
    /// Charger reported attached in the submitted profile.
    #[serde(default)]
    pub profile_charging: bool,
    pub record: DecoderRecord,
}

impl SampleRecord {
    pub fn reference(&self) -> RecordRef {
        RecordRef {
            sample: self.sample.clone(),
            decoder: self.record.decoder.name.clone(),
            asset: self.record.asset.name.clone(),
        }
    }
}

/// Flattens samples into records, skipping partial windows.
pub fn flatten(samples: &[RawSample]) -> Vec<SampleRecord> {
    let mut out: Vec<SampleRecord> = samples
        .iter()
        .flat_map(|s| {
            s.submission
                .records
                .iter()
                .filter(|r| !r.flags.partial)
                .map(move |r| SampleRecord {
                    sample: s.key.clone(),
                    model: s.submission.profile.model.clone(),
                    manufacturer: s.submission.profile.manufacturer.clone(),
                    capacity_mah: s.submission.profile.battery_capacity_mah,
                    profile_charging: s.submission.profile.charging,
                    record: r.clone(),
                })
        })
        .collect();
    out.sort_by_key(SampleRecord::reference);
    out
}

/// Records whose stored metrics do not recompute from their window.
pub fn inconsistent_records(records: &[SampleRecord], rel_tol: f64) -> Vec<RecordRef> {
    records
        .iter()
        .filter(|r| !r.record.is_consistent(r.capacity_mah, rel_tol))
        .map(SampleRecord::reference)
        .collect()
}
