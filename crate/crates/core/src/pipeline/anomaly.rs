use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Metric, RecordRef, SampleRecord};
use crate::par::{self, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleId {
    /// Decoder current at or below zero.
    NonPositiveDecode,
    /// Charger seen during the run.
    ChargingObserved,
    /// Far from the median of a same-model group of at least `min_group` records.
    MadOutlier,
    /// Playback consumption above an absolute cap in a small group.
    AbsoluteCap,
}

impl RuleId {
    /// Rules whose hits are dropped without review.
    pub fn auto_drops(self) -> bool {
        matches!(self, RuleId::NonPositiveDecode | RuleId::ChargingObserved)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Disposition {
    Flagged,
    ReviewedKeep,
    ReviewedDrop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyFlag {
    pub record: RecordRef,
    pub rule: RuleId,
    pub detail: String,
    pub disposition: Disposition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RulesConfig {
    /// Outlier threshold in multiples of the median absolute deviation.
    pub mad_multiplier: f64,
    /// Smallest same-model group the MAD rule applies to.
    pub min_group: usize,
    /// Lower bound on the MAD as a fraction of |median|, so near-identical groups do not flag noise.
    pub mad_floor_fraction: f64,
    /// Playback cap for groups too small for the MAD rule, %/h.
    pub play_cap: f64,
    pub metrics: Vec<Metric>,
}

impl Default for RulesConfig {
    fn default() -> Self {
        RulesConfig {
            mad_multiplier: 3.0,
            min_group: 3,
            mad_floor_fraction: 0.01,
            play_cap: 60.0,
            metrics: vec![Metric::Play, Metric::Decode],
        }
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len().is_multiple_of(2) {
        (v[mid - 1] + v[mid]) / 2.0
    } else {
        v[mid]
    })
}

/// Median of absolute deviations from the median (unscaled).
pub fn median_abs_deviation(values: &[f64]) -> Option<f64> {
    let m = median(values)?;
    let dev: Vec<f64> = values.iter().map(|x| (x - m).abs()).collect();
    median(&dev)
}

/// Records excluded from every aggregate regardless of review.
pub fn is_auto_dropped(r: &SampleRecord) -> bool {
    !(r.record.metrics.delta_decode_ma > 0.0) || r.record.flags.charging_observed || r.profile_charging
}

fn group_flags(group: &[&SampleRecord], rules: &RulesConfig) -> Vec<AnomalyFlag> {
    let mut out = Vec::new();
    if group.len() >= rules.min_group {
        for &metric in &rules.metrics {
            let values: Vec<f64> = group.iter().map(|r| metric.of(&r.record.metrics)).collect();
            let (Some(med), Some(mad)) = (median(&values), median_abs_deviation(&values)) else {
                continue;
            };
            let spread = mad.max(rules.mad_floor_fraction * med.abs());
            let limit = rules.mad_multiplier * spread;
            for (r, x) in group.iter().zip(&values) {
                if (x - med).abs() > limit {
                    out.push(AnomalyFlag {
                        record: r.reference(),
                        rule: RuleId::MadOutlier,
                        detail: format!(
                            "{} {x} deviates from group median {med} by more than {} x MAD {mad}",
                            metric.as_str(),
                            rules.mad_multiplier
                        ),
                        disposition: Disposition::Flagged,
                    });
                }
            }
        }
    } else {
        for r in group {
            let play = r.record.metrics.delta_play;
            if play > rules.play_cap {
                out.push(AnomalyFlag {
                    record: r.reference(),
                    rule: RuleId::AbsoluteCap,
                    detail: format!("play {play} above cap {} in a group of {}", rules.play_cap, group.len()),
                    disposition: Disposition::Flagged,
                });
            }
        }
    }
    out
}

/// Applies every rule. Only the non-positive-current and charging rules decide a drop;
/// the others are left for review.
pub fn flag_anomalies(records: &[SampleRecord], rules: &RulesConfig, exec: Execution) -> Vec<AnomalyFlag> {
    let mut flags = Vec::new();
    let mut groups: BTreeMap<(&str, &str, &str), Vec<&SampleRecord>> = BTreeMap::new();
    for r in records {
        let mut dropped = false;
        if !(r.record.metrics.delta_decode_ma > 0.0) {
            flags.push(AnomalyFlag {
                record: r.reference(),
                rule: RuleId::NonPositiveDecode,
                detail: format!("decode current {} mA", r.record.metrics.delta_decode_ma),
                disposition: Disposition::ReviewedDrop,
            });
            dropped = true;
        }
        if r.record.flags.charging_observed || r.profile_charging {
            flags.push(AnomalyFlag {
                record: r.reference(),
                rule: RuleId::ChargingObserved,
                detail: "charger attached during the run".into(),
                disposition: Disposition::ReviewedDrop,
            });
            dropped = true;
        }
        if !dropped {
            groups
                .entry((&r.model, &r.record.decoder.name, &r.record.asset.name))
                .or_default()
                .push(r);
        }
    }
    let groups: Vec<Vec<&SampleRecord>> = groups.into_values().collect();
    flags.extend(par::map(&groups, exec, |g| group_flags(g, rules)).into_iter().flatten());
    flags.sort_by(|a, b| {
        a.record
            .cmp(&b.record)
            .then(a.rule.cmp(&b.rule))
            .then_with(|| a.detail.cmp(&b.detail))
    });
    flags
}

/// Carries operator decisions from a review file onto freshly computed flags.
pub fn apply_review(flags: &[AnomalyFlag], review: &[AnomalyFlag]) -> Vec<AnomalyFlag> {
    let decided: BTreeMap<(&RecordRef, RuleId), Disposition> = review
        .iter()
        .filter(|f| f.disposition != Disposition::Flagged)
        .map(|f| ((&f.record, f.rule), f.disposition))
        .collect();
    flags
        .iter()
        .map(|f| {
            let mut f = f.clone();
            if !f.rule.auto_drops() {
                if let Some(&d) = decided.get(&(&f.record, f.rule)) {
                    f.disposition = d;
                }
            }
            f
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CleanOutcome {
    pub kept: Vec<SampleRecord>,
    pub dropped: Vec<RecordRef>,
    /// Records with at least one flag, whatever the disposition.
    pub flagged: usize,
    pub total: usize,
}

impl CleanOutcome {
    /// Observed share of dropped records.
    pub fn anomaly_rate(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.dropped.len() as f64 / self.total as f64
        }
    }
}

/// Flags still awaiting a review decision.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{} flag(s) await review", pending.len())]
pub struct Unreviewed {
    pub pending: Vec<AnomalyFlag>,
}

/// Drops reviewed-drop records; refuses while any flag is unreviewed.
pub fn clean(records: &[SampleRecord], flags: &[AnomalyFlag]) -> Result<CleanOutcome, Unreviewed> {
    let pending: Vec<AnomalyFlag> = flags
        .iter()
        .filter(|f| f.disposition == Disposition::Flagged)
        .cloned()
        .collect();
    if !pending.is_empty() {
        return Err(Unreviewed { pending });
    }
    let drop: BTreeSet<&RecordRef> = flags
        .iter()
        .filter(|f| f.disposition == Disposition::ReviewedDrop)
        .map(|f| &f.record)
        .collect();
    let flagged: BTreeSet<&RecordRef> = flags.iter().map(|f| &f.record).collect();
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for r in records {
        let key = r.reference();
        if drop.contains(&key) || is_auto_dropped(r) {
            dropped.push(key);
        } else {
            kept.push(r.clone());
        }
    }
    Ok(CleanOutcome {
        kept,
        dropped,
        flagged: flagged.len(),
        total: records.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn median_and_mad() {
        assert_eq!(median(&[9.0, 55.0, 10.0]), Some(10.0));
        assert_eq!(median(&[1.0, 2.0, 3.0, 4.0]), Some(2.5));
        assert_eq!(median_abs_deviation(&[9.0, 10.0, 55.0]), Some(1.0));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn triplet_outlier_is_flagged() {
        let recs: Vec<SampleRecord> = [9.0, 10.0, 55.0]
            .iter()
            .enumerate()
            .map(|(i, &p)| fixtures::record_with_play("ModelA", &format!("sn{i}"), "c2.dec", "clip", p, 300.0))
            .collect();
        let flags = flag_anomalies(&recs, &RulesConfig::default(), Execution::Sequential);
        let play_flags: Vec<_> = flags
            .iter()
            .filter(|f| f.rule == RuleId::MadOutlier && f.detail.starts_with("play"))
            .collect();
        assert_eq!(play_flags.len(), 1);
        assert_eq!(play_flags[0].record.sample.serial_hash, "sn2");
        assert_eq!(play_flags[0].disposition, Disposition::Flagged);
    }

    #[test]
    fn nonpositive_decode_is_auto_dropped() {
        let recs = vec![fixtures::record_with_play("M", "sn0", "d", "clip", 8.0, -12.0)];
        let flags = flag_anomalies(&recs, &RulesConfig::default(), Execution::Sequential);
        assert_eq!(flags.len(), 1);
        assert_eq!(flags[0].rule, RuleId::NonPositiveDecode);
        assert_eq!(flags[0].disposition, Disposition::ReviewedDrop);
        let out = clean(&recs, &flags).unwrap();
        assert!(out.kept.is_empty());
        assert_eq!(out.anomaly_rate(), 1.0);
    }

    #[test]
    fn small_group_cap() {
        let recs = vec![
            fixtures::record_with_play("M", "sn0", "d", "clip", 80.0, 300.0),
            fixtures::record_with_play("M", "sn1", "d", "clip", 10.0, 300.0),
        ];
        let flags = flag_anomalies(&recs, &RulesConfig::default(), Execution::Sequential);
        assert_eq!(flags.len(), 1);
        assert_eq!(flags[0].rule, RuleId::AbsoluteCap);
    }

    #[test]
    fn clean_refuses_until_reviewed() {
        let recs: Vec<SampleRecord> = [9.0, 10.0, 55.0]
            .iter()
            .enumerate()
            .map(|(i, &p)| fixtures::record_with_play("ModelA", &format!("sn{i}"), "c2.dec", "clip", p, 300.0))
            .collect();
        let flags = flag_anomalies(&recs, &RulesConfig::default(), Execution::Sequential);
        let err = clean(&recs, &flags).unwrap_err();
        assert!(!err.pending.is_empty());

        let mut review = err.pending.clone();
        for f in &mut review {
            f.disposition = Disposition::ReviewedDrop;
        }
        let reviewed = apply_review(&flags, &review);
        let out = clean(&recs, &reviewed).unwrap();
        assert_eq!(out.kept.len(), 2);
        assert_eq!(out.dropped.len(), 1);

        for f in &mut review {
            f.disposition = Disposition::ReviewedKeep;
        }
        let out = clean(&recs, &apply_review(&flags, &review)).unwrap();
        assert_eq!(out.kept.len(), 3);
    }

    #[test]
    fn review_cannot_keep_auto_drops() {
        let recs = vec![fixtures::record_with_play("M", "sn0", "d", "clip", 8.0, -12.0)];
        let flags = flag_anomalies(&recs, &RulesConfig::default(), Execution::Sequential);
        let mut review = flags.clone();
        review[0].disposition = Disposition::ReviewedKeep;
        let out = clean(&recs, &apply_review(&flags, &review)).unwrap();
        assert!(out.kept.is_empty());
    }
}
