use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::anomaly::is_auto_dropped;
use super::{Metric, SampleRecord};
use crate::par::{self, Execution};
use crate::types::{DecoderDescriptor, Resolution};

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std_dev: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        if values.is_empty() {
            return Stat { mean: f64::NAN, std_dev: f64::NAN };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        if values.len() == 1 {
            return Stat { mean, std_dev: 0.0 };
        }
        let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Stat { mean, std_dev: var.sqrt() }
    }
}

/// One decoder at one bitstream, averaged over a model's devices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateCell {
    pub decoder: DecoderDescriptor,
    pub resolution: Resolution,
    pub asset: String,
    /// Frame rate of the bitstream.
    pub fps: f64,
    pub count: usize,
    pub play: Stat,
    pub decode: Stat,
    pub speed: Stat,
    /// Mean decode speed below the bitstream frame rate.
    pub non_realtime: bool,
    pub non_realtime_runs: usize,
    pub suspect_runs: usize,
}

impl AggregateCell {
    pub fn stat(&self, metric: Metric) -> Stat {
        match metric {
            Metric::Play => self.play,
            Metric::Decode => self.decode,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelAggregate {
    pub model: String,
    pub manufacturer: String,
    /// Distinct devices contributing at least one record.
    pub device_count: usize,
    /// Ordered by decoder name, resolution, asset.
    pub cells: Vec<AggregateCell>,
}

fn merge_model(model: &str, records: &[&SampleRecord]) -> ModelAggregate {
    let mut cells: BTreeMap<(&str, Resolution, &str), Vec<&SampleRecord>> = BTreeMap::new();
    let mut devices = BTreeSet::new();
    for r in records {
        devices.insert(&r.sample);
        let a = &r.record.asset;
        cells
            .entry((&r.record.decoder.name, a.resolution(), &a.name))
            .or_default()
            .push(r);
    }
    let cells = cells
        .into_iter()
        .map(|((_, resolution, asset), rs)| {
            let col = |f: fn(&SampleRecord) -> f64| rs.iter().map(|r| f(r)).collect::<Vec<_>>();
            let speed = Stat::of(&col(|r| r.record.metrics.speed_fps));
            let fps = rs[0].record.asset.fps;
            AggregateCell {
                decoder: rs[0].record.decoder.clone(),
                resolution,
                asset: asset.to_string(),
                fps,
                count: rs.len(),
                play: Stat::of(&col(|r| r.record.metrics.delta_play)),
                decode: Stat::of(&col(|r| r.record.metrics.delta_decode_ma)),
                speed,
                non_realtime: speed.mean < fps,
                non_realtime_runs: rs.iter().filter(|r| r.record.flags.non_realtime).count(),
                suspect_runs: rs.iter().filter(|r| r.record.flags.suspect).count(),
            }
        })
        .collect();
    ModelAggregate {
        model: model.to_string(),
        manufacturer: records[0].manufacturer.clone(),
        device_count: devices.len(),
        cells,
    }
}

/// Groups records by device model and averages each decoder/bitstream cell.
///
/// Auto-dropped records never contribute. Output is ordered by model name.
pub fn merge_by_model(records: &[SampleRecord], exec: Execution) -> Vec<ModelAggregate> {
    let mut groups: BTreeMap<&str, Vec<&SampleRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| !is_auto_dropped(r)) {
        groups.entry(&r.model).or_default().push(r);
    }
    let groups: Vec<(&str, Vec<&SampleRecord>)> = groups.into_iter().collect();
    par::map(&groups, exec, |(m, rs)| merge_model(m, rs))
}

/// Orders cells best first: lower metric, then faster decoding, then decoder name.
pub fn cmp_cells(a: &AggregateCell, b: &AggregateCell, metric: Metric) -> Ordering {
    a.stat(metric)
        .mean
        .total_cmp(&b.stat(metric).mean)
        .then_with(|| b.speed.mean.total_cmp(&a.speed.mean))
        .then_with(|| a.decoder.name.cmp(&b.decoder.name))
        .then_with(|| a.asset.cmp(&b.asset))
}

/// The model's best decoder at `resolution`.
pub fn pick_best(cells: &[AggregateCell], metric: Metric, resolution: Resolution) -> Option<&AggregateCell> {
    cells
        .iter()
        .filter(|c| c.resolution == resolution && c.stat(metric).mean.is_finite())
        .min_by(|a, b| cmp_cells(a, b, metric))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn two_devices_mean_and_population_sd() {
        let recs = vec![
            fixtures::record_with_play("M", "a", "d", "clip", 10.0, 300.0),
            fixtures::record_with_play("M", "b", "d", "clip", 12.0, 300.0),
        ];
        let aggs = merge_by_model(&recs, Execution::Sequential);
        assert_eq!(aggs.len(), 1);
        assert_eq!(aggs[0].device_count, 2);
        let c = &aggs[0].cells[0];
        assert_eq!(c.play.mean, 11.0);
        assert_eq!(c.play.std_dev, 1.0);
        assert_eq!(c.count, 2);
    }

    #[test]
    fn single_device_has_zero_sd() {
        let recs = vec![fixtures::record_with_play("M", "a", "d", "clip", 7.25, 300.0)];
        let aggs = merge_by_model(&recs, Execution::Sequential);
        assert_eq!(aggs[0].cells[0].play, Stat { mean: 7.25, std_dev: 0.0 });
    }

    #[test]
    fn auto_dropped_records_are_excluded() {
        let recs = vec![
            fixtures::record_with_play("M", "a", "d", "clip", 10.0, 300.0),
            fixtures::record_with_play("M", "b", "d", "clip", 50.0, -5.0),
        ];
        let aggs = merge_by_model(&recs, Execution::Sequential);
        assert_eq!(aggs[0].cells[0].count, 1);
        assert_eq!(aggs[0].device_count, 1);
    }

    #[test]
    fn ties_prefer_faster_then_name() {
        let recs = vec![
            fixtures::record_with_play("M", "a", "zeta", "clip", 10.0, 300.0),
            fixtures::record_with_play("M", "a", "alpha", "clip", 10.0, 300.0),
        ];
        let aggs = merge_by_model(&recs, Execution::Sequential);
        let best = pick_best(&aggs[0].cells, Metric::Play, Resolution::Sd).unwrap();
        assert_eq!(best.decoder.name, "alpha");
    }

    #[test]
    fn parallel_matches_sequential() {
        let samples = fixtures::synthetic_samples(40, 7);
        let recs = super::super::flatten(&samples);
        assert_eq!(
            merge_by_model(&recs, Execution::Sequential),
            merge_by_model(&recs, Execution::Parallel)
        );
    }
}
