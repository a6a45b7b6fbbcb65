use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::aggregate::{pick_best, ModelAggregate};
use super::Metric;
use crate::types::{DecoderKind, Resolution, Standard};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fraction {
    pub numerator: usize,
    pub denominator: usize,
    /// `numerator / denominator`, or 0 for an empty denominator.
    pub value: f64,
}

impl Fraction {
    pub fn new(numerator: usize, denominator: usize) -> Fraction {
        let value = if denominator == 0 {
            0.0
        } else {
            numerator as f64 / denominator as f64
        };
        Fraction {
            numerator,
            denominator,
            value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionStats {
    pub resolution: Resolution,
    /// Models with at least one decoder measured at this resolution.
    pub models: usize,
    /// Models whose lowest-playback decoder is a software one.
    pub software_wins: Fraction,
    pub kind_wins: BTreeMap<DecoderKind, Fraction>,
    /// Models whose overall best decoder implements the standard.
    pub standard_wins: BTreeMap<Standard, Fraction>,
    /// Share of a standard's model/decoder cells that cannot keep up with playback.
    pub non_realtime: BTreeMap<Standard, Fraction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub models: usize,
    pub devices: usize,
    pub resolutions: Vec<ResolutionStats>,
}

/// Win rates count models; the best decoder is chosen on playback consumption.
pub fn summary_statistics(aggregates: &[ModelAggregate]) -> StatsReport {
    let resolutions = Resolution::ALL
        .iter()
        .map(|&res| {
            let winners: Vec<_> = aggregates
                .iter()
                .filter_map(|m| pick_best(&m.cells, Metric::Play, res))
                .collect();
            let n = winners.len();
            let kind_wins = DecoderKind::ALL
                .iter()
                .map(|&k| (k, Fraction::new(winners.iter().filter(|c| c.decoder.kind == k).count(), n)))
                .collect::<BTreeMap<_, _>>();
            let standard_wins = Standard::ALL
                .iter()
                .map(|&s| (s, Fraction::new(winners.iter().filter(|c| c.decoder.standard == s).count(), n)))
                .collect();
            let non_realtime = Standard::ALL
                .iter()
                .map(|&s| {
                    let cells: Vec<_> = aggregates
                        .iter()
                        .flat_map(|m| &m.cells)
                        .filter(|c| c.resolution == res && c.decoder.standard == s)
                        .collect();
                    (s, Fraction::new(cells.iter().filter(|c| c.non_realtime).count(), cells.len()))
                })
                .collect();
            ResolutionStats {
                resolution: res,
                models: n,
                software_wins: kind_wins[&DecoderKind::Software],
                kind_wins,
                standard_wins,
                non_realtime,
            }
        })
        .collect();
    StatsReport {
        models: aggregates.len(),
        devices: aggregates.iter().map(|m| m.device_count).sum(),
        resolutions,
    }
}
