//! Figure-style slices of the aggregated dataset.
//!
//! Each slice renders to a CSV table and an SVG chart. Numbers are formatted
//! once, with [`fmt_value`], and the same strings feed both outputs: every
//! `data-*` attribute in a chart is a cell of its table.

pub mod svg;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::pipeline::{cmp_cells, pick_best, AggregateCell, Metric, ModelAggregate};
use crate::types::{DecoderKind, Resolution, Standard};

pub use svg::{rating_svg, ranking_svg, scatter_svg};

/// Fixed four-decimal rendering used by tables and charts alike.
pub fn fmt_value(x: f64) -> String {
    if x.is_finite() {
        let s = format!("{x:.4}");
        if s == "-0.0000" {
            "0.0000".to_string()
        } else {
            s
        }
    } else {
        String::new()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("n must be at least 1")]
    InvalidN,
    #[error("model {name:?} not found{}", suggestion_text(.suggestions))]
    NotFound { name: String, suggestions: Vec<String> },
    #[error("writing CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("writing {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn suggestion_text(s: &[String]) -> String {
    if s.is_empty() {
        String::new()
    } else {
        format!("; did you mean {}?", s.iter().map(|m| format!("{m:?}")).collect::<Vec<_>>().join(", "))
    }
}

/// Closest model names by Jaro-Winkler similarity, best first.
pub fn near_misses(aggregates: &[ModelAggregate], name: &str) -> Vec<String> {
    let needle = name.to_lowercase();
    let mut scored: Vec<(f64, &str)> = aggregates
        .iter()
        .map(|m| (strsim::jaro_winkler(&needle, &m.model.to_lowercase()), m.model.as_str()))
        .filter(|(s, _)| *s >= 0.75)
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    scored.into_iter().take(3).map(|(_, m)| m.to_string()).collect()
}

fn find_model<'a>(aggregates: &'a [ModelAggregate], name: &str) -> Result<&'a ModelAggregate, ReportError> {
    aggregates
        .iter()
        .find(|m| m.model == name)
        .ok_or_else(|| ReportError::NotFound {
            name: name.to_string(),
            suggestions: near_misses(aggregates, name),
        })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingRow {
    pub rank: usize,
    pub model: String,
    pub decoder: String,
    pub resolution: Resolution,
    pub value: f64,
    /// Error-bar half-width.
    pub std_dev: f64,
    pub count: usize,
}

/// The `n` models with the lowest `metric` at `resolution`, each represented by its best decoder.
pub fn top_ranking(
    aggregates: &[ModelAggregate],
    metric: Metric,
    resolution: Resolution,
    n: usize,
) -> Result<Vec<RankingRow>, ReportError> {
    if n == 0 {
        return Err(ReportError::InvalidN);
    }
    let mut best: Vec<(&str, &AggregateCell)> = aggregates
        .iter()
        .filter_map(|m| pick_best(&m.cells, metric, resolution).map(|c| (m.model.as_str(), c)))
        .collect();
    best.sort_by(|a, b| cmp_cells(a.1, b.1, metric).then_with(|| a.0.cmp(b.0)));
    Ok(best
        .into_iter()
        .take(n)
        .enumerate()
        .map(|(i, (model, c))| {
            let s = c.stat(metric);
            RankingRow {
                rank: i + 1,
                model: model.to_string(),
                decoder: c.decoder.name.clone(),
                resolution,
                value: s.mean,
                std_dev: s.std_dev,
                count: c.count,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingCell {
    pub play: f64,
    pub std_dev: f64,
    pub speed: f64,
    pub non_realtime: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingRow {
    pub decoder: String,
    pub kind: DecoderKind,
    pub standard: Standard,
    /// Indexed like [`Resolution::ALL`]; `None` when untested.
    pub cells: [Option<RatingCell>; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRating {
    pub model: String,
    pub rows: Vec<RatingRow>,
}

fn res_index(r: Resolution) -> usize {
    Resolution::ALL.iter().position(|&x| x == r).expect("known resolution")
}

/// Every decoder of one model with its playback consumption per resolution.
pub fn model_rating(aggregates: &[ModelAggregate], name: &str) -> Result<ModelRating, ReportError> {
    let m = find_model(aggregates, name)?;
    let mut rows: Vec<RatingRow> = Vec::new();
    for c in &m.cells {
        let idx = match rows.iter().position(|r| r.decoder == c.decoder.name) {
            Some(i) => i,
            None => {
                rows.push(RatingRow {
                    decoder: c.decoder.name.clone(),
                    kind: c.decoder.kind,
                    standard: c.decoder.standard,
                    cells: [None, None, None],
                });
                rows.len() - 1
            }
        };
        let slot = &mut rows[idx].cells[res_index(c.resolution)];
        let better = match slot {
            Some(existing) => c.play.mean < existing.play,
            None => true,
        };
        if better {
            *slot = Some(RatingCell {
                play: c.play.mean,
                std_dev: c.play.std_dev,
                speed: c.speed.mean,
                non_realtime: c.non_realtime,
            });
        }
    }
    rows.sort_by(|a, b| a.decoder.cmp(&b.decoder));
    Ok(ModelRating {
        model: m.model.clone(),
        rows,
    })
}

/// Marker size class of a scatter point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeClass {
    Small,
    Medium,
    Large,
}

impl SizeClass {
    pub fn of(r: Resolution) -> SizeClass {
        match r {
            Resolution::Sd => SizeClass::Small,
            Resolution::Hd => SizeClass::Medium,
            Resolution::Fhd => SizeClass::Large,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SizeClass::Small => "small",
            SizeClass::Medium => "medium",
            SizeClass::Large => "large",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub decoder: String,
    pub vendor: String,
    pub kind: DecoderKind,
    pub resolution: Resolution,
    pub size: SizeClass,
    pub speed: f64,
    pub play: f64,
    /// Decodes slower than playback.
    pub below_realtime: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterChart {
    pub model: String,
    pub points: Vec<ScatterPoint>,
    /// Frame rate of the reference line.
    pub fps: f64,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
}

/// Fallback frame rate for a chart without points.
pub const DEFAULT_FPS: f64 = 25.0;

/// `[min, max]` widened by 5% of the span on each side.
pub fn padded_range(values: impl IntoIterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .into_iter()
        .filter(|v| v.is_finite())
        .fold(None, |acc: Option<(f64, f64)>, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })?;
    let span = hi - lo;
    let margin = if span > 0.0 {
        0.05 * span
    } else {
        0.05 * lo.abs().max(1.0)
    };
    Some((lo - margin, hi + margin))
}

/// Playback consumption against decode speed for every decoder of one model.
pub fn power_speed_scatter(aggregates: &[ModelAggregate], name: &str) -> Result<ScatterChart, ReportError> {
    let m = find_model(aggregates, name)?;
    let points: Vec<ScatterPoint> = m
        .cells
        .iter()
        .map(|c| ScatterPoint {
            decoder: c.decoder.name.clone(),
            vendor: c.decoder.vendor.clone(),
            kind: c.decoder.kind,
            resolution: c.resolution,
            size: SizeClass::of(c.resolution),
            speed: c.speed.mean,
            play: c.play.mean,
            below_realtime: c.speed.mean < c.fps,
        })
        .collect();
    let fps = m
        .cells
        .iter()
        .map(|c| c.fps)
        .fold(None, |acc: Option<f64>, f| Some(acc.map_or(f, |a| a.max(f))))
        .unwrap_or(DEFAULT_FPS);
    let x_range = padded_range(points.iter().map(|p| p.speed).chain([fps])).expect("fps is finite");
    let y_range = padded_range(points.iter().map(|p| p.play)).unwrap_or((0.0, 1.0));
    Ok(ScatterChart {
        model: m.model.clone(),
        points,
        fps,
        x_range,
        y_range,
    })
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, ReportError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| ReportError::Io {
        path: "<memory>".into(),
        source: e.into_error(),
    })
}

fn flag(b: bool) -> String {
    if b { "yes" } else { "no" }.to_string()
}

pub fn ranking_csv(rows: &[RankingRow], metric: Metric) -> Result<Vec<u8>, ReportError> {
    let value_col = format!("{}_{}", metric.as_str(), metric_unit_slug(metric));
    csv_bytes(
        &["rank", "model", "decoder", "resolution", &value_col, "std_dev", "count"],
        rows.iter().map(|r| {
            vec![
                r.rank.to_string(),
                r.model.clone(),
                r.decoder.clone(),
                r.resolution.to_string(),
                fmt_value(r.value),
                fmt_value(r.std_dev),
                r.count.to_string(),
            ]
        }),
    )
}

fn metric_unit_slug(metric: Metric) -> &'static str {
    match metric {
        Metric::Play => "pct_per_h",
        Metric::Decode => "ma",
    }
}

/// Status of a rating cell: the flag, or `missing` for an untested resolution.
pub fn rating_status(cell: Option<&RatingCell>) -> &'static str {
    match cell {
        None => "missing",
        Some(c) if c.non_realtime => "non-realtime",
        Some(_) => "ok",
    }
}

pub fn rating_csv(rating: &ModelRating) -> Result<Vec<u8>, ReportError> {
    let mut rows = Vec::new();
    for r in &rating.rows {
        for (i, res) in Resolution::ALL.iter().enumerate() {
            let c = r.cells[i].as_ref();
            rows.push(vec![
                rating.model.clone(),
                r.decoder.clone(),
                r.kind.to_string(),
                r.standard.to_string(),
                res.to_string(),
                c.map(|c| fmt_value(c.play)).unwrap_or_default(),
                c.map(|c| fmt_value(c.std_dev)).unwrap_or_default(),
                c.map(|c| fmt_value(c.speed)).unwrap_or_default(),
                rating_status(c).to_string(),
            ]);
        }
    }
    csv_bytes(
        &["model", "decoder", "kind", "standard", "resolution", "play_pct_per_h", "std_dev", "speed_fps", "status"],
        rows,
    )
}

pub fn scatter_csv(chart: &ScatterChart) -> Result<Vec<u8>, ReportError> {
    let fps = fmt_value(chart.fps);
    csv_bytes(
        &[
            "model", "decoder", "vendor", "kind", "resolution", "size", "speed_fps", "play_pct_per_h", "fps",
            "below_realtime",
        ],
        chart.points.iter().map(|p| {
            vec![
                chart.model.clone(),
                p.decoder.clone(),
                p.vendor.clone(),
                p.kind.to_string(),
                p.resolution.to_string(),
                p.size.as_str().to_string(),
                fmt_value(p.speed),
                fmt_value(p.play),
                fps.clone(),
                flag(p.below_realtime),
            ]
        }),
    )
}

/// Writes `<stem>.csv` and `<stem>.svg` into `dir`.
pub fn write_pair(dir: &Path, stem: &str, csv: &[u8], svg: &str) -> Result<(), ReportError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| ReportError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let c = dir.join(format!("{stem}.csv"));
    std::fs::write(&c, csv).map_err(io(&c))?;
    let s = dir.join(format!("{stem}.svg"));
    std::fs::write(&s, svg).map_err(io(&s))?;
    Ok(())
}

/// All cells of a CSV table, header excluded.
pub fn csv_cells(csv: &[u8]) -> Result<Vec<String>, csv::Error> {
    let mut r = csv::Reader::from_reader(csv);
    let mut out = Vec::new();
    for rec in r.records() {
        out.extend(rec?.iter().map(str::to_string));
    }
    Ok(out)
}

/// Values of every `data-*` attribute in an SVG document, unescaped.
pub fn svg_data_values(svg: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = svg;
    while let Some(i) = rest.find(" data-") {
        rest = &rest[i + 6..];
        let Some(eq) = rest.find("=\"") else { break };
        if rest[..eq].contains(|c: char| c.is_whitespace() || c == '>') {
            continue;
        }
        rest = &rest[eq + 2..];
        let Some(end) = rest.find('"') else { break };
        out.push(svg::unescape(&rest[..end]));
        rest = &rest[end + 1..];
    }
    out
}

/// Chart values that do not appear as a table cell.
pub fn values_missing_from_table(svg: &str, csv: &[u8]) -> Result<Vec<String>, csv::Error> {
    let cells: std::collections::BTreeSet<String> = csv_cells(csv)?.into_iter().collect();
    Ok(svg_data_values(svg)
        .into_iter()
        .filter(|v| !cells.contains(v))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::par::Execution;
    use crate::pipeline::merge_by_model;

    fn aggs() -> Vec<ModelAggregate> {
        merge_by_model(&fixtures::ten_model_records(), Execution::Sequential)
    }

    #[test]
    fn ranking_is_sorted_and_contiguous() {
        let rows = top_ranking(&aggs(), Metric::Play, Resolution::Hd, 3).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows.iter().map(|r| r.rank).collect::<Vec<_>>(), [1, 2, 3]);
        assert!(rows.windows(2).all(|w| w[0].value <= w[1].value));
    }

    #[test]
    fn oversized_n_returns_everything() {
        let rows = top_ranking(&aggs(), Metric::Decode, Resolution::Sd, 500).unwrap();
        assert_eq!(rows.len(), 10);
        assert!(matches!(top_ranking(&aggs(), Metric::Play, Resolution::Sd, 0), Err(ReportError::InvalidN)));
    }

    #[test]
    fn shuffled_input_gives_same_ranking() {
        let mut a = aggs();
        let sorted = top_ranking(&a, Metric::Play, Resolution::Fhd, 30).unwrap();
        a.reverse();
        a.swap(2, 7);
        assert_eq!(top_ranking(&a, Metric::Play, Resolution::Fhd, 30).unwrap(), sorted);
    }

    #[test]
    fn rating_has_twelve_cells() {
        let name = &fixtures::ten_model_names()[0];
        let r = model_rating(&aggs(), name).unwrap();
        assert_eq!(r.rows.len(), 4);
        assert_eq!(r.rows.iter().flat_map(|r| &r.cells).filter(|c| c.is_some()).count(), 12);
    }

    #[test]
    fn untested_cell_is_missing() {
        let name = fixtures::ten_model_names()[0].clone();
        let mut a = aggs();
        let m = a.iter_mut().find(|m| m.model == name).unwrap();
        m.cells.retain(|c| !(c.decoder.name == "c2.hw.vp9.decoder" && c.resolution == Resolution::Hd));
        let r = model_rating(&a, &name).unwrap();
        let vp9 = r.rows.iter().find(|r| r.decoder == "c2.hw.vp9.decoder").unwrap();
        assert!(vp9.cells[1].is_none());
        let csv = String::from_utf8(rating_csv(&r).unwrap()).unwrap();
        assert!(csv.contains("c2.hw.vp9.decoder,hardware,VP9,hd,,,,missing"));
    }

    #[test]
    fn misspelled_model_suggests() {
        let err = model_rating(&aggs(), "Aster5").unwrap_err();
        match err {
            ReportError::NotFound { suggestions, .. } => assert_eq!(suggestions[0], "Aster 5"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn scatter_ranges_cover_extremes() {
        let a = aggs();
        let name = &fixtures::ten_model_names()[1];
        let chart = power_speed_scatter(&a, name).unwrap();
        assert_eq!(chart.points.len(), 12);
        let xs: Vec<f64> = chart.points.iter().map(|p| p.speed).chain([chart.fps]).collect();
        let (lo, hi) = (xs.iter().cloned().fold(f64::INFINITY, f64::min), xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        let m = 0.05 * (hi - lo);
        assert!((chart.x_range.0 - (lo - m)).abs() < 1e-9);
        assert!((chart.x_range.1 - (hi + m)).abs() < 1e-9);
        let slow: Vec<_> = chart.points.iter().filter(|p| p.below_realtime).collect();
        assert!(!slow.is_empty());
        assert!(slow.iter().all(|p| p.speed < chart.fps));
    }

    #[test]
    fn empty_scatter_still_renders() {
        let mut a = aggs();
        a[0].cells.clear();
        let name = a[0].model.clone();
        let chart = power_speed_scatter(&a, &name).unwrap();
        assert!(chart.points.is_empty());
        let svg = scatter_svg(&chart);
        assert!(svg.contains("<line") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn chart_values_come_from_tables() {
        let a = aggs();
        let rows = top_ranking(&a, Metric::Play, Resolution::Sd, 30).unwrap();
        let csv = ranking_csv(&rows, Metric::Play).unwrap();
        let svg = ranking_svg(&rows, Metric::Play, Resolution::Sd);
        assert!(!svg_data_values(&svg).is_empty());
        assert!(values_missing_from_table(&svg, &csv).unwrap().is_empty());

        let name = &fixtures::ten_model_names()[4];
        let chart = power_speed_scatter(&a, name).unwrap();
        let svg = scatter_svg(&chart);
        assert!(values_missing_from_table(&svg, &scatter_csv(&chart).unwrap()).unwrap().is_empty());

        let r = model_rating(&a, name).unwrap();
        let svg = rating_svg(&r);
        assert!(values_missing_from_table(&svg, &rating_csv(&r).unwrap()).unwrap().is_empty());
    }

    #[test]
    fn formatting_is_fixed() {
        assert_eq!(fmt_value(1.0 / 3.0), "0.3333");
        assert_eq!(fmt_value(-0.00001), "0.0000");
        assert_eq!(fmt_value(f64::NAN), "");
    }
}
