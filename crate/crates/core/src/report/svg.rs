use std::fmt::Write;

use super::{fmt_value, rating_status, ModelRating, RankingRow, ScatterChart};
use crate::pipeline::Metric;
use crate::types::Resolution;

const FONT: &str = "font-family=\"sans-serif\" font-size=\"11\"";
const RES_COLORS: [&str; 3] = ["#4e79a7", "#f28e2b", "#59a14f"];

pub(crate) fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

pub(crate) fn unescape(s: &str) -> String {
    s.replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&apos;", "'")
        .replace("&amp;", "&")
}

fn header(out: &mut String, width: f64, height: f64, title: &str) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">"
    );
    let _ = writeln!(out, "<rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"18\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">{}</text>",
        width / 2.0,
        escape(title)
    );
}

fn footer(out: &mut String) {
    out.push_str("</svg>\n");
}

/// Linear map from data range to pixel range.
#[derive(Clone, Copy)]
struct Scale {
    d0: f64,
    d1: f64,
    p0: f64,
    p1: f64,
}

impl Scale {
    fn at(self, v: f64) -> f64 {
        if self.d1 == self.d0 {
            return (self.p0 + self.p1) / 2.0;
        }
        self.p0 + (v - self.d0) / (self.d1 - self.d0) * (self.p1 - self.p0)
    }
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    (0..=4).map(|i| lo + (hi - lo) * i as f64 / 4.0).collect()
}

fn x_axis(out: &mut String, x: Scale, y_px: f64, label: &str) {
    let _ = writeln!(
        out,
        "<line x1=\"{:.2}\" y1=\"{y_px:.2}\" x2=\"{:.2}\" y2=\"{y_px:.2}\" stroke=\"black\"/>",
        x.p0, x.p1
    );
    for t in ticks(x.d0, x.d1) {
        let px = x.at(t);
        let _ = writeln!(
            out,
            "<text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\" {FONT}>{t:.1}</text>",
            y_px + 14.0
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" {FONT}>{}</text>",
        (x.p0 + x.p1) / 2.0,
        y_px + 30.0,
        escape(label)
    );
}

fn y_axis(out: &mut String, y: Scale, x_px: f64, label: &str) {
    let _ = writeln!(
        out,
        "<line x1=\"{x_px:.2}\" y1=\"{:.2}\" x2=\"{x_px:.2}\" y2=\"{:.2}\" stroke=\"black\"/>",
        y.p0, y.p1
    );
    for t in ticks(y.d0, y.d1) {
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" {FONT}>{t:.1}</text>",
            x_px - 4.0,
            y.at(t) + 4.0
        );
    }
    let _ = writeln!(
        out,
        "<text transform=\"translate({:.2},{:.2}) rotate(-90)\" text-anchor=\"middle\" {FONT}>{}</text>",
        x_px - 44.0,
        (y.p0 + y.p1) / 2.0,
        escape(label)
    );
}

/// Horizontal bars, best first, with standard-deviation error bars.
pub fn ranking_svg(rows: &[RankingRow], metric: Metric, resolution: Resolution) -> String {
    let row_h = 18.0;
    let left = 330.0;
    let plot_w = 460.0;
    let top = 34.0;
    let height = top + row_h * rows.len().max(1) as f64 + 50.0;
    let width = left + plot_w + 40.0;
    let max = rows
        .iter()
        .map(|r| r.value + if r.count > 1 { r.std_dev } else { 0.0 })
        .fold(0.0_f64, f64::max);
    let x = Scale {
        d0: 0.0,
        d1: if max > 0.0 { max * 1.05 } else { 1.0 },
        p0: left,
        p1: left + plot_w,
    };
    let mut out = String::new();
    header(
        &mut out,
        width,
        height,
        &format!("Top {} decoders at {} by {}", rows.len(), resolution.as_str().to_uppercase(), metric.as_str()),
    );
    for (i, r) in rows.iter().enumerate() {
        let y0 = top + row_h * i as f64;
        let cy = y0 + row_h / 2.0;
        let value = fmt_value(r.value);
        let sd = fmt_value(r.std_dev);
        let _ = writeln!(
            out,
            "<g data-rank=\"{}\" data-model=\"{}\" data-decoder=\"{}\">",
            r.rank,
            escape(&r.model),
            escape(&r.decoder)
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" {FONT}>{}. {} / {}</text>",
            left - 6.0,
            cy + 4.0,
            r.rank,
            escape(&r.model),
            escape(&r.decoder)
        );
        let _ = writeln!(
            out,
            "<rect x=\"{left:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\" data-value=\"{value}\"/>",
            y0 + 2.0,
            (x.at(r.value) - left).max(0.0),
            row_h - 4.0,
            RES_COLORS[0]
        );
        if r.count > 1 {
            let _ = writeln!(
                out,
                "<line x1=\"{:.2}\" y1=\"{cy:.2}\" x2=\"{:.2}\" y2=\"{cy:.2}\" stroke=\"black\" data-std-dev=\"{sd}\"/>",
                x.at(r.value - r.std_dev),
                x.at(r.value + r.std_dev)
            );
        }
        out.push_str("</g>\n");
    }
    let axis_y = top + row_h * rows.len().max(1) as f64 + 4.0;
    x_axis(&mut out, x, axis_y, &format!("{} ({})", metric.as_str(), metric.unit()));
    footer(&mut out);
    out
}

/// Grouped bars: one group per decoder, one bar per resolution.
pub fn rating_svg(rating: &ModelRating) -> String {
    let group_w = 54.0;
    let left = 70.0;
    let top = 34.0;
    let plot_h = 260.0;
    let width = left + group_w * rating.rows.len().max(1) as f64 + 30.0;
    let height = top + plot_h + 150.0;
    let max = rating
        .rows
        .iter()
        .flat_map(|r| r.cells.iter().flatten())
        .map(|c| c.play)
        .fold(0.0_f64, f64::max);
    let y = Scale {
        d0: 0.0,
        d1: if max > 0.0 { max * 1.05 } else { 1.0 },
        p0: top + plot_h,
        p1: top,
    };
    let mut out = String::new();
    header(&mut out, width, height, &format!("Decoders of {}", rating.model));
    y_axis(&mut out, y, left, "play (%/h)");
    let bar_w = (group_w - 6.0) / 3.0;
    for (g, r) in rating.rows.iter().enumerate() {
        let gx = left + 3.0 + group_w * g as f64;
        let _ = writeln!(out, "<g data-decoder=\"{}\">", escape(&r.decoder));
        for (i, res) in Resolution::ALL.iter().enumerate() {
            let bx = gx + bar_w * i as f64;
            let status = rating_status(r.cells[i].as_ref());
            match &r.cells[i] {
                Some(c) => {
                    let v = fmt_value(c.play);
                    let _ = writeln!(
                        out,
                        "<rect x=\"{bx:.2}\" y=\"{:.2}\" width=\"{bar_w:.2}\" height=\"{:.2}\" fill=\"{}\"{} data-resolution=\"{res}\" data-value=\"{v}\" data-status=\"{status}\"/>",
                        y.at(c.play),
                        y.p0 - y.at(c.play),
                        RES_COLORS[i],
                        if c.non_realtime { " fill-opacity=\"0.4\"" } else { "" }
                    );
                }
                None => {
                    let _ = writeln!(
                        out,
                        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" {FONT} data-resolution=\"{res}\" data-status=\"{status}\">&#215;</text>",
                        bx + bar_w / 2.0,
                        y.p0 - 4.0
                    );
                }
            }
        }
        let _ = writeln!(
            out,
            "<text transform=\"translate({:.2},{:.2}) rotate(60)\" {FONT}>{}</text>",
            gx + group_w / 2.0 - 6.0,
            y.p0 + 8.0,
            escape(&r.decoder)
        );
        out.push_str("</g>\n");
    }
    footer(&mut out);
    out
}

/// Playback consumption versus decode speed with a frame-rate reference line.
pub fn scatter_svg(chart: &ScatterChart) -> String {
    let (width, height) = (640.0, 440.0);
    let (left, right, top, bottom) = (70.0, 20.0, 34.0, 50.0);
    let x = Scale {
        d0: chart.x_range.0,
        d1: chart.x_range.1,
        p0: left,
        p1: width - right,
    };
    let y = Scale {
        d0: chart.y_range.0,
        d1: chart.y_range.1,
        p0: height - bottom,
        p1: top,
    };
    let mut out = String::new();
    header(&mut out, width, height, &format!("Playback consumption vs decode speed, {}", chart.model));
    x_axis(&mut out, x, y.p0, "decode speed (fps)");
    y_axis(&mut out, y, left, "play (%/h)");
    let fx = x.at(chart.fps);
    let _ = writeln!(
        out,
        "<line x1=\"{fx:.2}\" y1=\"{:.2}\" x2=\"{fx:.2}\" y2=\"{:.2}\" stroke=\"gray\" stroke-dasharray=\"4 3\" data-fps=\"{}\"/>",
        y.p0,
        y.p1,
        fmt_value(chart.fps)
    );
    for p in &chart.points {
        let (cx, cy) = (x.at(p.speed), y.at(p.play));
        let r = match p.resolution {
            Resolution::Sd => 4.0,
            Resolution::Hd => 6.5,
            Resolution::Fhd => 9.0,
        };
        let letter: String = p.vendor.chars().next().map(|c| c.to_uppercase().collect()).unwrap_or_default();
        let _ = writeln!(
            out,
            "<g data-decoder=\"{}\" data-resolution=\"{}\" data-below-realtime=\"{}\">",
            escape(&p.decoder),
            p.resolution,
            if p.below_realtime { "yes" } else { "no" }
        );
        let _ = writeln!(
            out,
            "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"{r}\" fill=\"{}\" fill-opacity=\"0.6\" stroke=\"{}\" data-speed=\"{}\" data-play=\"{}\"/>",
            RES_COLORS[Resolution::ALL.iter().position(|&q| q == p.resolution).unwrap_or(0)],
            if p.below_realtime { "red" } else { "black" },
            fmt_value(p.speed),
            fmt_value(p.play)
        );
        let _ = writeln!(
            out,
            "<text x=\"{cx:.2}\" y=\"{:.2}\" text-anchor=\"middle\" {FONT}>{}</text>",
            cy + 4.0,
            escape(&letter)
        );
        out.push_str("</g>\n");
    }
    footer(&mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn escaping_round_trips() {
        let s = "a<b> & \"c\" 'd'";
        assert_eq!(unescape(&escape(s)), s);
    }

    #[test]
    fn scale_maps_ends() {
        let s = Scale { d0: 0.0, d1: 10.0, p0: 100.0, p1: 200.0 };
        assert_eq!(s.at(0.0), 100.0);
        assert_eq!(s.at(10.0), 200.0);
    }
}
