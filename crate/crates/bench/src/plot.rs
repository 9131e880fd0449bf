//! Dependency-free SVG line charts of `records.csv`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{config, BenchError, Result};
use crate::records::Record;

/// Smallest value drawn on a log axis; zero losses are clamped up to it.
pub const LOG_FLOOR: f64 = 1e-16;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 160.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22",
    "#17becf",
];

/// Affine map between data space and the plot area, invertible so drawn
/// points can be checked against the data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub log_y: bool,
}

impl Frame {
    fn fit(points: impl Iterator<Item = (f64, f64)>, log_y: bool) -> Option<Self> {
        let mut frame: Option<Frame> = None;
        for (x, y) in points {
            let y = if log_y { y.log10() } else { y };
            let f = frame.get_or_insert(Frame {
                x_min: x,
                x_max: x,
                y_min: y,
                y_max: y,
                log_y,
            });
            f.x_min = f.x_min.min(x);
            f.x_max = f.x_max.max(x);
            f.y_min = f.y_min.min(y);
            f.y_max = f.y_max.max(y);
        }
        let mut f = frame?;
        if f.x_max == f.x_min {
            f.x_max = f.x_min + 1.0;
        }
        if f.y_max == f.y_min {
            f.y_min -= 0.5;
            f.y_max += 0.5;
        }
        if log_y {
            f.y_min = f.y_min.floor();
            f.y_max = f.y_max.ceil();
        }
        Some(f)
    }

    fn plot_w() -> f64 {
        WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    }

    fn plot_h() -> f64 {
        HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    }

    /// Data point to SVG pixel coordinates.
    pub fn to_px(&self, x: f64, y: f64) -> (f64, f64) {
        let y = if self.log_y { y.max(LOG_FLOOR).log10() } else { y };
        let px = MARGIN_LEFT + (x - self.x_min) / (self.x_max - self.x_min) * Self::plot_w();
        let py = MARGIN_TOP + (self.y_max - y) / (self.y_max - self.y_min) * Self::plot_h();
        (px, py)
    }

    /// Inverse of [`Frame::to_px`].
    pub fn from_px(&self, px: f64, py: f64) -> (f64, f64) {
        let x = self.x_min + (px - MARGIN_LEFT) / Self::plot_w() * (self.x_max - self.x_min);
        let y = self.y_max - (py - MARGIN_TOP) / Self::plot_h() * (self.y_max - self.y_min);
        (x, if self.log_y { 10f64.powf(y) } else { y })
    }

    fn attrs(&self) -> String {
        format!(
            "data-x-min=\"{}\" data-x-max=\"{}\" data-y-min=\"{}\" data-y-max=\"{}\" data-log-y=\"{}\"",
            self.x_min, self.x_max, self.y_min, self.y_max, self.log_y
        )
    }

    /// Reads the frame back from a chart written by [`Chart::to_svg`].
    pub fn from_svg(svg: &str) -> Option<Self> {
        let attr = |name: &str| -> Option<&str> {
            let key = format!("{name}=\"");
            let start = svg.find(&key)? + key.len();
            let len = svg[start..].find('"')?;
            Some(&svg[start..start + len])
        };
        Some(Frame {
            x_min: attr("data-x-min")?.parse().ok()?,
            x_max: attr("data-x-max")?.parse().ok()?,
            y_min: attr("data-y-min")?.parse().ok()?,
            y_max: attr("data-y-max")?.parse().ok()?,
            log_y: attr("data-log-y")?.parse().ok()?,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.1e}")
    } else {
        format!("{}", (v * 1000.0).round() / 1000.0)
    }
}

impl Chart {
    pub fn frame(&self) -> Option<Frame> {
        Frame::fit(self.series.iter().flat_map(|s| s.points.iter().copied()), self.log_y)
    }

    pub fn to_svg(&self) -> Result<String> {
        let frame = self
            .frame()
            .ok_or_else(|| config(format!("chart `{}` has no finite points", self.title)))?;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
        );
        let _ = writeln!(s, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>",
            MARGIN_LEFT + Frame::plot_w() / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(s, "<g class=\"plot\" {}>", frame.attrs());

        let (x0, y0) = (MARGIN_LEFT, MARGIN_TOP + Frame::plot_h());
        let _ = writeln!(
            s,
            "<rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
            Frame::plot_w(),
            Frame::plot_h()
        );
        for i in 0..=4 {
            let x = frame.x_min + (frame.x_max - frame.x_min) * f64::from(i) / 4.0;
            let (px, _) = frame.to_px(x, 1.0);
            let _ = writeln!(
                s,
                "<line x1=\"{px:.2}\" y1=\"{y0}\" x2=\"{px:.2}\" y2=\"{}\" stroke=\"black\"/><text x=\"{px:.2}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
                y0 + 5.0,
                y0 + 18.0,
                tick_label(x)
            );
        }
        let y_ticks: Vec<f64> = if frame.log_y {
            let (lo, hi) = (frame.y_min as i32, frame.y_max as i32);
            let every = ((hi - lo) / 8).max(1);
            (lo..=hi).filter(|e| (e - lo) % every == 0).map(|e| 10f64.powi(e)).collect()
        } else {
            (0..=4).map(|i| frame.y_min + (frame.y_max - frame.y_min) * f64::from(i) / 4.0).collect()
        };
        for y in y_ticks {
            let (_, py) = frame.to_px(frame.x_min, y);
            let _ = writeln!(
                s,
                "<line x1=\"{}\" y1=\"{py:.2}\" x2=\"{x0}\" y2=\"{py:.2}\" stroke=\"black\"/><text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
                x0 - 5.0,
                x0 - 8.0,
                py + 4.0,
                tick_label(y)
            );
        }
        let _ = writeln!(
            s,
            "<text class=\"x-label\" x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            MARGIN_LEFT + Frame::plot_w() / 2.0,
            HEIGHT - 15.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            "<text class=\"y-label\" x=\"20\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 20 {0})\">{1}</text>",
            MARGIN_TOP + Frame::plot_h() / 2.0,
            escape(&self.y_label)
        );

        for (i, series) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let pts: Vec<String> = series
                .points
                .iter()
                .map(|&(x, y)| {
                    let (px, py) = frame.to_px(x, y);
                    format!("{px:.4},{py:.4}")
                })
                .collect();
            let _ = writeln!(
                s,
                "<polyline data-run=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
                escape(&series.label),
                pts.join(" ")
            );
            let ly = MARGIN_TOP + 10.0 + 18.0 * i as f64;
            let lx = WIDTH - MARGIN_RIGHT + 10.0;
            let _ = writeln!(
                s,
                "<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/><text x=\"{}\" y=\"{}\">{}</text>",
                lx + 20.0,
                lx + 25.0,
                ly + 4.0,
                escape(&series.label)
            );
        }
        s.push_str("</g>\n</svg>\n");
        Ok(s)
    }
}

/// Points of every polyline in a chart, in pixel space, keyed by run id.
pub fn polylines(svg: &str) -> BTreeMap<String, Vec<(f64, f64)>> {
    let mut out = BTreeMap::new();
    for chunk in svg.split("<polyline").skip(1) {
        let attr = |name: &str| -> Option<&str> {
            let key = format!("{name}=\"");
            let start = chunk.find(&key)? + key.len();
            Some(&chunk[start..start + chunk[start..].find('"')?])
        };
        let (Some(run), Some(points)) = (attr("data-run"), attr("points")) else {
            continue;
        };
        let pts = points
            .split_whitespace()
            .filter_map(|p| {
                let (x, y) = p.split_once(',')?;
                Some((x.parse().ok()?, y.parse().ok()?))
            })
            .collect();
        out.insert(run.replace("&amp;", "&"), pts);
    }
    out
}

fn by_run(records: &[Record]) -> Vec<(&str, Vec<&Record>)> {
    let mut order: Vec<(&str, Vec<&Record>)> = Vec::new();
    for r in records {
        match order.iter_mut().find(|(id, _)| *id == r.run_id) {
            Some((_, rows)) => rows.push(r),
            None => order.push((&r.run_id, vec![r])),
        }
    }
    order
}

fn collect(
    runs: &[(&str, Vec<&Record>)],
    point: impl Fn(&Record) -> Option<(f64, f64)>,
) -> Vec<Series> {
    runs.iter()
        .map(|(id, rows)| Series {
            label: id.to_string(),
            points: rows
                .iter()
                .filter_map(|r| point(r))
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .collect(),
        })
        .filter(|s| !s.points.is_empty())
        .collect()
}

/// The charts that `records` has data for, keyed by file stem.
pub fn charts(records: &[Record]) -> Result<Vec<(&'static str, Chart)>> {
    if records.is_empty() {
        return Err(config("no records to plot"));
    }
    let runs = by_run(records);
    let chart = |title: &str, x: &str, y: &str, log_y, series| Chart {
        title: title.into(),
        x_label: x.into(),
        y_label: y.into(),
        log_y,
        series,
    };
    let mut out = Vec::new();
    let loss = collect(&runs, |r| Some((r.iter as f64, r.loss?.max(LOG_FLOOR))));
    if !loss.is_empty() {
        out.push(("loss", chart("Training loss", "iteration", "loss (log scale)", true, loss)));
    }
    let traj = collect(&runs, |r| Some((r.w1?, r.w2?)));
    if !traj.is_empty() {
        out.push(("trajectory", chart("Parameter trajectory", "w1", "w2", false, traj)));
    }
    let acc = collect(&runs, |r| Some((r.epoch as f64, r.accuracy?)));
    if !acc.is_empty() {
        out.push(("accuracy", chart("Test accuracy", "epoch", "accuracy (%)", false, acc)));
    }
    let miss = collect(&runs, |r| Some((r.iter as f64, r.cum_miss_rate?)));
    if !miss.is_empty() {
        out.push(("miss", chart("Cumulative miss rate", "iteration", "miss rate", false, miss)));
    }
    if out.is_empty() {
        return Err(config("records hold no plottable values"));
    }
    Ok(out)
}

/// Writes `<stem>.svg` for every chart and returns the paths.
pub fn write_plots(dir: &Path, records: &[Record]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(BenchError::io(dir))?;
    charts(records)?
        .into_iter()
        .map(|(stem, chart)| {
            let path = dir.join(format!("{stem}.svg"));
            std::fs::write(&path, chart.to_svg()?).map_err(BenchError::io(&path))?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, iter: u64, loss: f64, w: (f64, f64)) -> Record {
        Record {
            run_id: id.into(),
            iter,
            loss: Some(loss),
            w1: Some(w.0),
            w2: Some(w.1),
            ..Record::default()
        }
    }

    #[test]
    fn frame_round_trips() {
        for log_y in [false, true] {
            let f = Frame::fit([(0.0, 1e-3), (10.0, 5.0)].into_iter(), log_y).unwrap();
            let (px, py) = f.to_px(3.0, 0.25);
            let (x, y) = f.from_px(px, py);
            assert!((x - 3.0).abs() < 1e-12 && (y - 0.25).abs() < 1e-12, "{x} {y}");
        }
    }

    #[test]
    fn one_polyline_per_run_and_frame_recoverable() {
        let records = vec![
            rec("a", 0, 1.0, (1.0, 2.0)),
            rec("a", 1, 0.0, (0.5, -1.0)),
            rec("b", 0, 2.0, (3.0, 0.0)),
        ];
        let charts = charts(&records).unwrap();
        let names: Vec<_> = charts.iter().map(|(n, _)| *n).collect();
        assert_eq!(names, ["loss", "trajectory"]);
        let svg = charts[1].1.to_svg().unwrap();
        let lines = polylines(&svg);
        assert_eq!(lines.len(), 2);
        let frame = Frame::from_svg(&svg).unwrap();
        let &(px, py) = lines["a"].last().unwrap();
        let (x, y) = frame.from_px(px, py);
        assert!((x - 0.5).abs() < 1e-3 && (y + 1.0).abs() < 1e-3);
        assert!(svg.contains(">w1<") && svg.contains(">w2<"));
    }

    #[test]
    fn zero_loss_hits_log_floor() {
        let records = vec![rec("a", 0, 1.0, (0.0, 0.0)), rec("a", 1, 0.0, (0.0, 0.0))];
        let (_, loss) = &charts(&records).unwrap()[0];
        assert_eq!(loss.series[0].points[1].1, LOG_FLOOR);
        assert_eq!(loss.frame().unwrap().y_min, -16.0);
    }

    #[test]
    fn empty_records_error() {
        assert!(charts(&[]).is_err());
    }
}
