// SPDX-License-Identifier: Apache-2.0

//! CSV and SVG report files. Output is a pure function of the inputs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sentinel_core::metrics::{pr_csv, roc_csv, PrPoint, RocPoint};
use sentinel_core::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Data-to-pixel mapping for one plot area.
#[derive(Debug, Clone, Copy)]
pub struct Frame {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl Frame {
    /// Bounds covering `points`, padded so single values still get a range.
    pub fn fit(points: impl IntoIterator<Item = (f64, f64)>) -> Frame {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (x, y) in points {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        let widen = |lo: f64, hi: f64| {
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                let pad = 0.05 * (hi - lo);
                (lo - pad, hi + pad)
            }
        };
        Frame { x: widen(x0, x1), y: widen(y0, y1) }
    }

    pub fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let px = MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN);
        let py = HEIGHT - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN);
        (px, py)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open(title: &str, x_label: &str, y_label: &str, frame: &Frame) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="30" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, escape(title));
    let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(s, r#"<path d="M{l} {t} L{l} {b} L{r} {b}" fill="none" stroke="black"/>"#);
    for i in 0..=4 {
        let f = f64::from(i) / 4.0;
        let xv = frame.x.0 + f * (frame.x.1 - frame.x.0);
        let yv = frame.y.0 + f * (frame.y.1 - frame.y.0);
        let (px, _) = frame.map(xv, frame.y.0);
        let (_, py) = frame.map(frame.x.0, yv);
        let _ = writeln!(s, r#"<text x="{px:.3}" y="{:.3}" text-anchor="middle">{}</text>"#, b + 16.0, tick(xv));
        let _ = writeln!(s, r#"<text x="{:.3}" y="{:.3}" text-anchor="end">{}</text>"#, l - 6.0, py + 4.0, tick(yv));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 20.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        HEIGHT / 2.0,
        escape(y_label)
    );
    s
}

fn tick(v: f64) -> String {
    if v.abs() >= 1000.0 || (v != 0.0 && v.abs() < 0.01) {
        format!("{v:.1e}")
    } else {
        format!("{v:.2}")
    }
}

fn legend(s: &mut String, names: &[&str]) {
    for (i, name) in names.iter().enumerate() {
        let y = MARGIN + 16.0 * i as f64;
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(s, r#"<rect x="{}" y="{}" width="10" height="10" fill="{color}"/>"#, WIDTH - MARGIN - 110.0, y - 9.0);
        let _ = writeln!(s, r#"<text x="{}" y="{y}">{}</text>"#, WIDTH - MARGIN - 95.0, escape(name));
    }
}

/// Polyline chart; `frame` defaults to the data bounds.
pub fn line_svg(title: &str, x_label: &str, y_label: &str, series: &[(&str, Vec<(f64, f64)>)], frame: Option<Frame>) -> String {
    let frame = frame.unwrap_or_else(|| Frame::fit(series.iter().flat_map(|(_, p)| p.iter().copied())));
    let mut s = open(title, x_label, y_label, &frame);
    for (i, (_, pts)) in series.iter().enumerate() {
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| {
                let (px, py) = frame.map(x, y);
                format!("{px:.3},{py:.3}")
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
            coords.join(" "),
            PALETTE[i % PALETTE.len()]
        );
    }
    if series.len() > 1 {
        legend(&mut s, &series.iter().map(|(n, _)| *n).collect::<Vec<_>>());
    }
    s.push_str("</svg>\n");
    s
}

pub fn scatter_svg(title: &str, x_label: &str, y_label: &str, groups: &[(&str, Vec<(f64, f64)>)]) -> String {
    let frame = Frame::fit(groups.iter().flat_map(|(_, p)| p.iter().copied()));
    let mut s = open(title, x_label, y_label, &frame);
    for (i, (_, pts)) in groups.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        for &(x, y) in pts {
            let (px, py) = frame.map(x, y);
            let _ = writeln!(s, r#"<circle cx="{px:.3}" cy="{py:.3}" r="2.5" fill="{color}" fill-opacity="0.7"/>"#);
        }
    }
    legend(&mut s, &groups.iter().map(|(n, _)| *n).collect::<Vec<_>>());
    s.push_str("</svg>\n");
    s
}

/// Vertical bars, one per `(label, value)`, in the given order.
pub fn bar_svg(title: &str, x_label: &str, y_label: &str, bars: &[(String, f64)]) -> String {
    let top = bars.iter().map(|b| b.1).fold(0.0, f64::max);
    let frame = Frame { x: (0.0, bars.len().max(1) as f64), y: (0.0, if top > 0.0 { top * 1.05 } else { 1.0 }) };
    let mut s = open(title, x_label, y_label, &frame);
    for (i, (label, v)) in bars.iter().enumerate() {
        let (x0, y0) = frame.map(i as f64 + 0.1, *v);
        let (x1, base) = frame.map(i as f64 + 0.9, 0.0);
        let _ = writeln!(
            s,
            r#"<rect x="{x0:.3}" y="{y0:.3}" width="{:.3}" height="{:.3}" fill="{}"><title>{}</title></rect>"#,
            x1 - x0,
            base - y0,
            PALETTE[0],
            escape(label)
        );
        let cx = (x0 + x1) / 2.0;
        let _ = writeln!(
            s,
            r#"<text x="{cx:.3}" y="{0:.3}" font-size="9" text-anchor="end" transform="rotate(-60 {cx:.3} {0:.3})">{1}</text>"#,
            base + 4.0,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn write(path: &Path, contents: &str) -> Result<PathBuf> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

pub fn importance_csv(importance: &[(String, f64)]) -> String {
    let mut s = String::from("feature,importance\n");
    for (name, v) in importance {
        let _ = writeln!(s, "{name},{v}");
    }
    s
}

/// Unit-square frame with a little breathing room, shared by ROC and PR plots.
fn unit_frame() -> Frame {
    Frame { x: (0.0, 1.0), y: (0.0, 1.0) }
}

pub fn roc_svg(points: &[RocPoint], auc: Option<f64>) -> String {
    let title = match auc {
        Some(a) => format!("ROC curve (AUC = {a:.4})"),
        None => "ROC curve".to_string(),
    };
    let pts = points.iter().map(|p| (p.fpr, p.tpr)).collect();
    line_svg(&title, "False positive rate", "True positive rate (recall)", &[("model", pts), ("chance", vec![(0.0, 0.0), (1.0, 1.0)])], Some(unit_frame()))
}

pub fn pr_svg(points: &[PrPoint]) -> String {
    let pts = points.iter().map(|p| (p.recall, p.precision)).collect();
    line_svg("Precision vs recall", "Recall", "Precision", &[("model", pts)], Some(unit_frame()))
}

/// Scores sweep: precision and recall against the decision threshold.
pub fn threshold_svg(points: &[PrPoint]) -> String {
    let finite: Vec<&PrPoint> = points.iter().filter(|p| p.threshold.is_finite()).collect();
    let precision = finite.iter().map(|p| (p.threshold, p.precision)).collect();
    let recall = finite.iter().map(|p| (p.threshold, p.recall)).collect();
    line_svg("Precision and recall by threshold", "Threshold", "Rate", &[("precision", precision), ("recall", recall)], None)
}

pub fn importance_svg(importance: &[(String, f64)]) -> String {
    bar_svg("Feature importance (gain share)", "Feature", "Share of total gain", importance)
}

/// Writes `roc.csv`, `roc.svg`, `pr.csv`, `pr.svg`, `threshold.svg`.
pub fn emit_curves(out: &Path, roc: &[RocPoint], pr: &[PrPoint], auc: Option<f64>) -> Result<Vec<PathBuf>> {
    Ok(vec![
        write(&out.join("roc.csv"), &roc_csv(roc))?,
        write(&out.join("roc.svg"), &roc_svg(roc, auc))?,
        write(&out.join("pr.csv"), &pr_csv(pr))?,
        write(&out.join("pr.svg"), &pr_svg(pr))?,
        write(&out.join("threshold.svg"), &threshold_svg(pr))?,
    ])
}

/// Writes `importance.csv` and `importance.svg`, largest share first.
pub fn emit_importance(out: &Path, importance: &[(String, f64)]) -> Result<Vec<PathBuf>> {
    Ok(vec![
        write(&out.join("importance.csv"), &importance_csv(importance))?,
        write(&out.join("importance.svg"), &importance_svg(importance))?,
    ])
}

/// Scatter of the first two projected coordinates, split by label.
pub fn projection_svg(points: &[(Option<bool>, Vec<f64>)], title: &str) -> String {
    let mut groups: Vec<(&str, Vec<(f64, f64)>)> = vec![("benign", vec![]), ("malicious", vec![]), ("unlabeled", vec![])];
    for (label, c) in points {
        let xy = (c.first().copied().unwrap_or(0.0), c.get(1).copied().unwrap_or(0.0));
        let g = match label {
            Some(false) => 0,
            Some(true) => 1,
            None => 2,
        };
        groups[g].1.push(xy);
    }
    groups.retain(|g| !g.1.is_empty());
    scatter_svg(title, "Component 1", "Component 2", &groups)
}

/// Parses a CSV with a header into (header, rows of numbers). Empty cells
/// become NaN.
pub fn read_numeric_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Schema(format!("{} is empty", path.display())))?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let row = line
            .split(',')
            .map(|c| if c.is_empty() { Ok(f64::NAN) } else { c.parse::<f64>() })
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::Schema(format!("{} line {}: {e}", path.display(), i + 2)))?;
        if row.len() != header.len() {
            return Err(Error::Schema(format!("{} line {}: expected {} columns", path.display(), i + 2, header.len())));
        }
        rows.push(row);
    }
    Ok((header, rows))
}
