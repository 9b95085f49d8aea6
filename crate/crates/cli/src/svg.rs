//! Minimal SVG writers for curves and box trajectories.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Result};

use boxreg::BBox;

use crate::table::Table;

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 50.0;
const PALETTE: [&str; 11] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
    "#000000",
];

/// Which table columns to draw against `step`, and where.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotSpec {
    pub series: Vec<String>,
    pub x_label: String,
    pub y_label: String,
    /// Inclusive step range.
    pub steps: (usize, usize),
    pub path: PathBuf,
}

impl PlotSpec {
    /// All steps of `series` from a table with `n_rows` rows.
    pub fn full(series: Vec<String>, y_label: &str, n_rows: usize, path: PathBuf) -> Self {
        PlotSpec {
            series,
            x_label: "step".into(),
            y_label: y_label.into(),
            steps: (0, n_rows.saturating_sub(1)),
            path,
        }
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Line chart of the requested columns. Non-finite points are skipped.
pub fn line_chart(spec: &PlotSpec, table: &Table) -> Result<String> {
    let (lo, hi) = spec.steps;
    if lo >= hi || hi >= table.rows.len() {
        bail!("step range {lo}..={hi} outside table of {} rows", table.rows.len());
    }
    let mut curves = Vec::with_capacity(spec.series.len());
    for name in &spec.series {
        match table.column(name) {
            Some(c) => curves.push(c[lo..=hi].to_vec()),
            None => bail!("series {name:?} is not a numeric column"),
        }
    }
    let finite = curves.iter().flatten().copied().filter(|v| v.is_finite());
    let (mut y0, mut y1) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !y0.is_finite() {
        (y0, y1) = (0.0, 1.0);
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let px = |i: usize| MARGIN + (W - 2.0 * MARGIN) * i as f64 / (hi - lo) as f64;
    let py = |v: f64| H - MARGIN - (H - 2.0 * MARGIN) * (v - y0) / (y1 - y0);

    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#).unwrap();
    writeln!(
        s,
        r#"<path d="M{m} {m} V{b} H{r}" fill="none" stroke="black"/>"#,
        m = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN
    )
    .unwrap();
    for (v, y) in [(y0, H - MARGIN), (y1, MARGIN)] {
        writeln!(s, r#"<text x="{}" y="{y}" font-size="10" text-anchor="end">{v:.4}</text>"#, MARGIN - 4.0).unwrap();
    }
    for (i, x) in [(lo, MARGIN), (hi, W - MARGIN)] {
        writeln!(s, r#"<text x="{x}" y="{}" font-size="10" text-anchor="middle">{i}</text>"#, H - MARGIN + 14.0).unwrap();
    }
    writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{}</text>"#,
        W / 2.0,
        H - 10.0,
        esc(&spec.x_label)
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="14" y="{}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        esc(&spec.y_label)
    )
    .unwrap();
    for (k, (name, ys)) in spec.series.iter().zip(&curves).enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = ys
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .map(|(i, &v)| format!("{:.2},{:.2}", px(i), py(v)))
            .collect();
        writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" ")).unwrap();
        writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="10" fill="{color}">{}</text>"#,
            W - MARGIN + 4.0 - 120.0,
            MARGIN + 12.0 * k as f64,
            esc(name)
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// One rectangle per visited box plus the target: black for the start,
/// blue in between, green for the last box and red for the target.
pub fn box_trajectory(boxes: &[BBox], gt: &BBox, title: &str) -> String {
    let all = boxes.iter().chain(std::iter::once(gt));
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for b in all {
        let c = b.corners();
        x0 = x0.min(c.x1);
        y0 = y0.min(c.y1);
        x1 = x1.max(c.x2);
        y1 = y1.max(c.y2);
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-9);
    let side = W - 2.0 * MARGIN;
    let k = side / span;
    let rect = |b: &BBox, color: &str, width: f64, opacity: f64| {
        let c = b.corners();
        format!(
            r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="none" stroke="{color}" stroke-width="{width}" stroke-opacity="{opacity}"/>"#,
            MARGIN + (c.x1 - x0) * k,
            MARGIN + (y1 - c.y2) * k,
            (c.x2 - c.x1) * k,
            (c.y2 - c.y1) * k
        )
    };

    let size = W;
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#).unwrap();
    writeln!(s, r#"<text x="{MARGIN}" y="20" font-size="14">{}</text>"#, esc(title)).unwrap();
    let n = boxes.len();
    for (i, b) in boxes.iter().enumerate() {
        let line = if i == 0 {
            rect(b, "black", 2.0, 1.0)
        } else if i + 1 == n {
            rect(b, "green", 2.0, 1.0)
        } else {
            rect(b, "blue", 0.5, 0.35)
        };
        s.push_str(&line);
        s.push('\n');
    }
    s.push_str(&rect(gt, "red", 2.0, 1.0));
    s.push_str("\n</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_checks_series() {
        let mut t = Table::new(&["a", "b"]);
        for i in 0..5 {
            t.push(vec![(i as f64).into(), (2.0 * i as f64).into()]);
        }
        let spec = PlotSpec::full(vec!["a".into(), "b".into()], "loss", 5, "x.svg".into());
        let svg = line_chart(&spec, &t).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        let bad = PlotSpec::full(vec!["c".into()], "loss", 5, "x.svg".into());
        assert!(line_chart(&bad, &t).is_err());
        let range = PlotSpec {
            steps: (0, 9),
            ..spec
        };
        assert!(line_chart(&range, &t).is_err());
    }

    #[test]
    fn trajectory_colors() {
        let b = |cx| BBox::new(cx, 0.5, 0.1, 0.1).unwrap();
        let svg = box_trajectory(&[b(0.1), b(0.2), b(0.3), b(0.4)], &b(0.5), "t");
        assert_eq!(svg.matches("<rect").count(), 5);
        assert_eq!(svg.matches("stroke=\"black\"").count(), 1);
        assert_eq!(svg.matches("stroke=\"blue\"").count(), 2);
        assert_eq!(svg.matches("stroke=\"green\"").count(), 1);
        assert_eq!(svg.matches("stroke=\"red\"").count(), 1);
    }
}
