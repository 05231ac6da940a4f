//! Bare-bones SVG line charts rendered from result tables.

use std::fmt::Write as _;

use super::Table;
use crate::error::{Error, Result};

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD_L: f64 = 70.0;
const PAD_R: f64 = 160.0;
const PAD_T: f64 = 30.0;
const PAD_B: f64 = 50.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Render a chart; non-finite points (and non-positive ones on a log axis)
/// are skipped.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series], log_y: bool) -> String {
    let ty = |y: f64| if log_y { y.log10() } else { y };
    let keep = |&(x, y): &(f64, f64)| x.is_finite() && y.is_finite() && (!log_y || y > 0.0);
    let pts: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied().filter(keep)).collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(ty(y));
        y1 = y1.max(ty(y));
    }
    if pts.is_empty() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-300 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-300 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| PAD_L + (x - x0) / (x1 - x0) * (W - PAD_L - PAD_R);
    let sy = |y: f64| H - PAD_B - (ty(y) - y0) / (y1 - y0) * (H - PAD_T - PAD_B);

    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let (bx, by, bw, bh) = (PAD_L, PAD_T, W - PAD_L - PAD_R, H - PAD_T - PAD_B);
    let _ = writeln!(out, r#"<rect x="{bx}" y="{by}" width="{bw}" height="{bh}" fill="none" stroke="black"/>"#);
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let ylab = if log_y { format!("1e{yv:.1}") } else { format!("{yv:.3e}") };
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{xv:.3}</text>"#, sx(xv), H - PAD_B + 16.0);
        let py = H - PAD_B - f * bh;
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{ylab}</text>"#, PAD_L - 4.0, py + 4.0);
    }
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, PAD_L + bw / 2.0, H - 10.0, escape(x_label));
    let _ = writeln!(
        out,
        r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>"#,
        PAD_T + bh / 2.0,
        PAD_T + bh / 2.0,
        escape(y_label)
    );
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = s.points.iter().copied().filter(keep).map(|(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        if !path.is_empty() {
            let _ = writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        }
        let ly = PAD_T + 14.0 + 16.0 * i as f64;
        let lx = W - PAD_R + 10.0;
        let _ = writeln!(out, r#"<line x1="{lx}" y1="{:.1}" x2="{}" y2="{:.1}" stroke="{color}" stroke-width="2"/>"#, ly - 4.0, lx + 18.0, ly - 4.0);
        let _ = writeln!(out, r#"<text x="{}" y="{ly:.1}">{}</text>"#, lx + 22.0, escape(&s.label));
    }
    out.push_str("</svg>\n");
    out
}

/// One series per `(group values, y column)` with `x` on the horizontal axis.
pub fn series_from_table(table: &Table, x: &str, ys: &[&str], group_by: &[&str]) -> Result<Vec<Series>> {
    let col = |name: &str| {
        table
            .column_index(name)
            .ok_or_else(|| Error::Config(format!("table has no column '{name}'")))
    };
    let xi = col(x)?;
    let yi: Vec<usize> = ys.iter().map(|y| col(y)).collect::<Result<_>>()?;
    let gi: Vec<usize> = group_by.iter().map(|g| col(g)).collect::<Result<_>>()?;
    let mut out: Vec<Series> = Vec::new();
    for row in &table.rows {
        let group: Vec<String> = gi.iter().zip(group_by).map(|(&i, g)| format!("{g}={}", row[i])).collect();
        for (&y, name) in yi.iter().zip(ys) {
            let mut parts = group.clone();
            if ys.len() > 1 {
                parts.insert(0, name.to_string());
            }
            let label = if parts.is_empty() { name.to_string() } else { parts.join(" ") };
            match out.iter_mut().find(|s| s.label == label) {
                Some(s) => s.points.push((row[xi], row[y])),
                None => out.push(Series { label, points: vec![(row[xi], row[y])] }),
            }
        }
    }
    Ok(out)
}
