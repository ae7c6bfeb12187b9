//! CSV tables and SVG heatmaps. Plain text output, no plotting library.

use std::fmt::Write;

use mrcp_core::pipeline::{PairwiseRow, SweepPoint};
use mrcp_core::Matrix;

pub fn matrix_csv(m: &Matrix, names: &[String]) -> String {
    let mut out = String::from("class");
    for n in names {
        write!(out, ",{}", csv_field(n)).unwrap();
    }
    out.push('\n');
    for (r, n) in names.iter().enumerate() {
        out.push_str(&csv_field(n));
        for v in m.row(r) {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn pairwise_csv(rows: &[PairwiseRow]) -> String {
    let mut out = String::from("class_a,class_b,binary_accuracy,multiclass_accuracy\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            csv_field(&r.class_a),
            csv_field(&r.class_b),
            r.binary_accuracy,
            r.multiclass_accuracy
        )
        .unwrap();
    }
    out
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("p,mean_accuracy,std_accuracy\n");
    for pt in points {
        writeln!(out, "{},{},{}", pt.p, pt.mean_accuracy, pt.std_accuracy).unwrap();
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Scale {
    /// White to dark blue over [0, 1].
    Unit,
    /// Blue through white to red over [−1, 1].
    Signed,
}

impl Scale {
    fn color(self, v: f64) -> (u8, u8, u8) {
        let lerp = |a: f64, b: f64, t: f64| (a + (b - a) * t).round() as u8;
        match self {
            Scale::Unit => {
                let t = v.clamp(0.0, 1.0);
                (
                    lerp(255.0, 8.0, t),
                    lerp(255.0, 48.0, t),
                    lerp(255.0, 107.0, t),
                )
            }
            Scale::Signed => {
                let t = v.clamp(-1.0, 1.0);
                if t >= 0.0 {
                    (
                        lerp(255.0, 178.0, t),
                        lerp(255.0, 24.0, t),
                        lerp(255.0, 43.0, t),
                    )
                } else {
                    (
                        lerp(255.0, 33.0, -t),
                        lerp(255.0, 102.0, -t),
                        lerp(255.0, 172.0, -t),
                    )
                }
            }
        }
    }

    fn range(self) -> (f64, f64) {
        match self {
            Scale::Unit => (0.0, 1.0),
            Scale::Signed => (-1.0, 1.0),
        }
    }
}

const CELL: usize = 48;
const MARGIN: usize = 110;

/// Annotated square heatmap with row and column labels and a colour bar.
pub fn heatmap_svg(m: &Matrix, names: &[String], title: &str, scale: Scale) -> String {
    let n = names.len();
    let grid = n * CELL;
    let width = MARGIN + grid + 90;
    let height = MARGIN + grid + 20;
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="20" font-size="14" text-anchor="middle">{}</text>"#,
        MARGIN + grid / 2,
        escape(title)
    )
    .unwrap();
    for (i, name) in names.iter().enumerate() {
        let c = MARGIN + i * CELL + CELL / 2;
        writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            MARGIN - 6,
            c + 4,
            escape(name)
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{c}" y="{}" text-anchor="start" transform="rotate(-45 {c} {})">{}</text>"#,
            MARGIN - 6,
            MARGIN - 6,
            escape(name)
        )
        .unwrap();
    }
    for r in 0..n {
        for c in 0..n {
            let v = m[(r, c)];
            let (red, green, blue) = scale.color(v);
            let (x, y) = (MARGIN + c * CELL, MARGIN + r * CELL);
            writeln!(
                s,
                r##"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="rgb({red},{green},{blue})" stroke="#ffffff"/>"##
            )
            .unwrap();
            let ink = if luminance(red, green, blue) < 0.5 {
                "#ffffff"
            } else {
                "#000000"
            };
            writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle" fill="{ink}">{v:.2}</text>"#,
                x + CELL / 2,
                y + CELL / 2 + 4
            )
            .unwrap();
        }
    }
    colour_bar(&mut s, MARGIN + grid + 20, MARGIN, grid, scale);
    s.push_str("</svg>\n");
    s
}

fn colour_bar(s: &mut String, x: usize, y: usize, h: usize, scale: Scale) {
    let steps = 32;
    let (lo, hi) = scale.range();
    let step_h = h as f64 / steps as f64;
    for i in 0..steps {
        // Top of the bar is the maximum.
        let v = hi - (hi - lo) * (i as f64 + 0.5) / steps as f64;
        let (r, g, b) = scale.color(v);
        writeln!(
            s,
            r#"<rect x="{x}" y="{:.2}" width="16" height="{:.2}" fill="rgb({r},{g},{b})"/>"#,
            y as f64 + i as f64 * step_h,
            step_h + 0.5
        )
        .unwrap();
    }
    for (v, yy) in [(hi, y), (lo, y + h)] {
        writeln!(s, r#"<text x="{}" y="{}">{v}</text>"#, x + 22, yy + 4).unwrap();
    }
}

fn luminance(r: u8, g: u8, b: u8) -> f64 {
    (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64) / 255.0
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
