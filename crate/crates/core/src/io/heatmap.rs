use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metric::CorrelationMatrix;

const CELL: f64 = 48.0;
const MARGIN: f64 = 140.0;

/// Linear blend from `#f7fbff` at 0 to `#08306b` at 1; luminance falls
/// monotonically. Inputs are clamped to [0, 1] for display only.
pub fn colormap(v: f64) -> (u8, u8, u8) {
    let t = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    (lerp(247.0, 8.0), lerp(251.0, 48.0), lerp(255.0, 107.0))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Standalone SVG: one square per cell, value printed with two decimals.
pub fn render_heatmap(m: &CorrelationMatrix) -> String {
    let n = m.len();
    let size = MARGIN + CELL * n as f64 + 10.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<title>{}</title>"#, escape(&m.method));
    for (i, label) in m.labels.iter().enumerate() {
        let c = MARGIN + CELL * (i as f64 + 0.5);
        let _ = writeln!(
            s,
            r#"<text class="row-label" x="{}" y="{c}" text-anchor="end" dominant-baseline="middle">{}</text>"#,
            MARGIN - 6.0,
            escape(label)
        );
        let _ = writeln!(
            s,
            r#"<text class="col-label" transform="translate({c},{}) rotate(-45)" text-anchor="start">{}</text>"#,
            MARGIN - 6.0,
            escape(label)
        );
    }
    for i in 0..n {
        for j in 0..n {
            let v = m.rho[i][j];
            let (r, g, b) = colormap(v);
            let (x, y) = (MARGIN + CELL * j as f64, MARGIN + CELL * i as f64);
            let fg = if colormap(v).0 < 128 {
                "#ffffff"
            } else {
                "#000000"
            };
            let _ = writeln!(
                s,
                r##"<rect class="cell" x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="#{r:02x}{g:02x}{b:02x}" stroke="#ffffff"/>"##
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle" dominant-baseline="middle" fill="{fg}">{v:.2}</text>"#,
                x + CELL / 2.0,
                y + CELL / 2.0
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

pub fn emit_heatmap(m: &CorrelationMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_heatmap(m)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(labels: &[&str], rho: Vec<Vec<f64>>) -> CorrelationMatrix {
        CorrelationMatrix {
            labels: labels.iter().map(|s| s.to_string()).collect(),
            rho,
            p: None,
            method: "idcor".into(),
        }
    }

    #[test]
    fn two_by_two() {
        let svg = render_heatmap(&matrix(&["a", "b"], vec![vec![1.0, 0.3], vec![0.3, 1.0]]));
        assert_eq!(svg.matches(r#"class="cell""#).count(), 4);
        assert_eq!(svg.matches(">1.00<").count(), 2);
    }

    #[test]
    fn negative_values_clamp_color_not_text() {
        let svg = render_heatmap(&matrix(
            &["a", "b"],
            vec![vec![1.0, -0.02], vec![-0.02, 1.0]],
        ));
        assert!(svg.contains(">-0.02<"));
        assert_eq!(colormap(-0.02), colormap(0.0));
        assert_eq!(colormap(1.7), colormap(1.0));
    }

    #[test]
    fn colormap_is_monotone() {
        let lum = |v: f64| {
            let (r, g, b) = colormap(v);
            0.2126 * r as f64 + 0.7152 * g as f64 + 0.0722 * b as f64
        };
        let mut prev = lum(0.0);
        for i in 1..=100 {
            let l = lum(i as f64 / 100.0);
            assert!(l <= prev);
            prev = l;
        }
    }

    #[test]
    fn labels_are_escaped() {
        let svg = render_heatmap(&matrix(
            &["a<b", "c&d"],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        ));
        assert!(svg.contains("a&lt;b") && svg.contains("c&amp;d"));
    }
}
