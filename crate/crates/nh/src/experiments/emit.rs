//! Deterministic CSV and SVG emission for the study runners.

use crate::error::Result;
use crate::experiments::fit::SlopeFit;
use std::path::Path;

/// Canonical float formatting for CSV cells; fixed precision keeps reruns
/// byte-identical.
pub(crate) fn fnum(x: f64) -> String {
    format!("{x:.12e}")
}

/// Writes `content` to `path`, creating parent directories as needed.
pub(crate) fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, content.as_bytes())?;
    Ok(())
}

/// Writes a CSV file with the given header line and preformatted rows.
pub(crate) fn write_csv(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(row);
        out.push('\n');
    }
    write_file(path, &out)
}

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 480.0;
const MARGIN_L: f64 = 78.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 46.0;
const MARGIN_B: f64 = 58.0;

fn px(v: f64) -> String {
    format!("{v:.2}")
}

/// Log–log scatter of the fit's points with the fitted line, as a
/// self-contained SVG: no external fonts, scripts, or renderers.
pub fn write_loglog_svg(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    fit: &SlopeFit,
) -> Result<()> {
    let ln10 = std::f64::consts::LN_10;
    let pts: Vec<(f64, f64)> = fit.points.iter().map(|&(x, y)| (x / ln10, y / ln10)).collect();
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &pts {
        x_min = x_min.min(x);
        x_max = x_max.max(x);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    let pad = |lo: &mut f64, hi: &mut f64| {
        let span = (*hi - *lo).max(1e-9);
        *lo -= 0.08 * span;
        *hi += 0.08 * span;
    };
    pad(&mut x_min, &mut x_max);
    pad(&mut y_min, &mut y_max);
    let sx = (SVG_W - MARGIN_L - MARGIN_R) / (x_max - x_min);
    let sy = (SVG_H - MARGIN_T - MARGIN_B) / (y_max - y_min);
    let to_px = |x: f64, y: f64| -> (f64, f64) {
        (MARGIN_L + (x - x_min) * sx, SVG_H - MARGIN_B - (y - y_min) * sy)
    };

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {SVG_W} {SVG_H}\" \
         font-family=\"monospace\" font-size=\"13\">\n"
    ));
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    s.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        px(SVG_W / 2.0),
        escape(title)
    ));

    // Axes box.
    s.push_str(&format!(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n",
        px(MARGIN_L),
        px(MARGIN_T),
        px(SVG_W - MARGIN_L - MARGIN_R),
        px(SVG_H - MARGIN_T - MARGIN_B)
    ));

    // Three ticks per axis, labelled with the underlying (non-log) value.
    for k in 0..3 {
        let t = k as f64 / 2.0;
        let xv = x_min + t * (x_max - x_min);
        let yv = y_min + t * (y_max - y_min);
        let (xp, _) = to_px(xv, y_min);
        let (_, yp) = to_px(x_min, yv);
        s.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#444\"/>\n",
            px(xp),
            px(SVG_H - MARGIN_B),
            px(SVG_H - MARGIN_B + 5.0)
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            px(xp),
            px(SVG_H - MARGIN_B + 20.0),
            sci(10f64.powf(xv))
        ));
        s.push_str(&format!(
            "<line x1=\"{1}\" y1=\"{0}\" x2=\"{2}\" y2=\"{0}\" stroke=\"#444\"/>\n",
            px(yp),
            px(MARGIN_L - 5.0),
            px(MARGIN_L)
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            px(MARGIN_L - 9.0),
            px(yp + 4.0),
            sci(10f64.powf(yv))
        ));
    }
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        px((MARGIN_L + SVG_W - MARGIN_R) / 2.0),
        px(SVG_H - 16.0),
        escape(x_label)
    ));
    s.push_str(&format!(
        "<text x=\"18\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{}</text>\n",
        px((MARGIN_T + SVG_H - MARGIN_B) / 2.0),
        px((MARGIN_T + SVG_H - MARGIN_B) / 2.0),
        escape(y_label)
    ));

    // Fitted line across the padded x-range (slope/intercept live in ln space).
    let line_y = |x10: f64| (fit.slope * (x10 * ln10) + fit.intercept) / ln10;
    let (lx1, ly1) = to_px(x_min, line_y(x_min).clamp(y_min, y_max));
    let (lx2, ly2) = to_px(x_max, line_y(x_max).clamp(y_min, y_max));
    s.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#d62728\" stroke-width=\"1.5\"/>\n",
        px(lx1),
        px(ly1),
        px(lx2),
        px(ly2)
    ));

    for &(x, y) in &pts {
        let (cx, cy) = to_px(x, y);
        s.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"#1f77b4\"/>\n",
            px(cx),
            px(cy)
        ));
    }

    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">slope {:.3}, r2 {:.4}</text>\n",
        px(SVG_W - MARGIN_R - 8.0),
        px(MARGIN_T + 18.0),
        fit.slope,
        fit.r2
    ));
    s.push_str("</svg>\n");
    write_file(path, &s)
}

fn sci(v: f64) -> String {
    format!("{v:.2e}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::fit::fit_loglog_slope;

    #[test]
    fn svg_is_deterministic_and_self_contained() {
        let fit = fit_loglog_slope(&[(0.04, 1.6e-3), (0.02, 4e-4), (0.01, 1e-4)]).unwrap();
        let dir = std::env::temp_dir().join("nh-emit-test");
        let path = dir.join("fit.svg");
        write_loglog_svg(&path, "remainder vs d", "d", "max remainder", &fit).unwrap();
        let first = std::fs::read(&path).unwrap();
        write_loglog_svg(&path, "remainder vs d", "d", "max remainder", &fit).unwrap();
        let second = std::fs::read(&path).unwrap();
        assert_eq!(first, second);
        let text = String::from_utf8(first).unwrap();
        assert!(text.starts_with("<svg"));
        assert!(text.contains("slope 2.000"));
        assert_eq!(text.matches("<circle").count(), 3);
        let external_refs = text.matches("http").count();
        assert_eq!(external_refs, 1, "only the xmlns namespace may reference a URL");
    }

    #[test]
    fn csv_floats_use_fixed_precision() {
        assert_eq!(fnum(0.01), "1.000000000000e-2");
        assert_eq!(fnum(-3.5), "-3.500000000000e0");
    }
}
