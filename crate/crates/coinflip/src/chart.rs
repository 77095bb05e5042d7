//! Static SVG rendering of a sweep summary: the replicate-mean line, the
//! percentile band as a shaded polygon, the closed-form theory curve, a
//! horizontal no-preference reference line, and an optional marked point.
//!
//! The output is a single self-contained `<svg>` document — inline styles,
//! no scripts, no external assets — and every coordinate is printed with
//! fixed two-decimal precision so identical summaries render to identical
//! bytes on every platform.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::simulate::SweepSummary;

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 540.0;
const MARGIN_LEFT: f64 = 78.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 26.0;
const MARGIN_BOTTOM: f64 = 64.0;

const BAND_FILL: &str = "#b8cbe8";
const MEAN_STROKE: &str = "#111111";
const THEORY_STROKE: &str = "#2e8b57";
const REFERENCE_STROKE: &str = "#1f6fb4";
const MARK_FILL: &str = "#8c8c8c";

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn x(&self, ratio: f64) -> f64 {
        let span = self.x_max - self.x_min;
        MARGIN_LEFT + (ratio - self.x_min) / span * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn y(&self, value: f64) -> f64 {
        let span = self.y_max - self.y_min;
        HEIGHT - MARGIN_BOTTOM
            - (value - self.y_min) / span * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn polyline_points(frame: &Frame, values: impl Iterator<Item = (f64, f64)>) -> String {
    let mut out = String::new();
    for (x, y) in values {
        if !out.is_empty() {
            out.push(' ');
        }
        write!(out, "{:.2},{:.2}", frame.x(x), frame.y(y)).expect("writing to String");
    }
    out
}

/// Renders the sweep chart. `no_preference` is the horizontal reference
/// level p_M³ + p_F³ (the proportion with no stopping preference), and
/// `mark` overlays one highlighted `(ratio, proportion)` point.
pub fn render_sweep_svg(
    summary: &SweepSummary,
    no_preference: f64,
    mark: Option<(f64, f64)>,
) -> Result<String> {
    if summary.points.is_empty() {
        return Err(Error::InvalidParameter("cannot chart an empty sweep summary".into()));
    }
    if !no_preference.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "no-preference level must be finite, got {no_preference}"
        )));
    }
    let points = &summary.points;
    let x_min = points.first().map(|p| p.ratio).unwrap_or(0.0);
    let x_max = points.last().map(|p| p.ratio).unwrap_or(1.0);
    let mut y_min = no_preference;
    let mut y_max = no_preference;
    for p in points {
        for v in [p.mean, p.band_low, p.band_high, p.theory] {
            y_min = y_min.min(v);
            y_max = y_max.max(v);
        }
    }
    if let Some((mx, my)) = mark {
        if !(mx.is_finite() && my.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "mark coordinates must be finite, got ({mx}, {my})"
            )));
        }
        y_min = y_min.min(my);
        y_max = y_max.max(my);
    }
    let x_pad = if x_max > x_min { 0.0 } else { 0.5 };
    let y_pad = 0.06 * (y_max - y_min).max(1e-6);
    let frame = Frame {
        x_min: x_min - x_pad,
        x_max: x_max + x_pad,
        y_min: y_min - y_pad,
        y_max: y_max + y_pad,
    };

    let mut svg = String::new();
    let w = &mut svg;
    writeln!(
        w,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH:.0} {HEIGHT:.0}\" \
         font-family=\"sans-serif\" font-size=\"14\">"
    )
    .expect("writing to String");
    let _ = writeln!(w, "<rect width=\"{WIDTH:.0}\" height=\"{HEIGHT:.0}\" fill=\"#ffffff\"/>");

    // Axes frame.
    let _ = writeln!(
        w,
        "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" \
         stroke=\"#444444\" stroke-width=\"1\"/>",
        MARGIN_LEFT,
        MARGIN_TOP,
        WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
        HEIGHT - MARGIN_TOP - MARGIN_BOTTOM,
    );

    // Ticks: six per axis, evenly spaced over the data frame.
    for i in 0..=5 {
        let t = i as f64 / 5.0;
        let rx = frame.x_min + t * (frame.x_max - frame.x_min);
        let px = frame.x(rx);
        let _ = writeln!(
            w,
            "<line x1=\"{px:.2}\" y1=\"{:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" \
             stroke=\"#444444\" stroke-width=\"1\"/>",
            HEIGHT - MARGIN_BOTTOM,
            HEIGHT - MARGIN_BOTTOM + 6.0,
        );
        let _ = writeln!(
            w,
            "<text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{rx:.2}</text>",
            HEIGHT - MARGIN_BOTTOM + 24.0,
        );
        let vy = frame.y_min + t * (frame.y_max - frame.y_min);
        let py = frame.y(vy);
        let _ = writeln!(
            w,
            "<line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{:.2}\" y2=\"{py:.2}\" \
             stroke=\"#444444\" stroke-width=\"1\"/>",
            MARGIN_LEFT - 6.0,
            MARGIN_LEFT,
        );
        let _ = writeln!(
            w,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{vy:.3}</text>",
            MARGIN_LEFT - 10.0,
            py + 5.0,
        );
    }

    // Axis titles.
    let _ = writeln!(
        w,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">stopping ratio p_S / p_D</text>",
        MARGIN_LEFT + (WIDTH - MARGIN_LEFT - MARGIN_RIGHT) / 2.0,
        HEIGHT - 16.0,
    );
    let _ = writeln!(
        w,
        "<text x=\"20\" y=\"{:.2}\" text-anchor=\"middle\" \
         transform=\"rotate(-90 20 {:.2})\">proportion of same-sex first triples</text>",
        MARGIN_TOP + (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM) / 2.0,
        MARGIN_TOP + (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM) / 2.0,
    );

    // Percentile band polygon: upper edge left→right, lower edge right→left.
    let upper = points.iter().map(|p| (p.ratio, p.band_high));
    let lower = points.iter().rev().map(|p| (p.ratio, p.band_low));
    let _ = writeln!(
        w,
        "<polygon points=\"{} {}\" fill=\"{BAND_FILL}\" fill-opacity=\"0.6\" stroke=\"none\"/>",
        polyline_points(&frame, upper),
        polyline_points(&frame, lower),
    );

    // No-preference reference line.
    let ref_y = frame.y(no_preference);
    let _ = writeln!(
        w,
        "<line x1=\"{:.2}\" y1=\"{ref_y:.2}\" x2=\"{:.2}\" y2=\"{ref_y:.2}\" \
         stroke=\"{REFERENCE_STROKE}\" stroke-width=\"1.5\" stroke-dasharray=\"2 4\"/>",
        MARGIN_LEFT,
        WIDTH - MARGIN_RIGHT,
    );

    // Theory curve (dashed) and replicate-mean line (solid).
    let _ = writeln!(
        w,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{THEORY_STROKE}\" \
         stroke-width=\"2\" stroke-dasharray=\"7 5\"/>",
        polyline_points(&frame, points.iter().map(|p| (p.ratio, p.theory))),
    );
    let _ = writeln!(
        w,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{MEAN_STROKE}\" stroke-width=\"2\"/>",
        polyline_points(&frame, points.iter().map(|p| (p.ratio, p.mean))),
    );

    // Optional marked point, drawn as a diamond.
    if let Some((mx, my)) = mark {
        let cx = frame.x(mx);
        let cy = frame.y(my);
        let _ = writeln!(
            w,
            "<polygon points=\"{:.2},{:.2} {:.2},{:.2} {:.2},{:.2} {:.2},{:.2}\" \
             fill=\"{MARK_FILL}\" stroke=\"#333333\" stroke-width=\"1\"/>",
            cx,
            cy - 7.0,
            cx + 7.0,
            cy,
            cx,
            cy + 7.0,
            cx - 7.0,
            cy,
        );
    }

    // Legend.
    let lx = MARGIN_LEFT + 14.0;
    let mut ly = MARGIN_TOP + 20.0;
    let legend_line = |w: &mut String, stroke: &str, dash: &str, label: &str, ly: f64| {
        let _ = writeln!(
            w,
            "<line x1=\"{lx:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{stroke}\" \
             stroke-width=\"2\"{dash}/>",
            ly - 4.0,
            lx + 30.0,
            ly - 4.0,
        );
        let _ = writeln!(w, "<text x=\"{:.2}\" y=\"{ly:.2}\">{label}</text>", lx + 38.0);
    };
    legend_line(w, MEAN_STROKE, "", "replicate mean", ly);
    ly += 20.0;
    legend_line(w, THEORY_STROKE, " stroke-dasharray=\"7 5\"", "closed form", ly);
    ly += 20.0;
    legend_line(w, REFERENCE_STROKE, " stroke-dasharray=\"2 4\"", "no preference", ly);
    ly += 20.0;
    let _ = writeln!(
        w,
        "<rect x=\"{lx:.2}\" y=\"{:.2}\" width=\"30\" height=\"10\" fill=\"{BAND_FILL}\" \
         fill-opacity=\"0.6\"/>",
        ly - 12.0,
    );
    let _ = writeln!(w, "<text x=\"{:.2}\" y=\"{ly:.2}\">percentile band</text>", lx + 38.0);
    if mark.is_some() {
        ly += 20.0;
        let _ = writeln!(
            w,
            "<polygon points=\"{:.2},{:.2} {:.2},{:.2} {:.2},{:.2} {:.2},{:.2}\" \
             fill=\"{MARK_FILL}\" stroke=\"#333333\" stroke-width=\"1\"/>",
            lx + 15.0,
            ly - 10.0,
            lx + 20.0,
            ly - 5.0,
            lx + 15.0,
            ly,
            lx + 10.0,
            ly - 5.0,
        );
        let _ = writeln!(w, "<text x=\"{:.2}\" y=\"{ly:.2}\">marked point</text>", lx + 38.0);
    }

    let _ = writeln!(w, "</svg>");
    Ok(svg)
}
