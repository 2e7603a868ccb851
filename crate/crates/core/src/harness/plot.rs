//! Log-log SVG plot of per-n |relative error| against sample size.
//!
//! The rendering is fully deterministic (fixed layout, fixed number
//! formatting) so plots can be compared byte-for-byte. Three element
//! classes carry the content: `data` (measured points and the line
//! through them), `slope-ref` (a dashed 1/n reference through the
//! first point), and `floor` (the finite-sample lower bound 1/(c·n)
//! that the relative error cannot cross while the bound applies).

use std::fmt::Write as FmtWrite;
use std::io::Write;

use crate::models::ModelKind;
use crate::{Error, Result};

use super::rate::RateFit;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 60.0;

/// Presentation settings for one plot.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotConfig {
    pub title: String,
    /// c in the guaranteed error floor 1/(c·n); see [`floor_coefficient`].
    pub floor_coefficient: f64,
}

/// The coefficient c of the guaranteed lower bound 1/(c·n) on the
/// relative error for each model family: 26 for the coin posterior,
/// 5 for the categorical posterior, and 26·λ* for the count posterior
/// (which needs the true rate λ*).
pub fn floor_coefficient(kind: ModelKind, lambda_star: Option<f64>) -> Result<f64> {
    match kind {
        ModelKind::Bernoulli => Ok(26.0),
        ModelKind::Multinomial => Ok(5.0),
        ModelKind::Poisson => match lambda_star {
            Some(l) if l > 0.0 && l.is_finite() => Ok(26.0 * l),
            _ => Err(Error::InvalidConfig(
                "count-model floor needs a positive true rate".into(),
            )),
        },
    }
}

fn xml_escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Deterministic compact rendering of the floor coefficient for the
/// legend: integers print bare, everything else with three decimals.
fn fmt_coefficient(c: f64) -> String {
    if c.fract() == 0.0 && c.abs() < 1e9 {
        format!("{c:.0}")
    } else {
        format!("{c:.3}")
    }
}

struct Axes {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Axes {
    fn px(&self, lx: f64) -> f64 {
        MARGIN_LEFT + (lx - self.x_min) / (self.x_max - self.x_min) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn py(&self, ly: f64) -> f64 {
        MARGIN_TOP + (self.y_max - ly) / (self.y_max - self.y_min) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

/// Renders the fit as a standalone SVG document with exactly one data
/// polyline, one slope reference, and one floor line.
pub fn emit_plot<W: Write>(fit: &RateFit, config: &PlotConfig, out: &mut W) -> std::io::Result<()> {
    if fit.points.is_empty() || fit.points.iter().any(|&(n, v)| n == 0 || !(v > 0.0)) {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            "plot needs points with positive n and positive error statistic",
        ));
    }
    if !(config.floor_coefficient > 0.0) || !config.floor_coefficient.is_finite() {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            "floor coefficient must be positive and finite",
        ));
    }
    // Work in log10 coordinates, with axes padded to whole decades.
    // The floor 1/(c·n) is a slope −1 line at height −log10(c) − log10(n);
    // the y range always includes it so the guarantee is visible context.
    let lx: Vec<f64> = fit.points.iter().map(|&(n, _)| (n as f64).log10()).collect();
    let ly: Vec<f64> = fit.points.iter().map(|&(_, v)| v.log10()).collect();
    let log_c = config.floor_coefficient.log10();
    let x_lo = lx.iter().cloned().fold(f64::INFINITY, f64::min);
    let x_hi = lx.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let floor_at = |x: f64| -log_c - x;
    let mut axes = Axes {
        x_min: x_lo.floor(),
        x_max: x_hi.ceil(),
        y_min: ly.iter().cloned().fold(f64::INFINITY, f64::min).floor(),
        y_max: ly.iter().cloned().fold(f64::NEG_INFINITY, f64::max).ceil(),
    };
    if axes.x_max - axes.x_min < 1.0 {
        axes.x_max = axes.x_min + 1.0;
    }
    axes.y_min = axes.y_min.min(floor_at(axes.x_max).floor());
    axes.y_max = axes.y_max.max(floor_at(axes.x_min).ceil());
    if axes.y_max - axes.y_min < 1.0 {
        axes.y_max = axes.y_min + 1.0;
    }

    let mut svg = String::with_capacity(8 * 1024);
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH:.0} {HEIGHT:.0}\" \
width=\"{WIDTH:.0}\" height=\"{HEIGHT:.0}\">"
    );
    svg.push_str(
        "<style>\n\
text { font-family: sans-serif; font-size: 12px; fill: #333333; }\n\
.title { font-size: 16px; font-weight: bold; }\n\
.axis { stroke: #333333; stroke-width: 1; fill: none; }\n\
.tick { stroke: #333333; stroke-width: 1; }\n\
polyline.data { fill: none; stroke: #1f77b4; stroke-width: 1.5; }\n\
circle.data { fill: #1f77b4; stroke: none; }\n\
.slope-ref { stroke: #d62728; stroke-width: 1.2; stroke-dasharray: 7 4; fill: none; }\n\
.floor { stroke: #2ca02c; stroke-width: 1.2; stroke-dasharray: 2 4; fill: none; }\n\
</style>\n",
    );
    let _ = writeln!(
        svg,
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH:.0}\" height=\"{HEIGHT:.0}\" fill=\"#ffffff\"/>"
    );
    let _ = writeln!(
        svg,
        "<text class=\"title\" x=\"{:.2}\" y=\"28\" text-anchor=\"middle\">{}</text>",
        (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
        xml_escape(&config.title)
    );

    // Axes frame.
    let x0 = MARGIN_LEFT;
    let x1 = WIDTH - MARGIN_RIGHT;
    let y0 = HEIGHT - MARGIN_BOTTOM;
    let y1 = MARGIN_TOP;
    let _ = writeln!(
        svg,
        "<rect class=\"axis\" x=\"{x0:.2}\" y=\"{y1:.2}\" width=\"{:.2}\" height=\"{:.2}\"/>",
        x1 - x0,
        y0 - y1
    );

    // Decade ticks, thinned so labels stay readable.
    let x_decades = (axes.x_max - axes.x_min).round() as i64;
    let x_step = (x_decades as f64 / 8.0).ceil().max(1.0) as i64;
    let mut d = axes.x_min.round() as i64;
    while d <= axes.x_max.round() as i64 {
        let px = axes.px(d as f64);
        let _ = writeln!(
            svg,
            "<line class=\"tick\" x1=\"{px:.2}\" y1=\"{y0:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\"/>",
            y0 + 5.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\">1e{d}</text>",
            y0 + 20.0
        );
        d += x_step;
    }
    let y_decades = (axes.y_max - axes.y_min).round() as i64;
    let y_step = (y_decades as f64 / 9.0).ceil().max(1.0) as i64;
    let mut d = axes.y_min.round() as i64;
    while d <= axes.y_max.round() as i64 {
        let py = axes.py(d as f64);
        let _ = writeln!(
            svg,
            "<line class=\"tick\" x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{x0:.2}\" y2=\"{py:.2}\"/>",
            x0 - 5.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">1e{d}</text>",
            x0 - 9.0,
            py + 4.0
        );
        d += y_step;
    }
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">sample size n</text>",
        (x0 + x1) / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"20\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 20 {:.2})\">\
{} |relative error|</text>",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        fit.statistic
    );

    // Guaranteed floor 1/(c·n), spanning the full x range.
    let _ = writeln!(
        svg,
        "<line class=\"floor\" x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\"/>",
        axes.px(axes.x_min),
        axes.py(floor_at(axes.x_min)),
        axes.px(axes.x_max),
        axes.py(floor_at(axes.x_max))
    );
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">floor 1/({}&#183;n)</text>",
        x1 - 6.0,
        axes.py(floor_at(axes.x_max)) - 6.0,
        fmt_coefficient(config.floor_coefficient)
    );

    // 1/n reference of slope −1 anchored at the first point, clipped
    // to the plot rectangle.
    let (anchor_x, anchor_y) = (lx[0], ly[0]);
    let mut ref_start = (axes.x_min, anchor_y + anchor_x - axes.x_min);
    let mut ref_end = (axes.x_max, anchor_y + anchor_x - axes.x_max);
    if ref_start.1 > axes.y_max {
        ref_start = (anchor_x + anchor_y - axes.y_max, axes.y_max);
    }
    if ref_end.1 < axes.y_min {
        ref_end = (anchor_x + anchor_y - axes.y_min, axes.y_min);
    }
    let _ = writeln!(
        svg,
        "<line class=\"slope-ref\" x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\"/>",
        axes.px(ref_start.0),
        axes.py(ref_start.1),
        axes.px(ref_end.0),
        axes.py(ref_end.1)
    );

    // Measured points.
    let mut coords = String::new();
    for (x, y) in lx.iter().zip(&ly) {
        let _ = write!(coords, "{:.2},{:.2} ", axes.px(*x), axes.py(*y));
    }
    let _ = writeln!(svg, "<polyline class=\"data\" points=\"{}\"/>", coords.trim_end());
    for (x, y) in lx.iter().zip(&ly) {
        let _ = writeln!(
            svg,
            "<circle class=\"data\" cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\"/>",
            axes.px(*x),
            axes.py(*y)
        );
    }

    // Fit annotation.
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\">fit: slope = {:.4}, r&#178; = {:.6}</text>",
        x0 + 12.0,
        y1 + 20.0,
        fit.slope,
        fit.r_squared
    );
    svg.push_str("</svg>\n");
    out.write_all(svg.as_bytes())
}
