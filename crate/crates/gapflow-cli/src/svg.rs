//! Minimal deterministic SVG line charts: fixed canvas, linear axes, one
//! polyline per curve and a legend. Coordinates are formatted with two
//! decimals so identical inputs always produce identical bytes.

use std::fmt::Write;

/// One labelled curve; non-finite points break the polyline.
pub struct Curve {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 600.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 42.0;
const MARGIN_BOTTOM: f64 = 54.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
    "#bcbd22", "#e377c2",
];

fn finite_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > hi {
        (0.0, 1.0)
    } else if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Render a line chart of the given curves.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, curves: &[Curve]) -> String {
    let (x_lo, x_hi) = finite_range(curves.iter().flat_map(|c| c.points.iter().map(|p| p.0)));
    let (mut y_lo, mut y_hi) =
        finite_range(curves.iter().flat_map(|c| c.points.iter().map(|p| p.1)));
    let pad = 0.05 * (y_hi - y_lo);
    y_lo -= pad;
    y_hi += pad;

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let to_x = |x: f64| MARGIN_LEFT + plot_w * (x - x_lo) / (x_hi - x_lo);
    let to_y = |y: f64| MARGIN_TOP + plot_h * (1.0 - (y - y_lo) / (y_hi - y_lo));

    let mut out = String::with_capacity(1 << 14);
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">
<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>
<text x="{:.2}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{title}</text>
"#,
        MARGIN_LEFT + 0.5 * plot_w
    );

    // grid and tick labels
    let ticks = 6usize;
    for i in 0..ticks {
        let f = i as f64 / (ticks - 1) as f64;
        let xv = x_lo + f * (x_hi - x_lo);
        let yv = y_lo + f * (y_hi - y_lo);
        let xp = to_x(xv);
        let yp = to_y(yv);
        let _ = write!(
            out,
            "<line x1=\"{xp:.2}\" y1=\"{:.2}\" x2=\"{xp:.2}\" y2=\"{:.2}\" stroke=\"#dddddd\"/>\n\
             <line x1=\"{:.2}\" y1=\"{yp:.2}\" x2=\"{:.2}\" y2=\"{yp:.2}\" stroke=\"#dddddd\"/>\n\
             <text x=\"{xp:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{xv:.4}</text>\n\
             <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{yv:.4}</text>\n",
            MARGIN_TOP,
            MARGIN_TOP + plot_h,
            MARGIN_LEFT,
            MARGIN_LEFT + plot_w,
            MARGIN_TOP + plot_h + 16.0,
            MARGIN_LEFT - 6.0,
            yp + 4.0,
        );
    }

    // zero line when the vertical range spans it
    if y_lo < 0.0 && y_hi > 0.0 {
        let yp = to_y(0.0);
        let _ = writeln!(
            out,
            "<line x1=\"{:.2}\" y1=\"{yp:.2}\" x2=\"{:.2}\" y2=\"{yp:.2}\" stroke=\"#888888\"/>",
            MARGIN_LEFT,
            MARGIN_LEFT + plot_w
        );
    }

    // frame and axis labels
    let _ = write!(
        out,
        "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{plot_w:.2}\" height=\"{plot_h:.2}\" fill=\"none\" stroke=\"black\"/>\n\
         <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{x_label}</text>\n\
         <text x=\"16\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">{y_label}</text>\n",
        MARGIN_LEFT,
        MARGIN_TOP,
        MARGIN_LEFT + 0.5 * plot_w,
        HEIGHT - 14.0,
        MARGIN_TOP + 0.5 * plot_h,
        MARGIN_TOP + 0.5 * plot_h,
    );

    for (k, curve) in curves.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut path = String::new();
        let mut pen_down = false;
        for &(x, y) in &curve.points {
            if !(x.is_finite() && y.is_finite()) {
                pen_down = false;
                continue;
            }
            let _ = write!(
                path,
                "{}{:.2},{:.2} ",
                if pen_down { "L" } else { "M" },
                to_x(x),
                to_y(y)
            );
            pen_down = true;
        }
        let _ = writeln!(
            out,
            "<path d=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
            path.trim_end()
        );
    }

    // legend, top-right inside the frame
    for (k, curve) in curves.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let y = MARGIN_TOP + 16.0 + 18.0 * k as f64;
        let x = WIDTH - MARGIN_RIGHT - 230.0;
        let _ = write!(
            out,
            "<line x1=\"{x:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>\n\
             <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            x + 26.0,
            x + 32.0,
            y + 4.0,
            curve.label
        );
    }

    out.push_str("</svg>\n");
    out
}
