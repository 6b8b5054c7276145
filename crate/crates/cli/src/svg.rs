//! Self-contained SVG plots: a single polyline of ratio against log epsilon,
//! with dyadic tick labels and the reference limit as a dashed rule. No
//! plotting dependency, no timestamp — the bytes depend only on the data.

use krigelab_core::experiments::ScreeningSweep;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_LEFT: f64 = 78.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 26.0;
const MARGIN_BOTTOM: f64 = 58.0;

fn px(v: f64) -> String {
    format!("{v:.2}")
}

/// Plot `ratio` against `log2(epsilon)`. Needs at least two points; the
/// caller checks that before asking for a plot.
pub fn ratio_plot(sweep: &ScreeningSweep) -> String {
    let xs: Vec<f64> = sweep.points.iter().map(|p| p.epsilon.log2()).collect();
    let ys: Vec<f64> = sweep.points.iter().map(|p| p.ratio).collect();
    let (x_lo, x_hi) = bounds(&xs);
    let reference = sweep.reference.as_ref().map(|r| r.value);
    let (mut y_lo, mut y_hi) = bounds(&ys);
    if let Some(r) = reference {
        y_lo = y_lo.min(r);
        y_hi = y_hi.max(r);
    }
    // Pad the value axis so extreme points do not sit on the frame; a flat
    // sweep (the Markov case) still needs a visible span.
    let y_pad = (0.05 * (y_hi - y_lo)).max(1e-3);
    let (y_lo, y_hi) = (y_lo - y_pad, y_hi + y_pad);
    let x_span = (x_hi - x_lo).max(1.0);

    let to_x = |x: f64| MARGIN_LEFT + (x - x_lo) / x_span * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT);
    let to_y =
        |y: f64| HEIGHT - MARGIN_BOTTOM - (y - y_lo) / (y_hi - y_lo) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM);

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"monospace\" font-size=\"12\">\n"
    ));
    out.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));

    // Frame.
    out.push_str(&format!(
        "  <rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        px(MARGIN_LEFT),
        px(MARGIN_TOP),
        px(WIDTH - MARGIN_LEFT - MARGIN_RIGHT),
        px(HEIGHT - MARGIN_TOP - MARGIN_BOTTOM),
    ));

    // Dyadic ticks on the scale axis, one per point, thinned to at most 8.
    let stride = xs.len().div_ceil(8).max(1);
    for (i, &x) in xs.iter().enumerate() {
        if i % stride != 0 && i != xs.len() - 1 {
            continue;
        }
        let gx = to_x(x);
        out.push_str(&format!(
            "  <line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n",
            px(gx),
            px(HEIGHT - MARGIN_BOTTOM),
            px(HEIGHT - MARGIN_BOTTOM + 5.0),
        ));
        out.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">2^{}</text>\n",
            px(gx),
            px(HEIGHT - MARGIN_BOTTOM + 20.0),
            fmt_exponent(x),
        ));
    }
    out.push_str(&format!(
        "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">epsilon (log scale)</text>\n",
        px(MARGIN_LEFT + (WIDTH - MARGIN_LEFT - MARGIN_RIGHT) / 2.0),
        px(HEIGHT - 14.0),
    ));

    // Five value ticks.
    for i in 0..=4 {
        let y = y_lo + (y_hi - y_lo) * i as f64 / 4.0;
        let gy = to_y(y);
        out.push_str(&format!(
            "  <line x1=\"{0}\" y1=\"{2}\" x2=\"{1}\" y2=\"{2}\" stroke=\"black\"/>\n",
            px(MARGIN_LEFT - 5.0),
            px(MARGIN_LEFT),
            px(gy),
        ));
        out.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{y:.4}</text>\n",
            px(MARGIN_LEFT - 9.0),
            px(gy + 4.0),
        ));
    }
    out.push_str(&format!(
        "  <text x=\"16\" y=\"{}\" transform=\"rotate(-90 16 {})\" text-anchor=\"middle\">\
         mse ratio</text>\n",
        px(MARGIN_TOP + (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM) / 2.0),
        px(MARGIN_TOP + (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM) / 2.0),
    ));

    // Reference limit.
    if let Some(r) = reference {
        let gy = to_y(r);
        out.push_str(&format!(
            "  <line x1=\"{}\" y1=\"{2}\" x2=\"{}\" y2=\"{2}\" stroke=\"gray\" \
             stroke-dasharray=\"6 4\"/>\n",
            px(MARGIN_LEFT),
            px(WIDTH - MARGIN_RIGHT),
            px(gy),
        ));
        out.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\" text-anchor=\"end\" fill=\"gray\">reference {r:.6}</text>\n",
            px(WIDTH - MARGIN_RIGHT - 6.0),
            px(gy - 6.0),
        ));
    }

    // The sweep itself.
    let path: Vec<String> = xs
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| format!("{},{}", px(to_x(x)), px(to_y(y))))
        .collect();
    out.push_str(&format!(
        "  <polyline points=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>\n",
        path.join(" "),
    ));
    for (&x, &y) in xs.iter().zip(&ys) {
        out.push_str(&format!(
            "  <circle cx=\"{}\" cy=\"{}\" r=\"2.5\" fill=\"black\"/>\n",
            px(to_x(x)),
            px(to_y(y)),
        ));
    }
    out.push_str(&format!(
        "  <text x=\"{}\" y=\"{}\">{}</text>\n",
        px(MARGIN_LEFT),
        px(MARGIN_TOP - 8.0),
        sweep.scenario,
    ));
    out.push_str("</svg>\n");
    out
}

fn bounds(values: &[f64]) -> (f64, f64) {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Dyadic scales print as integer exponents; anything else keeps one decimal.
fn fmt_exponent(log2_eps: f64) -> String {
    if (log2_eps - log2_eps.round()).abs() < 1e-9 {
        format!("{}", log2_eps.round() as i64)
    } else {
        format!("{log2_eps:.1}")
    }
}
