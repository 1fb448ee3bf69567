//! Minimal deterministic SVG plots, no external assets.

use crate::error::{Error, Result};

use super::report::Report;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_R: f64 = 170.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 70.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Profile plot of seed-averaged values: the x axis enumerates
/// (metric, dimension) categories, one polyline per grid setting.
pub fn profile_plot(report: &Report, config_hash: &str) -> Result<String> {
    if report.is_empty() {
        return Err(Error::Input("cannot plot an empty report".into()));
    }
    let means = report.seed_means();
    // stable category and series orders: first appearance
    let mut categories: Vec<String> = Vec::new();
    let mut series: Vec<String> = Vec::new();
    for (setting, category, _) in &means {
        if !categories.contains(category) {
            categories.push(category.clone());
        }
        if !series.contains(setting) {
            series.push(setting.clone());
        }
    }
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, _, v) in &means {
        y_min = y_min.min(*v);
        y_max = y_max.max(*v);
    }
    if y_min == y_max {
        y_min -= 0.5;
        y_max += 0.5;
    }
    let pad = 0.05 * (y_max - y_min);
    y_min -= pad;
    y_max += pad;

    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let x_of = |i: usize| {
        if categories.len() == 1 {
            MARGIN_L + plot_w / 2.0
        } else {
            MARGIN_L + plot_w * i as f64 / (categories.len() - 1) as f64
        }
    };
    let y_of = |v: f64| MARGIN_T + plot_h * (1.0 - (v - y_min) / (y_max - y_min));

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    out.push_str(&format!(
        "  <desc>config_hash={}</desc>\n",
        escape(config_hash)
    ));
    out.push_str("  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    // axes
    out.push_str(&format!(
        "  <line x1=\"{MARGIN_L}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        HEIGHT - MARGIN_B,
        WIDTH - MARGIN_R,
        HEIGHT - MARGIN_B
    ));
    out.push_str(&format!(
        "  <line x1=\"{MARGIN_L}\" y1=\"{MARGIN_T}\" x2=\"{MARGIN_L}\" y2=\"{}\" stroke=\"black\"/>\n",
        HEIGHT - MARGIN_B
    ));
    // y ticks
    for k in 0..=4 {
        let v = y_min + (y_max - y_min) * k as f64 / 4.0;
        let y = y_of(v);
        out.push_str(&format!(
            "  <line x1=\"{}\" y1=\"{y}\" x2=\"{MARGIN_L}\" y2=\"{y}\" stroke=\"black\"/>\n",
            MARGIN_L - 4.0
        ));
        out.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{:.3}</text>\n",
            MARGIN_L - 7.0,
            y + 3.0,
            v
        ));
    }
    // x labels
    for (i, cat) in categories.iter().enumerate() {
        let x = x_of(i);
        out.push_str(&format!(
            "  <text x=\"{x}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\" transform=\"rotate(-35 {x} {})\">{}</text>\n",
            HEIGHT - MARGIN_B + 14.0,
            HEIGHT - MARGIN_B + 14.0,
            escape(cat)
        ));
    }
    // one series per setting
    for (si, setting) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let mut points = Vec::new();
        for (ci, cat) in categories.iter().enumerate() {
            if let Some((_, _, v)) = means
                .iter()
                .find(|(s, c, _)| s == setting && c == cat)
            {
                points.push(format!("{:.2},{:.2}", x_of(ci), y_of(*v)));
            }
        }
        out.push_str(&format!(
            "  <polyline class=\"series\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            points.join(" ")
        ));
        let ly = MARGIN_T + 14.0 * si as f64;
        out.push_str(&format!(
            "  <rect x=\"{}\" y=\"{}\" width=\"10\" height=\"3\" fill=\"{color}\"/>\n",
            WIDTH - MARGIN_R + 10.0,
            ly
        ));
        out.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\" font-size=\"10\">{}</text>\n",
            WIDTH - MARGIN_R + 26.0,
            ly + 5.0,
            escape(setting)
        ));
    }
    out.push_str("</svg>\n");
    Ok(out)
}
