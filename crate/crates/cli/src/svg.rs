//! Minimal hand-rolled SVG plot for eigenvalue spectra: points in
//! increasing order, two horizontal reference lines, log-scale y when the
//! data allow it.

use std::io::Write;
use std::path::Path;

const WIDTH: f64 = 880.0;
const HEIGHT: f64 = 560.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 25.0;
const MARGIN_T: f64 = 35.0;
const MARGIN_B: f64 = 55.0;

pub fn write_spectrum_svg(
    path: &Path,
    ascending: &[f64],
    ref_green_dashed: f64,
    ref_red_solid: f64,
    title: &str,
) -> std::io::Result<()> {
    let n = ascending.len().max(1);
    let positive_floor = ascending
        .iter()
        .copied()
        .filter(|&v| v > 0.0)
        .fold(f64::INFINITY, f64::min);
    let log_scale = positive_floor.is_finite() && positive_floor > 0.0;
    let (y_min, y_max) = if log_scale {
        let lo = positive_floor
            .min(ref_red_solid.max(1e-300))
            .min(ref_green_dashed.max(1e-300));
        (lo.log10().floor(), 0.0f64)
    } else {
        (0.0, 1.0)
    };
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let x_of = |i: usize| MARGIN_L + plot_w * (i as f64 + 0.5) / n as f64;
    let y_of = |v: f64| {
        let t = if log_scale {
            if v <= 0.0 {
                0.0
            } else {
                (v.log10() - y_min) / (y_max - y_min)
            }
        } else {
            (v - y_min) / (y_max - y_min)
        };
        MARGIN_T + plot_h * (1.0 - t.clamp(0.0, 1.0))
    };

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    out.push_str(&format!(
        "<text x=\"{}\" y=\"22\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\">{}</text>\n",
        WIDTH / 2.0,
        title
    ));
    // Axes.
    out.push_str(&format!(
        "<line x1=\"{MARGIN_L}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        HEIGHT - MARGIN_B,
        WIDTH - MARGIN_R,
        HEIGHT - MARGIN_B
    ));
    out.push_str(&format!(
        "<line x1=\"{MARGIN_L}\" y1=\"{MARGIN_T}\" x2=\"{MARGIN_L}\" y2=\"{}\" stroke=\"black\"/>\n",
        HEIGHT - MARGIN_B
    ));
    // y ticks: decades on log scale, fifths otherwise.
    if log_scale {
        let mut decade = y_min as i64;
        while decade <= y_max as i64 {
            let v = 10f64.powi(decade as i32);
            let y = y_of(v);
            out.push_str(&format!(
                "<line x1=\"{}\" y1=\"{y}\" x2=\"{MARGIN_L}\" y2=\"{y}\" stroke=\"black\"/>\n",
                MARGIN_L - 6.0
            ));
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">1e{decade}</text>\n",
                MARGIN_L - 10.0,
                y + 4.0
            ));
            decade += 1;
        }
    } else {
        for k in 0..=5 {
            let v = k as f64 / 5.0;
            let y = y_of(v);
            out.push_str(&format!(
                "<line x1=\"{}\" y1=\"{y}\" x2=\"{MARGIN_L}\" y2=\"{y}\" stroke=\"black\"/>\n",
                MARGIN_L - 6.0
            ));
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">{v:.1}</text>\n",
                MARGIN_L - 10.0,
                y + 4.0
            ));
        }
    }
    // x ticks.
    let x_step = (n / 8).max(1);
    let mut i = 0;
    while i < n {
        let x = x_of(i);
        out.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" stroke=\"black\"/>\n",
            HEIGHT - MARGIN_B,
            HEIGHT - MARGIN_B + 6.0
        ));
        out.push_str(&format!(
            "<text x=\"{x}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
            HEIGHT - MARGIN_B + 20.0,
            i + 1
        ));
        i += x_step;
    }
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">eigenvalue index (increasing order)</text>\n",
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 12.0
    ));
    // Reference lines.
    for (v, color, dash) in [
        (ref_green_dashed, "green", "6,5"),
        (ref_red_solid, "red", ""),
    ] {
        if v > 0.0 {
            let y = y_of(v);
            let dash_attr = if dash.is_empty() {
                String::new()
            } else {
                format!(" stroke-dasharray=\"{dash}\"")
            };
            out.push_str(&format!(
                "<line x1=\"{MARGIN_L}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"{color}\" stroke-width=\"1.5\"{dash_attr}/>\n",
                WIDTH - MARGIN_R
            ));
        }
    }
    // Data points.
    for (i, &v) in ascending.iter().enumerate() {
        let y = y_of(v.max(if log_scale { positive_floor } else { 0.0 }));
        out.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{y:.2}\" r=\"1.6\" fill=\"black\"/>\n",
            x_of(i)
        ));
    }
    out.push_str("</svg>\n");

    let mut file = std::fs::File::create(path)?;
    file.write_all(out.as_bytes())
}
