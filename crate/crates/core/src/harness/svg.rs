//! Hand-written SVG line charts for accuracy traces.

use std::fmt::Write as _;
use std::path::Path;

use super::HarnessError;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 180.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 70.0;
const TICKS: usize = 5;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    /// (elapsed_ms, accuracy) pairs.
    pub points: Vec<(f64, f64)>,
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Accuracy-vs-elapsed chart with one polyline per series.
pub fn render_curves(title: &str, series: &[Series]) -> Result<String, HarnessError> {
    if series.is_empty() {
        return Err(HarnessError::Trace("no traces to plot".into()));
    }
    if let Some(empty) = series.iter().find(|s| s.points.is_empty()) {
        return Err(HarnessError::Trace(format!("trace {:?} has no points", empty.label)));
    }

    let x_max = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0))
        .fold(0.0, f64::max);
    let x_max = if x_max > 0.0 { x_max } else { 1.0 };
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + x / x_max * plot_w;
    let sy = |y: f64| MARGIN_TOP + (1.0 - y.clamp(0.0, 1.0)) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="30" text-anchor="middle" font-size="16">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        escape(title)
    );

    // Grid and tick labels.
    for i in 0..=TICKS {
        let frac = i as f64 / TICKS as f64;
        let y = sy(frac);
        let x = sx(frac * x_max);
        let _ = writeln!(
            svg,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/>"##,
            MARGIN_LEFT,
            MARGIN_LEFT + plot_w
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">{frac:.1}</text>"#,
            MARGIN_LEFT - 8.0,
            y + 4.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="11">{:.0}</text>"#,
            MARGIN_TOP + plot_h + 18.0,
            frac * x_max
        );
    }
    let _ = writeln!(
        svg,
        r##"<line x1="{0:.2}" y1="{1:.2}" x2="{2:.2}" y2="{1:.2}" stroke="#333"/><line x1="{0:.2}" y1="{3:.2}" x2="{0:.2}" y2="{1:.2}" stroke="#333"/>"##,
        MARGIN_LEFT,
        MARGIN_TOP + plot_h,
        MARGIN_LEFT + plot_w,
        MARGIN_TOP
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="13">simulated elapsed time (ms)</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 20.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{0:.2}" text-anchor="middle" font-size="13" transform="rotate(-90 20 {0:.2})">test accuracy</text>"#,
        MARGIN_TOP + plot_h / 2.0
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            coords.join(" ")
        );
        let ly = MARGIN_TOP + 10.0 + 20.0 * i as f64;
        let lx = WIDTH - MARGIN_RIGHT + 15.0;
        let _ = writeln!(
            svg,
            r#"<g class="legend"><line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}" font-size="12">{}</text></g>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Reads one trace CSV (`round,accuracy,elapsed_ms,exposure_bytes`).
pub fn read_trace_csv(path: &Path) -> Result<Series, HarnessError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| HarnessError::Trace(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| HarnessError::Trace(format!("{}: {e}", path.display())))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| HarnessError::Trace(format!("{}: missing column {name}", path.display())))
    };
    let (acc_col, t_col) = (col("accuracy")?, col("elapsed_ms")?);
    let mut points = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| HarnessError::Trace(format!("{}: {e}", path.display())))?;
        let parse = |i: usize| {
            record
                .get(i)
                .and_then(|v| v.trim().parse::<f64>().ok())
                .ok_or_else(|| HarnessError::Trace(format!("{}: bad number in row {:?}", path.display(), record)))
        };
        points.push((parse(t_col)?, parse(acc_col)?));
    }
    if points.is_empty() {
        return Err(HarnessError::Trace(format!("{}: empty trace", path.display())));
    }
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    Ok(Series { label, points })
}

/// Plots the given trace files into a standalone SVG at `output`.
pub fn emit_svg_curve(traces: &[impl AsRef<Path>], output: &Path) -> Result<(), HarnessError> {
    let series = traces
        .iter()
        .map(|p| read_trace_csv(p.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    let svg = render_curves("Training accuracy vs. simulated time", &series)?;
    super::output::write_atomic(output, svg.as_bytes())
}
