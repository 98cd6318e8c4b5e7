//! Self-contained SVG line plots of the three error traces (attitude
//! principal angle, angular-velocity error components, bias error
//! components). Plain SVG 1.1: lines, polylines and text, no external
//! resources.

use std::path::{Path, PathBuf};

use thiserror::Error;

use vatt_core::diagnostics::ErrorSample;

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("refusing to plot an empty trace")]
    EmptyTrace,
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

pub struct Series {
    pub label: &'static str,
    pub color: &'static str,
    pub points: Vec<(f64, f64)>,
}

pub struct Figure {
    pub file_name: &'static str,
    pub title: &'static str,
    pub x_label: &'static str,
    pub y_label: &'static str,
    pub series: Vec<Series>,
}

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 78.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 44.0;
const MARGIN_BOTTOM: f64 = 58.0;

const COMPONENT_COLORS: [&str; 3] = ["#1f77b4", "#d62728", "#2ca02c"];

/// Assembles the three figures from a trace. Exposed separately from the
/// rendering so tests can check the plotted data against the trace.
pub fn figures_from_trace(trace: &[ErrorSample]) -> [Figure; 3] {
    const AXES: [&str; 3] = ["x", "y", "z"];
    let angle = Series {
        label: "principal angle",
        color: COMPONENT_COLORS[0],
        points: trace.iter().map(|s| (s.t, s.principal_angle)).collect(),
    };
    let omega = (0..3).map(|i| Series {
        label: AXES[i],
        color: COMPONENT_COLORS[i],
        points: trace.iter().map(|s| (s.t, s.omega_err[i])).collect(),
    });
    let beta = (0..3).map(|i| Series {
        label: AXES[i],
        color: COMPONENT_COLORS[i],
        points: trace.iter().map(|s| (s.t, s.beta_err[i])).collect(),
    });

    [
        Figure {
            file_name: "fig1_principal_angle.svg",
            title: "Attitude estimate error",
            x_label: "t [s]",
            y_label: "principal angle [rad]",
            series: vec![angle],
        },
        Figure {
            file_name: "fig2_angular_velocity_error.svg",
            title: "Angular velocity estimate error",
            x_label: "t [s]",
            y_label: "omega error [rad/s]",
            series: omega.collect(),
        },
        Figure {
            file_name: "fig3_bias_error.svg",
            title: "Bias estimate error",
            x_label: "t [s]",
            y_label: "bias error [rad/s]",
            series: beta.collect(),
        },
    ]
}

/// Writes the three figures into `dir`, returning their paths.
pub fn emit_plots(trace: &[ErrorSample], dir: &Path) -> Result<[PathBuf; 3], PlotError> {
    if trace.is_empty() {
        return Err(PlotError::EmptyTrace);
    }
    std::fs::create_dir_all(dir).map_err(|source| PlotError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let figures = figures_from_trace(trace);
    let mut paths = Vec::with_capacity(3);
    for fig in &figures {
        let path = dir.join(fig.file_name);
        std::fs::write(&path, render_svg(fig)).map_err(|source| PlotError::Io {
            path: path.display().to_string(),
            source,
        })?;
        paths.push(path);
    }
    Ok([paths[0].clone(), paths[1].clone(), paths[2].clone()])
}

fn data_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    // Degenerate (constant) series: pad so the axis scale stays finite.
    if hi - lo < 1e-300 {
        let pad = lo.abs().max(1.0) * 0.1;
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

/// Round tick step of the form {1, 2, 5} x 10^k covering `span / target`.
fn tick_step(span: f64, target: usize) -> f64 {
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.abs().log10().floor());
    let norm = raw / mag;
    let nice = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".to_owned();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_owned()
    } else {
        format!("{v:.2e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render_svg(fig: &Figure) -> String {
    let (x_lo, x_hi) = data_range(fig.series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y_lo, y_hi) = data_range(fig.series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x_px = |x: f64| MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let y_px = |y: f64| MARGIN_TOP + (1.0 - (y - y_lo) / (y_hi - y_lo)) * plot_h;

    let mut svg = String::with_capacity(1 << 16);
    svg.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"17\" text-anchor=\"middle\">{}</text>\n",
        WIDTH / 2.0,
        escape(fig.title)
    ));

    // Gridlines and ticks.
    let x_step = tick_step(x_hi - x_lo, 8);
    let y_step = tick_step(y_hi - y_lo, 6);
    let mut x_tick = (x_lo / x_step).ceil() * x_step;
    while x_tick <= x_hi + 1e-12 * x_step {
        let px = x_px(x_tick);
        svg.push_str(&format!(
            "<line x1=\"{px:.2}\" y1=\"{:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n",
            MARGIN_TOP,
            MARGIN_TOP + plot_h
        ));
        svg.push_str(&format!(
            "<text x=\"{px:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
            MARGIN_TOP + plot_h + 18.0,
            fmt_tick(x_tick)
        ));
        x_tick += x_step;
    }
    let mut y_tick = (y_lo / y_step).ceil() * y_step;
    while y_tick <= y_hi + 1e-12 * y_step {
        let py = y_px(y_tick);
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{:.2}\" y2=\"{py:.2}\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n",
            MARGIN_LEFT,
            MARGIN_LEFT + plot_w
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">{}</text>\n",
            MARGIN_LEFT - 6.0,
            py + 4.0,
            fmt_tick(y_tick)
        ));
        y_tick += y_step;
    }

    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\" stroke-width=\"1.5\"/>\n",
        MARGIN_LEFT,
        MARGIN_TOP + plot_h,
        MARGIN_LEFT + plot_w,
        MARGIN_TOP + plot_h
    ));
    svg.push_str(&format!(
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\" stroke-width=\"1.5\"/>\n",
        MARGIN_LEFT, MARGIN_TOP, MARGIN_LEFT,
        MARGIN_TOP + plot_h
    ));
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 14.0,
        escape(fig.x_label)
    ));
    svg.push_str(&format!(
        "<text x=\"20\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 20 {:.2})\">{}</text>\n",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        escape(fig.y_label)
    ));

    // Series polylines.
    for s in &fig.series {
        let mut points = String::with_capacity(s.points.len() * 14);
        for (x, y) in &s.points {
            points.push_str(&format!("{:.2},{:.2} ", x_px(*x), y_px(*y)));
        }
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.3\" points=\"{}\"/>\n",
            s.color,
            points.trim_end()
        ));
    }

    // Legend for multi-series figures.
    if fig.series.len() > 1 {
        for (i, s) in fig.series.iter().enumerate() {
            let lx = MARGIN_LEFT + plot_w - 90.0;
            let ly = MARGIN_TOP + 16.0 + 18.0 * i as f64;
            svg.push_str(&format!(
                "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
                lx,
                ly - 4.0,
                lx + 24.0,
                ly - 4.0,
                s.color
            ));
            svg.push_str(&format!(
                "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
                lx + 30.0,
                ly,
                escape(s.label)
            ));
        }
    }

    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use vatt_core::so3::Vector3;

    fn trace(n: usize, constant: bool) -> Vec<ErrorSample> {
        (0..n)
            .map(|i| {
                let t = i as f64 * 0.01;
                let v = if constant { 0.0 } else { (t * 3.0).sin() };
                ErrorSample {
                    t,
                    principal_angle: v.abs(),
                    omega_err: Vector3::new(v, -v, 0.5 * v),
                    beta_err: Vector3::new(0.01 * v, 0.0, -0.02 * v),
                    v: v * v,
                    u_pot: 0.5 * v * v,
                    t_kin: 0.5 * v * v,
                }
            })
            .collect()
    }

    /// Minimal XML well-formedness check: tag balance, attribute quoting.
    fn assert_well_formed_xml(text: &str) {
        assert!(text.starts_with("<?xml"));
        let mut stack: Vec<String> = Vec::new();
        let mut rest = text;
        while let Some(start) = rest.find('<') {
            rest = &rest[start..];
            let end = rest.find('>').expect("unterminated tag");
            let tag = &rest[1..end];
            rest = &rest[end + 1..];
            if tag.starts_with('?') || tag.starts_with('!') {
                continue;
            }
            if let Some(name) = tag.strip_prefix('/') {
                let open = stack.pop().unwrap_or_else(|| panic!("stray </{name}>"));
                assert_eq!(open, name, "mismatched closing tag");
            } else if !tag.ends_with('/') {
                let name: String = tag.split_whitespace().next().unwrap().to_owned();
                stack.push(name);
            }
            // attribute quotes must be balanced within the tag
            assert_eq!(tag.matches('"').count() % 2, 0, "unbalanced quotes in <{tag}>");
        }
        assert!(stack.is_empty(), "unclosed tags: {stack:?}");
    }

    #[test]
    fn three_well_formed_svgs() {
        let dir = std::env::temp_dir().join("vatt_plot_test");
        let paths = emit_plots(&trace(500, false), &dir).unwrap();
        for p in &paths {
            let text = std::fs::read_to_string(p).unwrap();
            assert_well_formed_xml(&text);
            assert!(text.contains("<svg"));
            assert!(text.contains("polyline"));
            assert!(text.contains("[rad"));
            std::fs::remove_file(p).unwrap();
        }
    }

    #[test]
    fn constant_zero_series_renders() {
        // Zero-variance series must not divide by zero in axis scaling.
        let fig = &figures_from_trace(&trace(100, true))[0];
        let svg = render_svg(fig);
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
        assert_well_formed_xml(&svg);
    }

    #[test]
    fn plotted_terminal_values_match_trace() {
        let tr = trace(321, false);
        let figs = figures_from_trace(&tr);
        let last = tr.last().unwrap();
        assert_eq!(figs[0].series[0].points.last().unwrap().1, last.principal_angle);
        for i in 0..3 {
            assert_eq!(figs[1].series[i].points.last().unwrap().1, last.omega_err[i]);
            assert_eq!(figs[2].series[i].points.last().unwrap().1, last.beta_err[i]);
        }
        assert!(figs.iter().all(|f| f
            .series
            .iter()
            .all(|s| s.points.len() == tr.len())));
    }

    #[test]
    fn empty_trace_rejected() {
        let dir = std::env::temp_dir().join("vatt_plot_test_empty");
        assert!(matches!(
            emit_plots(&[], &dir),
            Err(PlotError::EmptyTrace)
        ));
    }
}
