//! Deterministic SVG plots: function graphs and sphere charts.
//!
//! All coordinates are written with fixed two-decimal precision and all
//! styling is static, so a given input always produces byte-identical
//! output; the end-to-end suite hashes the files to hold that line.

use std::f64::consts::PI;
use std::fmt::Write as _;

use windsphere::surface::wrap_angle_signed;
use windsphere::SurfacePoint;

use crate::config::Projection;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 520.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 42.0;
const MARGIN_B: f64 = 52.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// A labeled polyline in data coordinates.
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// A labeled curve on the sphere chart.
pub struct SphereCurve {
    pub label: String,
    pub points: Vec<SurfacePoint>,
}

/// Labeled point markers on the sphere chart.
pub struct SphereMarks {
    pub label: String,
    pub points: Vec<SurfacePoint>,
}

fn header(out: &mut String) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="monospace">"#
    );
    let _ = writeln!(
        out,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
}

fn title_text(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn legend(out: &mut String, labels: &[&str]) {
    for (i, label) in labels.iter().enumerate() {
        if label.is_empty() {
            continue;
        }
        let y = MARGIN_T + 16.0 + 16.0 * (i as f64);
        let x = WIDTH - MARGIN_R - 170.0;
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"/>"#,
            x + 18.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#,
            x + 24.0,
            y + 4.0,
            escape(label)
        );
    }
}

/// Graph of one or more `y(x)` series with autoscaled axes.
pub fn function_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in series {
        for &(x, y) in &s.points {
            x_lo = x_lo.min(x);
            x_hi = x_hi.max(x);
            y_lo = y_lo.min(y);
            y_hi = y_hi.max(y);
        }
    }
    if !x_lo.is_finite() {
        (x_lo, x_hi, y_lo, y_hi) = (0.0, 1.0, 0.0, 1.0);
    }
    if x_hi - x_lo < 1e-12 {
        x_lo -= 0.5;
        x_hi += 0.5;
    }
    if y_hi - y_lo < 1e-12 {
        y_lo -= 0.5;
        y_hi += 0.5;
    }
    let pad = 0.04;
    let (xp, yp) = ((x_hi - x_lo) * pad, (y_hi - y_lo) * pad);
    let (x_lo, x_hi, y_lo, y_hi) = (x_lo - xp, x_hi + xp, y_lo - yp, y_hi + yp);

    let px = |x: f64| MARGIN_L + (x - x_lo) / (x_hi - x_lo) * (WIDTH - MARGIN_L - MARGIN_R);
    let py = |y: f64| HEIGHT - MARGIN_B - (y - y_lo) / (y_hi - y_lo) * (HEIGHT - MARGIN_T - MARGIN_B);

    let mut out = String::new();
    header(&mut out);
    title_text(&mut out, title);
    let _ = writeln!(
        out,
        r##"<rect x="{MARGIN_L:.2}" y="{MARGIN_T:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#333"/>"##,
        WIDTH - MARGIN_L - MARGIN_R,
        HEIGHT - MARGIN_T - MARGIN_B
    );
    for i in 0..=4 {
        let x = x_lo + (x_hi - x_lo) * (i as f64) / 4.0;
        let y = y_lo + (y_hi - y_lo) * (i as f64) / 4.0;
        let _ = writeln!(
            out,
            r##"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="#ccc" stroke-dasharray="3,3"/>"##,
            px(x),
            py(y_lo),
            py(y_hi)
        );
        let _ = writeln!(
            out,
            r##"<line x1="{1:.2}" y1="{0:.2}" x2="{2:.2}" y2="{0:.2}" stroke="#ccc" stroke-dasharray="3,3"/>"##,
            py(y),
            px(x_lo),
            px(x_hi)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="11">{:.3}</text>"#,
            px(x),
            HEIGHT - MARGIN_B + 16.0,
            x
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">{:.3}</text>"#,
            MARGIN_L - 6.0,
            py(y) + 4.0,
            y
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">{}</text>"#,
        MARGIN_L + (WIDTH - MARGIN_L - MARGIN_R) / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" font-size="12" transform="rotate(-90 16 {:.2})">{}</text>"#,
        MARGIN_T + (HEIGHT - MARGIN_T - MARGIN_B) / 2.0,
        MARGIN_T + (HEIGHT - MARGIN_T - MARGIN_B) / 2.0,
        escape(y_label)
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut pts = String::new();
        for &(x, y) in &s.points {
            let _ = write!(pts, "{:.2},{:.2} ", px(x), py(y));
        }
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.trim_end()
        );
    }
    let labels: Vec<&str> = series.iter().map(|s| s.label.as_str()).collect();
    legend(&mut out, &labels);
    out.push_str("</svg>\n");
    out
}

/// Curves and markers on the sphere, in the unrolled `(theta, r)` chart
/// or the north-pole azimuthal equidistant disk.
pub fn sphere_plot(
    title: &str,
    projection: Projection,
    curves: &[SphereCurve],
    marks: &[SphereMarks],
) -> String {
    match projection {
        Projection::Chart => chart_plot(title, curves, marks),
        Projection::Azimuthal => azimuthal_plot(title, curves, marks),
    }
}

fn chart_plot(title: &str, curves: &[SphereCurve], marks: &[SphereMarks]) -> String {
    let px = |theta: f64| MARGIN_L + theta / (2.0 * PI) * (WIDTH - MARGIN_L - MARGIN_R);
    let py = |r: f64| MARGIN_T + r / PI * (HEIGHT - MARGIN_T - MARGIN_B);

    let mut out = String::new();
    header(&mut out);
    title_text(&mut out, title);
    let _ = writeln!(
        out,
        r##"<rect x="{MARGIN_L:.2}" y="{MARGIN_T:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#333"/>"##,
        WIDTH - MARGIN_L - MARGIN_R,
        HEIGHT - MARGIN_T - MARGIN_B
    );
    let theta_ticks = ["0", "pi/2", "pi", "3pi/2", "2pi"];
    for (i, label) in theta_ticks.iter().enumerate() {
        let theta = PI / 2.0 * (i as f64);
        let _ = writeln!(
            out,
            r##"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="#ccc" stroke-dasharray="3,3"/>"##,
            px(theta),
            py(0.0),
            py(PI)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="11">{label}</text>"#,
            px(theta),
            HEIGHT - MARGIN_B + 16.0
        );
    }
    let r_ticks = ["0", "pi/4", "pi/2", "3pi/4", "pi"];
    for (i, label) in r_ticks.iter().enumerate() {
        let r = PI / 4.0 * (i as f64);
        let _ = writeln!(
            out,
            r##"<line x1="{1:.2}" y1="{0:.2}" x2="{2:.2}" y2="{0:.2}" stroke="#ccc" stroke-dasharray="3,3"/>"##,
            py(r),
            px(0.0),
            px(2.0 * PI)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">{label}</text>"#,
            MARGIN_L - 6.0,
            py(r) + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">theta</text>"#,
        MARGIN_L + (WIDTH - MARGIN_L - MARGIN_R) / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{0:.2}" text-anchor="middle" font-size="12" transform="rotate(-90 16 {0:.2})">r</text>"#,
        MARGIN_T + (HEIGHT - MARGIN_T - MARGIN_B) / 2.0
    );

    for (i, c) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        // Split runs at the theta seam so wrap-around never draws a
        // horizontal slash across the chart.
        let mut run = String::new();
        let mut prev: Option<f64> = None;
        for p in &c.points {
            if let Some(q) = prev {
                if wrap_angle_signed(p.theta - q).abs() < (p.theta - q).abs() - 1e-12 {
                    let _ = writeln!(
                        out,
                        r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#,
                        run.trim_end()
                    );
                    run.clear();
                }
            }
            let _ = write!(run, "{:.2},{:.2} ", px(p.theta), py(p.r));
            prev = Some(p.theta);
        }
        if !run.trim_end().is_empty() {
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#,
                run.trim_end()
            );
        }
    }
    draw_marks(&mut out, marks, curves.len(), &|p| (px(p.theta), py(p.r)));

    let mut labels: Vec<&str> = curves.iter().map(|c| c.label.as_str()).collect();
    labels.extend(marks.iter().map(|m| m.label.as_str()));
    legend(&mut out, &labels);
    out.push_str("</svg>\n");
    out
}

fn azimuthal_plot(title: &str, curves: &[SphereCurve], marks: &[SphereMarks]) -> String {
    let cx = WIDTH / 2.0;
    let cy = MARGIN_T + (HEIGHT - MARGIN_T - MARGIN_B) / 2.0;
    let scale = ((HEIGHT - MARGIN_T - MARGIN_B) / 2.0 - 6.0) / PI;
    let proj = |p: &SurfacePoint| {
        (
            cx + scale * p.r * p.theta.cos(),
            cy - scale * p.r * p.theta.sin(),
        )
    };

    let mut out = String::new();
    header(&mut out);
    title_text(&mut out, title);
    // r = pi boundary (south pole) and the equator.
    let _ = writeln!(
        out,
        r##"<circle cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="none" stroke="#333"/>"##,
        scale * PI
    );
    let _ = writeln!(
        out,
        r##"<circle cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="none" stroke="#ccc" stroke-dasharray="3,3"/>"##,
        scale * PI / 2.0
    );
    let _ = writeln!(
        out,
        r##"<circle cx="{cx:.2}" cy="{cy:.2}" r="2" fill="#333"/>"##
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="11">equator</text>"#,
        cx + scale * PI / 2.0 + 6.0,
        cy
    );

    for (i, c) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut pts = String::new();
        for p in &c.points {
            let (x, y) = proj(p);
            let _ = write!(pts, "{x:.2},{y:.2} ");
        }
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#,
            pts.trim_end()
        );
    }
    draw_marks(&mut out, marks, curves.len(), &|p| proj(p));

    let mut labels: Vec<&str> = curves.iter().map(|c| c.label.as_str()).collect();
    labels.extend(marks.iter().map(|m| m.label.as_str()));
    legend(&mut out, &labels);
    out.push_str("</svg>\n");
    out
}

fn draw_marks(
    out: &mut String,
    marks: &[SphereMarks],
    color_offset: usize,
    proj: &dyn Fn(&SurfacePoint) -> (f64, f64),
) {
    for (i, m) in marks.iter().enumerate() {
        let color = PALETTE[(color_offset + i) % PALETTE.len()];
        for p in &m.points {
            let (x, y) = proj(p);
            let _ = writeln!(
                out,
                r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{color}"/>"#
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series() -> Vec<Series> {
        vec![Series {
            label: "K".into(),
            points: (0..50).map(|i| (i as f64 * 0.1, (i as f64 * 0.1).sin())).collect(),
        }]
    }

    #[test]
    fn identical_input_produces_identical_bytes() {
        let a = function_plot("t", "x", "y", &series());
        let b = function_plot("t", "x", "y", &series());
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn chart_splits_curves_at_the_seam() {
        let curve = SphereCurve {
            label: "g".into(),
            points: vec![
                SurfacePoint::new(1.5, 6.2),
                SurfacePoint::new(1.5, 6.27),
                SurfacePoint::new(1.5, 0.05),
                SurfacePoint::new(1.5, 0.15),
            ],
        };
        let svg = sphere_plot("t", Projection::Chart, &[curve], &[]);
        assert_eq!(svg.matches("<polyline").count(), 2, "{svg}");
    }

    #[test]
    fn azimuthal_draws_the_boundary_circles() {
        let svg = sphere_plot("t", Projection::Azimuthal, &[], &[]);
        assert_eq!(svg.matches("<circle").count(), 3);
    }

    #[test]
    fn degenerate_series_still_renders() {
        let s = vec![Series {
            label: "flat".into(),
            points: vec![(1.0, 2.0), (1.0, 2.0)],
        }];
        let svg = function_plot("t", "x", "y", &s);
        assert!(svg.contains("polyline"));
    }
}
