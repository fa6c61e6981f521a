use std::fmt::Write as _;

use crate::metrics::{Metric, MetricResult};

const SIZE: f64 = 480.0;
const MARGIN: f64 = 60.0;

fn px(v: f64) -> f64 {
    MARGIN + v.clamp(0.0, 1.0) * (SIZE - 2.0 * MARGIN)
}

fn py(v: f64) -> f64 {
    SIZE - MARGIN - v.clamp(0.0, 1.0) * (SIZE - 2.0 * MARGIN)
}

/// Standalone SVG plot of a ROC or PR curve with axes, grid and the
/// point estimate in the title.
pub fn render_curve_svg(result: &MetricResult) -> String {
    let (title, xlabel, ylabel) = match result.metric {
        Metric::AucRoc => ("ROC curve", "False positive rate", "True positive rate"),
        Metric::AucPr => ("Precision-recall curve", "Recall", "Precision"),
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{SIZE}" height="{SIZE}" fill="white"/>"#);
    for i in 0..=10 {
        let t = i as f64 / 10.0;
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{y1:.2}" stroke="#e0e0e0"/><line x1="{x0:.2}" y1="{y:.2}" x2="{x1:.2}" y2="{y:.2}" stroke="#e0e0e0"/>"##,
            x = px(t),
            y = py(t),
            x0 = px(0.0),
            x1 = px(1.0),
            y0 = py(0.0),
            y1 = py(1.0),
        );
        if i % 2 == 0 {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{t:.1}</text><text x="{:.2}" y="{:.2}" text-anchor="end">{t:.1}</text>"#,
                px(t),
                py(0.0) + 18.0,
                px(0.0) - 6.0,
                py(t) + 4.0,
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        px(0.0),
        py(1.0),
        px(1.0) - px(0.0),
        py(0.0) - py(1.0)
    );
    if result.metric == Metric::AucRoc {
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#999999" stroke-dasharray="4 4"/>"##,
            px(0.0),
            py(0.0),
            px(1.0),
            py(1.0)
        );
    }
    let points: Vec<String> = result
        .curve
        .iter()
        .map(|p| format!("{:.2},{:.2}", px(p.x), py(p.y)))
        .collect();
    let _ = writeln!(
        s,
        r##"<polyline points="{}" fill="none" stroke="#1f77b4" stroke-width="2"/>"##,
        points.join(" ")
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="30" text-anchor="middle" font-size="14">{title} ({} level): {}</text>"#,
        SIZE / 2.0,
        result.level,
        result.cell()
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{xlabel}</text>"#,
        SIZE / 2.0,
        SIZE - 20.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{ylabel}</text>"#,
        SIZE / 2.0,
        SIZE / 2.0
    );
    s.push_str("</svg>\n");
    s
}
