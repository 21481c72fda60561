//! Self-contained SVG heatmaps.
//!
//! The image is a fixed 512×512 viewport. Node `(i, j)` is drawn as a cell of
//! width `512 / nx` centered on its position, with `y` pointing up. Values map
//! linearly from `[min, max]` of the field onto [`COLOR_STOPS`], which are
//! interpolated piecewise-linearly in RGB. Contours are overlaid as black
//! polylines.

use std::fmt::Write as _;

use cauchy_core::{LevelContour, ScalarField};

pub const VIEWPORT: f64 = 512.0;

/// `(position, [r, g, b])` stops of the color map, low to high.
pub const COLOR_STOPS: [(f64, [u8; 3]); 5] = [
    (0.00, [0x44, 0x01, 0x54]),
    (0.25, [0x3b, 0x52, 0x8b]),
    (0.50, [0x21, 0x91, 0x8c]),
    (0.75, [0x5e, 0xc9, 0x62]),
    (1.00, [0xfd, 0xe7, 0x25]),
];

/// Color for a value already scaled to `[0, 1]`.
pub fn colormap(t: f64) -> [u8; 3] {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    for w in COLOR_STOPS.windows(2) {
        let ((p0, c0), (p1, c1)) = (w[0], w[1]);
        if t <= p1 {
            let s = (t - p0) / (p1 - p0);
            let mix = |a: u8, b: u8| (a as f64 + s * (b as f64 - a as f64)).round() as u8;
            return [mix(c0[0], c1[0]), mix(c0[1], c1[1]), mix(c0[2], c1[2])];
        }
    }
    COLOR_STOPS[COLOR_STOPS.len() - 1].1
}

/// Renders `field` with optional contour overlays.
pub fn heatmap(field: &ScalarField, title: &str, contours: &[&LevelContour]) -> String {
    let g = field.grid;
    let lo = field.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = field.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let (cw, ch) = (VIEWPORT / g.nx as f64, VIEWPORT / g.ny as f64);
    // Domain extended by half a cell on each side maps onto the viewport.
    let px = |x: f64| (x - g.rect.x0) / g.h * cw + 0.5 * cw;
    let py = |y: f64| VIEWPORT - ((y - g.rect.y0) / g.h * ch + 0.5 * ch);

    let mut s = String::with_capacity(g.len() * 80 + 1024);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="512" height="512" viewBox="0 0 512 512">"#
    );
    let _ = writeln!(s, "<title>{} (min {lo:.6e}, max {hi:.6e})</title>", escape(title));
    let _ = writeln!(s, r#"<g shape-rendering="crispEdges">"#);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let [r, gg, b] = colormap((field.at(i, j) - lo) / span);
            let x = i as f64 * cw;
            let y = VIEWPORT - (j + 1) as f64 * ch;
            let _ = writeln!(
                s,
                r##"<rect x="{x:.3}" y="{y:.3}" width="{:.3}" height="{:.3}" fill="#{r:02x}{gg:02x}{b:02x}"/>"##,
                cw + 0.01,
                ch + 0.01
            );
        }
    }
    s.push_str("</g>\n");
    for contour in contours {
        for line in &contour.polylines {
            let pts: Vec<String> = line
                .iter()
                .map(|p| format!("{:.3},{:.3}", px(p[0]), py(p[1])))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="black" stroke-width="2"/>"#,
                pts.join(" ")
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
