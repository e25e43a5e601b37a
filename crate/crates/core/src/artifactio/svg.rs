use std::fmt::Write;

use crate::model::Model;
use crate::netgraph::NodeKind;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvgStyle {
    /// Stroke width for the smallest diameter, px.
    pub w_min: f64,
    /// Stroke width for the largest diameter, px.
    pub w_max: f64,
    /// Output width, px; height follows the aspect ratio.
    pub width_px: f64,
}

impl Default for SvgStyle {
    fn default() -> Self {
        SvgStyle {
            w_min: 0.5,
            w_max: 6.0,
            width_px: 1200.0,
        }
    }
}

/// Linear stroke width for diameter `d` on the `[d_min, d_max]` scale.
pub fn stroke_width(d: Option<f64>, d_min: f64, d_max: f64, style: &SvgStyle) -> f64 {
    match d {
        Some(d) if d_max > d_min => style.w_min + (d - d_min) / (d_max - d_min) * (style.w_max - style.w_min),
        _ => style.w_min,
    }
}

/// Plane point to SVG user space (y down), without negative zeros.
fn screen(p: crate::geo::PlanePoint) -> (f64, f64) {
    (p.x + 0.0, 0.0 - p.y)
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
        .replace('\'', "&apos;")
}

/// Map of the model: pipes as lines whose width encodes the inner diameter,
/// buildings and consumers as small circles, plants as squares.
pub fn render_svg(model: &Model, style: &SvgStyle) -> String {
    let g = &model.graph;
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for n in g.nodes() {
        let (x, y) = screen(n.pos);
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, y0, x1, y1) = (0.0, 0.0, 1.0, 1.0);
    }
    let (w, h) = ((x1 - x0).max(1.0), (y1 - y0).max(1.0));
    let (mx, my) = (0.02 * w, 0.02 * h);
    let (vx, vy, vw, vh) = (x0 - mx, y0 - my, w + 2.0 * mx, h + 2.0 * my);
    let px = vw / style.width_px; // meters per output pixel
    let height_px = style.width_px * vh / vw;

    let diam: Vec<f64> = g.edges().filter_map(|(_, e)| e.inner_diameter).collect();
    let d_min = diam.iter().copied().fold(f64::INFINITY, f64::min);
    let d_max = diam.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{:.0}\" height=\"{:.0}\" viewBox=\"{vx:.3} {vy:.3} {vw:.3} {vh:.3}\">",
        style.width_px, height_px
    );
    s.push_str("<rect class=\"background\" x=\"");
    let _ = writeln!(
        s,
        "{vx:.3}\" y=\"{vy:.3}\" width=\"{vw:.3}\" height=\"{vh:.3}\" fill=\"white\"/>"
    );
    s.push_str("<g id=\"pipes\" stroke=\"#c0392b\" stroke-linecap=\"round\">\n");
    for (_, e) in g.edges() {
        let (a, b) = (screen(g.node(&e.u).unwrap().pos), screen(g.node(&e.v).unwrap().pos));
        let sw = stroke_width(e.inner_diameter, d_min, d_max, style) * px;
        let _ = writeln!(
            s,
            "<line class=\"{}\" data-u=\"{}\" data-v=\"{}\" x1=\"{:.3}\" y1=\"{:.3}\" x2=\"{:.3}\" y2=\"{:.3}\" stroke-width=\"{:.4}\"/>",
            if e.service { "service" } else { "main" },
            esc(e.u.as_str()),
            esc(e.v.as_str()),
            a.0,
            a.1,
            b.0,
            b.1,
            sw
        );
    }
    s.push_str("</g>\n<g id=\"nodes\">\n");
    for n in g.nodes() {
        let (x, y) = screen(n.pos);
        let id = esc(n.id.as_str());
        match n.kind {
            NodeKind::Plant => {
                let r = 6.0 * px;
                let _ = writeln!(
                    s,
                    "<rect class=\"plant\" data-id=\"{id}\" x=\"{:.3}\" y=\"{:.3}\" width=\"{:.3}\" height=\"{:.3}\" fill=\"#1f3a93\"/>",
                    x - r,
                    y - r,
                    2.0 * r,
                    2.0 * r
                );
            }
            kind => {
                let (r, fill) = match kind {
                    NodeKind::Building => (2.0, "#e67e22"),
                    NodeKind::Consumer => (3.0, "#8e44ad"),
                    _ => (0.6, "#555555"),
                };
                let _ = writeln!(
                    s,
                    "<circle class=\"{}\" data-id=\"{id}\" cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"{:.3}\" fill=\"{fill}\"/>",
                    kind.as_str(),
                    r * px
                );
            }
        }
    }
    s.push_str("</g>\n</svg>\n");
    s
}
