//! SVG snapshots: obstacles, decomposition cells, path nodes in blue,
//! passage positions in red and one polyline per robot trace.

use std::fmt::Write as _;

use flowsched_core::sim::Trajectory;
use flowsched_core::{CellSet, GridMap, NetGraph, Vec2};

const PX: f64 = 10.0;

const CELL_FILLS: [&str; 6] = ["#f3f7ff", "#f7fff3", "#fff7f3", "#f7f3ff", "#fffff0", "#f0ffff"];

struct Frame {
    origin: Vec2,
    height: f64,
}

impl Frame {
    fn x(&self, x: f64) -> f64 {
        (x - self.origin.x) * PX
    }

    fn y(&self, y: f64) -> f64 {
        (self.height - (y - self.origin.y)) * PX
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Layers<'a> {
    pub cells: Option<&'a CellSet>,
    pub network: Option<&'a NetGraph>,
    pub trace: Option<&'a Trajectory>,
}

pub fn render_snapshot(map: &GridMap, layers: Layers<'_>) -> String {
    let b = map.bounds();
    let f = Frame {
        origin: b.min,
        height: b.height(),
    };
    let (w, h) = (b.width() * PX, b.height() * PX);
    let res = map.resolution() * PX;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);

    if let Some(cells) = layers.cells {
        for c in cells.cells() {
            let fill = CELL_FILLS[c.id.0 as usize % CELL_FILLS.len()];
            let _ = write!(out, r#"<path class="cell" fill="{fill}" stroke="none" d=""#);
            for s in &c.row_spans {
                let r = map.cell_rect(s.x0, s.row);
                let _ = write!(
                    out,
                    "M{} {}h{}v{}h{}z",
                    f.x(r.min.x),
                    f.y(r.max.y),
                    (s.x1 - s.x0) as f64 * res,
                    res,
                    -((s.x1 - s.x0) as f64 * res)
                );
            }
            out.push_str("\"/>\n");
        }
    }

    for y in 0..map.height() {
        for x in 0..map.width() {
            if map.is_occupied(x, y) {
                let r = map.cell_rect(x, y);
                let _ = writeln!(
                    out,
                    r#"<rect class="obstacle" x="{}" y="{}" width="{res}" height="{res}" fill="black"/>"#,
                    f.x(r.min.x),
                    f.y(r.max.y)
                );
            }
        }
    }

    if let Some(g) = layers.network {
        for l in &g.links {
            let (a, b) = (g.node(l.start).position, g.node(l.end).position);
            let _ = writeln!(
                out,
                r##"<line class="link" x1="{}" y1="{}" x2="{}" y2="{}" stroke="#9db4d6" stroke-width="0.5"/>"##,
                f.x(a.x),
                f.y(a.y),
                f.x(b.x),
                f.y(b.y)
            );
        }
        for p in &g.positions {
            let _ = writeln!(
                out,
                r#"<circle class="pos" cx="{}" cy="{}" r="1.5" fill="red"/>"#,
                f.x(p.position.x),
                f.y(p.position.y)
            );
        }
        for n in &g.nodes {
            let _ = writeln!(
                out,
                r#"<circle class="node" cx="{}" cy="{}" r="3" fill="blue" fill-opacity="0.6"/>"#,
                f.x(n.position.x),
                f.y(n.position.y)
            );
        }
    }

    if let Some(tr) = layers.trace {
        let robots = tr.frames.first().map_or(0, Vec::len);
        for i in 0..robots {
            let _ = write!(out, r##"<polyline class="trace" fill="none" stroke="#2a9d4b" stroke-width="0.8" points=""##);
            for frame in &tr.frames {
                if let Some(p) = frame.get(i) {
                    let _ = write!(out, "{:.2},{:.2} ", f.x(p.x), f.y(p.y));
                }
            }
            out.push_str("\"/>\n");
        }
    }
    out.push_str("</svg>\n");
    out
}
