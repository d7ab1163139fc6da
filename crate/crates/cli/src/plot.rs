//! Standalone SVG figures: persistence diagram scatters and landscape
//! level curves.

use eegtopo_core::landscape::PersistenceLandscape;
use eegtopo_core::persistence::PersistenceDiagram;

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 56.0;

const DIM_COLORS: [&str; 2] = ["#1f77b4", "#ff7f0e"];
const LEVEL_COLORS: [&str; 6] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
];

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        MARGIN + (v - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT - MARGIN - (v - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn open_svg(out: &mut String, title: &str) {
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    out.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">{title}</text>\n",
        WIDTH / 2.0
    ));
}

fn axes(out: &mut String, frame: &Frame, x_label: &str, y_label: &str) {
    let (left, right) = (frame.x(frame.x0), frame.x(frame.x1));
    let (bottom, top) = (frame.y(frame.y0), frame.y(frame.y1));
    out.push_str(&format!(
        "<line x1=\"{left}\" y1=\"{bottom}\" x2=\"{right}\" y2=\"{bottom}\" stroke=\"black\"/>\n"
    ));
    out.push_str(&format!(
        "<line x1=\"{left}\" y1=\"{bottom}\" x2=\"{left}\" y2=\"{top}\" stroke=\"black\"/>\n"
    ));
    for (v, at_x) in [(frame.x0, true), (frame.x1, true), (frame.y0, false), (frame.y1, false)] {
        if at_x {
            let x = frame.x(v);
            out.push_str(&format!(
                "<text x=\"{x}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{v:.2}</text>\n",
                bottom + 18.0
            ));
        } else {
            let y = frame.y(v);
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{v:.2}</text>\n",
                left - 8.0,
                y + 4.0
            ));
        }
    }
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{x_label}</text>\n",
        (left + right) / 2.0,
        HEIGHT - 14.0
    ));
    out.push_str(&format!(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 {})\">{y_label}</text>\n",
        (top + bottom) / 2.0,
        (top + bottom) / 2.0
    ));
}

/// Birth/death scatter with the diagonal; essential classes are drawn as
/// open triangles pinned to the top of the frame.
pub fn diagram_svg(diagram: &PersistenceDiagram, title: &str) -> String {
    let mut max_val: f64 = 0.0;
    for dim in 0..2 {
        for bar in diagram.finite(dim) {
            max_val = max_val.max(bar.death);
        }
        for &birth in diagram.essential_births(dim) {
            max_val = max_val.max(birth);
        }
    }
    let top = if max_val > 0.0 { max_val * 1.1 } else { 1.0 };
    let frame = Frame {
        x0: 0.0,
        x1: top,
        y0: 0.0,
        y1: top,
    };
    let mut out = String::new();
    open_svg(&mut out, title);
    axes(&mut out, &frame, "birth", "death");
    out.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n",
        frame.x(0.0),
        frame.y(0.0),
        frame.x(top),
        frame.y(top)
    ));
    for (dim, color) in DIM_COLORS.iter().enumerate() {
        for bar in diagram.finite(dim) {
            out.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"{color}\" fill-opacity=\"0.75\"/>\n",
                frame.x(bar.birth),
                frame.y(bar.death),
            ));
        }
        for &birth in diagram.essential_births(dim) {
            let (x, y) = (frame.x(birth), frame.y(top));
            out.push_str(&format!(
                "<path d=\"M {:.2} {:.2} L {:.2} {:.2} L {:.2} {:.2} Z\" fill=\"none\" stroke=\"{color}\"/>\n",
                x, y - 5.0, x - 5.0, y + 4.0, x + 5.0, y + 4.0,
            ));
        }
    }
    out.push_str("</svg>\n");
    out
}

/// One polyline per landscape level.
pub fn landscape_svg(landscape: &PersistenceLandscape, title: &str) -> String {
    let grid = landscape.grid();
    let peak = landscape
        .levels()
        .iter()
        .flatten()
        .copied()
        .fold(0.0, f64::max);
    let frame = Frame {
        x0: grid.start,
        x1: grid.point(grid.len - 1),
        y0: 0.0,
        y1: if peak > 0.0 { peak * 1.1 } else { 1.0 },
    };
    let mut out = String::new();
    open_svg(&mut out, title);
    axes(&mut out, &frame, "filtration value", "landscape");
    for (k, level) in landscape.levels().iter().enumerate() {
        let points: Vec<String> = level
            .iter()
            .enumerate()
            .map(|(i, &v)| format!("{:.2},{:.2}", frame.x(grid.point(i)), frame.y(v)))
            .collect();
        out.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
            points.join(" "),
            LEVEL_COLORS[k % LEVEL_COLORS.len()]
        ));
    }
    out.push_str("</svg>\n");
    out
}
