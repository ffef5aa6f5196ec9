//! SVG rendering of two-variable covers.

use icp_core::{Cover, IntervalBox};

const SIZE: f64 = 480.0;
const MARGIN: f64 = 40.0;

/// Draws proven boxes dark and indeterminate boxes light, inside the
/// declared box, which must be finite.
pub fn render(declared: &IntervalBox, cover: &Cover) -> Result<String, String> {
    let names: Vec<&str> = declared.names().collect();
    if names.len() != 2 {
        return Err(format!("--plot needs exactly two variables, found {}", names.len()));
    }
    let (x, y) = (declared.get(names[0]).unwrap(), declared.get(names[1]).unwrap());
    let (Some((x0, x1)), Some((y0, y1))) = (x.bounds(), y.bounds()) else {
        return Err("--plot needs non-empty declared domains".into());
    };
    if ![x0, x1, y0, y1].iter().all(|v| v.is_finite()) || x0 == x1 || y0 == y1 {
        return Err("--plot needs finite, non-degenerate declared domains".into());
    }
    let sx = |v: f64| MARGIN + (v - x0) / (x1 - x0) * SIZE;
    let sy = |v: f64| MARGIN + (y1 - v) / (y1 - y0) * SIZE;
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{w}\" viewBox=\"0 0 {w} {w}\">\n\
         <rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{SIZE}\" height=\"{SIZE}\" fill=\"white\" stroke=\"black\"/>\n",
        w = SIZE + 2.0 * MARGIN
    );
    for (boxes, fill) in [(&cover.indeterminate, "#9ecae1"), (&cover.proven, "#08519c")] {
        for b in boxes {
            let (Some((a0, a1)), Some((b0, b1))) = (b.get(names[0]).unwrap().bounds(), b.get(names[1]).unwrap().bounds())
            else {
                continue;
            };
            let (left, right) = (sx(a0.max(x0)), sx(a1.min(x1)));
            let (top, bottom) = (sy(b1.min(y1)), sy(b0.max(y0)));
            svg.push_str(&format!(
                "<rect x=\"{left:.3}\" y=\"{top:.3}\" width=\"{:.3}\" height=\"{:.3}\" fill=\"{fill}\" stroke=\"white\" stroke-width=\"0.5\"/>\n",
                right - left,
                bottom - top
            ));
        }
    }
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        MARGIN + SIZE / 2.0,
        SIZE + 1.75 * MARGIN,
        names[0]
    ));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"14\">{}</text>\n",
        MARGIN / 3.0,
        MARGIN + SIZE / 2.0,
        names[1]
    ));
    svg.push_str("</svg>\n");
    Ok(svg)
}
