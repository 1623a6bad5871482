//! SVG drawings of vertex closures of Montesinos tangles.
//!
//! Each summand is drawn as a 3-braid on rows 1 to 3, boxes left to right,
//! with its rows led out to the corners as in `ravel::diagram::build_braid`:
//! row 1 to NW, row 2 around to SW, row 3 under the braid to SE, the cap on
//! the right and the free row to NE. Summands sit side by side and the four
//! outer ends meet at the closing vertex above.

use std::fmt::Write as _;

use ravel::diagram::{braid_boxes, braid_over02, BraidBox, Slot};
use ravel::insertion::{apply_insertion, VertexInsertion};
use ravel::tangle_core::{MontesinosPresentation, RowPair, Summand};

use crate::CliError;

const SCALE: f64 = 40.0;
const GAP: f64 = 0.5;
const BOTTOM: f64 = 5.0;
const APEX: f64 = -1.5;

type Pt = (f64, f64);

enum Layout {
    Braid { boxes: Vec<BraidBox>, cap: RowPair },
    Vertical,
}

impl Layout {
    fn slots(&self) -> usize {
        match self {
            Layout::Braid { boxes, .. } => boxes.iter().map(|b| b.slots.len()).sum(),
            Layout::Vertical => 0,
        }
    }

    fn width(&self) -> f64 {
        match self {
            Layout::Braid { .. } => 2.0 + self.slots() as f64 + 1.6,
            Layout::Vertical => 2.0,
        }
    }
}

#[derive(Default)]
struct Canvas {
    strands: Vec<Vec<Pt>>,
    // Over strands are drawn last on a white halo.
    overs: Vec<(Pt, Pt)>,
    crossings: Vec<Pt>,
    vertices: Vec<Pt>,
}

fn row_y(r: usize) -> f64 {
    r as f64
}

fn draw_summand(c: &mut Canvas, x0: f64, t: &Layout) {
    let w = t.width();
    let (boxes, cap) = match t {
        Layout::Vertical => {
            c.strands.push(vec![(x0, 1.0), (x0 + 0.7, 1.0), (x0 + 0.7, BOTTOM), (x0, BOTTOM)]);
            c.strands.push(vec![(x0 + w, 1.0), (x0 + 1.3, 1.0), (x0 + 1.3, BOTTOM), (x0 + w, BOTTOM)]);
            return;
        }
        Layout::Braid { boxes, cap } => (boxes, *cap),
    };
    let xs = x0 + 2.0;
    c.strands.push(vec![(x0, 1.0), (xs, 1.0)]);
    c.strands.push(vec![(xs, 2.0), (x0 + 0.5, 2.0), (x0 + 0.5, BOTTOM), (x0, BOTTOM)]);
    c.strands.push(vec![
        (xs, 3.0),
        (x0 + 1.2, 3.0),
        (x0 + 1.2, 4.2),
        (x0 + w - 0.3, 4.2),
        (x0 + w - 0.3, BOTTOM),
        (x0 + w, BOTTOM),
    ]);
    let mut x = xs;
    for (i, b) in boxes.iter().enumerate() {
        let (top, bot) = RowPair::of_box(i + 1).rows();
        let third = 6 - top - bot;
        for slot in &b.slots {
            let (yt, yb, y3) = (row_y(top), row_y(bot), row_y(third));
            c.strands.push(vec![(x, y3), (x + 1.0, y3)]);
            let down = ((x, yt), (x + 1.0, yb));
            let up = ((x, yb), (x + 1.0, yt));
            match slot {
                Slot::Vertex => {
                    c.strands.push(vec![down.0, down.1]);
                    c.strands.push(vec![up.0, up.1]);
                    c.vertices.push((x + 0.5, (yt + yb) / 2.0));
                }
                Slot::Crossing => {
                    let (over, under) = if braid_over02(b.sign, i + 1) { (down, up) } else { (up, down) };
                    c.strands.push(vec![under.0, under.1]);
                    c.overs.push(over);
                    c.crossings.push((x + 0.5, (yt + yb) / 2.0));
                }
            }
            x += 1.0;
        }
    }
    let (a, b) = cap.rows();
    c.strands.push(vec![(x, row_y(a)), (x + 0.5, row_y(a)), (x + 0.5, row_y(b)), (x, row_y(b))]);
    match cap.outside() {
        1 => c.strands.push(vec![(x, 1.0), (x0 + w, 1.0)]),
        r => c.strands.push(vec![(x, row_y(r)), (x + 1.0, row_y(r)), (x + 1.0, 1.0), (x0 + w, 1.0)]),
    }
}

fn layouts(m: &MontesinosPresentation, v: Option<&VertexInsertion>) -> Result<Vec<Layout>, CliError> {
    if let Some(v) = v {
        let d = apply_insertion(m, v)?;
        return Ok(d
            .summands
            .iter()
            .map(|s| match s.source {
                Summand::Infinity => Layout::Vertical,
                Summand::Rational(_) => Layout::Braid { boxes: s.boxes.clone(), cap: s.cap },
            })
            .collect());
    }
    Ok(m.summands
        .iter()
        .map(|s| match s {
            Summand::Infinity => Layout::Vertical,
            Summand::Rational(b) => Layout::Braid { boxes: braid_boxes(b), cap: b.cap_pair() },
        })
        .collect())
}

fn polyline(s: &mut String, pts: &[Pt], style: &str) {
    let p: Vec<String> = pts.iter().map(|(x, y)| format!("{:.1},{:.1}", x * SCALE, y * SCALE)).collect();
    let _ = writeln!(s, r#"<polyline points="{}" {style}/>"#, p.join(" "));
}

/// SVG of the vertex closure, with any inserted vertices drawn as dots.
pub fn render_svg(m: &MontesinosPresentation, v: Option<&VertexInsertion>) -> Result<String, CliError> {
    let ls = layouts(m, v)?;
    let mut c = Canvas::default();
    let mut x = 0.0;
    for (i, t) in ls.iter().enumerate() {
        if i > 0 {
            c.strands.push(vec![(x, 1.0), (x + GAP, 1.0)]);
            c.strands.push(vec![(x, BOTTOM), (x + GAP, BOTTOM)]);
            x += GAP;
        }
        draw_summand(&mut c, x, t);
        x += t.width();
    }
    let w = ((x) / 2.0, APEX);
    c.strands.push(vec![(0.0, 1.0), (0.0, -0.5), w]);
    c.strands.push(vec![(x, 1.0), (x, -0.5), w]);
    c.strands.push(vec![(0.0, BOTTOM), (-0.8, BOTTOM), (-0.8, APEX), w]);
    c.strands.push(vec![(x, BOTTOM), (x + 0.8, BOTTOM), (x + 0.8, APEX), w]);

    let (left, top) = (-1.5 * SCALE, (APEX - 1.0) * SCALE);
    let (width, height) = ((x + 3.0) * SCALE, (BOTTOM - APEX + 2.0) * SCALE);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{left:.1} {top:.1} {width:.1} {height:.1}" width="{width:.0}" height="{height:.0}">"#
    );
    let _ = writeln!(s, "<title>{}</title>", title(m, v));
    let _ = writeln!(s, r#"<rect x="{left:.1}" y="{top:.1}" width="{width:.1}" height="{height:.1}" fill="white"/>"#);
    let line = r#"fill="none" stroke="black" stroke-width="3" stroke-linejoin="round""#;
    for p in &c.strands {
        polyline(&mut s, p, line);
    }
    for (k, (a, b)) in c.overs.iter().enumerate() {
        let (cx, cy) = c.crossings[k];
        let _ = writeln!(s, r#"<g class="crossing" data-x="{:.1}" data-y="{:.1}">"#, cx * SCALE, cy * SCALE);
        polyline(&mut s, &[*a, *b], r#"fill="none" stroke="white" stroke-width="11""#);
        polyline(&mut s, &[*a, *b], line);
        s.push_str("</g>\n");
    }
    for (cx, cy) in &c.vertices {
        let _ = writeln!(s, r#"<circle class="vertex" cx="{:.1}" cy="{:.1}" r="7" fill="black"/>"#, cx * SCALE, cy * SCALE);
    }
    let _ = writeln!(
        s,
        r#"<circle class="closing-vertex" cx="{:.1}" cy="{:.1}" r="8" fill="black"/>"#,
        w.0 * SCALE,
        w.1 * SCALE
    );
    s.push_str("</svg>\n");
    Ok(s)
}

fn title(m: &MontesinosPresentation, v: Option<&VertexInsertion>) -> String {
    match v {
        Some(v) => format!("{m} {v}"),
        None => m.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ravel::insertion::CrossingAddress;
    use ravel::tangle_core::BoxVector;

    fn m(v: &[&[i64]]) -> MontesinosPresentation {
        MontesinosPresentation::from_box_vectors(v.iter().map(|b| BoxVector::new(b.to_vec()).unwrap()).collect())
    }

    #[test]
    fn draws_every_crossing() {
        let svg = render_svg(&m(&[&[2, 3]]), None).unwrap();
        assert_eq!(svg.matches(r#"class="crossing""#).count(), 5);
        assert_eq!(svg.matches(r#"class="closing-vertex""#).count(), 1);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn inserted_vertices_are_dots() {
        let v = VertexInsertion::new(vec![CrossingAddress::new(2, 2, 1)]).unwrap();
        let p = MontesinosPresentation::new(vec![Summand::Infinity, m(&[&[0, 1, 2]]).summands[0].clone()]);
        let svg = render_svg(&p, Some(&v)).unwrap();
        assert_eq!(svg.matches(r#"class="vertex""#).count(), 1);
        assert_eq!(svg.matches(r#"class="crossing""#).count(), 2);
    }
}
