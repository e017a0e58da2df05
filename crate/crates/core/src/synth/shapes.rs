use rand::Rng;
use serde::{Deserialize, Serialize};

use super::builder::{SessionBuilder, WITHIN_SYMBOL_PAUSE_US};
use super::stroke::{BasePath, Style};
use crate::error::{InkError, Result};
use crate::geom::Point;
use crate::ink::{InkSession, Page, SessionMeta, Source};
use crate::recognize::Label;

/// Labels the shape generator can draw.
pub const SHAPE_LABELS: [Label; 7] =
    [Label::Line, Label::Circle, Label::Triangle, Label::Rectangle, Label::Diamond, Label::Pentagon, Label::CrossOut];

/// Placement of a generated shape on the page.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapePlacement {
    pub center: Point,
    /// Circumradius (half length for lines).
    pub size_mm: f64,
    pub rotation_deg: f64,
    /// Width over height for rectangles and diamonds.
    pub aspect: f64,
    /// Index of the vertex where drawing starts.
    pub start_vertex: usize,
}

impl ShapePlacement {
    pub fn new(center: Point, size_mm: f64) -> Self {
        ShapePlacement { center, size_mm, rotation_deg: 0.0, aspect: 1.0, start_vertex: 0 }
    }

    fn transform(&self, p: Point) -> Point {
        let (s, c) = self.rotation_deg.to_radians().sin_cos();
        Point::new(self.center.x + c * p.x - s * p.y, self.center.y + s * p.x + c * p.y)
    }
}

/// Vertices of a regular polygon with a vertex at angle `phase_deg`
/// (mathematical angle in page coordinates).
pub fn regular_polygon(center: Point, radius: f64, n: usize, phase_deg: f64) -> Vec<Point> {
    (0..n)
        .map(|i| {
            let a = (phase_deg + 360.0 * i as f64 / n as f64).to_radians();
            Point::new(center.x + radius * a.cos(), center.y + radius * a.sin())
        })
        .collect()
}

fn closed_from(vertices: &[Point], start: usize) -> Vec<Point> {
    let n = vertices.len();
    (0..=n).map(|i| vertices[(start + i) % n]).collect()
}

/// Base paths of the strokes that make up one shape.
pub fn shape_paths(label: Label, at: &ShapePlacement) -> Result<Vec<BasePath>> {
    let r = at.size_mm;
    let local =
        |pts: &[(f64, f64)]| -> Vec<Point> { pts.iter().map(|&(x, y)| at.transform(Point::new(x, y))).collect() };
    Ok(match label {
        Label::Line => vec![BasePath::polyline(local(&[(-r, 0.0), (r, 0.0)]))],
        Label::Circle => {
            vec![BasePath::Arc { center: at.center, radius: r, start_deg: at.rotation_deg, sweep_deg: 360.0 }]
        }
        Label::Triangle | Label::Pentagon => {
            let n = if label == Label::Triangle { 3 } else { 5 };
            let v = regular_polygon(at.center, r, n, at.rotation_deg - 90.0);
            vec![BasePath::polyline(closed_from(&v, at.start_vertex % n))]
        }
        Label::Rectangle | Label::Diamond => {
            // half extents from the circumradius and aspect ratio
            let hh = r / (1.0 + at.aspect * at.aspect).sqrt();
            let hw = hh * at.aspect;
            let v = if label == Label::Rectangle {
                local(&[(-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh)])
            } else {
                local(&[(0.0, -hh), (hw, 0.0), (0.0, hh), (-hw, 0.0)])
            };
            vec![BasePath::polyline(closed_from(&v, at.start_vertex % 4))]
        }
        Label::CrossOut => vec![
            BasePath::polyline(local(&[(-r * 0.7, -r * 0.7), (r * 0.7, r * 0.7)])),
            BasePath::polyline(local(&[(-r * 0.7, r * 0.7), (r * 0.7, -r * 0.7)])),
        ],
        other => return Err(InkError::InvalidSpec(format!("no generator for {other}"))),
    })
}

/// Random placement of a shape, scaled and rotated, inside a page area
/// centered on `center`.
pub fn random_placement(label: Label, center: Point, rng: &mut impl Rng) -> ShapePlacement {
    let rotation_deg = match label {
        Label::Rectangle | Label::Diamond => rng.random_range(-8.0..8.0),
        _ => rng.random_range(0.0..360.0),
    };
    ShapePlacement {
        center,
        size_mm: match label {
            Label::Line => rng.random_range(10.0..40.0),
            _ => rng.random_range(12.0..35.0),
        },
        rotation_deg,
        aspect: match label {
            Label::Rectangle => rng.random_range(0.6..1.8),
            Label::Diamond => rng.random_range(0.75..1.33),
            _ => 1.0,
        },
        start_vertex: rng.random_range(0..5),
    }
}

/// Draws a shape as one stroke group; returns the stroke indices.
pub fn draw_shape(b: &mut SessionBuilder, label: Label, at: &ShapePlacement) -> Result<Vec<usize>> {
    let mut indices = Vec::new();
    for (i, path) in shape_paths(label, at)?.into_iter().enumerate() {
        if i > 0 {
            b.hover(WITHIN_SYMBOL_PAUSE_US, path.at(0.0).0);
        }
        indices.push(b.stroke(path)?);
    }
    Ok(indices)
}

/// A one-shape session: a randomly placed `label` in the middle of an A4 page.
pub fn gen_shape_session(label: Label, style: Style, seed: u64) -> Result<(InkSession, ShapePlacement)> {
    let mut b = SessionBuilder::new(style, seed);
    let at = random_placement(label, Point::new(105.0, 148.0), b.rng());
    draw_shape(&mut b, label, &at)?;
    let (samples, _) = b.finish();
    let meta = SessionMeta {
        session_id: format!("shape-{label}-{seed}"),
        test_id: "shape".into(),
        subject_pseudonym: format!("synthetic-{seed}"),
        page: Page::A4,
        source: Source::TabletStylus,
    };
    Ok((InkSession::from_samples(meta, &samples)?, at))
}
