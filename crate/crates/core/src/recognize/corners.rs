//! Corner detection on the uniformly resampled path.
//!
//! The turning angle at a point is the angle between the incoming and
//! outgoing chords spanning 1 mm of arc on either side. Runs of points whose
//! angle reaches 45° contribute their sharpest point as a corner, and corners
//! closer than 2 mm of arc are merged.

use serde::{Deserialize, Serialize};

use crate::geom::{path_length, turning_angle, Point};
use crate::ink::{resample_points, Stroke};

pub const CORNER_SPACING_MM: f64 = 0.25;
/// Chord half-span in resampled points (1 mm).
pub const CORNER_NEIGHBORHOOD: usize = 4;
pub const CORNER_MIN_ANGLE_DEG: f64 = 45.0;
pub const CORNER_MERGE_MM: f64 = 2.0;
pub const CORNER_MIN_PATH_MM: f64 = 2.0;
/// A path is closed when its endpoint gap is below this share of its length.
pub const CLOSURE_RATIO: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Corner {
    pub point: Point,
    /// Arc-length position from the start of the path.
    pub arc_mm: f64,
    /// Signed turning angle in degrees.
    pub angle_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CornerSet {
    pub corners: Vec<Corner>,
    pub closed: bool,
    pub path_length_mm: f64,
}

impl CornerSet {
    pub fn len(&self) -> usize {
        self.corners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corners.is_empty()
    }

    pub fn points(&self) -> Vec<Point> {
        self.corners.iter().map(|c| c.point).collect()
    }
}

pub fn is_closed(points: &[Point]) -> bool {
    let len = path_length(points);
    match (points.first(), points.last()) {
        (Some(a), Some(b)) if len > 0.0 => a.distance(*b) < CLOSURE_RATIO * len,
        _ => false,
    }
}

pub fn detect_corners(stroke: &Stroke) -> CornerSet {
    detect_corners_path(&stroke.points())
}

pub fn detect_corners_path(points: &[Point]) -> CornerSet {
    let length = path_length(points);
    if length < CORNER_MIN_PATH_MM {
        return CornerSet { corners: Vec::new(), closed: false, path_length_mm: length };
    }
    let closed = is_closed(points);
    let h = CORNER_NEIGHBORHOOD;

    let resampled = if closed {
        let mut loop_pts = points.to_vec();
        loop_pts.push(points[0]);
        let mut r = resample_points(&loop_pts, CORNER_SPACING_MM);
        r.pop();
        r
    } else {
        resample_points(points, CORNER_SPACING_MM)
    };
    let n = resampled.len();
    let loop_len = if closed { length + points[0].distance(points[points.len() - 1]) } else { length };
    if n < 2 * h + 1 {
        return CornerSet { corners: Vec::new(), closed, path_length_mm: length };
    }

    let angle_at = |i: usize| -> Option<f64> {
        let (prev, next) = if closed {
            ((i + n - h) % n, (i + h) % n)
        } else if i >= h && i + h < n {
            (i - h, i + h)
        } else {
            return None;
        };
        let a = resampled[i] - resampled[prev];
        let b = resampled[next] - resampled[i];
        if a.norm() == 0.0 || b.norm() == 0.0 {
            return None;
        }
        Some(turning_angle(a, b).to_degrees())
    };
    let angles: Vec<Option<f64>> = (0..n).map(angle_at).collect();
    let is_candidate = |i: usize| angles[i].is_some_and(|a| a.abs() >= CORNER_MIN_ANGLE_DEG);

    // Walk from a non-candidate so that runs never wrap on closed paths.
    let Some(start) = (0..n).find(|&i| !is_candidate(i)) else {
        return CornerSet { corners: Vec::new(), closed, path_length_mm: length };
    };
    let mut picks: Vec<usize> = Vec::new();
    let mut best: Option<usize> = None;
    for k in 1..=n {
        let i = (start + k) % n;
        if is_candidate(i) {
            let a = angles[i].unwrap().abs();
            if best.is_none_or(|b| a > angles[b].unwrap().abs()) {
                best = Some(i);
            }
        } else if let Some(b) = best.take() {
            picks.push(b);
        }
    }
    picks.sort_unstable();

    let arc = |i: usize| i as f64 * CORNER_SPACING_MM;
    let mut corners: Vec<Corner> = Vec::new();
    for i in picks {
        let c = Corner { point: resampled[i], arc_mm: arc(i), angle_deg: angles[i].unwrap() };
        match corners.last_mut() {
            Some(last) if c.arc_mm - last.arc_mm < CORNER_MERGE_MM => {
                if c.angle_deg.abs() > last.angle_deg.abs() {
                    *last = c;
                }
            }
            _ => corners.push(c),
        }
    }
    if closed && corners.len() > 1 {
        let first = corners[0];
        let last = corners[corners.len() - 1];
        if first.arc_mm + loop_len - last.arc_mm < CORNER_MERGE_MM {
            if last.angle_deg.abs() > first.angle_deg.abs() {
                corners[0] = last;
            }
            corners.pop();
            corners.sort_by(|a, b| a.arc_mm.total_cmp(&b.arc_mm));
        }
    }
    CornerSet { corners, closed, path_length_mm: length }
}
