//! Planar geometry shared by the ink model, recognizer and scorers.
//!
//! Coordinates are page millimeters with the origin at the top-left corner
//! and y growing downwards.

use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn scale(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn lerp(self, other: Point, u: f64) -> Point {
        Point::new(self.x + (other.x - self.x) * u, self.y + (other.y - self.y) * u)
    }
}

impl Add for Point {
    type Output = Point;

    fn add(self, other: Point) -> Point {
        Point::new(self.x + other.x, self.y + other.y)
    }
}

impl Sub for Point {
    type Output = Point;

    fn sub(self, other: Point) -> Point {
        Point::new(self.x - other.x, self.y - other.y)
    }
}

/// Axis-aligned bounding box in millimeters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BBox {
    pub fn from_point(p: Point) -> Self {
        BBox { min_x: p.x, min_y: p.y, max_x: p.x, max_y: p.y }
    }

    /// Tight bounds of a point set, `None` when empty.
    pub fn of_points<I: IntoIterator<Item = Point>>(points: I) -> Option<Self> {
        let mut it = points.into_iter();
        let first = it.next()?;
        Some(it.fold(BBox::from_point(first), |b, p| b.include(p)))
    }

    pub fn include(mut self, p: Point) -> Self {
        self.min_x = self.min_x.min(p.x);
        self.min_y = self.min_y.min(p.y);
        self.max_x = self.max_x.max(p.x);
        self.max_y = self.max_y.max(p.y);
        self
    }

    pub fn union(self, other: BBox) -> BBox {
        BBox {
            min_x: self.min_x.min(other.min_x),
            min_y: self.min_y.min(other.min_y),
            max_x: self.max_x.max(other.max_x),
            max_y: self.max_y.max(other.max_y),
        }
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn center(&self) -> Point {
        Point::new(0.5 * (self.min_x + self.max_x), 0.5 * (self.min_y + self.max_y))
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min_x && p.x <= self.max_x && p.y >= self.min_y && p.y <= self.max_y
    }

    pub fn contains_box(&self, other: &BBox) -> bool {
        other.min_x >= self.min_x && other.max_x <= self.max_x && other.min_y >= self.min_y && other.max_y <= self.max_y
    }

    /// Euclidean gap between two boxes; zero when they touch or overlap.
    pub fn gap(&self, other: &BBox) -> f64 {
        let dx = (other.min_x - self.max_x).max(self.min_x - other.max_x).max(0.0);
        let dy = (other.min_y - self.max_y).max(self.min_y - other.max_y).max(0.0);
        dx.hypot(dy)
    }

    pub fn translate(&self, dx: f64, dy: f64) -> BBox {
        BBox { min_x: self.min_x + dx, min_y: self.min_y + dy, max_x: self.max_x + dx, max_y: self.max_y + dy }
    }
}

pub fn path_length(points: &[Point]) -> f64 {
    points.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// Signed turning angle (radians, counter-clockwise in a y-up frame) from
/// direction `a` to direction `b`.
pub fn turning_angle(a: Point, b: Point) -> f64 {
    a.cross(b).atan2(a.dot(b))
}

/// Centered moving average. The window shrinks symmetrically near the ends
/// of an open path so straight runs are reproduced exactly; a cyclic path
/// wraps around.
pub fn moving_average(points: &[Point], half_window: usize, cyclic: bool) -> Vec<Point> {
    let n = points.len();
    if n == 0 {
        return Vec::new();
    }
    (0..n)
        .map(|i| {
            let h = if cyclic { half_window.min((n - 1) / 2) } else { half_window.min(i).min(n - 1 - i) };
            let mut acc = Point::default();
            for k in 0..=(2 * h) {
                let j = if cyclic { (i + n + k - h) % n } else { i + k - h };
                acc = acc + points[j];
            }
            acc.scale(1.0 / (2 * h + 1) as f64)
        })
        .collect()
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let u = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a.lerp(b, u))
}

pub fn point_polyline_distance(p: Point, line: &[Point]) -> f64 {
    match line {
        [] => f64::INFINITY,
        [only] => p.distance(*only),
        _ => line.windows(2).map(|w| point_segment_distance(p, w[0], w[1])).fold(f64::INFINITY, f64::min),
    }
}

/// Proper or touching intersection of segments `ab` and `cd`.
pub fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    fn orient(p: Point, q: Point, r: Point) -> f64 {
        (q - p).cross(r - p)
    }
    fn on_segment(p: Point, q: Point, r: Point) -> bool {
        r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    }
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

pub fn polylines_intersect(a: &[Point], b: &[Point]) -> bool {
    let (Some(ba), Some(bb)) = (BBox::of_points(a.iter().copied()), BBox::of_points(b.iter().copied())) else {
        return false;
    };
    if ba.gap(&bb) > 0.0 {
        return false;
    }
    a.windows(2).any(|s| b.windows(2).any(|t| segments_intersect(s[0], s[1], t[0], t[1])))
}

/// Length of segment `ab` that lies inside `rect` (Liang-Barsky clipping).
pub fn clipped_length(a: Point, b: Point, rect: &BBox) -> f64 {
    let d = b - a;
    let mut t0 = 0.0_f64;
    let mut t1 = 1.0_f64;
    let checks = [(-d.x, a.x - rect.min_x), (d.x, rect.max_x - a.x), (-d.y, a.y - rect.min_y), (d.y, rect.max_y - a.y)];
    for (p, q) in checks {
        if p == 0.0 {
            if q < 0.0 {
                return 0.0;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
        }
    }
    if t1 <= t0 {
        0.0
    } else {
        (t1 - t0) * d.norm()
    }
}

pub fn polyline_length_inside(points: &[Point], rect: &BBox) -> f64 {
    points.windows(2).map(|w| clipped_length(w[0], w[1], rect)).sum()
}

/// Shoelace area, positive for counter-clockwise order in a y-up frame.
pub fn signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    0.5 * (0..n).map(|i| poly[i].cross(poly[(i + 1) % n])).sum::<f64>()
}

/// Intersection of two convex polygons (Sutherland-Hodgman). Both inputs may
/// be in either winding; the output follows the winding of `subject`.
pub fn convex_intersection(subject: &[Point], clip: &[Point]) -> Vec<Point> {
    if subject.len() < 3 || clip.len() < 3 {
        return Vec::new();
    }
    let orientation = signed_area(clip).signum();
    let inside = |p: Point, a: Point, b: Point| orientation * (b - a).cross(p - a) >= 0.0;
    let mut output = subject.to_vec();
    for i in 0..clip.len() {
        let a = clip[i];
        let b = clip[(i + 1) % clip.len()];
        let input = std::mem::take(&mut output);
        if input.is_empty() {
            break;
        }
        for j in 0..input.len() {
            let cur = input[j];
            let prev = input[(j + input.len() - 1) % input.len()];
            let cur_in = inside(cur, a, b);
            let prev_in = inside(prev, a, b);
            if cur_in {
                if !prev_in {
                    output.push(line_intersection(prev, cur, a, b));
                }
                output.push(cur);
            } else if prev_in {
                output.push(line_intersection(prev, cur, a, b));
            }
        }
    }
    output
}

fn line_intersection(p: Point, q: Point, a: Point, b: Point) -> Point {
    let r = q - p;
    let s = b - a;
    let denom = r.cross(s);
    if denom == 0.0 {
        return q;
    }
    let u = (a - p).cross(s) / denom;
    p.lerp(q, u)
}

/// Drops consecutive vertices closer than `tol` and vertices whose turn is
/// below `min_turn` radians, returning a cleaned cyclic polygon.
pub fn simplify_polygon(poly: &[Point], tol: f64, min_turn: f64) -> Vec<Point> {
    let mut pts: Vec<Point> = Vec::with_capacity(poly.len());
    for &p in poly {
        if pts.last().is_none_or(|q: &Point| q.distance(p) >= tol) {
            pts.push(p);
        }
    }
    while pts.len() > 1 && pts[0].distance(pts[pts.len() - 1]) < tol {
        pts.pop();
    }
    loop {
        let n = pts.len();
        if n < 3 {
            return pts;
        }
        let flat = (0..n).find(|&i| {
            let prev = pts[(i + n - 1) % n];
            let next = pts[(i + 1) % n];
            turning_angle(pts[i] - prev, next - pts[i]).abs() < min_turn
        });
        match flat {
            Some(i) => {
                pts.remove(i);
            }
            None => return pts,
        }
    }
}

/// Principal-axis spread: square roots of the covariance eigenvalues,
/// largest first.
pub fn principal_spreads(points: &[Point]) -> (f64, f64) {
    let n = points.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let inv = 1.0 / n as f64;
    let mean = points.iter().fold(Point::default(), |a, p| a + *p).scale(inv);
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in points {
        let d = *p - mean;
        sxx += d.x * d.x;
        syy += d.y * d.y;
        sxy += d.x * d.y;
    }
    sxx *= inv;
    syy *= inv;
    sxy *= inv;
    let tr = sxx + syy;
    let disc = ((sxx - syy) * (sxx - syy) + 4.0 * sxy * sxy).sqrt();
    let l1 = 0.5 * (tr + disc);
    let l2 = (0.5 * (tr - disc)).max(0.0);
    (l1.max(0.0).sqrt(), l2.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bbox_gap_is_zero_for_overlap() {
        let a = BBox { min_x: 0.0, min_y: 0.0, max_x: 2.0, max_y: 2.0 };
        let b = BBox { min_x: 1.0, min_y: 1.0, max_x: 3.0, max_y: 3.0 };
        assert_eq!(a.gap(&b), 0.0);
        let c = b.translate(5.0, 4.0);
        assert!((a.gap(&c) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn clipping_counts_inside_length() {
        let r = BBox { min_x: 0.0, min_y: 0.0, max_x: 10.0, max_y: 10.0 };
        assert!((clipped_length(Point::new(-5.0, 5.0), Point::new(15.0, 5.0), &r) - 10.0).abs() < 1e-12);
        assert_eq!(clipped_length(Point::new(-5.0, 20.0), Point::new(15.0, 20.0), &r), 0.0);
        assert!((clipped_length(Point::new(2.0, 2.0), Point::new(4.0, 2.0), &r) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn square_overlap_is_square() {
        let a = [Point::new(0.0, 0.0), Point::new(2.0, 0.0), Point::new(2.0, 2.0), Point::new(0.0, 2.0)];
        let b: Vec<Point> = a.iter().map(|p| *p + Point::new(1.0, 1.0)).collect();
        let i = simplify_polygon(&convex_intersection(&a, &b), 1e-9, 1e-6);
        assert_eq!(i.len(), 4);
        assert!((signed_area(&i).abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn crossing_segments() {
        assert!(segments_intersect(
            Point::new(0.0, 0.0),
            Point::new(2.0, 2.0),
            Point::new(0.0, 2.0),
            Point::new(2.0, 0.0)
        ));
        assert!(!segments_intersect(
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(1.0, 1.0)
        ));
    }

    #[test]
    fn moving_average_keeps_lines() {
        let pts: Vec<Point> = (0..20).map(|i| Point::new(i as f64 * 0.25, 1.0)).collect();
        let s = moving_average(&pts, 4, false);
        for (a, b) in pts.iter().zip(&s) {
            assert!(a.distance(*b) < 1e-12);
        }
    }
}
