use serde::{Deserialize, Serialize};

use super::Stroke;
use crate::geom::Point;

/// A resampled path point with an interpolated timestamp (microseconds).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedPoint {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl TimedPoint {
    pub fn point(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// Resamples a stroke at uniform arc-length `spacing` (mm).
///
/// The first and last output points are the stroke endpoints; the final
/// interval may be shorter than `spacing`. A stroke whose samples all
/// coincide yields its first sample only.
pub fn resample_uniform(stroke: &Stroke, spacing: f64) -> Vec<TimedPoint> {
    assert!(spacing > 0.0, "spacing must be positive");
    let pts: Vec<(Point, f64)> = stroke.samples.iter().map(|s| (s.point(), s.t as f64)).collect();
    resample_impl(&pts, spacing).into_iter().map(|(p, t)| TimedPoint { x: p.x, y: p.y, t }).collect()
}

/// Untimed variant of [`resample_uniform`] for arbitrary polylines.
pub fn resample_points(points: &[Point], spacing: f64) -> Vec<Point> {
    assert!(spacing > 0.0, "spacing must be positive");
    let pts: Vec<(Point, f64)> = points.iter().map(|p| (*p, 0.0)).collect();
    resample_impl(&pts, spacing).into_iter().map(|(p, _)| p).collect()
}

fn resample_impl(pts: &[(Point, f64)], spacing: f64) -> Vec<(Point, f64)> {
    if pts.is_empty() {
        return Vec::new();
    }
    let mut cumulative = Vec::with_capacity(pts.len());
    let mut acc = 0.0;
    cumulative.push(0.0);
    for w in pts.windows(2) {
        acc += w[0].0.distance(w[1].0);
        cumulative.push(acc);
    }
    let total = acc;
    if total == 0.0 {
        return vec![pts[0]];
    }

    let mut out = vec![pts[0]];
    let mut seg = 0;
    let mut k = 1usize;
    loop {
        let s = k as f64 * spacing;
        if s >= total - spacing * 1e-9 {
            break;
        }
        while cumulative[seg + 1] < s {
            seg += 1;
        }
        let len = cumulative[seg + 1] - cumulative[seg];
        let u = if len > 0.0 { (s - cumulative[seg]) / len } else { 0.0 };
        let (a, ta) = pts[seg];
        let (b, tb) = pts[seg + 1];
        out.push((a.lerp(b, u), ta + (tb - ta) * u));
        k += 1;
    }
    out.push(pts[pts.len() - 1]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ink::RawSample;

    fn stroke(points: &[(f64, f64)]) -> Stroke {
        Stroke {
            index: 0,
            samples: points
                .iter()
                .enumerate()
                .map(|(i, &(x, y))| RawSample::down(i as u64 * 1000, x, y, 0.5))
                .collect(),
        }
    }

    #[test]
    fn two_point_line() {
        let r = resample_uniform(&stroke(&[(0.0, 0.0), (10.0, 0.0)]), 2.0);
        let xs: Vec<f64> = r.iter().map(|p| p.x).collect();
        assert_eq!(xs.len(), 6);
        for (x, e) in xs.iter().zip([0.0, 2.0, 4.0, 6.0, 8.0, 10.0]) {
            assert!((x - e).abs() < 1e-12);
        }
        assert!((r[1].t - 200.0).abs() < 1e-9);
        assert_eq!(r[5].t, 1000.0);
    }

    #[test]
    fn shorter_than_spacing() {
        let r = resample_uniform(&stroke(&[(0.0, 0.0), (0.3, 0.4)]), 2.0);
        assert_eq!(r.len(), 2);
        assert_eq!((r[1].x, r[1].y), (0.3, 0.4));
    }

    #[test]
    fn coincident_samples() {
        let r = resample_uniform(&stroke(&[(1.0, 1.0), (1.0, 1.0), (1.0, 1.0)]), 0.25);
        assert_eq!(r.len(), 1);
    }

    #[test]
    fn spacing_along_corner() {
        let r = resample_points(&[Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0)], 0.3);
        // 2 mm of arc: 0, .3, ... 1.8 then the endpoint
        assert_eq!(r.len(), 8);
        assert!((r[3].x - 0.9).abs() < 1e-12 && r[3].y == 0.0);
        assert!((r[4].x - 1.0).abs() < 1e-12 && (r[4].y - 0.2).abs() < 1e-12);
    }
}
