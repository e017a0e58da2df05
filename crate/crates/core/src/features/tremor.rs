//! Tremor estimate: residual of the uniformly resampled path against its
//! centered moving average.

use serde::{Deserialize, Serialize};

use crate::geom::{moving_average, Point};
use crate::ink::{resample_uniform, Stroke};

pub const TREMOR_SPACING_MM: f64 = 0.25;
/// Moving-average window of 9 resampled points.
pub const TREMOR_HALF_WINDOW: usize = 4;
pub const TREMOR_MIN_PATH_MM: f64 = 2.0;
/// Residuals smaller than this are treated as zero when counting crossings.
const CROSSING_DEADBAND_MM: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TremorIndex {
    pub rms_mm: f64,
    pub dominant_freq_hz: f64,
}

impl TremorIndex {
    pub const ZERO: TremorIndex = TremorIndex { rms_mm: 0.0, dominant_freq_hz: 0.0 };
}

/// Signed perpendicular residuals of `points` from their smoothed path.
pub fn perpendicular_residuals(points: &[Point], cyclic: bool) -> Vec<f64> {
    let n = points.len();
    let smooth = moving_average(points, TREMOR_HALF_WINDOW, cyclic);
    (0..n)
        .map(|i| {
            let (a, b) = if cyclic {
                (smooth[(i + n - 1) % n], smooth[(i + 1) % n])
            } else {
                (smooth[i.saturating_sub(1)], smooth[(i + 1).min(n - 1)])
            };
            let tangent = b - a;
            let r = points[i] - smooth[i];
            let len = tangent.norm();
            if len > 0.0 {
                tangent.cross(r) / len
            } else {
                r.norm()
            }
        })
        .collect()
}

pub fn zero_crossings(values: &[f64]) -> usize {
    let mut last = 0.0_f64;
    let mut count = 0;
    for &v in values {
        if v.abs() <= CROSSING_DEADBAND_MM {
            continue;
        }
        if last != 0.0 && v.signum() != last.signum() {
            count += 1;
        }
        last = v;
    }
    count
}

pub fn tremor_index(stroke: &Stroke) -> TremorIndex {
    if stroke.samples.len() < 2 || stroke.path_length() <= TREMOR_MIN_PATH_MM {
        return TremorIndex::ZERO;
    }
    let pts: Vec<Point> = resample_uniform(stroke, TREMOR_SPACING_MM).iter().map(|p| p.point()).collect();
    let residuals = perpendicular_residuals(&pts, false);
    let rms = (residuals.iter().map(|d| d * d).sum::<f64>() / residuals.len() as f64).sqrt();
    let duration_s = stroke.duration_us() as f64 * 1e-6;
    let freq = if duration_s > 0.0 { zero_crossings(&residuals) as f64 / (2.0 * duration_s) } else { 0.0 };
    TremorIndex { rms_mm: rms, dominant_freq_hz: freq }
}
