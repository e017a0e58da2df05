use super::catalog::{FeatureLevel, FeatureVector};
use super::tremor::{tremor_index, TREMOR_MIN_PATH_MM, TREMOR_SPACING_MM};
use crate::geom::{turning_angle, Point};
use crate::ink::{resample_uniform, Stroke};

const DIRECTION_CHANGE_MIN_DEG: f64 = 20.0;

/// Central differences on interior samples, one-sided at the ends.
fn differentiate(values: &[Point], t_s: &[f64]) -> Vec<Point> {
    let n = values.len();
    if n < 2 {
        return vec![Point::default(); n];
    }
    (0..n)
        .map(|i| {
            let (a, b) = match i {
                0 => (0, 1),
                _ if i == n - 1 => (n - 2, n - 1),
                _ => (i - 1, i + 1),
            };
            (values[b] - values[a]).scale(1.0 / (t_s[b] - t_s[a]))
        })
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn std_pop(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
}

fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

/// Turning angles and curvature on the 0.25 mm resampled path.
fn turning_profile(stroke: &Stroke) -> (Vec<f64>, Vec<f64>) {
    let pts: Vec<Point> = resample_uniform(stroke, TREMOR_SPACING_MM).iter().map(|p| p.point()).collect();
    let mut angles = Vec::new();
    let mut curvature = Vec::new();
    for w in pts.windows(3) {
        let a = w[1] - w[0];
        let b = w[2] - w[1];
        let arc = 0.5 * (a.norm() + b.norm());
        if arc == 0.0 {
            continue;
        }
        let theta = turning_angle(a, b);
        angles.push(theta);
        curvature.push(theta.abs() / arc);
    }
    (angles, curvature)
}

fn direction_changes(angles: &[f64]) -> usize {
    let min = DIRECTION_CHANGE_MIN_DEG.to_radians();
    let sharp: Vec<f64> = angles.iter().copied().filter(|a| a.abs() > min).collect();
    sharp.windows(2).filter(|w| w[0].signum() != w[1].signum()).count()
}

/// All stroke-level catalog features. Strokes with a single sample or a path
/// of at most 2 mm get zero kinematic, curvature and tremor features.
pub fn stroke_features(stroke: &Stroke) -> FeatureVector {
    let n = stroke.samples.len();
    let pts = stroke.points();
    let path = stroke.path_length();
    let displacement = stroke.first_point().distance(stroke.last_point());
    let straightness = if path > 0.0 { (displacement / path).min(1.0) } else { 1.0 };
    let pressures: Vec<f64> = stroke.samples.iter().map(|s| s.pressure).collect();
    let bbox = stroke.bbox();

    let mut fv = FeatureVector::new(FeatureLevel::Stroke, stroke.index);
    fv.set("sample_count", n as f64);
    fv.set("duration_s", stroke.duration_us() as f64 * 1e-6);
    fv.set("path_length_mm", path);
    fv.set("displacement_mm", displacement);
    fv.set("straightness", straightness);
    fv.set("pressure_mean", mean(&pressures));
    fv.set("pressure_max", pressures.iter().copied().fold(f64::MIN, f64::max));
    fv.set("pressure_min", pressures.iter().copied().fold(f64::MAX, f64::min));
    fv.set("pressure_std", std_pop(&pressures));

    let degenerate = n <= 1 || path <= TREMOR_MIN_PATH_MM;
    let (speed, accel, jerk, angles, curvature) = if degenerate {
        Default::default()
    } else {
        let t_s: Vec<f64> = stroke.samples.iter().map(|s| s.t as f64 * 1e-6).collect();
        let v = differentiate(&pts, &t_s);
        let a = differentiate(&v, &t_s);
        let j = differentiate(&a, &t_s);
        let (angles, curvature) = turning_profile(stroke);
        (
            v.iter().map(|p| p.norm()).collect::<Vec<_>>(),
            a.iter().map(|p| p.norm()).collect::<Vec<_>>(),
            j.iter().map(|p| p.norm()).collect::<Vec<_>>(),
            angles,
            curvature,
        )
    };
    fv.set("speed_mean_mm_s", mean(&speed));
    fv.set("speed_max_mm_s", max(&speed));
    fv.set("speed_std_mm_s", std_pop(&speed));
    fv.set("accel_mean_abs_mm_s2", mean(&accel));
    fv.set("accel_max_abs_mm_s2", max(&accel));
    fv.set("jerk_mean_abs_mm_s3", mean(&jerk));
    fv.set("direction_change_count", direction_changes(&angles) as f64);
    fv.set("curvature_mean_per_mm", mean(&curvature));
    fv.set("curvature_max_per_mm", max(&curvature));

    let tremor = tremor_index(stroke);
    fv.set("tremor_index_mm", tremor.rms_mm);
    fv.set("tremor_dominant_freq_hz", tremor.dominant_freq_hz);
    fv.set("bbox_width_mm", bbox.width());
    fv.set("bbox_height_mm", bbox.height());
    fv
}
