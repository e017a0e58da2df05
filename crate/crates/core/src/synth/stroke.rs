use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{InkError, Result};
use crate::geom::Point;
use crate::ink::RawSample;

/// Centerline of a stroke.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasePath {
    Polyline {
        points: Vec<Point>,
    },
    /// Circular arc; angles in degrees clockwise from 12 o'clock, a positive
    /// sweep runs clockwise.
    Arc {
        center: Point,
        radius: f64,
        start_deg: f64,
        sweep_deg: f64,
    },
}

impl BasePath {
    pub fn polyline(points: Vec<Point>) -> Self {
        BasePath::Polyline { points }
    }

    pub fn length(&self) -> f64 {
        match self {
            BasePath::Polyline { points } => crate::geom::path_length(points),
            BasePath::Arc { radius, sweep_deg, .. } => radius * sweep_deg.abs().to_radians(),
        }
    }

    /// Point and unit tangent at arc length `s`.
    pub fn at(&self, s: f64) -> (Point, Point) {
        match self {
            BasePath::Arc { center, radius, start_deg, sweep_deg } => {
                let dir = sweep_deg.signum();
                let theta = start_deg.to_radians() + dir * s / radius;
                let p = Point::new(center.x + radius * theta.sin(), center.y - radius * theta.cos());
                let tangent = Point::new(theta.cos(), theta.sin()).scale(dir);
                (p, tangent)
            }
            BasePath::Polyline { points } => {
                let mut remaining = s.max(0.0);
                let mut last_dir = Point::new(1.0, 0.0);
                for w in points.windows(2) {
                    let d = w[1] - w[0];
                    let len = d.norm();
                    if len == 0.0 {
                        continue;
                    }
                    last_dir = d.scale(1.0 / len);
                    if remaining <= len {
                        return (w[0] + last_dir.scale(remaining), last_dir);
                    }
                    remaining -= len;
                }
                (points[points.len() - 1], last_dir)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            BasePath::Polyline { points } => {
                !points.is_empty() && points.iter().all(|p| p.x.is_finite() && p.y.is_finite())
            }
            BasePath::Arc { center, radius, start_deg, sweep_deg } => {
                center.x.is_finite()
                    && center.y.is_finite()
                    && *radius > 0.0
                    && start_deg.is_finite()
                    && sweep_deg.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(InkError::InvalidSpec("degenerate base path".into()))
        }
    }
}

/// Writing style shared by all strokes of a generated session.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Style {
    pub speed_mm_s: f64,
    pub tremor_amplitude_mm: f64,
    pub tremor_freq_hz: f64,
    /// Marginal standard deviation of the positional jitter.
    pub jitter_sigma_mm: f64,
    /// Correlation time of the jitter.
    pub jitter_tau_s: f64,
    pub pressure_peak: f64,
    /// Pressure ramp at both ends of a stroke.
    pub pressure_ramp_s: f64,
    pub rate_hz: f64,
}

impl Default for Style {
    fn default() -> Self {
        Style {
            speed_mm_s: 60.0,
            tremor_amplitude_mm: 0.0,
            tremor_freq_hz: 8.0,
            jitter_sigma_mm: 0.0,
            jitter_tau_s: 0.04,
            pressure_peak: 0.6,
            pressure_ramp_s: 0.05,
            rate_hz: 200.0,
        }
    }
}

impl Style {
    pub fn with_tremor(mut self, amplitude_mm: f64, freq_hz: f64) -> Self {
        self.tremor_amplitude_mm = amplitude_mm;
        self.tremor_freq_hz = freq_hz;
        self
    }

    pub fn with_jitter(mut self, sigma_mm: f64) -> Self {
        self.jitter_sigma_mm = sigma_mm;
        self
    }

    pub fn period_us(&self) -> u64 {
        (1e6 / self.rate_hz).round() as u64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(InkError::InvalidSpec(m.to_string()));
        if !(self.rate_hz > 0.0 && self.rate_hz <= 1e6) {
            return bad("rate must be in (0, 1e6] Hz");
        }
        if !(self.speed_mm_s > 0.0) {
            return bad("speed must be positive");
        }
        if !(self.tremor_amplitude_mm >= 0.0 && self.tremor_freq_hz >= 0.0) {
            return bad("tremor amplitude and frequency must be non-negative");
        }
        if !(self.jitter_sigma_mm >= 0.0 && self.jitter_tau_s > 0.0) {
            return bad("jitter sigma must be non-negative and tau positive");
        }
        if !(self.pressure_peak > 0.0 && self.pressure_peak <= 1.0 && self.pressure_ramp_s >= 0.0) {
            return bad("pressure peak must be in (0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrokeSpec {
    pub path: BasePath,
    pub style: Style,
    pub start_t: u64,
    pub seed: u64,
}

/// Ground truth of one generated stroke.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrokeTruth {
    pub start_t: u64,
    pub end_t: u64,
    pub sample_count: usize,
    pub base_length_mm: f64,
    pub tremor_amplitude_mm: f64,
    pub tremor_freq_hz: f64,
    pub jitter_sigma_mm: f64,
}

/// Samples a stroke along its base path at constant speed. Timestamps are
/// `start_t + round(k * 1e6 / rate)` plus a final sample at the path end.
/// The position adds a perpendicular sinusoid and Ornstein-Uhlenbeck jitter.
pub fn gen_stroke(spec: &StrokeSpec) -> Result<(Vec<RawSample>, StrokeTruth)> {
    spec.style.validate()?;
    spec.path.validate()?;
    let st = &spec.style;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let length = spec.path.length();
    let duration_s = length / st.speed_mm_s;
    let duration_us = (duration_s * 1e6).round() as u64;

    let mut times: Vec<u64> = Vec::new();
    let mut k = 0u64;
    loop {
        let t = (k as f64 * 1e6 / st.rate_hz).round() as u64;
        if t >= duration_us {
            break;
        }
        times.push(t);
        k += 1;
    }
    times.push(duration_us);

    let sigma = st.jitter_sigma_mm;
    let mut jitter = if sigma > 0.0 {
        Point::new(rng.sample::<f64, _>(StandardNormal) * sigma, rng.sample::<f64, _>(StandardNormal) * sigma)
    } else {
        Point::default()
    };
    let mut prev_t = 0u64;
    let omega = std::f64::consts::TAU * st.tremor_freq_hz;
    let samples = times
        .iter()
        .map(|&t| {
            let secs = t as f64 / 1e6;
            if sigma > 0.0 && t > prev_t {
                let decay = (-((t - prev_t) as f64) / 1e6 / st.jitter_tau_s).exp();
                let kick = sigma * (1.0 - decay * decay).sqrt();
                jitter = Point::new(
                    jitter.x * decay + kick * rng.sample::<f64, _>(StandardNormal),
                    jitter.y * decay + kick * rng.sample::<f64, _>(StandardNormal),
                );
            }
            prev_t = t;
            let (base, tangent) = spec.path.at(st.speed_mm_s * secs);
            let normal = Point::new(-tangent.y, tangent.x);
            let p = (base + normal.scale(st.tremor_amplitude_mm * (omega * secs).sin())) + jitter;
            let ramp = if st.pressure_ramp_s > 0.0 {
                (secs.min(duration_s - secs) / st.pressure_ramp_s).clamp(0.2, 1.0)
            } else {
                1.0
            };
            RawSample::down(spec.start_t + t, p.x, p.y, st.pressure_peak * ramp)
        })
        .collect::<Vec<_>>();
    let truth = StrokeTruth {
        start_t: spec.start_t,
        end_t: spec.start_t + duration_us,
        sample_count: samples.len(),
        base_length_mm: length,
        tremor_amplitude_mm: st.tremor_amplitude_mm,
        tremor_freq_hz: st.tremor_freq_hz,
        jitter_sigma_mm: sigma,
    };
    Ok((samples, truth))
}
