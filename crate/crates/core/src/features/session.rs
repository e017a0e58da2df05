use serde::{Deserialize, Serialize};

use super::catalog::{FeatureLevel, FeatureVector, STROKE_FEATURES};
use super::stroke::stroke_features;
use crate::ink::{InAirGap, InkSession, SessionTiming, Stroke};

/// Welford running mean and population variance.
#[derive(Debug, Clone, Copy, Default)]
struct Running {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Running {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn std(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.m2 / self.n as f64).max(0.0).sqrt()
        }
    }
}

pub fn gap_features(gap: &InAirGap, index: usize, pause_threshold_us: u64) -> FeatureVector {
    let mut fv = FeatureVector::new(FeatureLevel::Gap, index);
    fv.set("gap_duration_s", gap.duration_us() as f64 * 1e-6);
    fv.set("is_pause", if gap.duration_us() > pause_threshold_us { 1.0 } else { 0.0 });
    fv.set("hover_sample_count", gap.hover_samples.len() as f64);
    fv
}

/// Incremental document-level aggregation. Feeding strokes and gaps in
/// session order produces the same document vector as [`session_features`],
/// which is implemented on top of it.
#[derive(Debug, Clone)]
pub struct FeatureAccumulator {
    pause_threshold_us: u64,
    stroke_stats: Vec<Running>,
    stroke_count: usize,
    gap_count: usize,
    pause_count: usize,
    on_paper_us: u64,
    in_air_us: u64,
    total_path_mm: f64,
    first_t: Option<u64>,
    last_t: Option<u64>,
}

impl FeatureAccumulator {
    pub fn new(pause_threshold_us: u64) -> Self {
        FeatureAccumulator {
            pause_threshold_us,
            stroke_stats: vec![Running::default(); STROKE_FEATURES.len()],
            stroke_count: 0,
            gap_count: 0,
            pause_count: 0,
            on_paper_us: 0,
            in_air_us: 0,
            total_path_mm: 0.0,
            first_t: None,
            last_t: None,
        }
    }

    fn extend_span(&mut self, start: u64, end: u64) {
        self.first_t = Some(self.first_t.map_or(start, |t| t.min(start)));
        self.last_t = Some(self.last_t.map_or(end, |t| t.max(end)));
    }

    /// Adds a stroke and its already computed feature vector.
    pub fn add_stroke(&mut self, stroke: &Stroke, features: &FeatureVector) {
        for (stat, (id, _, _)) in self.stroke_stats.iter_mut().zip(STROKE_FEATURES) {
            stat.push(features.value(id));
        }
        self.stroke_count += 1;
        self.on_paper_us += stroke.duration_us();
        self.total_path_mm += features.value("path_length_mm");
        self.extend_span(stroke.start_t(), stroke.end_t());
    }

    pub fn add_gap(&mut self, gap: &InAirGap) {
        self.gap_count += 1;
        if gap.duration_us() > self.pause_threshold_us {
            self.pause_count += 1;
        }
        self.in_air_us += gap.duration_us();
        self.extend_span(gap.start_t, gap.end_t);
    }

    pub fn timing(&self) -> SessionTiming {
        SessionTiming {
            on_paper_us: self.on_paper_us,
            in_air_us: self.in_air_us,
            span_us: match (self.first_t, self.last_t) {
                (Some(a), Some(b)) => b - a,
                _ => 0,
            },
        }
    }

    pub fn document(&self) -> FeatureVector {
        let timing = self.timing();
        let mut fv = FeatureVector::new(FeatureLevel::Document, 0);
        fv.set("stroke_count", self.stroke_count as f64);
        fv.set("gap_count", self.gap_count as f64);
        fv.set("pause_count", self.pause_count as f64);
        fv.set("total_on_paper_s", timing.on_paper_us as f64 * 1e-6);
        fv.set("total_in_air_s", timing.in_air_us as f64 * 1e-6);
        fv.set("session_span_s", timing.span_us as f64 * 1e-6);
        fv.set("total_path_mm", self.total_path_mm);
        for (stat, (id, _, _)) in self.stroke_stats.iter().zip(STROKE_FEATURES) {
            fv.set(&format!("mean_{id}"), stat.mean);
        }
        for (stat, (id, _, _)) in self.stroke_stats.iter().zip(STROKE_FEATURES) {
            fv.set(&format!("std_{id}"), stat.std());
        }
        fv
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionFeatures {
    pub strokes: Vec<FeatureVector>,
    pub gaps: Vec<FeatureVector>,
    pub document: FeatureVector,
}

impl SessionFeatures {
    /// Every vector in export order: strokes, gaps, then the document row.
    pub fn rows(&self) -> impl Iterator<Item = &FeatureVector> {
        self.strokes.iter().chain(&self.gaps).chain(std::iter::once(&self.document))
    }
}

/// Stroke, gap and document features for a whole session.
pub fn session_features(session: &InkSession, pause_threshold_us: u64) -> SessionFeatures {
    let id = session.session_id();
    let mut acc = FeatureAccumulator::new(pause_threshold_us);
    let strokes: Vec<FeatureVector> = session
        .strokes
        .iter()
        .map(|s| {
            let fv = stroke_features(s).with_session(id);
            acc.add_stroke(s, &fv);
            fv
        })
        .collect();
    let gaps = session
        .gaps
        .iter()
        .enumerate()
        .map(|(i, g)| {
            acc.add_gap(g);
            gap_features(g, i, pause_threshold_us).with_session(id)
        })
        .collect();
    SessionFeatures { strokes, gaps, document: acc.document().with_session(id) }
}
