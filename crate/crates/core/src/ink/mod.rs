//! Pen input model: samples, strokes, in-air gaps and sessions.
//!
//! Units are millimeters for coordinates and microseconds for timestamps;
//! pressure is normalized to `[0, 1]`.

mod format;
mod resample;
mod segment;

pub use format::{InkFile, INK_FORMAT, INK_VERSION};
pub use resample::{resample_points, resample_uniform, TimedPoint};
pub use segment::{dedup_samples, flatten, segment_strokes, SegmentEvent, StreamSegmenter};

use serde::{Deserialize, Serialize};

use crate::error::{InkError, Result};
use crate::geom::{path_length, BBox, Point};

/// One pen report. Serialized with the compact ink-json field names.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawSample {
    /// Microseconds since session start.
    pub t: u64,
    pub x: f64,
    pub y: f64,
    #[serde(rename = "p")]
    pub pressure: f64,
    #[serde(rename = "c")]
    pub contact: bool,
}

impl RawSample {
    pub fn down(t: u64, x: f64, y: f64, pressure: f64) -> Self {
        RawSample { t, x, y, pressure, contact: true }
    }

    pub fn hover(t: u64, x: f64, y: f64) -> Self {
        RawSample { t, x, y, pressure: 0.0, contact: false }
    }

    pub fn point(&self) -> Point {
        Point::new(self.x, self.y)
    }

    pub(crate) fn validate(&self, index: usize) -> Result<()> {
        let bad = |reason: &str| Err(InkError::InvalidSample { index, reason: reason.to_string() });
        if !self.x.is_finite() || !self.y.is_finite() {
            return bad("non-finite coordinate");
        }
        if !(0.0..=1.0).contains(&self.pressure) {
            return bad("pressure outside [0, 1]");
        }
        if !self.contact && self.pressure != 0.0 {
            return bad("hover sample with non-zero pressure");
        }
        Ok(())
    }
}

/// Maximal run of contact samples. A single sample is a valid dot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stroke {
    pub index: usize,
    pub samples: Vec<RawSample>,
}

impl Stroke {
    pub fn start_t(&self) -> u64 {
        self.samples[0].t
    }

    pub fn end_t(&self) -> u64 {
        self.samples[self.samples.len() - 1].t
    }

    pub fn duration_us(&self) -> u64 {
        self.end_t() - self.start_t()
    }

    pub fn points(&self) -> Vec<Point> {
        self.samples.iter().map(RawSample::point).collect()
    }

    pub fn first_point(&self) -> Point {
        self.samples[0].point()
    }

    pub fn last_point(&self) -> Point {
        self.samples[self.samples.len() - 1].point()
    }

    pub fn path_length(&self) -> f64 {
        path_length(&self.points())
    }

    pub fn bbox(&self) -> BBox {
        BBox::of_points(self.samples.iter().map(RawSample::point)).expect("stroke has at least one sample")
    }
}

/// Pen-up interval. Interior gaps run from the end of one stroke to the start
/// of the next; boundary gaps span leading or trailing hover samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InAirGap {
    pub start_t: u64,
    pub end_t: u64,
    pub hover_samples: Vec<RawSample>,
    pub preceding_stroke: Option<usize>,
    pub following_stroke: Option<usize>,
}

impl InAirGap {
    pub fn duration_us(&self) -> u64 {
        self.end_t - self.start_t
    }

    pub fn is_interior(&self) -> bool {
        self.preceding_stroke.is_some() && self.following_stroke.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    DigitalPaper,
    TabletStylus,
}

impl Source {
    pub fn as_str(&self) -> &'static str {
        match self {
            Source::DigitalPaper => "digital-paper",
            Source::TabletStylus => "tablet-stylus",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Page {
    pub w_mm: f64,
    pub h_mm: f64,
}

impl Page {
    pub const A4: Page = Page { w_mm: 210.0, h_mm: 297.0 };
}

/// Session metadata carried alongside the sample stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMeta {
    pub session_id: String,
    pub test_id: String,
    /// Caller-supplied pseudonym; never a name.
    pub subject_pseudonym: String,
    pub page: Page,
    pub source: Source,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InkSession {
    pub meta: SessionMeta,
    pub strokes: Vec<Stroke>,
    pub gaps: Vec<InAirGap>,
}

/// Integer-microsecond time budget of a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionTiming {
    pub on_paper_us: u64,
    pub in_air_us: u64,
    pub span_us: u64,
}

impl InkSession {
    pub fn from_samples(meta: SessionMeta, samples: &[RawSample]) -> Result<Self> {
        let (strokes, gaps) = segment_strokes(samples)?;
        Ok(InkSession { meta, strokes, gaps })
    }

    pub fn from_parts(meta: SessionMeta, strokes: Vec<Stroke>, gaps: Vec<InAirGap>) -> Self {
        InkSession { meta, strokes, gaps }
    }

    pub fn session_id(&self) -> &str {
        &self.meta.session_id
    }

    pub fn test_id(&self) -> &str {
        &self.meta.test_id
    }

    /// Reconstructed sample stream.
    pub fn samples(&self) -> Vec<RawSample> {
        flatten(&self.strokes, &self.gaps)
    }

    pub fn is_empty(&self) -> bool {
        self.strokes.is_empty()
    }

    pub fn first_t(&self) -> Option<u64> {
        let s = self.strokes.first().map(Stroke::start_t);
        let g = self.gaps.first().map(|g| g.start_t);
        match (s, g) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    pub fn last_t(&self) -> Option<u64> {
        let s = self.strokes.last().map(Stroke::end_t);
        let g = self.gaps.last().map(|g| g.end_t);
        match (s, g) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        }
    }

    pub fn timing(&self) -> SessionTiming {
        SessionTiming {
            on_paper_us: self.strokes.iter().map(Stroke::duration_us).sum(),
            in_air_us: self.gaps.iter().map(InAirGap::duration_us).sum(),
            span_us: match (self.first_t(), self.last_t()) {
                (Some(a), Some(b)) => b - a,
                _ => 0,
            },
        }
    }

    /// First pen-down to last pen-up, in seconds.
    pub fn ink_duration_s(&self) -> f64 {
        match (self.strokes.first(), self.strokes.last()) {
            (Some(a), Some(b)) => (b.end_t() - a.start_t()) as f64 * 1e-6,
            _ => 0.0,
        }
    }

    /// Copy of the session restricted to the given strokes; gaps are rebuilt
    /// from the remaining samples.
    pub fn retain_strokes(&self, keep: impl Fn(&Stroke) -> bool) -> InkSession {
        let samples: Vec<RawSample> = self
            .strokes
            .iter()
            .filter(|s| keep(s))
            .flat_map(|s| {
                let mut v = s.samples.clone();
                let last = s.samples[s.samples.len() - 1];
                v.push(RawSample::hover(last.t + 1, last.x, last.y));
                v
            })
            .collect();
        InkSession::from_samples(self.meta.clone(), &samples).expect("subset of a valid stream is valid")
    }
}

/// Tight bounds over every sample of the given strokes.
pub fn bbox(strokes: &[Stroke]) -> Result<BBox> {
    BBox::of_points(strokes.iter().flat_map(|s| s.samples.iter().map(RawSample::point))).ok_or(InkError::EmptyInput)
}
