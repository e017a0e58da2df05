use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::stroke::{gen_stroke, BasePath, StrokeSpec, StrokeTruth, Style};
use crate::error::Result;
use crate::geom::Point;
use crate::ink::RawSample;

/// Pen-up time between strokes of one symbol.
pub const WITHIN_SYMBOL_PAUSE_US: u64 = 150_000;
/// Pen-up time between separate symbols; longer than the grouping window.
pub const BETWEEN_SYMBOL_PAUSE_US: u64 = 1_200_000;

/// Accumulates strokes and hover runs into one sample stream.
#[derive(Debug)]
pub struct SessionBuilder {
    style: Style,
    rng: ChaCha8Rng,
    samples: Vec<RawSample>,
    next_t: u64,
    pen: Option<Point>,
    strokes: Vec<StrokeTruth>,
}

impl SessionBuilder {
    pub fn new(style: Style, seed: u64) -> Self {
        SessionBuilder {
            style,
            rng: ChaCha8Rng::seed_from_u64(seed),
            samples: Vec::new(),
            next_t: 0,
            pen: None,
            strokes: Vec::new(),
        }
    }

    pub fn style(&self) -> &Style {
        &self.style
    }

    pub fn set_style(&mut self, style: Style) {
        self.style = style;
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn stroke_count(&self) -> usize {
        self.strokes.len()
    }

    pub fn strokes(&self) -> &[StrokeTruth] {
        &self.strokes
    }

    /// Time the next sample will carry.
    pub fn now(&self) -> u64 {
        self.next_t
    }

    /// Draws one stroke and returns its index.
    pub fn stroke(&mut self, path: BasePath) -> Result<usize> {
        let spec = StrokeSpec { path, style: self.style, start_t: self.next_t, seed: self.rng.random() };
        let (samples, truth) = gen_stroke(&spec)?;
        self.pen = samples.last().map(|s| s.point());
        self.next_t = truth.end_t + self.style.period_us();
        self.samples.extend(samples);
        self.strokes.push(truth);
        Ok(self.strokes.len() - 1)
    }

    pub fn polyline(&mut self, points: &[Point]) -> Result<usize> {
        self.stroke(BasePath::polyline(points.to_vec()))
    }

    /// Lifts the pen for `duration_us` (at least two sample periods), moving
    /// towards `to` while hovering.
    pub fn hover(&mut self, duration_us: u64, to: Point) {
        let period = self.style.period_us();
        let duration = duration_us.max(2 * period);
        let from = self.pen.unwrap_or(to);
        let start = self.next_t;
        let mut t = start;
        while t < start + duration {
            let u = (t - start) as f64 / duration as f64;
            let p = from.lerp(to, u);
            self.samples.push(RawSample::hover(t, p.x, p.y));
            t += period;
        }
        self.pen = Some(to);
        self.next_t = start + duration;
    }

    pub fn finish(self) -> (Vec<RawSample>, Vec<StrokeTruth>) {
        (self.samples, self.strokes)
    }
}
