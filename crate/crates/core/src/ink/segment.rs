use super::{InAirGap, RawSample, Stroke};
use crate::error::{InkError, Result};

/// Validates a stream and merges runs of equal timestamps, keeping the last
/// sample of each run. A decreasing timestamp is rejected.
pub fn dedup_samples(samples: &[RawSample]) -> Result<Vec<RawSample>> {
    let mut out: Vec<RawSample> = Vec::with_capacity(samples.len());
    for (index, s) in samples.iter().enumerate() {
        s.validate(index)?;
        match out.last_mut() {
            Some(prev) if s.t == prev.t => *prev = *s,
            Some(prev) if s.t < prev.t => {
                return Err(InkError::NonMonotonicTimestamp { index, previous: prev.t, current: s.t })
            }
            _ => out.push(*s),
        }
    }
    Ok(out)
}

/// Splits a sample stream into strokes (maximal contact runs) and in-air gaps.
///
/// Hover samples before the first stroke or after the last one form boundary
/// gaps, so that [`flatten`] reproduces the deduplicated input exactly.
pub fn segment_strokes(samples: &[RawSample]) -> Result<(Vec<Stroke>, Vec<InAirGap>)> {
    let samples = dedup_samples(samples)?;
    let mut strokes: Vec<Stroke> = Vec::new();
    let mut gaps: Vec<InAirGap> = Vec::new();

    let mut i = 0;
    while i < samples.len() {
        let contact = samples[i].contact;
        let mut j = i;
        while j < samples.len() && samples[j].contact == contact {
            j += 1;
        }
        let run = samples[i..j].to_vec();
        if contact {
            strokes.push(Stroke { index: strokes.len(), samples: run });
        } else {
            let preceding = strokes.last().map(|s| s.index);
            let following = (j < samples.len()).then_some(strokes.len());
            let start_t = strokes.last().map_or(run[0].t, Stroke::end_t);
            let end_t = if j < samples.len() { samples[j].t } else { run[run.len() - 1].t };
            gaps.push(InAirGap {
                start_t,
                end_t,
                hover_samples: run,
                preceding_stroke: preceding,
                following_stroke: following,
            });
        }
        i = j;
    }
    Ok((strokes, gaps))
}

/// Interleaves strokes and gaps back into a single ordered sample stream.
pub fn flatten(strokes: &[Stroke], gaps: &[InAirGap]) -> Vec<RawSample> {
    let mut out = Vec::new();
    let mut gi = 0;
    for stroke in strokes {
        while gi < gaps.len() && gaps[gi].following_stroke == Some(stroke.index) {
            out.extend_from_slice(&gaps[gi].hover_samples);
            gi += 1;
        }
        out.extend_from_slice(&stroke.samples);
    }
    for g in &gaps[gi..] {
        out.extend_from_slice(&g.hover_samples);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum SegmentEvent {
    Stroke(Stroke),
    Gap(InAirGap),
}

/// Incremental counterpart of [`segment_strokes`].
///
/// The most recent sample is held back until a later timestamp arrives so
/// that equal-timestamp merging matches batch segmentation exactly.
#[derive(Debug, Default, Clone)]
pub struct StreamSegmenter {
    pending: Option<RawSample>,
    received: usize,
    stroke: Vec<RawSample>,
    hover: Vec<RawSample>,
    strokes_done: usize,
    last_stroke_end: Option<u64>,
    committed_t: Option<u64>,
}

impl StreamSegmenter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Timestamp of the latest committed sample.
    pub fn committed_t(&self) -> Option<u64> {
        self.committed_t
    }

    /// Timestamp of the latest accepted sample, committed or not.
    pub fn last_t(&self) -> Option<u64> {
        self.pending.map(|s| s.t).or(self.committed_t)
    }

    pub fn in_stroke(&self) -> bool {
        !self.stroke.is_empty()
    }

    pub fn current_stroke(&self) -> &[RawSample] {
        &self.stroke
    }

    /// Checks a batch without mutating state.
    pub fn check(&self, batch: &[RawSample]) -> Result<()> {
        let mut last = self.last_t();
        for (k, s) in batch.iter().enumerate() {
            let index = self.received + k;
            s.validate(index)?;
            if let Some(prev) = last {
                if s.t < prev {
                    return Err(InkError::NonMonotonicTimestamp { index, previous: prev, current: s.t });
                }
            }
            last = Some(s.t);
        }
        Ok(())
    }

    pub fn push(&mut self, sample: RawSample) -> Result<Vec<SegmentEvent>> {
        self.check(std::slice::from_ref(&sample))?;
        self.received += 1;
        let mut events = Vec::new();
        match self.pending {
            Some(p) if p.t == sample.t => self.pending = Some(sample),
            Some(p) => {
                self.commit(p, &mut events);
                self.pending = Some(sample);
            }
            None => self.pending = Some(sample),
        }
        Ok(events)
    }

    pub fn finish(&mut self) -> Vec<SegmentEvent> {
        let mut events = Vec::new();
        if let Some(p) = self.pending.take() {
            self.commit(p, &mut events);
        }
        if !self.stroke.is_empty() {
            events.push(SegmentEvent::Stroke(self.take_stroke()));
        }
        if !self.hover.is_empty() {
            let run = std::mem::take(&mut self.hover);
            let start_t = self.last_stroke_end.unwrap_or(run[0].t);
            events.push(SegmentEvent::Gap(InAirGap {
                start_t,
                end_t: run[run.len() - 1].t,
                hover_samples: run,
                preceding_stroke: self.strokes_done.checked_sub(1),
                following_stroke: None,
            }));
        }
        events
    }

    fn take_stroke(&mut self) -> Stroke {
        let samples = std::mem::take(&mut self.stroke);
        let stroke = Stroke { index: self.strokes_done, samples };
        self.strokes_done += 1;
        self.last_stroke_end = Some(stroke.end_t());
        stroke
    }

    fn commit(&mut self, s: RawSample, events: &mut Vec<SegmentEvent>) {
        self.committed_t = Some(s.t);
        if s.contact {
            if !self.hover.is_empty() {
                let run = std::mem::take(&mut self.hover);
                events.push(SegmentEvent::Gap(InAirGap {
                    start_t: self.last_stroke_end.unwrap_or(run[0].t),
                    end_t: s.t,
                    hover_samples: run,
                    preceding_stroke: self.strokes_done.checked_sub(1),
                    following_stroke: Some(self.strokes_done),
                }));
            }
            self.stroke.push(s);
        } else {
            if !self.stroke.is_empty() {
                let stroke = self.take_stroke();
                events.push(SegmentEvent::Stroke(stroke));
            }
            self.hover.push(s);
        }
    }
}
