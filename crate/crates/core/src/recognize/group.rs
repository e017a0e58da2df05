use serde::{Deserialize, Serialize};

use crate::config::secs_to_us;
use crate::geom::BBox;
use crate::ink::{InkSession, Stroke};

/// Spatio-temporal cluster of consecutive strokes. Ids start at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrokeGroup {
    pub id: usize,
    pub stroke_indices: Vec<usize>,
    pub bbox: BBox,
}

impl StrokeGroup {
    pub fn strokes<'a>(&self, session: &'a InkSession) -> Vec<&'a Stroke> {
        self.stroke_indices.iter().map(|&i| &session.strokes[i]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupingParams {
    pub gap_mm: f64,
    pub gap_us: u64,
}

impl GroupingParams {
    pub fn new(gap_mm: f64, gap_s: f64) -> Self {
        GroupingParams { gap_mm, gap_us: secs_to_us(gap_s) }
    }
}

impl Default for GroupingParams {
    fn default() -> Self {
        GroupingParams::new(5.0, 1.0)
    }
}

/// Incremental grouping. A stroke joins the open group when its bbox is
/// within `gap_mm` of the group's bbox and it starts at most `gap_us` after
/// the previous stroke ended.
#[derive(Debug, Clone)]
pub struct StrokeGrouper {
    params: GroupingParams,
    open: Option<(StrokeGroup, u64)>,
    next_id: usize,
}

impl StrokeGrouper {
    pub fn new(params: GroupingParams) -> Self {
        StrokeGrouper { params, open: None, next_id: 1 }
    }

    pub fn open_group(&self) -> Option<&StrokeGroup> {
        self.open.as_ref().map(|(g, _)| g)
    }

    /// Adds a completed stroke; returns the group it closed, if any.
    pub fn push(&mut self, stroke: &Stroke) -> Option<StrokeGroup> {
        let bbox = stroke.bbox();
        if let Some((group, last_end)) = &mut self.open {
            let dt = stroke.start_t().saturating_sub(*last_end);
            if dt <= self.params.gap_us && group.bbox.gap(&bbox) <= self.params.gap_mm {
                group.stroke_indices.push(stroke.index);
                group.bbox = group.bbox.union(bbox);
                *last_end = stroke.end_t();
                return None;
            }
        }
        let closed = self.open.take().map(|(g, _)| g);
        self.open = Some((StrokeGroup { id: self.next_id, stroke_indices: vec![stroke.index], bbox }, stroke.end_t()));
        self.next_id += 1;
        closed
    }

    /// Closes the open group once time `now` rules out any further merge.
    pub fn close_if_stale(&mut self, now: u64) -> Option<StrokeGroup> {
        match &self.open {
            Some((_, last_end)) if now > last_end + self.params.gap_us => self.open.take().map(|(g, _)| g),
            _ => None,
        }
    }

    pub fn finish(&mut self) -> Option<StrokeGroup> {
        self.open.take().map(|(g, _)| g)
    }
}

pub fn group_strokes(session: &InkSession, params: GroupingParams) -> Vec<StrokeGroup> {
    let mut grouper = StrokeGrouper::new(params);
    let mut groups: Vec<StrokeGroup> = session.strokes.iter().filter_map(|s| grouper.push(s)).collect();
    groups.extend(grouper.finish());
    groups
}
