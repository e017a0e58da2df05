use serde::{Deserialize, Serialize};

use super::completion_time_s;
use super::template::{Region, RegionKind, TestTemplate};
use crate::config::Thresholds;
use crate::error::{InkError, Result};
use crate::geom::polyline_length_inside;
use crate::ink::InkSession;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AktResult {
    pub hits: usize,
    pub misses: usize,
    pub false_alarms: usize,
    pub duration_s: f64,
    pub hit_ids: Vec<String>,
    pub missed_ids: Vec<String>,
    pub false_alarm_ids: Vec<String>,
}

/// Total ink path inside a region's box.
pub fn ink_inside(session: &InkSession, region: &Region) -> f64 {
    let rect = region.rect();
    session
        .strokes
        .iter()
        .filter(|s| s.bbox().gap(&rect) == 0.0)
        .map(|s| polyline_length_inside(&s.points(), &rect))
        .sum()
}

pub fn score_akt(session: &InkSession, template: &TestTemplate, th: &Thresholds) -> Result<AktResult> {
    if session.strokes.is_empty() {
        return Err(InkError::NoInk);
    }
    let crossed = |r: &Region| ink_inside(session, r) >= th.crossing_ink_mm;
    let mut result = AktResult {
        hits: 0,
        misses: 0,
        false_alarms: 0,
        duration_s: completion_time_s(session),
        hit_ids: Vec::new(),
        missed_ids: Vec::new(),
        false_alarm_ids: Vec::new(),
    };
    for r in template.regions_of(RegionKind::Target) {
        if crossed(r) {
            result.hit_ids.push(r.id.clone());
        } else {
            result.missed_ids.push(r.id.clone());
        }
    }
    result.false_alarm_ids =
        template.regions_of(RegionKind::Distractor).filter(|r| crossed(r)).map(|r| r.id.clone()).collect();
    result.hits = result.hit_ids.len();
    result.misses = result.missed_ids.len();
    result.false_alarms = result.false_alarm_ids.len();
    Ok(result)
}
