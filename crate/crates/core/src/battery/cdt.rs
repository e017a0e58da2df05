use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::template::TestTemplate;
use super::{group_points, RegionKind};
use crate::config::Thresholds;
use crate::error::{InkError, Result};
use crate::geom::Point;
use crate::ink::InkSession;
use crate::recognize::{fit_circle, Label, RecognizedGroup};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClockTime {
    pub hour: u8,
    pub minute: u8,
}

impl ClockTime {
    pub fn parse(s: &str) -> Option<ClockTime> {
        let (h, m) = s.trim().split_once(':')?;
        let hour: u8 = h.parse().ok()?;
        let minute: u8 = m.parse().ok()?;
        (hour < 24 && minute < 60).then_some(ClockTime { hour, minute })
    }

    /// Target hand angles (hour, minute) in degrees clockwise from 12.
    pub fn hand_angles(&self) -> (f64, f64) {
        let m = self.minute as f64;
        ((self.hour % 12) as f64 * 30.0 + 0.5 * m, 6.0 * m)
    }
}

impl TestTemplate {
    /// Target time of the first clock canvas.
    pub fn clock_time(&self) -> Result<ClockTime> {
        self.regions_of(RegionKind::Canvas)
            .find_map(|r| r.expect.as_deref().and_then(ClockTime::parse))
            .ok_or_else(|| InkError::InvalidTemplate("no clock canvas with a target time".into()))
    }
}

/// Angle of `p` around `center`, degrees clockwise from 12 o'clock.
pub fn clock_angle(center: Point, p: Point) -> f64 {
    let d = p - center;
    d.x.atan2(-d.y).to_degrees().rem_euclid(360.0)
}

pub fn angle_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdtResult {
    pub contour_present: bool,
    pub contour_closed: bool,
    pub mark_count: usize,
    pub marks_well_placed: bool,
    pub hands_present: bool,
    pub hands_correct: bool,
    /// Number of true criteria, 0 to 6.
    pub total: u8,
    /// Digits are placed by angle only; their identity is never read.
    pub marks_identity_checked: bool,
    pub contour_center: Option<Point>,
    pub contour_radius_mm: Option<f64>,
    /// Hour and minute hand angles when at least two hands were found.
    pub hand_angles_deg: Option<(f64, f64)>,
}

struct Contour {
    group_id: Option<usize>,
    center: Point,
    radius: f64,
    closed: bool,
}

fn find_contour(
    session: &InkSession,
    groups: &[RecognizedGroup],
    template: &TestTemplate,
    th: &Thresholds,
) -> Option<Contour> {
    if let Some(c) = template.preprinted_contour {
        return Some(Contour {
            group_id: None,
            center: Point::new(c.center[0], c.center[1]),
            radius: c.radius_mm,
            closed: true,
        });
    }
    groups
        .iter()
        .filter(|g| g.label.label == Label::Circle)
        .filter_map(|g| {
            let pts = group_points(&g.group, session);
            let fit = fit_circle(&pts).ok()?;
            (fit.radius > th.contour_min_radius_mm).then(|| {
                let gap = pts[0].distance(pts[pts.len() - 1]);
                Contour {
                    group_id: Some(g.group.id),
                    center: fit.center,
                    radius: fit.radius,
                    closed: gap < th.contour_closure_ratio * fit.radius,
                }
            })
        })
        .max_by(|a, b| a.radius.total_cmp(&b.radius))
}

pub fn score_cdt(
    session: &InkSession,
    groups: &[RecognizedGroup],
    template: &TestTemplate,
    target: ClockTime,
    th: &Thresholds,
) -> Result<CdtResult> {
    if session.strokes.is_empty() {
        return Err(InkError::NoInk);
    }
    let mut result = CdtResult {
        contour_present: false,
        contour_closed: false,
        mark_count: 0,
        marks_well_placed: false,
        hands_present: false,
        hands_correct: false,
        total: 0,
        marks_identity_checked: false,
        contour_center: None,
        contour_radius_mm: None,
        hand_angles_deg: None,
    };
    let Some(contour) = find_contour(session, groups, template, th) else {
        return Ok(result);
    };
    let (center, radius) = (contour.center, contour.radius);
    result.contour_present = true;
    result.contour_closed = contour.closed;
    result.contour_center = Some(center);
    result.contour_radius_mm = Some(radius);

    // (group id, tip angle, length) of lines that start near the center
    let mut hands: Vec<(usize, f64, f64)> = groups
        .iter()
        .filter(|g| g.label.label == Label::Line && Some(g.group.id) != contour.group_id)
        .filter_map(|g| {
            let pts = group_points(&g.group, session);
            let (a, b) = (pts[0], pts[pts.len() - 1]);
            let (near, tip) = if a.distance(center) <= b.distance(center) { (a, b) } else { (b, a) };
            (near.distance(center) <= th.hand_start_ratio * radius)
                .then(|| (g.group.id, clock_angle(center, tip), tip.distance(center)))
        })
        .collect();
    hands.sort_by(|a, b| b.2.total_cmp(&a.2));
    result.hands_present = hands.len() >= 2;
    if result.hands_present {
        let (minute, hour) = (hands[0].1, hands[1].1);
        let (want_hour, want_minute) = target.hand_angles();
        result.hand_angles_deg = Some((hour, minute));
        result.hands_correct = angle_difference(hour, want_hour) <= th.angle_tolerance_deg
            && angle_difference(minute, want_minute) <= th.angle_tolerance_deg;
    }

    let hand_ids: BTreeSet<usize> = hands.iter().map(|h| h.0).collect();
    let mark_angles: Vec<f64> = groups
        .iter()
        .filter(|g| Some(g.group.id) != contour.group_id && !hand_ids.contains(&g.group.id))
        .filter(|g| group_points(&g.group, session).iter().all(|p| p.distance(center) < radius))
        .map(|g| clock_angle(center, g.group.bbox.center()))
        .collect();
    result.mark_count = mark_angles.len();
    if mark_angles.len() == 12 {
        let mut hours = BTreeSet::new();
        let all_close = mark_angles.iter().all(|&a| {
            let hour = ((a / 30.0).round() as i64).rem_euclid(12);
            hours.insert(hour);
            angle_difference(a, hour as f64 * 30.0) <= th.angle_tolerance_deg
        });
        result.marks_well_placed = all_close && hours.len() == 12;
    }

    result.total = [
        result.contour_present,
        result.contour_closed,
        result.mark_count > 0,
        result.marks_well_placed,
        result.hands_present,
        result.hands_correct,
    ]
    .into_iter()
    .filter(|&b| b)
    .count() as u8;
    Ok(result)
}
