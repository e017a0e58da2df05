//! System-initiated replay suggestions: intervals worth a slow-motion look.

use std::collections::BTreeMap;

use inkcheck_core::features::FeatureVector;
use inkcheck_core::geom::{path_length, point_polyline_distance, BBox, Point};
use inkcheck_core::ink::{resample_points, InkSession, Stroke};
use inkcheck_core::Thresholds;
use serde::{Deserialize, Serialize};

/// Strokes shorter than this are never treated as corrections.
pub const CORRECTION_MIN_PATH_MM: f64 = 2.0;
const OVERLAP_SPACING_MM: f64 = 0.25;
/// Percentile of the session's tremor indices above which a stroke is flagged.
pub const HIGH_TREMOR_PERCENTILE: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuggestionReason {
    LongPause,
    Correction,
    HighTremor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplaySuggestion {
    pub start_t: u64,
    pub end_t: u64,
    pub reason: SuggestionReason,
    pub evidence: BTreeMap<String, f64>,
}

fn evidence(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Share of `stroke`'s resampled path lying within `tol` of `older`.
fn overlap_ratio(stroke: &[Point], older: &[Point], tol: f64) -> f64 {
    if stroke.is_empty() {
        return 0.0;
    }
    let near = stroke.iter().filter(|p| point_polyline_distance(**p, older) <= tol).count();
    near as f64 / stroke.len() as f64
}

fn corrections(session: &InkSession, th: &Thresholds) -> Vec<ReplaySuggestion> {
    let min_age = (th.correction_min_age_s * 1e6).round() as u64;
    let paths: Vec<Vec<Point>> = session.strokes.iter().map(Stroke::points).collect();
    let boxes: Vec<BBox> = session.strokes.iter().map(Stroke::bbox).collect();
    let mut out = Vec::new();
    for (j, stroke) in session.strokes.iter().enumerate() {
        if path_length(&paths[j]) < CORRECTION_MIN_PATH_MM {
            continue;
        }
        let resampled = resample_points(&paths[j], OVERLAP_SPACING_MM);
        let best = (0..j)
            .filter(|&i| stroke.start_t() >= session.strokes[i].start_t() + min_age)
            .filter(|&i| boxes[i].gap(&boxes[j]) <= th.correction_overlap_mm)
            .map(|i| (i, overlap_ratio(&resampled, &paths[i], th.correction_overlap_mm)))
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
        if let Some((i, ratio)) = best.filter(|&(_, r)| r >= th.correction_overlap_ratio) {
            let age = (stroke.start_t() - session.strokes[i].start_t()) as f64 * 1e-6;
            out.push(ReplaySuggestion {
                start_t: stroke.start_t(),
                end_t: stroke.end_t(),
                reason: SuggestionReason::Correction,
                evidence: evidence(&[
                    ("stroke", j as f64),
                    ("overdrawn_stroke", i as f64),
                    ("overlap_ratio", ratio),
                    ("age_s", age),
                ]),
            });
        }
    }
    out
}

/// Long pauses between the first and last stroke, strokes overdrawing older
/// ink, and strokes whose tremor is in the top percentile of the session;
/// sorted by start time.
pub fn suggest_replays(
    session: &InkSession,
    stroke_features: &[FeatureVector],
    th: &Thresholds,
) -> Vec<ReplaySuggestion> {
    let mut out = Vec::new();
    let long = th.long_pause_us();
    for gap in session.gaps.iter().filter(|g| g.is_interior() && g.duration_us() > long) {
        out.push(ReplaySuggestion {
            start_t: gap.start_t,
            end_t: gap.end_t,
            reason: SuggestionReason::LongPause,
            evidence: evidence(&[("duration_s", gap.duration_us() as f64 * 1e-6)]),
        });
    }

    out.extend(corrections(session, th));

    let mut tremor: Vec<f64> = stroke_features.iter().map(|f| f.value("tremor_index_mm")).collect();
    if !tremor.is_empty() {
        tremor.sort_by(f64::total_cmp);
        let rank = ((HIGH_TREMOR_PERCENTILE * tremor.len() as f64).ceil() as usize).clamp(1, tremor.len());
        let p95 = tremor[rank - 1];
        for (stroke, f) in session.strokes.iter().zip(stroke_features) {
            let v = f.value("tremor_index_mm");
            if v > p95 && v >= th.high_tremor_min_mm {
                out.push(ReplaySuggestion {
                    start_t: stroke.start_t(),
                    end_t: stroke.end_t(),
                    reason: SuggestionReason::HighTremor,
                    evidence: evidence(&[
                        ("stroke", stroke.index as f64),
                        ("tremor_index_mm", v),
                        ("session_p95_mm", p95),
                    ]),
                });
            }
        }
    }

    out.sort_by_key(|s| (s.start_t, s.reason, s.end_t));
    out
}
