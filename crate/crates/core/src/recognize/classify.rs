use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::circle::fit_circle;
use super::corners::{detect_corners_path, is_closed, CornerSet, CLOSURE_RATIO, CORNER_MIN_ANGLE_DEG};
use super::group::StrokeGroup;
use super::text::{NoTextRecognizer, TextReading, TextRecognizer};
use crate::geom::{polylines_intersect, principal_spreads, BBox, Point};
use crate::ink::{resample_points, InkSession, Stroke};

pub const DOT_MAX_DIAGONAL_MM: f64 = 1.5;
pub const LINE_MAX_SPREAD_RATIO: f64 = 0.05;
pub const CIRCLE_MAX_RESIDUAL_RATIO: f64 = 0.15;
pub const AXIS_ALIGNED_MAX_DEG: f64 = 15.0;
const COMPLEX_FIGURE_CONFIDENCE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Line,
    Circle,
    Triangle,
    Rectangle,
    Diamond,
    Pentagon,
    CrossOut,
    Dot,
    ComplexFigure,
    UnrecognizedText,
}

impl Label {
    pub const ALL: [Label; 10] = [
        Label::Line,
        Label::Circle,
        Label::Triangle,
        Label::Rectangle,
        Label::Diamond,
        Label::Pentagon,
        Label::CrossOut,
        Label::Dot,
        Label::ComplexFigure,
        Label::UnrecognizedText,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Line => "line",
            Label::Circle => "circle",
            Label::Triangle => "triangle",
            Label::Rectangle => "rectangle",
            Label::Diamond => "diamond",
            Label::Pentagon => "pentagon",
            Label::CrossOut => "cross_out",
            Label::Dot => "dot",
            Label::ComplexFigure => "complex_figure",
            Label::UnrecognizedText => "unrecognized_text",
        }
    }

    pub fn parse(s: &str) -> Option<Label> {
        Label::ALL.into_iter().find(|l| l.as_str() == s)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Recognizer verdict for one stroke group.
///
/// Evidence keys: `stroke_count`, `bbox_diagonal_mm`, `spread_ratio`,
/// `corner_count`, `closure_gap_ratio`, and for closed paths
/// `fit_residual_ratio`, `fit_radius_mm`, `fit_center_x_mm`,
/// `fit_center_y_mm`; four-corner shapes add `median_axis_deviation_deg`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeLabel {
    pub label: Label,
    pub confidence: f64,
    pub evidence: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<TextReading>,
}

fn margin(value: f64, threshold: f64) -> f64 {
    (1.0 - value / threshold).clamp(0.0, 1.0)
}

/// Ink of a group as one polyline (strokes joined in drawing order) and as
/// a uniformly resampled point cloud.
fn group_geometry(strokes: &[&Stroke]) -> (Vec<Point>, Vec<Point>) {
    let mut path = Vec::new();
    let mut cloud = Vec::new();
    for s in strokes {
        let pts = s.points();
        cloud.extend(resample_points(&pts, 0.25));
        path.extend(pts);
    }
    (path, cloud)
}

fn spread_ratio(cloud: &[Point]) -> f64 {
    let (major, minor) = principal_spreads(cloud);
    if major > 0.0 {
        minor / major
    } else {
        0.0
    }
}

fn is_line_stroke(stroke: &Stroke) -> Option<f64> {
    let pts = stroke.points();
    let bbox = stroke.bbox();
    if bbox.diagonal() < DOT_MAX_DIAGONAL_MM {
        return None;
    }
    let ratio = spread_ratio(&resample_points(&pts, 0.25));
    (ratio < LINE_MAX_SPREAD_RATIO && detect_corners_path(&pts).is_empty())
        .then(|| margin(ratio, LINE_MAX_SPREAD_RATIO))
}

fn strokes_connected_by_crossings(strokes: &[&Stroke]) -> bool {
    let paths: Vec<Vec<Point>> = strokes.iter().map(|s| s.points()).collect();
    let n = paths.len();
    let mut reached = vec![false; n];
    let mut stack = vec![0];
    reached[0] = true;
    while let Some(i) = stack.pop() {
        for j in 0..n {
            if !reached[j] && polylines_intersect(&paths[i], &paths[j]) {
                reached[j] = true;
                stack.push(j);
            }
        }
    }
    reached.into_iter().all(|r| r)
}

/// Median deviation (degrees) of polygon edges from the nearest page axis.
fn median_axis_deviation(corners: &CornerSet) -> f64 {
    let pts = corners.points();
    let n = pts.len();
    let mut devs: Vec<f64> = (0..n)
        .map(|i| {
            let d = pts[(i + 1) % n] - pts[i];
            let a = d.y.atan2(d.x).to_degrees().rem_euclid(90.0);
            a.min(90.0 - a)
        })
        .collect();
    devs.sort_by(f64::total_cmp);
    if n.is_multiple_of(2) {
        0.5 * (devs[n / 2 - 1] + devs[n / 2])
    } else {
        devs[n / 2]
    }
}

pub fn classify_group(group: &StrokeGroup, session: &InkSession) -> ShapeLabel {
    classify_group_with(group, session, &NoTextRecognizer)
}

/// First matching rule wins: dot, line, cross-out, closed circle or polygon,
/// complex figure (multi-stroke), then handwriting via the text plug-in.
pub fn classify_group_with(group: &StrokeGroup, session: &InkSession, text: &dyn TextRecognizer) -> ShapeLabel {
    let strokes = group.strokes(session);
    let (path, cloud) = group_geometry(&strokes);
    let mut evidence = BTreeMap::new();
    let mut put = |k: &str, v: f64| {
        evidence.insert(k.to_string(), v);
    };
    let bbox = BBox::of_points(path.iter().copied()).unwrap_or(group.bbox);
    let diag = bbox.diagonal();
    put("stroke_count", strokes.len() as f64);
    put("bbox_diagonal_mm", diag);

    let finish = |label, confidence: f64, evidence, text| ShapeLabel {
        label,
        confidence: confidence.clamp(0.0, 1.0),
        evidence,
        text,
    };

    if diag < DOT_MAX_DIAGONAL_MM {
        return finish(Label::Dot, margin(diag, DOT_MAX_DIAGONAL_MM), evidence, None);
    }

    let ratio = spread_ratio(&cloud);
    let corners = detect_corners_path(&path);
    put("spread_ratio", ratio);
    put("corner_count", corners.len() as f64);
    if ratio < LINE_MAX_SPREAD_RATIO && corners.is_empty() {
        return finish(Label::Line, margin(ratio, LINE_MAX_SPREAD_RATIO), evidence, None);
    }

    if strokes.len() >= 2 {
        let lines: Option<Vec<f64>> = strokes.iter().map(|s| is_line_stroke(s)).collect();
        if let Some(lines) = lines {
            if strokes_connected_by_crossings(&strokes) {
                let conf = lines.into_iter().fold(1.0, f64::min);
                return finish(Label::CrossOut, conf, evidence, None);
            }
        }
    }

    let length = corners.path_length_mm;
    let gap_ratio = if length > 0.0 { path[0].distance(path[path.len() - 1]) / length } else { 1.0 };
    put("closure_gap_ratio", gap_ratio);
    if is_closed(&path) {
        let closure_margin = margin(gap_ratio, CLOSURE_RATIO);
        if let Ok(fit) = fit_circle(&cloud) {
            let residual_ratio = fit.rms_residual / fit.radius;
            put("fit_residual_ratio", residual_ratio);
            put("fit_radius_mm", fit.radius);
            put("fit_center_x_mm", fit.center.x);
            put("fit_center_y_mm", fit.center.y);
            if residual_ratio < CIRCLE_MAX_RESIDUAL_RATIO && corners.len() <= 1 {
                let conf = margin(residual_ratio, CIRCLE_MAX_RESIDUAL_RATIO).min(closure_margin);
                return finish(Label::Circle, conf, evidence, None);
            }
        }
        let sharpest_margin = corners
            .corners
            .iter()
            .map(|c| ((c.angle_deg.abs() - CORNER_MIN_ANGLE_DEG) / CORNER_MIN_ANGLE_DEG).clamp(0.0, 1.0))
            .fold(1.0, f64::min);
        let polygon_conf = closure_margin.min(sharpest_margin);
        let polygon = match corners.len() {
            3 => Some((Label::Triangle, polygon_conf)),
            4 => {
                let dev = median_axis_deviation(&corners);
                put("median_axis_deviation_deg", dev);
                let axis_margin = ((dev - AXIS_ALIGNED_MAX_DEG).abs() / AXIS_ALIGNED_MAX_DEG).min(1.0);
                let label = if dev <= AXIS_ALIGNED_MAX_DEG { Label::Rectangle } else { Label::Diamond };
                Some((label, polygon_conf.min(axis_margin)))
            }
            5 => Some((Label::Pentagon, polygon_conf)),
            _ => None,
        };
        if let Some((label, conf)) = polygon {
            return finish(label, conf, evidence, None);
        }
    }

    if strokes.len() >= 2 {
        return finish(Label::ComplexFigure, COMPLEX_FIGURE_CONFIDENCE, evidence, None);
    }
    let reading = text.recognize_text(&strokes);
    let conf = reading.confidence;
    finish(Label::UnrecognizedText, conf, evidence, Some(reading))
}
