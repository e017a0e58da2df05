//! The assessment battery: registry, page templates and scoring of the pen
//! portions of each test.

mod akt;
mod cdt;
mod fields;
mod pentagon;
mod registry;
mod template;
mod tmt;

pub use akt::{ink_inside, score_akt, AktResult};
pub use cdt::{angle_difference, clock_angle, score_cdt, CdtResult, ClockTime};
pub use fields::{field_completion, score_elements, CanvasElements, ElementsResult, FieldResult};
pub use pentagon::{check_pentagon_copy, polygon_overlap, PentagonResult};
pub use registry::{registry, registry_lookup, symbol_labels, TestDefinition};
pub use template::{
    builtin_template, PreprintedContour, Region, RegionKind, TestTemplate, TEMPLATE_FORMAT, TEMPLATE_VERSION,
};
pub use tmt::{score_tmt, visit_order, TmtResult};

use serde::{Deserialize, Serialize};

use crate::config::Thresholds;
use crate::error::Result;
use crate::features::FeatureVector;
use crate::geom::{BBox, Point};
use crate::ink::InkSession;
use crate::recognize::{recognize_session, GroupingParams, RecognizedGroup, StrokeGroup, TextRecognizer};

pub const LONG_PAUSE_FLAG: &str = "long-pause";

pub(crate) fn group_points(group: &StrokeGroup, session: &InkSession) -> Vec<Point> {
    group.strokes(session).iter().flat_map(|s| s.points()).collect()
}

/// Groups whose bounding-box center lies in `rect`.
pub(crate) fn groups_in<'a>(
    groups: &'a [RecognizedGroup],
    rect: &'a BBox,
) -> impl Iterator<Item = &'a RecognizedGroup> + 'a {
    groups.iter().filter(move |g| rect.contains(g.group.bbox.center()))
}

/// First pen-down to last pen-up.
pub fn completion_time_s(session: &InkSession) -> f64 {
    match (session.strokes.first(), session.strokes.last()) {
        (Some(a), Some(b)) => (b.end_t() - a.start_t()) as f64 / 1e6,
        _ => 0.0,
    }
}

/// Procedure used to score a test.
pub fn scoring_kind(test_id: &str) -> Result<ScoreKind> {
    Ok(match registry_lookup(test_id)?.test_id {
        "CDT" | "MoCA" => ScoreKind::Cdt,
        "TMT" => ScoreKind::Tmt,
        "AKT" => ScoreKind::Akt,
        "MMSE" => ScoreKind::Pentagon,
        "DemTect" => ScoreKind::Fields,
        _ => ScoreKind::Elements,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    Cdt,
    Tmt,
    Akt,
    Pentagon,
    Fields,
    Elements,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Score {
    Cdt(CdtResult),
    Tmt(TmtResult),
    Akt(AktResult),
    Pentagon(PentagonResult),
    Fields { fields: Vec<FieldResult> },
    Elements(ElementsResult),
}

/// Typed value of one score component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComponentValue {
    Bool(bool),
    Int(i64),
    Decimal(f64),
}

impl Score {
    /// Flat `(name, value)` list of the score components.
    pub fn components(&self) -> Vec<(String, ComponentValue)> {
        use ComponentValue::*;
        let c = |n: &str, v| (n.to_string(), v);
        match self {
            Score::Cdt(r) => vec![
                c("contourPresent", Bool(r.contour_present)),
                c("contourClosed", Bool(r.contour_closed)),
                c("markCount", Int(r.mark_count as i64)),
                c("marksWellPlaced", Bool(r.marks_well_placed)),
                c("handsPresent", Bool(r.hands_present)),
                c("handsCorrect", Bool(r.hands_correct)),
                c("total", Int(r.total as i64)),
            ],
            Score::Tmt(r) => vec![
                c("completionTime", Decimal(r.completion_time_s)),
                c("sequencingErrors", Int(r.sequencing_errors as i64)),
                c("nodesVisited", Int(r.nodes_visited as i64)),
                c("completed", Bool(r.completed)),
            ],
            Score::Akt(r) => vec![
                c("hits", Int(r.hits as i64)),
                c("misses", Int(r.misses as i64)),
                c("falseAlarms", Int(r.false_alarms as i64)),
                c("duration", Decimal(r.duration_s)),
            ],
            Score::Pentagon(r) => vec![
                c("twoPentagons", Bool(r.two_pentagons)),
                c("intersect", Bool(r.intersect)),
                c("intersectionIsQuadrilateral", Bool(r.intersection_is_quadrilateral)),
            ],
            Score::Fields { fields } => fields
                .iter()
                .flat_map(|f| {
                    [
                        c(&format!("field.{}.hasInk", f.id), Bool(f.has_ink)),
                        c(&format!("field.{}.inkPath", f.id), Decimal(f.ink_path_mm)),
                    ]
                })
                .collect(),
            Score::Elements(r) => {
                vec![c("elementsMatched", Int(r.matched as i64)), c("elementsExpected", Int(r.expected as i64))]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test_id: String,
    pub session_id: String,
    pub score: Score,
    pub completion_time_s: f64,
    pub flags: Vec<String>,
}

/// Anomaly flags derived from timing alone.
pub fn anomaly_flags(session: &InkSession, th: &Thresholds) -> Vec<String> {
    let long = th.long_pause_us();
    let mut flags = Vec::new();
    if session.gaps.iter().any(|g| g.is_interior() && g.duration_us() > long) {
        flags.push(LONG_PAUSE_FLAG.to_string());
    }
    flags
}

/// Scores a session whose groups are already recognized.
pub fn score_groups(
    session: &InkSession,
    groups: &[RecognizedGroup],
    template: &TestTemplate,
    th: &Thresholds,
    text: &dyn TextRecognizer,
) -> Result<TestResult> {
    let score = match scoring_kind(&template.test_id)? {
        ScoreKind::Cdt => Score::Cdt(score_cdt(session, groups, template, template.clock_time()?, th)?),
        ScoreKind::Tmt => Score::Tmt(score_tmt(session, template)?),
        ScoreKind::Akt => Score::Akt(score_akt(session, template, th)?),
        ScoreKind::Pentagon => Score::Pentagon(check_pentagon_copy(session, groups, template)?),
        ScoreKind::Fields => Score::Fields { fields: field_completion(session, template, text) },
        ScoreKind::Elements => Score::Elements(score_elements(session, groups, template)?),
    };
    Ok(TestResult {
        test_id: template.test_id.clone(),
        session_id: session.meta.session_id.clone(),
        score,
        completion_time_s: completion_time_s(session),
        flags: anomaly_flags(session, th),
    })
}

/// Groups, classifies and scores a session against a template.
pub fn score_session(
    session: &InkSession,
    template: &TestTemplate,
    th: &Thresholds,
    text: &dyn TextRecognizer,
) -> Result<TestResult> {
    let groups = recognize_session(session, GroupingParams::new(th.group_gap_mm, th.group_gap_s), text);
    score_groups(session, &groups, template, th, text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummativeStats {
    pub session_id: String,
    pub test_id: String,
    pub results: Vec<TestResult>,
    pub completion_time_s: f64,
    pub document: FeatureVector,
    pub flags: Vec<String>,
}

pub fn summarize(
    session: &InkSession,
    results: &[TestResult],
    document: &FeatureVector,
    th: &Thresholds,
) -> SummativeStats {
    let mut flags = anomaly_flags(session, th);
    flags.extend(results.iter().flat_map(|r| r.flags.iter().cloned()));
    flags.sort();
    flags.dedup();
    SummativeStats {
        session_id: session.meta.session_id.clone(),
        test_id: session.meta.test_id.clone(),
        results: results.to_vec(),
        completion_time_s: completion_time_s(session),
        document: document.clone(),
        flags,
    }
}

impl ScoreKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScoreKind::Cdt => "cdt",
            ScoreKind::Tmt => "tmt",
            ScoreKind::Akt => "akt",
            ScoreKind::Pentagon => "pentagon",
            ScoreKind::Fields => "fields",
            ScoreKind::Elements => "elements",
        }
    }
}

impl Score {
    pub fn kind(&self) -> ScoreKind {
        match self {
            Score::Cdt(_) => ScoreKind::Cdt,
            Score::Tmt(_) => ScoreKind::Tmt,
            Score::Akt(_) => ScoreKind::Akt,
            Score::Pentagon(_) => ScoreKind::Pentagon,
            Score::Fields { .. } => ScoreKind::Fields,
            Score::Elements(_) => ScoreKind::Elements,
        }
    }
}
