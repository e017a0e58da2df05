mod circle;
mod classify;
mod corners;
mod group;
mod text;

pub use circle::{fit_circle, CircleFit, COLLINEAR_CONDITION};
pub use classify::{
    classify_group, classify_group_with, Label, ShapeLabel, AXIS_ALIGNED_MAX_DEG, CIRCLE_MAX_RESIDUAL_RATIO,
    DOT_MAX_DIAGONAL_MM, LINE_MAX_SPREAD_RATIO,
};
pub use corners::{
    detect_corners, detect_corners_path, is_closed, Corner, CornerSet, CLOSURE_RATIO, CORNER_MIN_ANGLE_DEG,
};
pub use group::{group_strokes, GroupingParams, StrokeGroup, StrokeGrouper};
pub use text::{NoTextRecognizer, TextReading, TextRecognizer};

use serde::{Deserialize, Serialize};

use crate::ink::InkSession;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecognizedGroup {
    pub group: StrokeGroup,
    pub label: ShapeLabel,
}

/// Groups the session's strokes and classifies every group.
pub fn recognize_session(
    session: &InkSession,
    params: GroupingParams,
    text: &dyn TextRecognizer,
) -> Vec<RecognizedGroup> {
    group_strokes(session, params)
        .into_iter()
        .map(|group| {
            let label = classify_group_with(&group, session, text);
            RecognizedGroup { group, label }
        })
        .collect()
}
