use serde::{Deserialize, Serialize};

use super::akt::ink_inside;
use super::template::{RegionKind, TestTemplate};
use super::{group_points, groups_in};
use crate::error::{InkError, Result};
use crate::ink::{InkSession, Stroke};
use crate::recognize::{Label, RecognizedGroup, TextReading, TextRecognizer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldResult {
    pub id: String,
    pub has_ink: bool,
    pub ink_path_mm: f64,
    pub text: TextReading,
}

pub fn field_completion(session: &InkSession, template: &TestTemplate, text: &dyn TextRecognizer) -> Vec<FieldResult> {
    template
        .regions_of(RegionKind::InputField)
        .map(|r| {
            let rect = r.rect();
            let inked: Vec<&Stroke> =
                session.strokes.iter().filter(|s| s.samples.iter().any(|p| rect.contains(p.point()))).collect();
            let has_ink = !inked.is_empty();
            FieldResult {
                id: r.id.clone(),
                has_ink,
                ink_path_mm: ink_inside(session, r),
                text: if has_ink { text.recognize_text(&inked) } else { TextReading::unrecognized() },
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanvasElements {
    pub id: String,
    pub expected: Vec<Label>,
    pub found: Vec<Label>,
    /// Expected labels matched by a distinct recognized group.
    pub matched: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementsResult {
    pub canvases: Vec<CanvasElements>,
    pub matched: usize,
    pub expected: usize,
}

/// Element presence: recognized shapes inside each canvas against its
/// comma-separated `expect` checklist.
pub fn score_elements(
    session: &InkSession,
    groups: &[RecognizedGroup],
    template: &TestTemplate,
) -> Result<ElementsResult> {
    let mut canvases = Vec::new();
    for r in template.regions_of(RegionKind::Canvas) {
        let expected: Vec<Label> = r
            .expect
            .as_deref()
            .unwrap_or("")
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| Label::parse(s).ok_or_else(|| InkError::InvalidTemplate(format!("unknown label {s}"))))
            .collect::<Result<_>>()?;
        let found: Vec<Label> = groups_in(groups, &r.rect())
            .filter(|g| !group_points(&g.group, session).is_empty())
            .map(|g| g.label.label)
            .collect();
        let mut pool = found.clone();
        let matched = expected
            .iter()
            .filter(|l| match pool.iter().position(|f| f == *l) {
                Some(i) => {
                    pool.swap_remove(i);
                    true
                }
                None => false,
            })
            .count();
        canvases.push(CanvasElements { id: r.id.clone(), expected, found, matched });
    }
    let matched = canvases.iter().map(|c| c.matched).sum();
    let expected = canvases.iter().map(|c| c.expected.len()).sum();
    Ok(ElementsResult { canvases, matched, expected })
}
