use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{InkError, Result};
use crate::geom::{BBox, Point};
use crate::ink::Page;

pub const TEMPLATE_FORMAT: &str = "template-json";
pub const TEMPLATE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    Target,
    Distractor,
    InputField,
    Node,
    Canvas,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub id: String,
    pub kind: RegionKind,
    /// `[x0, y0, x1, y1]` in page millimetres.
    pub bbox: [f64; 4],
    /// Sequence ordinal of a trail node.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seq: Option<u32>,
    /// Expected content: a target time `HH:MM` for clock canvases, or a
    /// comma-separated label checklist for figure canvases.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<String>,
}

impl Region {
    pub fn rect(&self) -> BBox {
        let [x0, y0, x1, y1] = self.bbox;
        BBox { min_x: x0, min_y: y0, max_x: x1, max_y: y1 }
    }

    /// Inscribed circle, used for trail nodes.
    pub fn circle(&self) -> (Point, f64) {
        let r = self.rect();
        (r.center(), 0.5 * r.width().min(r.height()))
    }
}

/// A contour printed on the form, for clock variants that supply the circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprintedContour {
    pub center: [f64; 2],
    pub radius_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestTemplate {
    #[serde(default = "default_format")]
    pub format: String,
    #[serde(default = "default_version")]
    pub version: u32,
    pub test_id: String,
    pub page: Page,
    pub regions: Vec<Region>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preprinted_contour: Option<PreprintedContour>,
}

fn default_format() -> String {
    TEMPLATE_FORMAT.to_string()
}

fn default_version() -> u32 {
    TEMPLATE_VERSION
}

impl TestTemplate {
    pub fn new(test_id: &str, page: Page, regions: Vec<Region>) -> Self {
        TestTemplate {
            format: default_format(),
            version: TEMPLATE_VERSION,
            test_id: test_id.to_string(),
            page,
            regions,
            preprinted_contour: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let t: TestTemplate = serde_json::from_str(text)?;
        t.validate()?;
        Ok(t)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("template serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(InkError::InvalidTemplate(m));
        if self.format != TEMPLATE_FORMAT || self.version != TEMPLATE_VERSION {
            return bad(format!("expected {TEMPLATE_FORMAT} v{TEMPLATE_VERSION}"));
        }
        if !(self.page.w_mm > 0.0 && self.page.h_mm > 0.0) {
            return bad("page dimensions must be positive".into());
        }
        let mut ids = BTreeSet::new();
        let mut seqs = BTreeSet::new();
        for r in &self.regions {
            let [x0, y0, x1, y1] = r.bbox;
            if !r.bbox.iter().all(|v| v.is_finite()) || x0 >= x1 || y0 >= y1 {
                return bad(format!("region {} has a degenerate bbox", r.id));
            }
            if x0 < 0.0 || y0 < 0.0 || x1 > self.page.w_mm || y1 > self.page.h_mm {
                return bad(format!("region {} lies outside the page", r.id));
            }
            if !ids.insert(r.id.as_str()) {
                return bad(format!("duplicate region id {}", r.id));
            }
            if r.kind == RegionKind::Node {
                match r.seq {
                    Some(s) if seqs.insert(s) => {}
                    Some(s) => return bad(format!("duplicate node ordinal {s}")),
                    None => return bad(format!("node {} has no ordinal", r.id)),
                }
            }
        }
        Ok(())
    }

    pub fn regions_of(&self, kind: RegionKind) -> impl Iterator<Item = &Region> {
        self.regions.iter().filter(move |r| r.kind == kind)
    }

    /// Trail nodes in ordinal order.
    pub fn nodes(&self) -> Vec<&Region> {
        let mut nodes: Vec<&Region> = self.regions_of(RegionKind::Node).collect();
        nodes.sort_by_key(|r| r.seq);
        nodes
    }
}

const BUILTIN: [(&str, &str); 8] = [
    ("AKT", include_str!("../../templates/akt.json")),
    ("CDT", include_str!("../../templates/cdt.json")),
    ("CERAD", include_str!("../../templates/cerad.json")),
    ("DemTect", include_str!("../../templates/demtect.json")),
    ("MMSE", include_str!("../../templates/mmse.json")),
    ("MoCA", include_str!("../../templates/moca.json")),
    ("ROCF", include_str!("../../templates/rocf.json")),
    ("TMT", include_str!("../../templates/tmt.json")),
];

/// Page layout shipped for each registry test.
pub fn builtin_template(test_id: &str) -> Result<TestTemplate> {
    let (_, text) =
        BUILTIN.iter().find(|(id, _)| *id == test_id).ok_or_else(|| InkError::UnknownTest(test_id.to_string()))?;
    TestTemplate::parse(text)
}
