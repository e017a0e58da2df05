use std::sync::OnceLock;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureLevel {
    Stroke,
    Gap,
    Document,
}

impl FeatureLevel {
    pub fn as_str(&self) -> &'static str {
        match self {
            FeatureLevel::Stroke => "stroke",
            FeatureLevel::Gap => "gap",
            FeatureLevel::Document => "document",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub id: String,
    pub level: FeatureLevel,
    pub unit: String,
    pub description: String,
}

/// (id, unit, description) for every stroke-level feature, in catalog order.
pub(crate) const STROKE_FEATURES: &[(&str, &str, &str)] = &[
    ("sample_count", "count", "number of pen samples in the stroke"),
    ("duration_s", "s", "time from pen-down to pen-up"),
    ("path_length_mm", "mm", "length of the sampled polyline"),
    ("displacement_mm", "mm", "distance between first and last sample"),
    ("straightness", "ratio", "displacement divided by path length, 1 for dots"),
    ("pressure_mean", "normalized", "mean pen pressure"),
    ("pressure_max", "normalized", "maximum pen pressure"),
    ("pressure_min", "normalized", "minimum pen pressure"),
    ("pressure_std", "normalized", "population standard deviation of pen pressure"),
    ("speed_mean_mm_s", "mm/s", "mean speed from central differences"),
    ("speed_max_mm_s", "mm/s", "maximum speed"),
    ("speed_std_mm_s", "mm/s", "population standard deviation of speed"),
    ("accel_mean_abs_mm_s2", "mm/s^2", "mean magnitude of acceleration"),
    ("accel_max_abs_mm_s2", "mm/s^2", "maximum magnitude of acceleration"),
    ("jerk_mean_abs_mm_s3", "mm/s^3", "mean magnitude of jerk"),
    ("direction_change_count", "count", "sign reversals between turns sharper than 20 degrees"),
    ("curvature_mean_per_mm", "1/mm", "mean absolute turning angle per arc length"),
    ("curvature_max_per_mm", "1/mm", "maximum absolute turning angle per arc length"),
    ("tremor_index_mm", "mm", "RMS perpendicular deviation from the smoothed path"),
    ("tremor_dominant_freq_hz", "Hz", "zero-crossing rate of the tremor residual"),
    ("bbox_width_mm", "mm", "bounding box width"),
    ("bbox_height_mm", "mm", "bounding box height"),
];

pub(crate) const GAP_FEATURES: &[(&str, &str, &str)] = &[
    ("gap_duration_s", "s", "pen-up time"),
    ("is_pause", "flag", "1 when the gap exceeds the pause threshold"),
    ("hover_sample_count", "count", "hover samples reported during the gap"),
];

pub(crate) const DOCUMENT_BASE_FEATURES: &[(&str, &str, &str)] = &[
    ("stroke_count", "count", "number of strokes"),
    ("gap_count", "count", "number of in-air gaps, boundary gaps included"),
    ("pause_count", "count", "gaps longer than the pause threshold"),
    ("total_on_paper_s", "s", "sum of stroke durations"),
    ("total_in_air_s", "s", "sum of gap durations"),
    ("session_span_s", "s", "first to last sample"),
    ("total_path_mm", "mm", "sum of stroke path lengths"),
];

fn build() -> Vec<FeatureDescriptor> {
    let mut out = Vec::new();
    let push = |out: &mut Vec<FeatureDescriptor>, level, id: String, unit: &str, desc: String| {
        out.push(FeatureDescriptor { id, level, unit: unit.to_string(), description: desc });
    };
    for (id, unit, desc) in STROKE_FEATURES {
        push(&mut out, FeatureLevel::Stroke, id.to_string(), unit, desc.to_string());
    }
    for (id, unit, desc) in GAP_FEATURES {
        push(&mut out, FeatureLevel::Gap, id.to_string(), unit, desc.to_string());
    }
    for (id, unit, desc) in DOCUMENT_BASE_FEATURES {
        push(&mut out, FeatureLevel::Document, id.to_string(), unit, desc.to_string());
    }
    for (id, unit, desc) in STROKE_FEATURES {
        push(&mut out, FeatureLevel::Document, format!("mean_{id}"), unit, format!("mean over strokes: {desc}"));
    }
    for (id, unit, desc) in STROKE_FEATURES {
        push(&mut out, FeatureLevel::Document, format!("std_{id}"), unit, format!("std over strokes: {desc}"));
    }
    out
}

/// The full, ordered feature catalog.
pub fn feature_catalog() -> &'static [FeatureDescriptor] {
    static CATALOG: OnceLock<Vec<FeatureDescriptor>> = OnceLock::new();
    CATALOG.get_or_init(build)
}

pub fn catalog_ids(level: FeatureLevel) -> impl Iterator<Item = &'static str> {
    feature_catalog().iter().filter(move |d| d.level == level).map(|d| d.id.as_str())
}

pub fn descriptor(id: &str) -> Option<&'static FeatureDescriptor> {
    feature_catalog().iter().find(|d| d.id == id)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureScope {
    pub session_id: String,
    pub level: FeatureLevel,
    pub index: usize,
}

/// Named values for one scope, in catalog order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub scope: FeatureScope,
    pub values: IndexMap<String, f64>,
}

impl FeatureVector {
    pub(crate) fn new(level: FeatureLevel, index: usize) -> Self {
        FeatureVector { scope: FeatureScope { session_id: String::new(), level, index }, values: IndexMap::new() }
    }

    pub(crate) fn set(&mut self, id: &str, value: f64) {
        debug_assert!(value.is_finite(), "feature {id} is not finite");
        self.values.insert(id.to_string(), value);
    }

    pub fn with_session(mut self, session_id: &str) -> Self {
        self.scope.session_id = session_id.to_string();
        self
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.values.get(id).copied()
    }

    /// Panics on an id that is not part of this vector's level.
    pub fn value(&self, id: &str) -> f64 {
        self.get(id).unwrap_or_else(|| panic!("no feature `{id}`"))
    }
}
