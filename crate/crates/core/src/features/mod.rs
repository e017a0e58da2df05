//! Signal-level writing features over strokes, gaps and whole sessions.

mod catalog;
mod session;
mod stroke;
mod tremor;

pub use catalog::{
    catalog_ids, descriptor, feature_catalog, FeatureDescriptor, FeatureLevel, FeatureScope, FeatureVector,
};
pub use session::{gap_features, session_features, FeatureAccumulator, SessionFeatures};
pub use stroke::stroke_features;
pub use tremor::{
    perpendicular_residuals, tremor_index, zero_crossings, TremorIndex, TREMOR_HALF_WINDOW, TREMOR_MIN_PATH_MM,
    TREMOR_SPACING_MM,
};

/// Header and rows of a feature matrix: one column per catalog id, one row
/// per scope; cells of other levels are `None`.
pub fn feature_matrix(features: &SessionFeatures) -> (Vec<&'static str>, Vec<Vec<Option<f64>>>) {
    let header: Vec<&'static str> = feature_catalog().iter().map(|d| d.id.as_str()).collect();
    let rows = features.rows().map(|fv| header.iter().map(|id| fv.get(id)).collect()).collect();
    (header, rows)
}
