//! Seeded synthetic ink with ground truth, used as a test oracle.

mod builder;
mod session;
mod shapes;
mod stroke;

pub use builder::{SessionBuilder, BETWEEN_SYMBOL_PAUSE_US, WITHIN_SYMBOL_PAUSE_US};
pub use session::{
    gen_test_session, interlocking_pentagons, synth_session_id, trail_order, trail_template, CorrectionTruth,
    ExpectedGroup, Interval, SessionParams, SynthManifest, SynthSession,
};
pub use shapes::{
    draw_shape, gen_shape_session, random_placement, regular_polygon, shape_paths, ShapePlacement, SHAPE_LABELS,
};
pub use stroke::{gen_stroke, BasePath, StrokeSpec, StrokeTruth, Style};
