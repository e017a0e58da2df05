//! Digital-ink analysis engine for pen-based cognitive assessments.
//!
//! The crate covers the whole offline pipeline: segmentation of time-stamped
//! pen samples into strokes, signal-level feature extraction, sketch
//! recognition, scoring of the pen portions of standard screening tests,
//! interpretation graphs, and a seeded synthetic-ink generator.

pub mod battery;
pub mod config;
pub mod error;
pub mod features;
pub mod geom;
pub mod graph;
pub mod ink;
pub mod recognize;
pub mod synth;

pub use config::Thresholds;
pub use error::{InkError, Result};

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");
