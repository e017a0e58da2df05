use serde::{Deserialize, Serialize};

use crate::ink::Stroke;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextReading {
    pub text: String,
    pub confidence: f64,
}

impl TextReading {
    pub fn unrecognized() -> Self {
        TextReading { text: String::new(), confidence: 0.0 }
    }
}

/// Plug-in point for handwriting recognition of digits and words.
pub trait TextRecognizer: Send + Sync {
    fn recognize_text(&self, strokes: &[&Stroke]) -> TextReading;
}

/// Built-in recognizer: reads nothing.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoTextRecognizer;

impl TextRecognizer for NoTextRecognizer {
    fn recognize_text(&self, _strokes: &[&Stroke]) -> TextReading {
        TextReading::unrecognized()
    }
}
