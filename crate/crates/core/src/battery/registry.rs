use serde::Serialize;

use crate::error::{InkError, Result};
use crate::recognize::Label;

/// One assessment of the battery with its pen-input share and symbol inventory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TestDefinition {
    pub test_id: &'static str,
    pub name: &'static str,
    pub approx_time: &'static str,
    pub pen_input_pct: u8,
    pub symbols: &'static [&'static str],
}

const REGISTRY: [TestDefinition; 8] = [
    TestDefinition {
        test_id: "AKT",
        name: "Age-Concentration",
        approx_time: "15 min",
        pen_input_pct: 100,
        symbols: &["cross-out"],
    },
    TestDefinition {
        test_id: "CDT",
        name: "Clock Drawing Test",
        approx_time: "2-5 min",
        pen_input_pct: 100,
        symbols: &["clock", "digits", "lines"],
    },
    TestDefinition {
        test_id: "CERAD",
        name: "Neuropsychological Battery",
        approx_time: "30-45 min",
        pen_input_pct: 20,
        symbols: &["pentagrams", "circle", "diamond", "rectangles", "cubes"],
    },
    TestDefinition {
        test_id: "DemTect",
        name: "Dementia Detection",
        approx_time: "6-8 min",
        pen_input_pct: 20,
        symbols: &["numbers", "words"],
    },
    TestDefinition {
        test_id: "MMSE",
        name: "Mini-Mental State Examination",
        approx_time: "5-10 min",
        pen_input_pct: 9,
        symbols: &["pentagrams"],
    },
    TestDefinition {
        test_id: "MoCA",
        name: "Montreal Cognitive Assessment",
        approx_time: "10 min",
        pen_input_pct: 17,
        symbols: &["clock", "digits", "lines"],
    },
    TestDefinition {
        test_id: "ROCF",
        name: "Rey-Osterrieth",
        approx_time: "15 min",
        pen_input_pct: 100,
        symbols: &["circles", "rectangles", "triangles", "lines"],
    },
    TestDefinition {
        test_id: "TMT",
        name: "Trail Making Test",
        approx_time: "3-5 min",
        pen_input_pct: 100,
        symbols: &["lines"],
    },
];

pub fn registry() -> &'static [TestDefinition] {
    &REGISTRY
}

/// Case-sensitive lookup; `ROFC` is accepted as an alias of `ROCF`.
pub fn registry_lookup(test_id: &str) -> Result<&'static TestDefinition> {
    let id = if test_id == "ROFC" { "ROCF" } else { test_id };
    REGISTRY.iter().find(|d| d.test_id == id).ok_or_else(|| InkError::UnknownTest(test_id.to_string()))
}

/// Recognizer labels expected for a symbol name of the inventory.
pub fn symbol_labels(symbol: &str) -> &'static [Label] {
    match symbol {
        "cross-out" => &[Label::CrossOut],
        "clock" => &[Label::Circle],
        "digits" | "numbers" | "words" => &[Label::UnrecognizedText],
        "lines" => &[Label::Line],
        "pentagrams" => &[Label::Pentagon],
        "circle" | "circles" => &[Label::Circle],
        "diamond" => &[Label::Diamond],
        "rectangles" => &[Label::Rectangle],
        "triangles" => &[Label::Triangle],
        "cubes" => &[Label::ComplexFigure],
        _ => &[],
    }
}

impl TestDefinition {
    pub fn shape_labels(&self) -> Vec<Label> {
        let mut labels: Vec<Label> = self.symbols.iter().flat_map(|s| symbol_labels(s).iter().copied()).collect();
        labels.sort();
        labels.dedup();
        labels
    }
}
