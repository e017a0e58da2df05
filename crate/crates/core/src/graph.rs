//! Interpretation graphs: recognized content of a session as triples in an
//! N-Triples compatible line format.
//!
//! Every line is `<subject> <predicate> <object> .` where the object is an
//! IRI or a typed literal `"lexical"^^<datatype>`. Lines are sorted bytewise
//! and end with LF. Measured values use a unit IRI (`urn:inkcheck:unit:mm`)
//! as their datatype.

use std::collections::{BTreeMap, BTreeSet};

use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};

use crate::battery::{ComponentValue, TestResult};
use crate::error::{InkError, Result};
use crate::features::{descriptor, FeatureVector};
use crate::ink::InkSession;
use crate::recognize::RecognizedGroup;
use crate::ENGINE_VERSION;

pub const NS: &str = "urn:inkcheck:";
pub const VOCAB: &str = "urn:inkcheck:vocab:";
pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";

/// Predicates of the fixed vocabulary (local names under [`VOCAB`]).
pub const VOCABULARY: [&str; 11] = [
    "testId",
    "source",
    "subjectPseudonym",
    "spanMicros",
    "strokeCount",
    "engineVersion",
    "inSession",
    "hasLabel",
    "confidence",
    "hasStroke",
    "scoredBy",
];

const IRI_SAFE: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'_').remove(b'.').remove(b'~');

fn encode(s: &str) -> String {
    utf8_percent_encode(s, IRI_SAFE).to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Iri(String),
    Literal { lexical: String, datatype: String },
}

impl Term {
    pub fn iri(s: impl Into<String>) -> Term {
        Term::Iri(s.into())
    }

    pub fn string(s: &str) -> Term {
        Term::Literal { lexical: s.to_string(), datatype: format!("{XSD}string") }
    }

    pub fn integer(v: i64) -> Term {
        Term::Literal { lexical: v.to_string(), datatype: format!("{XSD}integer") }
    }

    pub fn boolean(v: bool) -> Term {
        Term::Literal { lexical: v.to_string(), datatype: format!("{XSD}boolean") }
    }

    /// Decimal literal, tagged with a unit IRI when `unit` is a physical unit.
    pub fn decimal(v: f64, unit: Option<&str>) -> Term {
        let datatype = match unit {
            Some(u) => format!("{NS}unit:{}", encode(u)),
            None => format!("{XSD}decimal"),
        };
        Term::Literal { lexical: format!("{v}"), datatype }
    }

    fn write(&self, out: &mut String) {
        match self {
            Term::Iri(i) => {
                out.push('<');
                out.push_str(i);
                out.push('>');
            }
            Term::Literal { lexical, datatype } => {
                out.push('"');
                for c in lexical.chars() {
                    match c {
                        '"' => out.push_str("\\\""),
                        '\\' => out.push_str("\\\\"),
                        '\n' => out.push_str("\\n"),
                        '\r' => out.push_str("\\r"),
                        c => out.push(c),
                    }
                }
                out.push_str("\"^^<");
                out.push_str(datatype);
                out.push('>');
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: String,
    pub predicate: String,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: impl Into<String>, predicate: impl Into<String>, object: Term) -> Self {
        Triple { subject: subject.into(), predicate: predicate.into(), object }
    }

    pub fn to_line(&self) -> String {
        let mut line = String::new();
        Term::Iri(self.subject.clone()).write(&mut line);
        line.push(' ');
        Term::Iri(self.predicate.clone()).write(&mut line);
        line.push(' ');
        self.object.write(&mut line);
        line.push_str(" .");
        line
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InterpretationGraph {
    pub triples: BTreeSet<Triple>,
    pub prefixes: BTreeMap<String, String>,
}

impl InterpretationGraph {
    pub fn new() -> Self {
        let prefixes = [("ink", NS), ("vocab", VOCAB), ("xsd", XSD)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        InterpretationGraph { triples: BTreeSet::new(), prefixes }
    }

    pub fn insert(&mut self, t: Triple) -> bool {
        self.triples.insert(t)
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }
}

pub fn session_iri(session_id: &str) -> String {
    format!("{NS}session:{}", encode(session_id))
}

pub fn group_iri(session_id: &str, group_id: usize) -> String {
    format!("{}/group/{group_id}", session_iri(session_id))
}

pub fn stroke_iri(session_id: &str, index: usize) -> String {
    format!("{}/stroke/{index}", session_iri(session_id))
}

pub fn vocab(name: &str) -> String {
    format!("{VOCAB}{name}")
}

fn unit_of(feature_id: &str) -> Option<&'static str> {
    match descriptor(feature_id).map(|d| d.unit.as_str()) {
        Some("count" | "flag" | "normalized" | "ratio") | None => None,
        Some(u) => Some(u),
    }
}

/// Builds the graph for a session: the session node, one node per group,
/// score components of each result and document-level features.
pub fn to_triples(
    session: &InkSession,
    groups: &[RecognizedGroup],
    results: &[TestResult],
    document: Option<&FeatureVector>,
) -> Result<InterpretationGraph> {
    let id = session.meta.session_id.as_str();
    let s = session_iri(id);
    let mut g = InterpretationGraph::new();
    let timing = session.timing();
    g.insert(Triple::new(&s, RDF_TYPE, Term::iri(vocab("Session"))));
    for (pred, object) in [
        ("testId", Term::string(&session.meta.test_id)),
        ("source", Term::string(session.meta.source.as_str())),
        ("subjectPseudonym", Term::string(&session.meta.subject_pseudonym)),
        ("spanMicros", Term::integer(timing.span_us as i64)),
        ("strokeCount", Term::integer(session.strokes.len() as i64)),
        ("engineVersion", Term::string(ENGINE_VERSION)),
    ] {
        g.insert(Triple::new(&s, vocab(pred), object));
    }

    let mut seen = BTreeSet::new();
    for rg in groups {
        if !seen.insert(rg.group.id) {
            return Err(InkError::DanglingReference(format!("group {} listed twice", rg.group.id)));
        }
        let gi = group_iri(id, rg.group.id);
        g.insert(Triple::new(&gi, RDF_TYPE, Term::iri(vocab("Group"))));
        g.insert(Triple::new(&gi, vocab("inSession"), Term::iri(&s)));
        g.insert(Triple::new(&gi, vocab("hasLabel"), Term::iri(format!("{NS}label:{}", rg.label.label))));
        g.insert(Triple::new(&gi, vocab("confidence"), Term::decimal(rg.label.confidence, None)));
        for &i in &rg.group.stroke_indices {
            if i >= session.strokes.len() {
                return Err(InkError::DanglingReference(format!("group {} stroke {i}", rg.group.id)));
            }
            g.insert(Triple::new(&gi, vocab("hasStroke"), Term::iri(stroke_iri(id, i))));
        }
    }

    for r in results {
        if r.session_id != id {
            return Err(InkError::DanglingReference(format!("result for session {}", r.session_id)));
        }
        let kind_name = r.score.kind().as_str();
        g.insert(Triple::new(&s, vocab("scoredBy"), Term::string(kind_name)));
        for (name, value) in r.score.components() {
            let object = match value {
                ComponentValue::Bool(b) => Term::boolean(b),
                ComponentValue::Int(v) => Term::integer(v),
                ComponentValue::Decimal(v) if v.is_finite() => Term::decimal(v, None),
                ComponentValue::Decimal(_) => continue,
            };
            g.insert(Triple::new(&s, format!("{NS}score:{kind_name}.{}", encode(&name)), object));
        }
    }

    if let Some(doc) = document.filter(|_| !session.strokes.is_empty()) {
        for (fid, &v) in &doc.values {
            if v.is_finite() {
                g.insert(Triple::new(&s, format!("{NS}feature:{}", encode(fid)), Term::decimal(v, unit_of(fid))));
            }
        }
    }
    Ok(g)
}

pub fn serialize(graph: &InterpretationGraph) -> Vec<u8> {
    let mut lines: Vec<String> = graph.triples.iter().map(Triple::to_line).collect();
    lines.sort();
    let mut out = String::new();
    for l in lines {
        out.push_str(&l);
        out.push('\n');
    }
    out.into_bytes()
}

struct LineParser<'a> {
    rest: &'a str,
}

impl<'a> LineParser<'a> {
    fn expect(&mut self, token: &str) -> std::result::Result<(), String> {
        self.rest = self.rest.strip_prefix(token).ok_or_else(|| format!("expected `{token}`"))?;
        Ok(())
    }

    fn iri(&mut self) -> std::result::Result<String, String> {
        self.expect("<")?;
        let end = self.rest.find('>').ok_or("unterminated IRI")?;
        let iri = &self.rest[..end];
        if iri.is_empty() || iri.contains(|c: char| c.is_whitespace() || c == '<' || c == '"') {
            return Err(format!("invalid IRI `{iri}`"));
        }
        self.rest = &self.rest[end + 1..];
        Ok(iri.to_string())
    }

    fn object(&mut self) -> std::result::Result<Term, String> {
        if self.rest.starts_with('<') {
            return self.iri().map(Term::Iri);
        }
        self.expect("\"")?;
        let mut lexical = String::new();
        let mut chars = self.rest.char_indices();
        let close = loop {
            match chars.next() {
                None => return Err("unterminated literal".into()),
                Some((i, '"')) => break i,
                Some((_, '\\')) => match chars.next() {
                    Some((_, '"')) => lexical.push('"'),
                    Some((_, '\\')) => lexical.push('\\'),
                    Some((_, 'n')) => lexical.push('\n'),
                    Some((_, 'r')) => lexical.push('\r'),
                    _ => return Err("invalid escape".into()),
                },
                Some((_, c)) => lexical.push(c),
            }
        };
        self.rest = &self.rest[close + 1..];
        self.expect("^^")?;
        let datatype = self.iri()?;
        Ok(Term::Literal { lexical, datatype })
    }
}

fn parse_line(line: &str) -> std::result::Result<Triple, String> {
    let mut p = LineParser { rest: line };
    let subject = p.iri()?;
    p.expect(" ")?;
    let predicate = p.iri()?;
    p.expect(" ")?;
    let object = p.object()?;
    p.expect(" .")?;
    if !p.rest.is_empty() {
        return Err("trailing characters".into());
    }
    Ok(Triple { subject, predicate, object })
}

pub fn parse(bytes: &[u8]) -> Result<InterpretationGraph> {
    let text = std::str::from_utf8(bytes).map_err(|e| InkError::GraphParse { line: 0, message: e.to_string() })?;
    let mut g = InterpretationGraph::new();
    if text.is_empty() {
        return Ok(g);
    }
    let body = text
        .strip_suffix('\n')
        .ok_or(InkError::GraphParse { line: text.lines().count(), message: "missing final newline".into() })?;
    for (i, line) in body.split('\n').enumerate() {
        let t = parse_line(line).map_err(|message| InkError::GraphParse { line: i + 1, message })?;
        g.insert(t);
    }
    Ok(g)
}
