//! Per-session incremental analysis. The pipeline is a plain state machine:
//! feeding it the same batches always yields the same events and artifacts.

use std::sync::Arc;

use inkcheck_core::battery::{score_groups, summarize, SummativeStats, TestResult, TestTemplate};
use inkcheck_core::features::{session_features, stroke_features, FeatureAccumulator, FeatureVector, SessionFeatures};
use inkcheck_core::graph::{serialize, to_triples};
use inkcheck_core::ink::{InkSession, RawSample, SegmentEvent, SessionMeta, StreamSegmenter, Stroke};
use inkcheck_core::recognize::{
    classify_group_with, recognize_session, GroupingParams, RecognizedGroup, StrokeGroup, StrokeGrouper, TextRecognizer,
};
use inkcheck_core::{InkError, Thresholds, ENGINE_VERSION};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};
use crate::protocol::Message;
use crate::suggest::{suggest_replays, ReplaySuggestion};

pub const DERIVED_FORMAT: &str = "derived-json";
pub const DERIVED_VERSION: u32 = 1;

/// Everything derived from a session's raw log; persisted as derived.json.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Derived {
    pub format: String,
    pub version: u32,
    pub engine_version: String,
    pub session_id: String,
    pub test_id: String,
    pub thresholds: Thresholds,
    pub features: SessionFeatures,
    pub groups: Vec<RecognizedGroup>,
    pub result: Option<TestResult>,
    /// Why scoring produced no result, e.g. an empty page.
    pub score_error: Option<String>,
    pub suggestions: Vec<ReplaySuggestion>,
    pub summary: SummativeStats,
    pub triple_count: usize,
}

impl Derived {
    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("derived artifacts always serialize");
        out.push(b'\n');
        out
    }
}

/// Derived artifacts of a finished session, ready to persist.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub derived: Derived,
    pub derived_json: Vec<u8>,
    pub graph_nt: Vec<u8>,
}

fn grouping(th: &Thresholds) -> GroupingParams {
    GroupingParams::new(th.group_gap_mm, th.group_gap_s)
}

/// Batch analysis of a complete session.
pub fn analyze(
    session: &InkSession,
    template: &TestTemplate,
    th: &Thresholds,
    text: &dyn TextRecognizer,
) -> Result<Artifacts> {
    let features = session_features(session, th.pause_threshold_us());
    let groups = recognize_session(session, grouping(th), text);
    let (result, score_error) = match score_groups(session, &groups, template, th, text) {
        Ok(r) => (Some(r), None),
        Err(e @ InkError::NoInk) => (None, Some(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let results: Vec<TestResult> = result.iter().cloned().collect();
    let graph = to_triples(session, &groups, &results, Some(&features.document))?;
    let suggestions = suggest_replays(session, &features.strokes, th);
    let summary = summarize(session, &results, &features.document, th);
    let derived = Derived {
        format: DERIVED_FORMAT.to_string(),
        version: DERIVED_VERSION,
        engine_version: ENGINE_VERSION.to_string(),
        session_id: session.meta.session_id.clone(),
        test_id: session.meta.test_id.clone(),
        thresholds: th.clone(),
        features,
        groups,
        result,
        score_error,
        suggestions,
        summary,
        triple_count: graph.len(),
    };
    Ok(Artifacts { derived_json: derived.to_json(), graph_nt: serialize(&graph), derived })
}

pub struct SessionPipeline {
    session: InkSession,
    template: TestTemplate,
    th: Thresholds,
    text: Arc<dyn TextRecognizer>,
    segmenter: StreamSegmenter,
    acc: FeatureAccumulator,
    grouper: StrokeGrouper,
    groups: Vec<RecognizedGroup>,
    last_seq: Option<u64>,
}

impl std::fmt::Debug for SessionPipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SessionPipeline")
            .field("session_id", &self.session.meta.session_id)
            .field("strokes", &self.session.strokes.len())
            .field("last_seq", &self.last_seq)
            .finish()
    }
}

impl SessionPipeline {
    pub fn new(
        meta: SessionMeta,
        template: TestTemplate,
        th: Thresholds,
        text: Arc<dyn TextRecognizer>,
    ) -> Result<Self> {
        template.validate()?;
        Ok(SessionPipeline {
            session: InkSession::from_parts(meta, Vec::new(), Vec::new()),
            template,
            acc: FeatureAccumulator::new(th.pause_threshold_us()),
            grouper: StrokeGrouper::new(grouping(&th)),
            th,
            text,
            segmenter: StreamSegmenter::new(),
            groups: Vec::new(),
            last_seq: None,
        })
    }

    pub fn meta(&self) -> &SessionMeta {
        &self.session.meta
    }

    pub fn session_id(&self) -> &str {
        &self.session.meta.session_id
    }

    pub fn template(&self) -> &TestTemplate {
        &self.template
    }

    pub fn thresholds(&self) -> &Thresholds {
        &self.th
    }

    /// Strokes and gaps completed so far.
    pub fn session(&self) -> &InkSession {
        &self.session
    }

    pub fn live_document(&self) -> FeatureVector {
        self.acc.document().with_session(self.session_id())
    }

    /// Validates a batch without changing any state.
    pub fn check_batch(&self, seq: u64, samples: &[RawSample]) -> Result<()> {
        if let Some(last) = self.last_seq {
            if seq <= last {
                return Err(ServiceError::Protocol(format!("batch seq {seq} does not follow {last}")));
            }
        }
        self.segmenter.check(samples)?;
        Ok(())
    }

    /// Processes one batch. Emits stroke, classification and score events,
    /// then the `feature_update` acknowledging `seq`.
    pub fn push_batch(&mut self, seq: u64, samples: &[RawSample]) -> Result<Vec<Message>> {
        self.check_batch(seq, samples)?;
        self.last_seq = Some(seq);
        let mut out = Vec::new();
        for s in samples {
            for event in self.segmenter.push(*s)? {
                self.apply(event, &mut out);
            }
        }
        if let Some(now) = self.segmenter.last_t() {
            if let Some(group) = self.grouper.close_if_stale(now) {
                self.close_group(group, &mut out);
            }
        }
        out.push(self.feature_update(seq));
        Ok(out)
    }

    /// Flushes the open stroke and group, then runs the batch analysis.
    pub fn finish(mut self) -> Result<(Vec<Message>, Artifacts)> {
        let mut out = Vec::new();
        for event in self.segmenter.finish() {
            self.apply(event, &mut out);
        }
        if let Some(group) = self.grouper.finish() {
            self.close_group(group, &mut out);
        }
        let artifacts = analyze(&self.session, &self.template, &self.th, self.text.as_ref())?;
        let id = self.session_id().to_string();
        for s in &artifacts.derived.suggestions {
            out.push(Message::ReplaySuggestion { session_id: id.clone(), suggestion: s.clone() });
        }
        out.push(Message::SessionSummary {
            session_id: id,
            summary: artifacts.derived.summary.clone(),
            suggestions: artifacts.derived.suggestions.clone(),
            triple_count: artifacts.derived.triple_count,
        });
        Ok((out, artifacts))
    }

    fn apply(&mut self, event: SegmentEvent, out: &mut Vec<Message>) {
        match event {
            SegmentEvent::Stroke(stroke) => {
                let features = stroke_features(&stroke).with_session(self.session_id());
                self.acc.add_stroke(&stroke, &features);
                let closed = self.grouper.push(&stroke);
                self.session.strokes.push(stroke.clone());
                out.push(Message::StrokeCompleted {
                    session_id: self.session_id().to_string(),
                    stroke,
                    features,
                    document: self.live_document(),
                });
                if let Some(group) = closed {
                    self.close_group(group, out);
                }
            }
            SegmentEvent::Gap(gap) => {
                self.acc.add_gap(&gap);
                self.session.gaps.push(gap);
            }
        }
    }

    fn close_group(&mut self, group: StrokeGroup, out: &mut Vec<Message>) {
        let label = classify_group_with(&group, &self.session, self.text.as_ref());
        out.push(Message::Classification {
            session_id: self.session_id().to_string(),
            group_id: group.id,
            stroke_indices: group.stroke_indices.clone(),
            bbox: group.bbox,
            label: label.clone(),
        });
        self.groups.push(RecognizedGroup { group, label });
        if let Ok(result) = score_groups(&self.session, &self.groups, &self.template, &self.th, self.text.as_ref()) {
            out.push(Message::ScoreUpdate { session_id: self.session_id().to_string(), result });
        }
    }

    fn feature_update(&self, seq: u64) -> Message {
        let timing = self.acc.timing();
        let current = self.segmenter.current_stroke();
        let current_stroke = (!current.is_empty()).then(|| {
            let stroke = Stroke { index: self.session.strokes.len(), samples: current.to_vec() };
            stroke_features(&stroke).with_session(self.session_id())
        });
        let document = self.acc.document();
        Message::FeatureUpdate {
            session_id: self.session_id().to_string(),
            seq,
            t: self.segmenter.last_t(),
            stroke_count: self.session.strokes.len(),
            in_stroke: self.segmenter.in_stroke(),
            on_paper_s: timing.on_paper_us as f64 * 1e-6,
            in_air_s: timing.in_air_us as f64 * 1e-6,
            pause_count: document.value("pause_count") as usize,
            current_stroke,
        }
    }
}
