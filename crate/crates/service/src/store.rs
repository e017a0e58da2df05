//! Filesystem session store. Each session lives in its own directory:
//!
//! ```text
//! <root>/<session_id>/raw.jsonl     append-only input log
//! <root>/<session_id>/derived.json  features, groups, score, suggestions
//! <root>/<session_id>/graph.nt      interpretation graph
//! ```

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use inkcheck_core::battery::{SummativeStats, TestResult, TestTemplate};
use inkcheck_core::ink::{RawSample, SessionMeta};
use inkcheck_core::recognize::TextRecognizer;
use inkcheck_core::{Thresholds, ENGINE_VERSION};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};
use crate::pipeline::{Artifacts, Derived, SessionPipeline};
use crate::protocol::Message;
use crate::suggest::ReplaySuggestion;

pub const RAW_LOG: &str = "raw.jsonl";
pub const DERIVED: &str = "derived.json";
pub const GRAPH: &str = "graph.nt";
pub const RAW_FORMAT: &str = "raw-jsonl";
pub const RAW_VERSION: u32 = 1;

/// One line of raw.jsonl.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum RawRecord {
    Start {
        format: String,
        version: u32,
        engine_version: String,
        meta: SessionMeta,
        template: TestTemplate,
        thresholds: Thresholds,
    },
    Samples {
        seq: u64,
        samples: Vec<RawSample>,
    },
    End,
}

impl RawRecord {
    pub fn start(meta: SessionMeta, template: TestTemplate, thresholds: Thresholds) -> Self {
        RawRecord::Start {
            format: RAW_FORMAT.to_string(),
            version: RAW_VERSION,
            engine_version: ENGINE_VERSION.to_string(),
            meta,
            template,
            thresholds,
        }
    }
}

/// Session ids double as directory names.
pub fn validate_session_id(id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && id.len() <= 128
        && !id.starts_with('.')
        && id.bytes().all(|b| b.is_ascii_alphanumeric() || matches!(b, b'-' | b'_' | b'.'));
    if ok {
        Ok(())
    } else {
        Err(ServiceError::InvalidSessionId(id.to_string()))
    }
}

/// Append handle on a session's raw log.
#[derive(Debug)]
pub struct RawLog {
    file: File,
}

impl RawLog {
    /// Writes one record with a single `write` so an acknowledged batch is
    /// in the log even if the process dies right after.
    pub fn append(&mut self, record: &RawRecord) -> Result<()> {
        let mut line = serde_json::to_vec(record).map_err(|e| ServiceError::Store(e.to_string()))?;
        line.push(b'\n');
        self.file.write_all(&line)?;
        Ok(())
    }

    pub fn sync(&self) -> Result<()> {
        self.file.sync_data()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub session_id: String,
    pub test_id: String,
    pub subject_pseudonym: String,
    /// Derived artifacts exist.
    pub complete: bool,
}

/// The `GET /sessions/{id}/summary` view of derived.json.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryView {
    pub session_id: String,
    pub test_id: String,
    pub engine_version: String,
    pub summary: SummativeStats,
    pub result: Option<TestResult>,
    pub score_error: Option<String>,
    pub suggestions: Vec<ReplaySuggestion>,
    pub triple_count: usize,
}

impl From<Derived> for SummaryView {
    fn from(d: Derived) -> Self {
        SummaryView {
            session_id: d.session_id,
            test_id: d.test_id,
            engine_version: d.engine_version,
            summary: d.summary,
            result: d.result,
            score_error: d.score_error,
            suggestions: d.suggestions,
            triple_count: d.triple_count,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SessionStore {
    root: PathBuf,
}

impl SessionStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(SessionStore { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn session_dir(&self, id: &str) -> Result<PathBuf> {
        validate_session_id(id)?;
        Ok(self.root.join(id))
    }

    pub fn exists(&self, id: &str) -> bool {
        self.session_dir(id).map(|d| d.join(RAW_LOG).exists()).unwrap_or(false)
    }

    /// Creates the session directory and its raw log; an existing log is
    /// never reopened for writing.
    pub fn create(&self, id: &str) -> Result<RawLog> {
        let dir = self.session_dir(id)?;
        fs::create_dir_all(&dir)?;
        let file = OpenOptions::new().append(true).create_new(true).open(dir.join(RAW_LOG)).map_err(|e| {
            if e.kind() == ErrorKind::AlreadyExists {
                ServiceError::SessionExists(id.to_string())
            } else {
                e.into()
            }
        })?;
        Ok(RawLog { file })
    }

    pub fn read_raw(&self, id: &str) -> Result<Vec<RawRecord>> {
        let path = self.session_dir(id)?.join(RAW_LOG);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == ErrorKind::NotFound => return Err(ServiceError::UnknownSession(id.to_string())),
            Err(e) => return Err(e.into()),
        };
        parse_raw(&text)
    }

    /// Writes derived.json and graph.nt through temporary files.
    pub fn write_artifacts(&self, id: &str, artifacts: &Artifacts) -> Result<()> {
        let dir = self.session_dir(id)?;
        for (name, bytes) in [(DERIVED, &artifacts.derived_json), (GRAPH, &artifacts.graph_nt)] {
            let tmp = dir.join(format!(".{name}.tmp"));
            let mut f = File::create(&tmp)?;
            f.write_all(bytes)?;
            f.sync_data()?;
            fs::rename(&tmp, dir.join(name))?;
        }
        Ok(())
    }

    pub fn read_derived(&self, id: &str) -> Result<Derived> {
        let path = self.session_dir(id)?.join(DERIVED);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == ErrorKind::NotFound => return Err(ServiceError::UnknownSession(id.to_string())),
            Err(e) => return Err(e.into()),
        };
        serde_json::from_slice(&bytes).map_err(|e| ServiceError::Store(format!("{}: {e}", path.display())))
    }

    /// The stored summary in its `session_summary` message form.
    pub fn summary_message(&self, id: &str) -> Result<Message> {
        let d = self.read_derived(id)?;
        Ok(Message::SessionSummary {
            session_id: d.session_id,
            summary: d.summary,
            suggestions: d.suggestions,
            triple_count: d.triple_count,
        })
    }

    /// Every session with a readable raw log, sorted by id.
    pub fn list(&self) -> Result<Vec<SessionInfo>> {
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.root)? {
            let entry = entry?;
            let Some(id) = entry.file_name().to_str().map(str::to_string) else { continue };
            if validate_session_id(&id).is_err() || !entry.path().join(RAW_LOG).exists() {
                continue;
            }
            let Ok(file) = File::open(entry.path().join(RAW_LOG)) else { continue };
            let mut first = String::new();
            if BufReader::new(file).read_line(&mut first).is_err() {
                continue;
            }
            if let Ok(RawRecord::Start { meta, .. }) = serde_json::from_str(&first) {
                out.push(SessionInfo {
                    session_id: id.clone(),
                    test_id: meta.test_id.clone(),
                    subject_pseudonym: meta.subject_pseudonym.clone(),
                    complete: entry.path().join(DERIVED).exists(),
                });
            }
        }
        out.sort_by(|a, b| a.session_id.cmp(&b.session_id));
        Ok(out)
    }
}

/// Parses raw.jsonl. A final line cut short by a crash is ignored.
pub fn parse_raw(text: &str) -> Result<Vec<RawRecord>> {
    let complete = text.ends_with('\n');
    let lines: Vec<&str> = text.lines().collect();
    let mut out = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        match serde_json::from_str(line) {
            Ok(r) => out.push(r),
            Err(_) if i + 1 == lines.len() && !complete => break,
            Err(e) => return Err(ServiceError::Store(format!("{RAW_LOG} line {}: {e}", i + 1))),
        }
    }
    Ok(out)
}

/// Re-ingests a raw log through a fresh pipeline.
pub fn rebuild(records: &[RawRecord], text: Arc<dyn TextRecognizer>) -> Result<Artifacts> {
    let Some(RawRecord::Start { meta, template, thresholds, .. }) = records.first() else {
        return Err(ServiceError::Store(format!("{RAW_LOG} does not start with a start record")));
    };
    let mut pipeline = SessionPipeline::new(meta.clone(), template.clone(), thresholds.clone(), text)?;
    for r in &records[1..] {
        match r {
            RawRecord::Samples { seq, samples } => {
                pipeline.push_batch(*seq, samples)?;
            }
            RawRecord::End => break,
            RawRecord::Start { .. } => return Err(ServiceError::Store("second start record".into())),
        }
    }
    Ok(pipeline.finish()?.1)
}
