//! Append-only JSONL audit trail.
//!
//! Every line is one event with a strictly increasing sequence number and a
//! UTC timestamp. Score changes and gate applications must carry a
//! justification; the log refuses to append them without one.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::percent::{render_exact, Percent};
use crate::scoring::GateOutcome;

/// What happened. Actions that alter recorded findings or discard evidence
/// require a justification.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditAction {
    CaseLoaded,
    ScoreSet,
    ScoreChanged,
    GateApplied,
    ReportEmitted,
}

impl AuditAction {
    pub fn requires_justification(self) -> bool {
        matches!(self, AuditAction::ScoreChanged | AuditAction::GateApplied)
    }
}

/// One audit line.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct AuditEvent {
    pub sequence: u64,
    pub timestamp: String,
    pub actor: String,
    pub action: AuditAction,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub justification: Option<String>,
    pub detail: serde_json::Value,
}

#[derive(Error, Debug)]
pub enum AuditError {
    #[error("action {action:?} requires a justification")]
    JustificationRequired { action: AuditAction },
    #[error("audit log {path}: {source}")]
    SinkUnavailable {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("audit log {path} line {line}: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

/// Appender over a JSONL file. Opening scans the existing trail so new
/// events continue the sequence.
pub struct AuditLog {
    path: PathBuf,
    next_sequence: u64,
}

impl AuditLog {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, AuditError> {
        let path = path.into();
        let next_sequence = match read_events(&path) {
            Ok(events) => events.last().map_or(1, |e| e.sequence + 1),
            Err(AuditError::SinkUnavailable { ref source, .. })
                if source.kind() == io::ErrorKind::NotFound =>
            {
                1
            }
            Err(e) => return Err(e),
        };
        Ok(AuditLog {
            path,
            next_sequence,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Appends one event, assigning the next sequence number. Returns the
    /// event as written.
    pub fn append(
        &mut self,
        actor: &str,
        action: AuditAction,
        justification: Option<&str>,
        detail: serde_json::Value,
    ) -> Result<AuditEvent, AuditError> {
        let justification = justification.map(str::trim).filter(|j| !j.is_empty());
        if action.requires_justification() && justification.is_none() {
            return Err(AuditError::JustificationRequired { action });
        }
        let event = AuditEvent {
            sequence: self.next_sequence,
            timestamp: chrono::Utc::now().format("%Y-%m-%dT%H:%M:%SZ").to_string(),
            actor: actor.to_string(),
            action,
            justification: justification.map(str::to_string),
            detail,
        };
        let line = serde_json::to_string(&event).expect("audit events serialize infallibly");
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|source| AuditError::SinkUnavailable {
                path: self.path.clone(),
                source,
            })?;
        file.write_all(line.as_bytes())
            .and_then(|_| file.write_all(b"\n"))
            .and_then(|_| file.flush())
            .map_err(|source| AuditError::SinkUnavailable {
                path: self.path.clone(),
                source,
            })?;
        self.next_sequence += 1;
        Ok(event)
    }
}

/// Reads and verifies a trail: parseable lines, strictly increasing
/// sequence, justification present where the action demands one.
pub fn read_events(path: impl AsRef<Path>) -> Result<Vec<AuditEvent>, AuditError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| AuditError::SinkUnavailable {
        path: path.to_path_buf(),
        source,
    })?;
    let mut events = Vec::new();
    let mut last_sequence = 0u64;
    for (index, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| AuditError::SinkUnavailable {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let number = index + 1;
        let event: AuditEvent =
            serde_json::from_str(&line).map_err(|e| AuditError::Corrupt {
                path: path.to_path_buf(),
                line: number,
                message: e.to_string(),
            })?;
        if event.sequence <= last_sequence {
            return Err(AuditError::Corrupt {
                path: path.to_path_buf(),
                line: number,
                message: format!(
                    "sequence {} does not increase past {}",
                    event.sequence, last_sequence
                ),
            });
        }
        if event.action.requires_justification()
            && event
                .justification
                .as_deref()
                .map_or(true, |j| j.trim().is_empty())
        {
            return Err(AuditError::Corrupt {
                path: path.to_path_buf(),
                line: number,
                message: format!("action {:?} recorded without justification", event.action),
            });
        }
        last_sequence = event.sequence;
        events.push(event);
    }
    Ok(events)
}

pub fn case_loaded_detail(case_id: &str, devices: usize) -> serde_json::Value {
    json!({ "case_id": case_id, "devices": devices })
}

pub fn score_set_detail(device_id: &str, factor: &str, value: &str) -> serde_json::Value {
    json!({ "device_id": device_id, "factor": factor, "value": value })
}

pub fn score_changed_detail(
    device_id: &str,
    factor: &str,
    old: &str,
    new: &str,
) -> serde_json::Value {
    json!({ "device_id": device_id, "factor": factor, "old": old, "new": new })
}

/// Records the cutoff and the per-device keep or discard decision.
pub fn gate_detail(outcome: &GateOutcome) -> serde_json::Value {
    let decisions: serde_json::Map<String, serde_json::Value> = outcome
        .values()
        .iter()
        .map(|(id, value)| {
            (
                id.clone(),
                json!({
                    "value": value.to_string(),
                    "retained": outcome.is_retained(id),
                }),
            )
        })
        .collect();
    json!({
        "cutoff": render_exact(outcome.cutoff().value()),
        "retained": outcome.retained(),
        "discarded": outcome.discarded(),
        "decisions": decisions,
    })
}

pub fn report_detail(case_id: &str, total: Option<Percent>, outputs: &[String]) -> serde_json::Value {
    json!({
        "case_id": case_id,
        "total": total.map(|p| p.to_string()),
        "outputs": outputs,
    })
}
