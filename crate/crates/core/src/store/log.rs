//! Append-only event log, persisted as newline-delimited JSON.

use super::StoreError;
use crate::model::Timestamp;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

/// What kind of record a log entry holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EntryKind {
    Sensor,
    Ik,
    Composite,
    Recommendation,
}

/// One immutable log entry. Offsets are dense: 0, 1, 2, ...
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub offset: u64,
    pub kind: EntryKind,
    pub t: Timestamp,
    pub payload: serde_json::Value,
}

/// In-memory append-only log with whole-file persistence. Entries never
/// mutate after append.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct EventLog {
    entries: Vec<LogEntry>,
}

impl EventLog {
    pub fn new() -> Self {
        EventLog::default()
    }

    pub fn len(&self) -> u64 {
        self.entries.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[LogEntry] {
        &self.entries
    }

    pub fn get(&self, offset: u64) -> Option<&LogEntry> {
        self.entries.get(offset as usize)
    }

    /// Appends a record and returns its offset (= previous length).
    pub fn append(&mut self, kind: EntryKind, payload: serde_json::Value, at: Timestamp) -> u64 {
        let offset = self.len();
        self.entries.push(LogEntry {
            offset,
            kind,
            t: at,
            payload,
        });
        offset
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for entry in &self.entries {
            out.push_str(&serde_json::to_string(entry).expect("log entries always serialize"));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), StoreError> {
        super::triples::write_atomic(path.as_ref(), self.to_text().as_bytes())
    }

    pub fn from_text(text: &str) -> Result<Self, StoreError> {
        let mut entries = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let entry: LogEntry =
                serde_json::from_str(line).map_err(|e| StoreError::CorruptFile {
                    line: line_no,
                    reason: e.to_string(),
                })?;
            if entry.offset != entries.len() as u64 {
                return Err(StoreError::CorruptFile {
                    line: line_no,
                    reason: format!(
                        "offset {} out of sequence, expected {}",
                        entry.offset,
                        entries.len()
                    ),
                });
            }
            entries.push(entry);
        }
        Ok(EventLog { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        Self::from_text(&fs::read_to_string(path)?)
    }
}
