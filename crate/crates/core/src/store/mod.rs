//! Storage: an append-only event log for raw inputs and an in-memory triple
//! store for aligned semantic data, both with whole-file persistence.
//!
//! Concurrency contract: many concurrent readers or one writer. Callers that
//! share a store across threads wrap it in a reader-writer lock; appends to
//! the event log go through the single writer.

mod log;
mod triples;

pub use log::{EntryKind, EventLog, LogEntry};
pub use triples::{Bindings, PatternTerm, Term, Triple, TripleKey, TriplePattern, TripleStore};

/// Storage failure: I/O or a corrupt persisted file.
#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("io failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt file at line {line}: {reason}")]
    CorruptFile { line: usize, reason: String },
}
