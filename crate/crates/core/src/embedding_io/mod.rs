//! Embedding pools, queries, label files and persisted session state.

mod labels;
mod pool;
mod session;

pub use labels::{load_labels, load_labels_for, save_labels, LabelEntry, LabelSet};
pub use pool::{
    load_pool, load_query, save_pool, save_query, EmbeddingRecord, GroundTruth, PoolFormat,
    BINARY_MAGIC, BINARY_VERSION,
};
pub use session::{AuditEntry, Phase, SessionLock, SessionState, SessionStore};
