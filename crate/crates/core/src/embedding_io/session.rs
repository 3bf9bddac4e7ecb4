use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::labels::{LabelEntry, LabelSet};
use crate::error::{FlameError, Result};
use crate::pipeline::EvalReport;
use crate::sampler::{FlameConfig, ShotSelection};

/// Session lifecycle; transitions only move forward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Sampling,
    AwaitingLabels,
    Trained,
    Evaluated,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Sampling => "sampling",
            Phase::AwaitingLabels => "awaiting_labels",
            Phase::Trained => "trained",
            Phase::Evaluated => "evaluated",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub shot_id: String,
    pub previous: Option<bool>,
    pub label: bool,
    pub annotator: String,
    pub timestamp: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub id: String,
    pub created_at: String,
    pub config: FlameConfig,
    pub pool_path: String,
    pub query: Vec<f64>,
    pub phase: Phase,
    pub selection: Option<ShotSelection>,
    /// Pool ids of the selected shots, in selection order.
    pub shot_ids: Vec<String>,
    pub labels: LabelSet,
    pub audit: Vec<AuditEntry>,
    /// File name of the trained model, relative to the session store.
    pub model_file: Option<String>,
    pub report: Option<EvalReport>,
    pub post_labeling_seconds: Option<f64>,
}

impl SessionState {
    pub fn new(
        id: impl Into<String>,
        config: FlameConfig,
        pool_path: impl Into<String>,
        query: Vec<f64>,
    ) -> Self {
        SessionState {
            id: id.into(),
            created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            config,
            pool_path: pool_path.into(),
            query,
            phase: Phase::Sampling,
            selection: None,
            shot_ids: Vec::new(),
            labels: LabelSet::new(),
            audit: Vec::new(),
            model_file: None,
            report: None,
            post_labeling_seconds: None,
        }
    }

    pub fn require(&self, phase: Phase) -> Result<()> {
        if self.phase != phase {
            return Err(FlameError::Phase {
                actual: self.phase.as_str().into(),
                required: phase.as_str().into(),
            });
        }
        Ok(())
    }

    pub fn advance(&mut self, to: Phase) -> Result<()> {
        if to <= self.phase {
            return Err(FlameError::Phase {
                actual: self.phase.as_str().into(),
                required: format!("a phase before {}", to.as_str()),
            });
        }
        self.phase = to;
        Ok(())
    }

    /// Stores the selection and its pool ids and moves to `AwaitingLabels`.
    pub fn set_selection(&mut self, selection: ShotSelection, shot_ids: Vec<String>) -> Result<()> {
        self.require(Phase::Sampling)?;
        self.selection = Some(selection);
        self.shot_ids = shot_ids;
        self.advance(Phase::AwaitingLabels)
    }

    /// Merges one label, overwriting any earlier answer and auditing it.
    pub fn record_label(&mut self, shot_id: &str, entry: LabelEntry) -> Result<Option<bool>> {
        self.require(Phase::AwaitingLabels)?;
        if !self.shot_ids.iter().any(|s| s == shot_id) {
            return Err(FlameError::UnknownShot(shot_id.to_string()));
        }
        let previous = self.labels.label(shot_id);
        self.audit.push(AuditEntry {
            shot_id: shot_id.to_string(),
            previous,
            label: entry.label,
            annotator: entry.annotator.clone(),
            timestamp: entry.timestamp.clone(),
        });
        self.labels.insert(shot_id, entry);
        Ok(previous)
    }

    pub fn remaining(&self) -> usize {
        self.shot_ids
            .iter()
            .filter(|id| self.labels.get(id).is_none())
            .count()
    }

    pub fn labels_complete(&self) -> bool {
        !self.shot_ids.is_empty() && self.remaining() == 0
    }
}

/// JSON files under one directory, one per session, with a lock file per
/// session held by its single writer.
#[derive(Debug, Clone)]
pub struct SessionStore {
    dir: PathBuf,
}

/// Removes the lock file when dropped.
#[derive(Debug)]
pub struct SessionLock {
    path: PathBuf,
}

impl Drop for SessionLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

fn check_id(id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && id.len() <= 128
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
    if !ok {
        return Err(FlameError::config(
            "session_id",
            "must be 1-128 characters of [A-Za-z0-9_-]",
        ));
    }
    Ok(())
}

impl SessionStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(SessionStore { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn state_path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.json"))
    }

    pub fn artifact_path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Takes the writer lock of a session; fails with `Locked` if another
    /// writer holds it.
    pub fn lock(&self, id: &str) -> Result<SessionLock> {
        check_id(id)?;
        let path = self.dir.join(format!("{id}.lock"));
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                writeln!(f, "{}", std::process::id())?;
                Ok(SessionLock { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(FlameError::Locked(id.to_string()))
            }
            Err(e) => Err(e.into()),
        }
    }

    /// Atomically replaces the stored state. The caller must hold the lock.
    pub fn save(&self, state: &SessionState, _lock: &SessionLock) -> Result<()> {
        check_id(&state.id)?;
        let tmp = self.dir.join(format!("{}.json.tmp", state.id));
        fs::write(&tmp, serde_json::to_string_pretty(state)? + "\n")?;
        fs::rename(&tmp, self.state_path(&state.id))?;
        Ok(())
    }

    pub fn load(&self, id: &str) -> Result<Option<SessionState>> {
        check_id(id)?;
        match fs::read_to_string(self.state_path(id)) {
            Ok(text) => Ok(Some(serde_json::from_str(&text)?)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state() -> SessionState {
        let mut s = SessionState::new("s1", FlameConfig::default(), "pool.jsonl", vec![1.0, 0.0]);
        s.shot_ids = vec!["a".into(), "b".into()];
        s.phase = Phase::AwaitingLabels;
        s
    }

    #[test]
    fn phases_only_move_forward() {
        let mut s = state();
        assert!(s.advance(Phase::Sampling).is_err());
        assert!(s.advance(Phase::AwaitingLabels).is_err());
        s.advance(Phase::Evaluated).unwrap();
        assert!(s.advance(Phase::Trained).is_err());
    }

    #[test]
    fn labels_are_audited_and_restricted() {
        let mut s = state();
        let e = |l| LabelEntry {
            label: l,
            annotator: "x".into(),
            timestamp: "2024-01-01T00:00:00Z".into(),
        };
        assert_eq!(s.record_label("a", e(true)).unwrap(), None);
        assert_eq!(s.record_label("a", e(false)).unwrap(), Some(true));
        assert!(matches!(
            s.record_label("zz", e(true)),
            Err(FlameError::UnknownShot(_))
        ));
        assert_eq!(s.remaining(), 1);
        s.record_label("b", e(true)).unwrap();
        assert!(s.labels_complete());
        assert_eq!(s.audit.len(), 3);
        s.advance(Phase::Trained).unwrap();
        assert!(matches!(
            s.record_label("a", e(true)),
            Err(FlameError::Phase { .. })
        ));
    }

    #[test]
    fn store_round_trip_and_lock() {
        let dir = tempfile::tempdir().unwrap();
        let store = SessionStore::open(dir.path()).unwrap();
        let s = state();
        {
            let lock = store.lock("s1").unwrap();
            assert!(matches!(store.lock("s1"), Err(FlameError::Locked(_))));
            store.save(&s, &lock).unwrap();
        }
        assert!(store.lock("s1").is_ok());
        assert_eq!(store.load("s1").unwrap().unwrap(), s);
        assert_eq!(store.load("nope").unwrap(), None);
        assert!(store.load("../etc").is_err());
    }
}
