use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{FlameError, Result};

/// One human (or oracle) answer for a shot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelEntry {
    pub label: bool,
    pub annotator: String,
    /// RFC 3339, kept verbatim.
    pub timestamp: String,
}

impl LabelEntry {
    pub fn now(label: bool, annotator: impl Into<String>) -> Self {
        LabelEntry {
            label,
            annotator: annotator.into(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
        }
    }
}

/// Labels keyed by shot id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelSet(BTreeMap<String, LabelEntry>);

impl LabelSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or overwrites; returns the previous entry.
    pub fn insert(&mut self, shot_id: impl Into<String>, entry: LabelEntry) -> Option<LabelEntry> {
        self.0.insert(shot_id.into(), entry)
    }

    pub fn get(&self, shot_id: &str) -> Option<&LabelEntry> {
        self.0.get(shot_id)
    }

    pub fn label(&self, shot_id: &str) -> Option<bool> {
        self.0.get(shot_id).map(|e| e.label)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &LabelEntry)> {
        self.0.iter()
    }

    /// Fails with `UnknownShot` on the first id outside `shot_ids`.
    pub fn check_ids<S: AsRef<str>>(&self, shot_ids: &[S]) -> Result<()> {
        let allowed: BTreeSet<&str> = shot_ids.iter().map(|s| s.as_ref()).collect();
        match self.0.keys().find(|id| !allowed.contains(id.as_str())) {
            Some(id) => Err(FlameError::UnknownShot(id.clone())),
            None => Ok(()),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Row {
    shot_id: String,
    label: String,
    annotator: String,
    timestamp: String,
}

/// Writes `shot_id,label,annotator,timestamp` rows sorted by id.
pub fn save_labels<S: AsRef<str>>(path: &Path, labels: &LabelSet, shot_ids: &[S]) -> Result<()> {
    labels.check_ids(shot_ids)?;
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for (id, e) in labels.iter() {
        w.serialize(Row {
            shot_id: id.clone(),
            label: if e.label { "1" } else { "0" }.into(),
            annotator: e.annotator.clone(),
            timestamp: e.timestamp.clone(),
        })
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> FlameError {
    let line = e.position().map(|p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => FlameError::Io(io),
        kind => FlameError::Format {
            line,
            message: format!("{kind:?}"),
        },
    }
}

/// Reads a label CSV. Repeated ids keep the last row; each repetition adds
/// a warning to the returned list.
pub fn load_labels(path: &Path) -> Result<(LabelSet, Vec<String>)> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let mut labels = LabelSet::new();
    let mut warnings = Vec::new();
    for row in r.deserialize::<Row>() {
        let row = row.map_err(csv_err)?;
        let line = labels.len() + warnings.len() + 2;
        let label = match row.label.trim() {
            "1" => true,
            "0" => false,
            other => {
                return Err(FlameError::Format {
                    line: Some(line),
                    message: format!("label for {} must be 0 or 1, got {other:?}", row.shot_id),
                })
            }
        };
        if chrono::DateTime::parse_from_rfc3339(&row.timestamp).is_err() {
            return Err(FlameError::Format {
                line: Some(line),
                message: format!("timestamp {:?} is not RFC 3339", row.timestamp),
            });
        }
        let entry = LabelEntry {
            label,
            annotator: row.annotator,
            timestamp: row.timestamp,
        };
        if labels.insert(row.shot_id.clone(), entry).is_some() {
            let msg = format!(
                "duplicate label row for {} at line {line}; keeping the last",
                row.shot_id
            );
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }
    Ok((labels, warnings))
}

/// [`load_labels`] followed by a check that every id is a selected shot.
pub fn load_labels_for<S: AsRef<str>>(
    path: &Path,
    shot_ids: &[S],
) -> Result<(LabelSet, Vec<String>)> {
    let (labels, warnings) = load_labels(path)?;
    labels.check_ids(shot_ids)?;
    Ok((labels, warnings))
}
