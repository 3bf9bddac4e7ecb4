use crate::embedding_io::{GroundTruth, LabelEntry, LabelSet};
use crate::error::Result;

/// Source of labels for selected shots.
pub trait LabelOracle {
    /// Labels as many of `shot_ids` as it can; missing ids mean the
    /// annotation is incomplete.
    fn annotate(&mut self, shot_ids: &[String]) -> Result<LabelSet>;
}

/// Answers from the ground truth carried by the pool file.
#[derive(Debug, Clone)]
pub struct GroundTruthOracle {
    truth: GroundTruth,
    annotator: String,
}

impl GroundTruthOracle {
    pub fn new(truth: GroundTruth) -> Self {
        GroundTruthOracle {
            truth,
            annotator: "ground-truth".into(),
        }
    }
}

impl LabelOracle for GroundTruthOracle {
    fn annotate(&mut self, shot_ids: &[String]) -> Result<LabelSet> {
        let mut labels = LabelSet::new();
        for id in shot_ids {
            if let Some(l) = self.truth.get(id) {
                labels.insert(id.clone(), LabelEntry::now(l, self.annotator.clone()));
            }
        }
        Ok(labels)
    }
}

/// Replays a fixed label set.
#[derive(Debug, Clone)]
pub struct FixedOracle(pub LabelSet);

impl LabelOracle for FixedOracle {
    fn annotate(&mut self, shot_ids: &[String]) -> Result<LabelSet> {
        let mut labels = LabelSet::new();
        for id in shot_ids {
            if let Some(e) = self.0.get(id) {
                labels.insert(id.clone(), e.clone());
            }
        }
        Ok(labels)
    }
}
