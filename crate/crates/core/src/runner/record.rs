use serde::{Deserialize, Serialize};

use crate::grammar::FormatSpec;
use crate::methods::{Diagnostics, MethodTag};

/// One prediction of one method for one instance under one format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub model: String,
    pub task: String,
    pub scenario: String,
    /// Position of the format in the task's sampled format list.
    pub format_id: usize,
    pub fingerprint: String,
    pub format: FormatSpec,
    pub complexity: usize,
    pub method: MethodTag,
    pub uid: String,
    /// Chosen class index; `None` for abstentions.
    pub chosen: Option<usize>,
    pub gold: usize,
    pub chosen_answer: Option<String>,
    pub gold_answer: String,
    pub correct: bool,
    pub n_options: usize,
    #[serde(default)]
    pub diagnostics: Diagnostics,
    /// Sum of backend-reported latencies for this prediction.
    #[serde(default)]
    pub elapsed_ms: u64,
}

/// A work unit that could not produce a record.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitFailure {
    pub model: String,
    pub task: String,
    pub scenario: String,
    pub format_id: usize,
    pub fingerprint: String,
    pub method: MethodTag,
    pub uid: String,
    pub error: String,
}

/// Identity of a work unit: unique per run.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UnitKey {
    pub model: String,
    pub task: String,
    pub format_id: usize,
    pub method: MethodTag,
    pub uid: String,
}

impl EvalRecord {
    pub fn key(&self) -> UnitKey {
        UnitKey {
            model: self.model.clone(),
            task: self.task.clone(),
            format_id: self.format_id,
            method: self.method,
            uid: self.uid.clone(),
        }
    }
}

impl UnitFailure {
    pub fn key(&self) -> UnitKey {
        UnitKey {
            model: self.model.clone(),
            task: self.task.clone(),
            format_id: self.format_id,
            method: self.method,
            uid: self.uid.clone(),
        }
    }
}
