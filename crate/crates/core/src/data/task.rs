use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One labelled example.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Instance {
    pub uid: String,
    pub input: String,
    /// Class label, or the text of the correct option.
    pub gold: String,
}

impl Instance {
    pub fn new(uid: impl Into<String>, input: impl Into<String>, gold: impl Into<String>) -> Self {
        Self {
            uid: uid.into(),
            input: input.into(),
            gold: gold.into(),
        }
    }
}

/// Field labels that precede the input and the answer.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Descriptors {
    pub input: String,
    pub output: String,
}

impl Default for Descriptors {
    fn default() -> Self {
        Self {
            input: "Input".into(),
            output: "Answer".into(),
        }
    }
}

impl Descriptors {
    pub fn new(input: impl Into<String>, output: impl Into<String>) -> Self {
        Self {
            input: input.into(),
            output: output.into(),
        }
    }
}

/// A classification or multiple-choice task.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: String,
    pub instruction: String,
    /// Enumerated answer options; `None` for option-free classification tasks.
    pub options: Option<Vec<String>>,
    pub descriptors: Descriptors,
    pub instances: Vec<Instance>,
    /// SHA-256 of the source document, when loaded from disk.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_hash: Option<String>,
}

impl Task {
    pub fn new(
        id: impl Into<String>,
        instruction: impl Into<String>,
        options: Option<Vec<String>>,
        descriptors: Descriptors,
        instances: Vec<Instance>,
    ) -> Result<Self> {
        let task = Self {
            id: id.into(),
            instruction: instruction.into(),
            options,
            descriptors,
            instances,
            source_hash: None,
        };
        task.validate()?;
        Ok(task)
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::TaskValidation("task id is empty".into()));
        }
        if self.instances.is_empty() {
            return Err(Error::TaskValidation(format!(
                "task {} has no instances",
                self.id
            )));
        }
        if let Some(options) = &self.options {
            if options.is_empty() {
                return Err(Error::TaskValidation(format!(
                    "task {} has an empty option list",
                    self.id
                )));
            }
        }
        let mut uids = BTreeSet::new();
        for instance in &self.instances {
            if instance.gold.is_empty() {
                return Err(Error::TaskValidation(format!(
                    "task {}: instance {} has an empty gold label",
                    self.id, instance.uid
                )));
            }
            if !uids.insert(instance.uid.as_str()) {
                return Err(Error::TaskValidation(format!(
                    "task {}: duplicate instance uid {}",
                    self.id, instance.uid
                )));
            }
            if let Some(options) = &self.options {
                if !options.contains(&instance.gold) {
                    return Err(Error::TaskValidation(format!(
                        "task {}: gold label {:?} of instance {} is not among the options",
                        self.id, instance.gold, instance.uid
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn has_options(&self) -> bool {
        self.options.is_some()
    }

    /// Answer classes in canonical order: the option list, or the sorted
    /// distinct gold labels for option-free tasks.
    pub fn labels(&self) -> Vec<String> {
        match &self.options {
            Some(options) => options.clone(),
            None => self
                .instances
                .iter()
                .map(|i| i.gold.clone())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect(),
        }
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.labels().iter().position(|l| l == label)
    }

    /// Instance count per class, in [`Task::labels`] order.
    pub fn class_counts(&self) -> Vec<(String, usize)> {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for instance in &self.instances {
            *counts.entry(instance.gold.as_str()).or_default() += 1;
        }
        self.labels()
            .into_iter()
            .map(|label| {
                let n = counts.get(label.as_str()).copied().unwrap_or(0);
                (label, n)
            })
            .collect()
    }

    pub fn uids(&self) -> Vec<&str> {
        self.instances.iter().map(|i| i.uid.as_str()).collect()
    }

    /// Same task metadata with a different instance list.
    pub fn with_instances(&self, instances: Vec<Instance>) -> Self {
        Self {
            instances,
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn yes_no() -> Task {
        Task::new(
            "task001",
            "Answer yes or no.",
            None,
            Descriptors::default(),
            vec![
                Instance::new("a", "x", "Yes"),
                Instance::new("b", "y", "No"),
            ],
        )
        .unwrap()
    }

    #[test]
    fn option_free_labels_are_sorted() {
        assert_eq!(yes_no().labels(), ["No", "Yes"]);
    }

    #[test]
    fn gold_outside_options_names_uid() {
        let err = Task::new(
            "task002",
            "",
            Some(vec!["A".into(), "B".into()]),
            Descriptors::default(),
            vec![Instance::new("u-17", "x", "C")],
        )
        .unwrap_err();
        assert!(err.to_string().contains("u-17"), "{err}");
    }

    #[test]
    fn rejects_empty_gold_and_empty_task() {
        assert!(Task::new("t", "", None, Descriptors::default(), vec![]).is_err());
        assert!(Task::new(
            "t",
            "",
            None,
            Descriptors::default(),
            vec![Instance::new("a", "x", "")]
        )
        .is_err());
        assert!(Task::new(
            "",
            "",
            None,
            Descriptors::default(),
            vec![Instance::new("a", "x", "y")]
        )
        .is_err());
    }
}
