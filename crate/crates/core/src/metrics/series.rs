use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::basic::{accuracy, mcc_records, mean, median, percentile, spread, std_over_formats};
use crate::error::{Error, Result};
use crate::methods::MethodTag;
use crate::runner::EvalRecord;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Accuracy,
    Mcc,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::Mcc => "mcc",
        }
    }
}

/// Metric values of one (model, task, method) across formats.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormatSeries {
    pub model: String,
    pub task: String,
    pub method: MethodTag,
    /// Format id → metric value.
    pub values: BTreeMap<usize, f64>,
}

impl FormatSeries {
    pub fn new(
        model: impl Into<String>,
        task: impl Into<String>,
        method: MethodTag,
        values: &[f64],
    ) -> Self {
        Self {
            model: model.into(),
            task: task.into(),
            method,
            values: values.iter().copied().enumerate().collect(),
        }
    }

    pub fn values(&self) -> Vec<f64> {
        self.values.values().copied().collect()
    }

    pub fn spread(&self) -> Result<f64> {
        spread(&self.values())
    }

    pub fn median(&self) -> Result<f64> {
        median(&self.values())
    }

    pub fn std(&self) -> Result<f64> {
        std_over_formats(&self.values())
    }
}

/// One series per (model, task, method), sorted by that key.
pub fn series_from_records(records: &[EvalRecord], metric: Metric) -> Result<Vec<FormatSeries>> {
    let mut groups: BTreeMap<(&str, &str, MethodTag), BTreeMap<usize, Vec<EvalRecord>>> =
        BTreeMap::new();
    for r in records {
        groups
            .entry((&r.model, &r.task, r.method))
            .or_default()
            .entry(r.format_id)
            .or_default()
            .push(r.clone());
    }
    groups
        .into_iter()
        .map(|((model, task, method), by_format)| {
            let values = by_format
                .into_iter()
                .map(|(id, rs)| {
                    let v = match metric {
                        Metric::Accuracy => accuracy(&rs)?,
                        Metric::Mcc => mcc_records(&rs)?,
                    };
                    Ok((id, v))
                })
                .collect::<Result<BTreeMap<_, _>>>()?;
            Ok(FormatSeries {
                model: model.to_string(),
                task: task.to_string(),
                method,
                values,
            })
        })
        .collect()
}

/// Cross-task summary of one (model, method).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub model: String,
    pub method: MethodTag,
    pub n_tasks: usize,
    /// Mean over tasks of the per-task median over formats.
    pub mean_median: f64,
    /// Mean over tasks of the per-task standard deviation over formats;
    /// `None` when some task has a single format.
    pub mean_std: Option<f64>,
    pub mean_spread: f64,
}

impl AggregateRow {
    /// Error-bar half-width (two standard deviations).
    pub fn error_bar(&self) -> Option<f64> {
        self.mean_std.map(|s| 2.0 * s)
    }
}

/// Aggregate per (model, method). Every task of a model must carry the same
/// method set.
pub fn aggregate(series: &[FormatSeries]) -> Result<Vec<AggregateRow>> {
    let mut by_model: BTreeMap<&str, BTreeMap<MethodTag, Vec<&FormatSeries>>> = BTreeMap::new();
    for s in series {
        by_model
            .entry(&s.model)
            .or_default()
            .entry(s.method)
            .or_default()
            .push(s);
    }
    let mut rows = Vec::new();
    for (model, methods) in by_model {
        let all_tasks: BTreeSet<&str> = methods
            .values()
            .flatten()
            .map(|s| s.task.as_str())
            .collect();
        for (method, group) in &methods {
            let tasks: BTreeSet<&str> = group.iter().map(|s| s.task.as_str()).collect();
            if let Some(missing) = all_tasks.difference(&tasks).next() {
                return Err(Error::Coverage(format!(
                    "model {model}: method {method} has no results for task {missing}"
                )));
            }
            if tasks.len() != group.len() {
                return Err(Error::Coverage(format!(
                    "model {model}: duplicate series for method {method}"
                )));
            }
            let medians = group
                .iter()
                .map(|s| s.median())
                .collect::<Result<Vec<_>>>()?;
            let spreads = group
                .iter()
                .map(|s| s.spread())
                .collect::<Result<Vec<_>>>()?;
            let stds: Option<Vec<f64>> = group.iter().map(|s| s.std().ok()).collect();
            rows.push(AggregateRow {
                model: model.to_string(),
                method: *method,
                n_tasks: group.len(),
                mean_median: mean(&medians)?,
                mean_std: stds.map(|v| mean(&v)).transpose()?,
                mean_spread: mean(&spreads)?,
            });
        }
    }
    Ok(rows)
}

/// Spread statistics of the format groups sharing one component count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexityPoint {
    pub complexity: usize,
    pub n_groups: usize,
    pub mean_spread: f64,
    pub p5: f64,
    pub p95: f64,
}

/// Accuracy spread as a function of the number of non-default components.
///
/// Formats are grouped by (model, task, method, complexity); each group with
/// at least two formats contributes one spread value.
pub fn spread_vs_complexity(records: &[EvalRecord]) -> Result<Vec<ComplexityPoint>> {
    type Key<'a> = (usize, &'a str, &'a str, MethodTag);
    let mut groups: BTreeMap<Key, BTreeMap<usize, Vec<EvalRecord>>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.complexity, &r.model, &r.task, r.method))
            .or_default()
            .entry(r.format_id)
            .or_default()
            .push(r.clone());
    }
    let mut by_complexity: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for ((complexity, ..), by_format) in groups {
        if by_format.len() < 2 {
            continue;
        }
        let accs = by_format
            .values()
            .map(|rs| accuracy(rs))
            .collect::<Result<Vec<_>>>()?;
        by_complexity
            .entry(complexity)
            .or_default()
            .push(spread(&accs)?);
    }
    by_complexity
        .into_iter()
        .map(|(complexity, spreads)| {
            Ok(ComplexityPoint {
                complexity,
                n_groups: spreads.len(),
                mean_spread: mean(&spreads)?,
                p5: percentile(&spreads, 5.0)?,
                p95: percentile(&spreads, 95.0)?,
            })
        })
        .collect()
}
