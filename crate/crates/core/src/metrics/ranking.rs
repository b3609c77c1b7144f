use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::methods::MethodTag;

/// MCC of one method on one (model, task).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MccCell {
    pub model: String,
    pub task: String,
    pub method: MethodTag,
    pub mcc: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodRank {
    pub method: MethodTag,
    /// Average rank over all (model, task) cells; 1 is best.
    pub mean_rank: f64,
    pub n_cells: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankDelta {
    pub method: MethodTag,
    pub default_rank: f64,
    pub shifted_rank: f64,
    /// `shifted − default`; positive means the method got worse under shift.
    pub delta: f64,
}

/// Ranks of `values` in descending order, 1-based, ties receiving the average rank.
pub fn average_ranks_desc(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Rank methods within every (model, task) cell by MCC, then average ranks
/// jointly over all cells.
pub fn rank_methods(cells: &[MccCell]) -> Result<Vec<MethodRank>> {
    let methods: BTreeSet<MethodTag> = cells.iter().map(|c| c.method).collect();
    let mut grid: BTreeMap<(&str, &str), BTreeMap<MethodTag, f64>> = BTreeMap::new();
    for c in cells {
        if grid
            .entry((&c.model, &c.task))
            .or_default()
            .insert(c.method, c.mcc)
            .is_some()
        {
            return Err(Error::Coverage(format!(
                "duplicate MCC for {} on ({}, {})",
                c.method, c.model, c.task
            )));
        }
    }
    let mut sums: BTreeMap<MethodTag, f64> = BTreeMap::new();
    for ((model, task), row) in &grid {
        if let Some(missing) = methods.iter().find(|m| !row.contains_key(m)) {
            return Err(Error::Coverage(format!(
                "no MCC for {missing} on ({model}, {task})"
            )));
        }
        let values: Vec<f64> = row.values().copied().collect();
        for (method, rank) in row.keys().zip(average_ranks_desc(&values)) {
            *sums.entry(*method).or_default() += rank;
        }
    }
    let n = grid.len();
    Ok(sums
        .into_iter()
        .map(|(method, total)| MethodRank {
            method,
            mean_rank: total / n as f64,
            n_cells: n,
        })
        .collect())
}

/// Pair default-scenario and shifted-scenario ranks by method.
pub fn rank_deltas(default: &[MethodRank], shifted: &[MethodRank]) -> Result<Vec<RankDelta>> {
    let shifted: BTreeMap<MethodTag, f64> =
        shifted.iter().map(|r| (r.method, r.mean_rank)).collect();
    default
        .iter()
        .map(|d| {
            let s = *shifted.get(&d.method).ok_or_else(|| {
                Error::Coverage(format!("{} missing from shifted ranking", d.method))
            })?;
            Ok(RankDelta {
                method: d.method,
                default_rank: d.mean_rank,
                shifted_rank: s,
                delta: s - d.mean_rank,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(model: &str, task: &str, method: MethodTag, mcc: f64) -> MccCell {
        MccCell {
            model: model.into(),
            task: task.into(),
            method,
            mcc,
        }
    }

    #[test]
    fn dominance_and_ties() {
        let cells = vec![
            cell("a", "t", MethodTag::FewShotRanking, 0.9),
            cell("a", "t", MethodTag::BatchCalibration, 0.1),
        ];
        let ranks = rank_methods(&cells).unwrap();
        assert_eq!(ranks[0].mean_rank, 1.0);
        assert_eq!(ranks[1].mean_rank, 2.0);
        let tied = vec![
            cell("a", "t", MethodTag::FewShotRanking, 0.5),
            cell("a", "t", MethodTag::BatchCalibration, 0.5),
        ];
        assert!(rank_methods(&tied)
            .unwrap()
            .iter()
            .all(|r| r.mean_rank == 1.5));
    }

    #[test]
    fn average_ranks() {
        assert_eq!(
            average_ranks_desc(&[0.1, 0.9, 0.5, 0.9]),
            vec![4.0, 1.5, 3.0, 1.5]
        );
    }

    #[test]
    fn missing_cell_is_coverage_error() {
        let cells = vec![
            cell("a", "t1", MethodTag::FewShotRanking, 0.9),
            cell("a", "t1", MethodTag::BatchCalibration, 0.1),
            cell("a", "t2", MethodTag::FewShotRanking, 0.9),
        ];
        assert!(matches!(rank_methods(&cells), Err(Error::Coverage(_))));
    }
}
