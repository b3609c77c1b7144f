use std::collections::BTreeSet;

use rand::seq::SliceRandom;

use super::task::{Instance, Task};
use crate::error::{Error, Result};
use crate::seed;

/// Lowest and highest realized majority share accepted by the imbalance shift.
pub const MAJORITY_BAND: (f64, f64) = (0.88, 0.92);

/// Smallest task the imbalance shift may produce.
pub const MIN_SHIFTED_SIZE: usize = 10;

/// Indices `0..len` in the seeded shuffled order. Shared by every sampler.
fn shuffled_indices(len: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..len).collect();
    order.shuffle(&mut seed::rng_from_seed(seed));
    order
}

/// Keep `min(n, |instances|)` instances chosen without replacement; survivors
/// keep their original order.
pub fn eval_subsample(task: &Task, n: usize, seed: u64) -> Task {
    let mut keep: Vec<usize> = shuffled_indices(task.instances.len(), seed)
        .into_iter()
        .take(n)
        .collect();
    keep.sort_unstable();
    task.with_instances(
        keep.into_iter()
            .map(|i| task.instances[i].clone())
            .collect(),
    )
}

/// Instances whose uid is not in `eval_uids`.
pub fn train_split(task: &Task, eval_uids: &BTreeSet<String>) -> Result<Task> {
    let known: BTreeSet<&str> = task.instances.iter().map(|i| i.uid.as_str()).collect();
    if let Some(missing) = eval_uids.iter().find(|u| !known.contains(u.as_str())) {
        return Err(Error::TaskValidation(format!(
            "evaluation uid {missing} is not part of task {}",
            task.id
        )));
    }
    let rest: Vec<Instance> = task
        .instances
        .iter()
        .filter(|i| !eval_uids.contains(&i.uid))
        .cloned()
        .collect();
    if rest.is_empty() {
        return Err(Error::InsufficientData(format!(
            "task {} has no instances left outside the evaluation set",
            task.id
        )));
    }
    Ok(task.with_instances(rest))
}

/// First `k` instances of a seeded shuffle, used as fixed demonstrations.
pub fn select_demonstrations(train: &Task, k: usize, seed: u64) -> Result<Vec<Instance>> {
    if train.instances.len() < k {
        return Err(Error::InsufficientData(format!(
            "task {} has {} training instances, {k} demonstrations requested",
            train.id,
            train.instances.len()
        )));
    }
    Ok(shuffled_indices(train.instances.len(), seed)
        .into_iter()
        .take(k)
        .map(|i| train.instances[i].clone())
        .collect())
}

/// Class sizes chosen by [`imbalance_downsample`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImbalancePlan {
    pub majority: String,
    /// `(label, count)` in label order, majority included.
    pub counts: Vec<(String, usize)>,
    pub total: usize,
}

impl ImbalancePlan {
    pub fn majority_fraction(&self) -> f64 {
        let majority = self
            .counts
            .iter()
            .find(|(label, _)| *label == self.majority)
            .map(|(_, n)| *n)
            .unwrap_or(0);
        majority as f64 / self.total as f64
    }
}

/// Largest class sizes satisfying the imbalance constraints: the majority gets
/// `floor(ratio * N)`, minorities split the rest evenly (floor, leftovers in
/// label order), every class can supply its share and the realized majority
/// share stays inside [`MAJORITY_BAND`].
pub fn plan_imbalance(task: &Task, majority_ratio: f64) -> Result<ImbalancePlan> {
    if !(0.0..1.0).contains(&majority_ratio) || majority_ratio == 0.0 {
        return Err(Error::InfeasibleShift(format!(
            "majority ratio {majority_ratio} outside (0, 1)"
        )));
    }
    let counts = task.class_counts();
    if counts.len() < 2 {
        return Err(Error::InfeasibleShift(format!(
            "task {} has fewer than two classes",
            task.id
        )));
    }
    if let Some((label, _)) = counts.iter().find(|(_, n)| *n == 0) {
        return Err(Error::InfeasibleShift(format!(
            "class {label:?} of task {} has no instances",
            task.id
        )));
    }
    // ties resolve to the earliest label
    let mut majority = 0;
    for (i, (_, n)) in counts.iter().enumerate() {
        if *n > counts[majority].1 {
            majority = i;
        }
    }
    let minorities: Vec<usize> = (0..counts.len()).filter(|&i| i != majority).collect();
    let k = minorities.len();
    let total: usize = counts.iter().map(|(_, n)| n).sum();

    for size in (1..=total).rev() {
        let majority_n = (majority_ratio * size as f64 + 1e-9).floor() as usize;
        let minority_total = size - majority_n;
        let base = minority_total / k;
        let leftover = minority_total % k;
        let fraction = majority_n as f64 / size as f64;
        if majority_n > counts[majority].1
            || fraction < MAJORITY_BAND.0 - 1e-12
            || fraction > MAJORITY_BAND.1 + 1e-12
        {
            continue;
        }
        let fits = minorities
            .iter()
            .enumerate()
            .all(|(rank, &class)| base + usize::from(rank < leftover) <= counts[class].1);
        if !fits {
            continue;
        }
        if size < MIN_SHIFTED_SIZE {
            break;
        }
        let mut planned: Vec<(String, usize)> =
            counts.iter().map(|(l, _)| (l.clone(), 0)).collect();
        planned[majority].1 = majority_n;
        for (rank, &class) in minorities.iter().enumerate() {
            planned[class].1 = base + usize::from(rank < leftover);
        }
        return Ok(ImbalancePlan {
            majority: counts[majority].0.clone(),
            counts: planned,
            total: size,
        });
    }
    Err(Error::InfeasibleShift(format!(
        "task {} cannot be downsampled to at least {MIN_SHIFTED_SIZE} instances at ratio {majority_ratio}",
        task.id
    )))
}

/// Downsample so the most frequent class makes up `majority_ratio` of the task.
pub fn imbalance_downsample(task: &Task, majority_ratio: f64, seed: u64) -> Result<Task> {
    let plan = plan_imbalance(task, majority_ratio)?;
    let mut keep = vec![false; task.instances.len()];
    for (label, count) in &plan.counts {
        let members: Vec<usize> = task
            .instances
            .iter()
            .enumerate()
            .filter(|(_, i)| &i.gold == label)
            .map(|(idx, _)| idx)
            .collect();
        let class_seed = seed::derive_seed(seed, &["imbalance", label]);
        for pick in shuffled_indices(members.len(), class_seed)
            .into_iter()
            .take(*count)
        {
            keep[members[pick]] = true;
        }
    }
    Ok(task.with_instances(
        task.instances
            .iter()
            .zip(keep)
            .filter(|(_, k)| *k)
            .map(|(i, _)| i.clone())
            .collect(),
    ))
}
