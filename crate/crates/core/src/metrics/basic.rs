use crate::error::{Error, Result};
use crate::runner::EvalRecord;

/// Fraction of correct records; abstentions count as wrong.
pub fn accuracy(records: &[EvalRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::Undefined("accuracy of zero records".into()));
    }
    Ok(records.iter().filter(|r| r.correct).count() as f64 / records.len() as f64)
}

/// `max − min`; zero for a single value.
pub fn spread(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Undefined("spread of an empty series".into()));
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(max - min)
}

/// Population standard deviation (divisor `n`).
pub fn std_over_formats(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::Undefined(format!(
            "standard deviation over {} format(s)",
            values.len()
        )));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    Ok((values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt())
}

pub fn mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Undefined("mean of an empty series".into()));
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Median; even-length series average the two central values.
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Undefined("median of an empty series".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    Ok(if sorted.len().is_multiple_of(2) {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    } else {
        sorted[mid]
    })
}

/// Percentile `q ∈ [0, 100]` with linear interpolation between order statistics.
pub fn percentile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Undefined("percentile of an empty series".into()));
    }
    if !(0.0..=100.0).contains(&q) {
        return Err(Error::Config(format!("percentile {q} outside [0, 100]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    Ok(sorted[lo] + (sorted[hi] - sorted[lo]) * (rank - lo as f64))
}

/// Multiclass Matthews correlation (R_K) from gold classes and predictions.
///
/// Abstentions (`None`) form an extra prediction column that matches no gold
/// class. A zero denominator yields 0.
pub fn mcc(gold: &[usize], predicted: &[Option<usize>], n_classes: usize) -> Result<f64> {
    if gold.len() != predicted.len() {
        return Err(Error::Shape(format!(
            "{} gold labels vs {} predictions",
            gold.len(),
            predicted.len()
        )));
    }
    if gold.is_empty() {
        return Err(Error::Undefined("MCC of zero predictions".into()));
    }
    let mut true_counts = vec![0.0f64; n_classes];
    let mut pred_counts = vec![0.0f64; n_classes + 1];
    let mut correct = 0.0;
    for (g, p) in gold.iter().zip(predicted) {
        if *g >= n_classes || p.is_some_and(|p| p >= n_classes) {
            return Err(Error::Shape(format!(
                "class index outside {n_classes} classes"
            )));
        }
        true_counts[*g] += 1.0;
        pred_counts[p.unwrap_or(n_classes)] += 1.0;
        if *p == Some(*g) {
            correct += 1.0;
        }
    }
    let s = gold.len() as f64;
    let cov_tp: f64 = correct * s
        - (0..n_classes)
            .map(|k| pred_counts[k] * true_counts[k])
            .sum::<f64>();
    let cov_pp = s * s - pred_counts.iter().map(|p| p * p).sum::<f64>();
    let cov_tt = s * s - true_counts.iter().map(|t| t * t).sum::<f64>();
    let denom = (cov_pp * cov_tt).sqrt();
    Ok(if denom == 0.0 { 0.0 } else { cov_tp / denom })
}

/// [`mcc`] over records of one (task, format, method).
pub fn mcc_records(records: &[EvalRecord]) -> Result<f64> {
    let n_classes = records
        .first()
        .ok_or_else(|| Error::Undefined("MCC of zero records".into()))?
        .n_options;
    let gold: Vec<usize> = records.iter().map(|r| r.gold).collect();
    let predicted: Vec<Option<usize>> = records.iter().map(|r| r.chosen).collect();
    mcc(&gold, &predicted, n_classes)
}
