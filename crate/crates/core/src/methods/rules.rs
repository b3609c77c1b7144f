use super::{MethodPrediction, MethodTag};
use crate::error::{Error, Result};
use crate::grammar::OptionLabel;

const ROW_SUM_TOLERANCE: f64 = 1e-6;

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        match best {
            Some(b) if *v <= values[b] => {}
            _ => best = Some(i),
        }
    }
    best
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().find(|v| !v.is_finite()) {
        Some(v) => Err(Error::Numeric(format!("non-finite score {v}"))),
        None => Ok(()),
    }
}

/// Pick the highest-scoring option.
pub fn predict_ranking(option_logprobs: &[f64]) -> Result<MethodPrediction> {
    if option_logprobs.is_empty() {
        return Err(Error::Shape("no option scores".into()));
    }
    check_finite(option_logprobs)?;
    Ok(MethodPrediction::new(
        MethodTag::FewShotRanking,
        argmax(option_logprobs),
        Some(option_logprobs.to_vec()),
    ))
}

/// Trim, lowercase, drop trailing `. , ; :` and wrapping quotes until stable.
pub fn normalize_answer(text: &str) -> String {
    let mut current = text.trim().to_lowercase();
    loop {
        let mut next = current
            .trim_end_matches(['.', ',', ';', ':'])
            .trim()
            .to_string();
        for (open, close) in [
            ('"', '"'),
            ('\'', '\''),
            ('`', '`'),
            ('\u{201c}', '\u{201d}'),
            ('\u{2018}', '\u{2019}'),
        ] {
            if next.chars().count() >= 2 && next.starts_with(open) && next.ends_with(close) {
                next = next[open.len_utf8()..next.len() - close.len_utf8()]
                    .trim()
                    .to_string();
            }
        }
        if next == current {
            return current;
        }
        current = next;
    }
}

/// Match generated text to an option by exact match after normalization,
/// first against option contents, then against the enumeration labels shown
/// in the prompt (bare item such as `B`, or wrapped such as `B)`).
/// No match is an abstention.
pub fn predict_greedy(
    generated_text: &str,
    options: &[String],
    labels: &[OptionLabel],
) -> MethodPrediction {
    let answer = normalize_answer(generated_text);
    let by_content = options.iter().position(|o| normalize_answer(o) == answer);
    let chosen = by_content.or_else(|| {
        labels
            .iter()
            .position(|l| {
                normalize_answer(&l.item) == answer || normalize_answer(&l.wrapped) == answer
            })
            .filter(|&i| i < options.len())
    });
    MethodPrediction::new(MethodTag::FewShotGreedy, chosen, None)
        .with_diagnostic("generated_text", generated_text)
        .with_diagnostic("abstained", chosen.is_none())
}

fn check_matrix(rows: &[Vec<f64>]) -> Result<usize> {
    let first = rows
        .first()
        .ok_or_else(|| Error::Shape("empty batch".into()))?;
    let width = first.len();
    if width == 0 {
        return Err(Error::Shape("rows have no classes".into()));
    }
    if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != width) {
        return Err(Error::Shape(format!(
            "row {i} has {} classes, expected {width}",
            row.len()
        )));
    }
    for row in rows {
        check_finite(row)?;
    }
    Ok(width)
}

fn calibrated(row: &[f64], means: &[f64]) -> MethodPrediction {
    let adjusted: Vec<f64> = row.iter().zip(means).map(|(v, m)| v - m).collect();
    MethodPrediction::new(
        MethodTag::BatchCalibration,
        argmax(&adjusted),
        Some(adjusted),
    )
    .with_diagnostic("bias", means)
}

/// Subtract each class's batch mean log-probability, then take the argmax per row.
pub fn batch_calibrate(batch_logprobs: &[Vec<f64>]) -> Result<Vec<MethodPrediction>> {
    let width = check_matrix(batch_logprobs)?;
    let n = batch_logprobs.len() as f64;
    let means: Vec<f64> = (0..width)
        .map(|j| batch_logprobs.iter().map(|r| r[j]).sum::<f64>() / n)
        .collect();
    Ok(batch_logprobs
        .iter()
        .map(|row| calibrated(row, &means))
        .collect())
}

/// Batch calibration over consecutive chunks of `chunk_size` rows. Each chunk
/// is calibrated with the running class means over every row seen so far, so
/// a chunk size of at least the batch length reproduces [`batch_calibrate`].
pub fn batch_calibrate_chunked(
    batch_logprobs: &[Vec<f64>],
    chunk_size: usize,
) -> Result<Vec<MethodPrediction>> {
    if chunk_size == 0 {
        return Err(Error::Config("batch size must be at least 1".into()));
    }
    let width = check_matrix(batch_logprobs)?;
    let mut sums = vec![0.0; width];
    let mut seen = 0usize;
    let mut out = Vec::with_capacity(batch_logprobs.len());
    for chunk in batch_logprobs.chunks(chunk_size) {
        for row in chunk {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        seen += chunk.len();
        let means: Vec<f64> = sums.iter().map(|s| s / seen as f64).collect();
        out.extend(chunk.iter().map(|row| calibrated(row, &means)));
    }
    Ok(out)
}

/// Probabilities over the option set from option log-probabilities.
pub fn softmax(logprobs: &[f64]) -> Vec<f64> {
    let max = logprobs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logprobs.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Argmax of the column means of per-format probability rows.
pub fn template_ensemble_avg(per_format_probs: &[Vec<f64>]) -> Result<MethodPrediction> {
    let width = check_matrix(per_format_probs)?;
    for (i, row) in per_format_probs.iter().enumerate() {
        let total: f64 = row.iter().sum();
        if (total - 1.0).abs() > ROW_SUM_TOLERANCE || row.iter().any(|p| *p < 0.0) {
            return Err(Error::Numeric(format!(
                "ensemble row {i} is not a probability vector (sum {total})"
            )));
        }
    }
    let n = per_format_probs.len() as f64;
    let mean: Vec<f64> = (0..width)
        .map(|j| per_format_probs.iter().map(|r| r[j]).sum::<f64>() / n)
        .collect();
    Ok(MethodPrediction::new(
        MethodTag::TemplateEnsembleAvg,
        argmax(&mean),
        Some(mean.clone()),
    )
    .with_diagnostic("mean_probs", mean)
    .with_diagnostic("members", per_format_probs.len()))
}

/// [`template_ensemble_avg`] over rows of option log-probabilities, each
/// softmax-normalized over the options first.
pub fn template_ensemble_avg_logprobs(
    per_format_logprobs: &[Vec<f64>],
) -> Result<MethodPrediction> {
    check_matrix(per_format_logprobs)?;
    let probs: Vec<Vec<f64>> = per_format_logprobs.iter().map(|r| softmax(r)).collect();
    template_ensemble_avg(&probs)
}

/// Majority vote; ties go to the lowest tied index.
pub fn template_ensemble_vote(votes: &[usize], n_options: usize) -> Result<MethodPrediction> {
    if votes.is_empty() {
        return Err(Error::Shape("no ensemble votes".into()));
    }
    let as_options: Vec<Option<usize>> = votes.iter().copied().map(Some).collect();
    template_ensemble_vote_abstaining(&as_options, n_options)
}

/// Majority vote in which abstaining members (`None`) do not vote. If every
/// member abstains, so does the ensemble.
pub fn template_ensemble_vote_abstaining(
    votes: &[Option<usize>],
    n_options: usize,
) -> Result<MethodPrediction> {
    if votes.is_empty() {
        return Err(Error::Shape("no ensemble votes".into()));
    }
    let mut counts = vec![0usize; n_options];
    for v in votes.iter().flatten() {
        *counts
            .get_mut(*v)
            .ok_or_else(|| Error::Shape(format!("vote {v} outside {n_options} options")))? += 1;
    }
    let abstentions = votes.iter().filter(|v| v.is_none()).count();
    let chosen = if abstentions == votes.len() {
        None
    } else {
        let mut best = 0;
        for (i, c) in counts.iter().enumerate() {
            if *c > counts[best] {
                best = i;
            }
        }
        Some(best)
    };
    Ok(
        MethodPrediction::new(MethodTag::TemplateEnsembleVote, chosen, None)
            .with_diagnostic("vote_counts", &counts)
            .with_diagnostic("abstentions", abstentions),
    )
}
