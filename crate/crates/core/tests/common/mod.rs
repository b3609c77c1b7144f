//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use statrs::function::gamma::ln_gamma;

/// Batch calibration: column means in a first pass, centered scores and the
/// first maximal index in a second.
pub fn bc_oracle(rows: &[Vec<f64>]) -> Vec<(usize, Vec<f64>)> {
    let k = rows[0].len();
    let mut means = vec![0.0; k];
    for row in rows {
        for j in 0..k {
            means[j] += row[j];
        }
    }
    for m in &mut means {
        *m /= rows.len() as f64;
    }
    rows.iter()
        .map(|row| {
            let centered: Vec<f64> = (0..k).map(|j| row[j] - means[j]).collect();
            (first_max(&centered), centered)
        })
        .collect()
}

pub fn first_max(values: &[f64]) -> usize {
    let mut best = 0;
    for j in 1..values.len() {
        if values[j] > values[best] {
            best = j;
        }
    }
    best
}

/// R_K from its confusion-matrix definition. Abstentions occupy an extra
/// class that never appears as gold.
pub fn rk_oracle(gold: &[usize], predicted: &[Option<usize>], k: usize) -> f64 {
    let n = k + 1;
    let mut c = vec![vec![0.0f64; n]; n];
    for (g, p) in gold.iter().zip(predicted) {
        c[p.unwrap_or(k)][*g] += 1.0;
    }
    let mut num = 0.0;
    for a in 0..n {
        for b in 0..n {
            for m in 0..n {
                num += c[a][a] * c[b][m] - c[a][b] * c[m][a];
            }
        }
    }
    let row = |a: usize| (0..n).map(|b| c[a][b]).sum::<f64>();
    let col = |a: usize| (0..n).map(|b| c[b][a]).sum::<f64>();
    let total: f64 = (0..n).map(row).sum();
    let d1: f64 = (0..n).map(|a| row(a) * (total - row(a))).sum();
    let d2: f64 = (0..n).map(|a| col(a) * (total - col(a))).sum();
    if d1 == 0.0 || d2 == 0.0 {
        0.0
    } else {
        num / (d1.sqrt() * d2.sqrt())
    }
}

/// Welford's streaming population standard deviation.
pub fn welford_std(values: &[f64]) -> f64 {
    let (mut mean, mut m2) = (0.0, 0.0);
    for (i, v) in values.iter().enumerate() {
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    (m2 / values.len() as f64).sqrt()
}

/// Two-sided p-value by Simpson integration of the Student-t density.
pub fn p_value_oracle(t: f64, df: f64) -> f64 {
    let log_norm =
        ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0) - 0.5 * (df * std::f64::consts::PI).ln();
    let pdf = |x: f64| (log_norm - (df + 1.0) / 2.0 * (1.0 + x * x / df).ln()).exp();
    let steps = 20_000;
    let h = t.abs() / steps as f64;
    let mut area = pdf(0.0) + pdf(t.abs());
    for i in 1..steps {
        area += pdf(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    1.0 - 2.0 * area * h / 3.0
}

/// t statistic of a one-sample test against zero, sample standard deviation.
pub fn t_oracle(d: &[f64]) -> f64 {
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let sd = (d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    mean / (sd / n.sqrt())
}

/// Rank of entry `i`: one plus the count of larger values plus half the other ties.
pub fn rank_oracle(values: &[f64], i: usize) -> f64 {
    let greater = values.iter().filter(|v| **v > values[i]).count() as f64;
    let equal = values.iter().filter(|v| **v == values[i]).count() as f64;
    1.0 + greater + (equal - 1.0) / 2.0
}

/// Majority vote by counting; ties go to the lowest index.
pub fn vote_oracle(votes: &[usize], k: usize) -> usize {
    let mut counts = vec![0usize; k];
    for v in votes {
        counts[*v] += 1;
    }
    let top = *counts.iter().max().unwrap();
    counts.iter().position(|c| *c == top).unwrap()
}

/// Softmax computed directly from exponentials.
pub fn softmax_oracle(logprobs: &[f64]) -> Vec<f64> {
    let exps: Vec<f64> = logprobs.iter().map(|v| v.exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.iter().map(|e| e / total).collect()
}

/// Population variance of each column.
pub fn column_variance(rows: &[Vec<f64>]) -> Vec<f64> {
    (0..rows[0].len())
        .map(|j| {
            let column: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            welford_std(&column).powi(2)
        })
        .collect()
}
