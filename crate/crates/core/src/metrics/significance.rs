use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::series::FormatSeries;
use crate::error::{Error, Result};
use crate::methods::MethodTag;

/// Default two-sided significance level.
pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    MethodWins,
    Tie,
    BaselineWins,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::MethodWins => "method_wins",
            Verdict::Tie => "tie",
            Verdict::BaselineWins => "baseline_wins",
        })
    }
}

/// One-sample two-sided t-test against zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub n: usize,
    pub mean: f64,
    pub t: f64,
    pub p: f64,
}

/// Test `mean(d) = 0`. Zero variance gives `p = 0` for a nonzero mean and
/// `p = 1` for a zero mean.
pub fn one_sample_t_test(d: &[f64]) -> Result<TTest> {
    let n = d.len();
    if n < 2 {
        return Err(Error::Undefined(format!(
            "t-test needs at least 2 differences, got {n}"
        )));
    }
    if let Some(v) = d.iter().find(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("non-finite difference {v}")));
    }
    let nf = n as f64;
    let mean = d.iter().sum::<f64>() / nf;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let sd = var.sqrt();
    // differences that agree to rounding are treated as constant
    if sd <= 1e-12 * mean.abs() {
        return Ok(if mean == 0.0 {
            TTest {
                n,
                mean,
                t: 0.0,
                p: 1.0,
            }
        } else {
            TTest {
                n,
                mean,
                t: mean.signum() * f64::INFINITY,
                p: 0.0,
            }
        });
    }
    let t = mean / (sd / nf.sqrt());
    let dist = StudentsT::new(0.0, 1.0, nf - 1.0).map_err(|e| Error::Numeric(e.to_string()))?;
    let p = (2.0 * dist.sf(t.abs())).min(1.0);
    Ok(TTest { n, mean, t, p })
}

/// Outcome of comparing a method's spreads with the baseline's over tasks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignificanceVerdict {
    pub model: String,
    pub baseline: MethodTag,
    pub method: MethodTag,
    pub n_tasks: usize,
    /// Mean of `spread(baseline) − spread(method)`.
    pub mean_diff: f64,
    pub t: f64,
    pub p: f64,
    pub verdict: Verdict,
}

/// Verdict from spread differences `d_t = spread(baseline)_t − spread(method)_t`.
pub fn verdict_from_diffs(d: &[f64], alpha: f64) -> Result<(TTest, Verdict)> {
    let test = one_sample_t_test(d)?;
    let verdict = if test.p < alpha && test.mean > 0.0 {
        Verdict::MethodWins
    } else if test.p < alpha && test.mean < 0.0 {
        Verdict::BaselineWins
    } else {
        Verdict::Tie
    };
    Ok((test, verdict))
}

/// Pair baseline and method series by task and test their spread differences.
pub fn spread_diff_test(
    model: &str,
    baseline: &[FormatSeries],
    method: &[FormatSeries],
    alpha: f64,
) -> Result<SignificanceVerdict> {
    let index = |series: &[FormatSeries]| -> Result<BTreeMap<String, f64>> {
        let mut out = BTreeMap::new();
        for s in series {
            if out.insert(s.task.clone(), s.spread()?).is_some() {
                return Err(Error::Pairing(format!("task {} appears twice", s.task)));
            }
        }
        Ok(out)
    };
    let base = index(baseline)?;
    let other = index(method)?;
    if base.keys().ne(other.keys()) {
        let only_base: Vec<&String> = base.keys().filter(|k| !other.contains_key(*k)).collect();
        let only_method: Vec<&String> = other.keys().filter(|k| !base.contains_key(*k)).collect();
        return Err(Error::Pairing(format!(
            "task sets differ: baseline only {only_base:?}, method only {only_method:?}"
        )));
    }
    let tag = |series: &[FormatSeries]| series.first().map(|s| s.method);
    let (Some(baseline_tag), Some(method_tag)) = (tag(baseline), tag(method)) else {
        return Err(Error::Undefined("no series to compare".into()));
    };
    let d: Vec<f64> = base.iter().map(|(task, b)| b - other[task]).collect();
    let (test, verdict) = verdict_from_diffs(&d, alpha)?;
    Ok(SignificanceVerdict {
        model: model.to_string(),
        baseline: baseline_tag,
        method: method_tag,
        n_tasks: test.n,
        mean_diff: test.mean,
        t: test.t,
        p: test.p,
        verdict,
    })
}

/// Wins, ties and losses of each method against the baseline, counted over models.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictTally {
    pub method: MethodTag,
    pub wins: usize,
    pub ties: usize,
    pub losses: usize,
}

pub fn tally_verdicts(verdicts: &[SignificanceVerdict]) -> Vec<VerdictTally> {
    let mut by_method: BTreeMap<MethodTag, VerdictTally> = BTreeMap::new();
    for v in verdicts {
        let entry = by_method.entry(v.method).or_insert(VerdictTally {
            method: v.method,
            wins: 0,
            ties: 0,
            losses: 0,
        });
        match v.verdict {
            Verdict::MethodWins => entry.wins += 1,
            Verdict::Tie => entry.ties += 1,
            Verdict::BaselineWins => entry.losses += 1,
        }
    }
    by_method.into_values().collect()
}
