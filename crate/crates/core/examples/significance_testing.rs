//! Compare the format spread of two methods across tasks with a two-sided
//! one-sample t-test on per-task spread differences.
//!
//! ```bash
//! cargo run --example significance_testing
//! ```

use format_robustness::methods::MethodTag;
use format_robustness::metrics::{
    mcc, one_sample_t_test, spread_diff_test, tally_verdicts, FormatSeries, DEFAULT_ALPHA,
};

fn main() -> format_robustness::Result<()> {
    let d = [0.05, -0.01, 0.03, 0.02, 0.04, 0.00, 0.06, -0.02];
    let test = one_sample_t_test(&d)?;
    println!("t = {:.6}, p = {:.6}", test.t, test.p);

    // accuracy over 4 formats for 5 tasks; calibration narrows every spread
    let tasks = ["t1", "t2", "t3", "t4", "t5"];
    let baseline: Vec<FormatSeries> = tasks
        .iter()
        .enumerate()
        .map(|(i, t)| {
            FormatSeries::new(
                "m",
                *t,
                MethodTag::FewShotRanking,
                &[0.5 - 0.02 * (i % 3) as f64, 0.7, 0.62, 0.55],
            )
        })
        .collect();
    let calibrated: Vec<FormatSeries> = tasks
        .iter()
        .enumerate()
        .map(|(i, t)| {
            FormatSeries::new(
                "m",
                *t,
                MethodTag::BatchCalibration,
                &[0.66, 0.7, 0.68, 0.67 + 0.005 * i as f64],
            )
        })
        .collect();
    let verdict = spread_diff_test("m", &baseline, &calibrated, DEFAULT_ALPHA)?;
    println!(
        "{} vs {}: mean diff {:.4}, p {:.2e} -> {}",
        verdict.method, verdict.baseline, verdict.mean_diff, verdict.p, verdict.verdict
    );
    println!("{:?}", tally_verdicts(&[verdict]));

    // MCC with one abstention
    let gold = [0, 0, 1, 1, 2, 2];
    let predicted = [Some(0), Some(0), Some(1), None, Some(2), Some(1)];
    println!("mcc = {:.4}", mcc(&gold, &predicted, 3)?);
    Ok(())
}
