//! Few-shot ranking versus batch calibration on a model with a strong,
//! format-dependent preference for the first class.
//!
//! ```bash
//! cargo run --example batch_calibration
//! ```

use std::path::Path;

use format_robustness::backend::{FormatBiasScale, SyntheticBiasBackend};
use format_robustness::data::load_task_file;
use format_robustness::grammar::{FormatComponentCatalog, RenderMode};
use format_robustness::methods::{
    batch_calibrate, run_method, EvalInput, IndexedFormat, MethodConfig, MethodTag,
};
use format_robustness::metrics::{accuracy, spread};

fn main() -> format_robustness::Result<()> {
    // the closed-form rule on a toy batch: subtract each column's batch mean
    let batch = vec![vec![-0.1, -2.4], vec![-0.3, -1.3], vec![-0.2, -1.7]];
    for p in batch_calibrate(&batch)? {
        println!(
            "calibrated scores {:?} -> option {:?}",
            p.per_option_scores.unwrap(),
            p.chosen_index
        );
    }

    let task = load_task_file(
        &Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/tasks/toy01_review_sentiment.json"),
    )?;
    let catalog = FormatComponentCatalog::default();
    let formats = IndexedFormat::enumerate(&catalog.sample_formats(true, 10, 5)?);
    let backend = SyntheticBiasBackend::new(vec![3.0, 0.0], 1.0, 0.5, 17)
        .with_format_scale(FormatBiasScale::Hashed { min: 0.0, max: 1.0 });
    let input = EvalInput {
        model: "synthetic",
        scenario: "none",
        catalog: &catalog,
        task: &task,
        instances: &task.instances,
        demonstrations: &[],
        render_mode: RenderMode::Completion,
        seed: 5,
    };

    for method in [MethodTag::FewShotRanking, MethodTag::BatchCalibration] {
        let records = run_method(method, input, &formats, &backend, &MethodConfig::default())?;
        let per_format: Vec<f64> = formats
            .iter()
            .map(|f| {
                let rows: Vec<_> = records
                    .iter()
                    .filter(|r| r.format_id == f.id)
                    .cloned()
                    .collect();
                accuracy(&rows)
            })
            .collect::<format_robustness::Result<_>>()?;
        let mean = per_format.iter().sum::<f64>() / per_format.len() as f64;
        println!(
            "{method:<18} mean accuracy {mean:.3}  spread {:.3}",
            spread(&per_format)?
        );
    }
    Ok(())
}
