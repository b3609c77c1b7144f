//! Plan, execute (with an interruption and a resume) and report a small
//! experiment on synthetic models, entirely in-process.
//!
//! ```bash
//! cargo run --example experiment_pipeline
//! ```

use std::path::Path;

use format_robustness::grammar::FormatComponentCatalog;
use format_robustness::runner::{self, ExecuteOptions, ReportOptions, RunConfig};

const CONFIG: &str = r#"
seed = 1
output_dir = "pipeline"
n_eval = 40
scenario = "none"

[tasks]
path = "tasks"
ids = ["toy01", "toy02"]

[formats]
n = 6

[[backends]]
tag = "biased"
kind = "synthetic"
bias = [2.5, 0.0, 0.0, 0.0]
signal = 1.0
noise = 0.5
format_scale = { kind = "hashed", min = 0.0, max = 1.0 }

[[methods]]
name = "few_shot_ranking"

[[methods]]
name = "batch_calibration"

[[methods]]
name = "template_ensemble_vote"
ensemble_size = 3
"#;

fn main() -> format_robustness::Result<()> {
    let mut config = RunConfig::from_toml_str(CONFIG)?;
    config.tasks.path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/tasks");
    config.output_dir = std::env::temp_dir().join("fmtrobust-pipeline");
    let _ = std::fs::remove_dir_all(&config.output_dir);

    let catalog = FormatComponentCatalog::default();
    let plan = runner::plan(&config, &catalog)?;
    println!(
        "plan {} with {} units",
        &plan.fingerprint[..12],
        plan.unit_count()
    );

    let backends = config.build_backends()?;
    let first = runner::execute(
        &plan,
        &catalog,
        &backends,
        &config.output_dir,
        ExecuteOptions {
            max_units: Some(500),
            ..Default::default()
        },
    )?;
    println!("interrupted after {} records", first.total_records);
    let second = runner::execute(
        &plan,
        &catalog,
        &backends,
        &config.output_dir,
        ExecuteOptions {
            resume: true,
            ..Default::default()
        },
    )?;
    println!(
        "resumed: {} skipped, {} new, complete = {}",
        second.skipped,
        second.written_records,
        second.complete()
    );

    let bundle = runner::report_files(&[config.output_dir.as_path()], &ReportOptions::default())?;
    bundle.write(&config.output_dir.join("report"))?;
    println!("{}", bundle.files["aggregate.csv"]);
    println!("{}", bundle.files["verdict_tally.csv"]);
    println!(
        "report written to {}",
        config.output_dir.join("report").display()
    );
    Ok(())
}
