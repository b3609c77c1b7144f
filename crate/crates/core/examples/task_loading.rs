//! Load task files, draw an evaluation subset and demonstrations, and build
//! a 90/10 class-imbalanced variant.
//!
//! ```bash
//! cargo run --example task_loading
//! ```

use std::collections::BTreeSet;
use std::path::Path;

use format_robustness::data::{
    eval_subsample, imbalance_downsample, load_tasks, plan_imbalance, select_demonstrations,
    train_split,
};

fn main() -> format_robustness::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/tasks");
    for task in load_tasks(&dir, None)? {
        println!(
            "{} ({} instances): {}",
            task.id,
            task.instances.len(),
            task.instruction
        );
        println!(
            "  labels {:?}, counts {:?}",
            task.labels(),
            task.class_counts()
        );

        let eval = eval_subsample(&task, 50, 1);
        let eval_uids: BTreeSet<String> = eval.instances.iter().map(|i| i.uid.clone()).collect();
        let demos = select_demonstrations(&train_split(&task, &eval_uids)?, 2, 1)?;
        println!(
            "  eval {} instances, demonstrations {:?}",
            eval.instances.len(),
            demos.iter().map(|d| &d.uid).collect::<Vec<_>>()
        );

        let plan = plan_imbalance(&task, 0.9)?;
        let shifted = imbalance_downsample(&task, 0.9, 1)?;
        println!(
            "  imbalanced: {} instances, majority fraction {:.3}, counts {:?}",
            shifted.instances.len(),
            plan.majority_fraction(),
            shifted.class_counts()
        );
    }
    Ok(())
}
