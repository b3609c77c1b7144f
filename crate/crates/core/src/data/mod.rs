//! Tasks, loading, and evaluation-set construction.

mod loader;
mod sampling;
mod task;

pub use loader::{
    load_task_file, load_tasks, parse_task, save_task, task_id_from_path, task_to_document,
    DEFAULT_TASK_IDS, FRONTIER_TASK_IDS,
};
pub use sampling::{
    eval_subsample, imbalance_downsample, plan_imbalance, select_demonstrations, train_split,
    ImbalancePlan, MAJORITY_BAND, MIN_SHIFTED_SIZE,
};
pub use task::{Descriptors, Instance, Task};
