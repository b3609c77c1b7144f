//! Toolkit for measuring and mitigating LLM sensitivity to prompt formatting.
//!
//! The crate is organised around the experiment pipeline:
//!
//! - [`grammar`]: the format component catalog, format sampling and
//!   compositional splits, and prompt rendering.
//! - [`data`]: Natural-Instructions style tasks, evaluation subsets and the
//!   class-imbalance shift.
//! - [`backend`]: option scoring and greedy generation over HTTP,
//!   scripted fixtures and synthetic biased models, with a persistent cache.
//! - [`methods`]: few-shot baselines, Batch Calibration, Template Ensembles
//!   and Sensitivity-Aware Decoding.
//! - [`metrics`]: accuracy, spread, MCC, aggregation, significance tests and
//!   method rankings.
//! - [`runner`]: run configs, planning, resumable execution and reports.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod backend;
pub mod data;
pub mod error;
pub mod grammar;
pub mod methods;
pub mod metrics;
pub mod runner;
pub mod seed;

pub use error::{Error, Result};
