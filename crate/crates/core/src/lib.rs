//! Black-box search over a cell-count CNN architecture space.
//!
//! A candidate architecture is a pair of counts: how many convolutional cells
//! and how many dense cells get appended to a fixed base network. Three
//! strategies explore that space (exhaustive grid, bounded random sampling and
//! a bitstring genetic algorithm) against a pluggable [`eval::Evaluator`]. The
//! [`harness`] drives a strategy, times every trial, writes an append-only
//! JSONL trial log and renders result tables.
//!
//! ```
//! use cellnas::space::{build_plan, count_params, format_size_millions, Candidate, PlanConfig};
//!
//! let plan = build_plan(Candidate::new(2, 2), &PlanConfig::default());
//! let params = count_params(&plan);
//! assert_eq!(params, 849_546);
//! assert_eq!(format_size_millions(params), "0.84M");
//! ```

pub mod config;
pub mod eval;
pub mod harness;
pub mod protocol;
pub mod space;
pub mod strategies;

mod error;

pub use error::Error;
pub use eval::{EvalResult, EvalStatus, Evaluator, EvaluatorSpec};
pub use harness::{RunReport, RunSpec, TrialRecord};
pub use space::{Candidate, Genome, GenomeLayout, IntDomain, SearchSpace};
pub use strategies::{GaConfig, GridConfig, RandomConfig, StrategyConfig};

/// This crate specific `Result` type.
pub type Result<T> = std::result::Result<T, Error>;
