//! Candidate generators. Each strategy is sequential and fully determined
//! by its config and seed; evaluation of a batch is delegated to a
//! [`BatchEvaluator`], which may run the batch concurrently as long as it
//! returns results in batch order.

use serde::{Deserialize, Serialize};

use crate::eval::EvalResult;
use crate::space::{Candidate, Genome, SearchSpace};
use crate::Result;

pub mod ga;
mod grid;
mod random;

pub use ga::{GaConfig, GaHistory, Individual};
pub use grid::{grid_enumerate, GridConfig};
pub use random::{random_sample, RandomConfig, DEDUP_RETRY_CAP};

/// A candidate queued for evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Proposal {
    pub candidate: Candidate,
    pub genome: Option<Genome>,
    pub generation: Option<u32>,
}

impl Proposal {
    pub fn plain(candidate: Candidate) -> Self {
        Proposal {
            candidate,
            genome: None,
            generation: None,
        }
    }
}

pub trait BatchEvaluator {
    /// Scores `batch`, returning one result per proposal in the same order.
    fn evaluate_batch(&mut self, batch: &[Proposal]) -> Result<Vec<EvalResult>>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum StrategyConfig {
    Grid(GridConfig),
    Random(RandomConfig),
    Ga(GaConfig),
}

impl StrategyConfig {
    pub fn name(&self) -> &'static str {
        match self {
            StrategyConfig::Grid(_) => "grid",
            StrategyConfig::Random(_) => "random",
            StrategyConfig::Ga(_) => "ga",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            StrategyConfig::Grid(_) => None,
            StrategyConfig::Random(c) => Some(c.seed),
            StrategyConfig::Ga(c) => Some(c.seed),
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            StrategyConfig::Grid(_) => {}
            StrategyConfig::Random(c) => c.seed = seed,
            StrategyConfig::Ga(c) => c.seed = seed,
        }
    }

    /// Drives the strategy to completion against `evaluator`.
    pub fn run<E: BatchEvaluator>(&self, space: &SearchSpace, evaluator: &mut E) -> Result<()> {
        match self {
            StrategyConfig::Grid(config) => {
                let batch: Vec<Proposal> = grid_enumerate(config)?
                    .into_iter()
                    .map(Proposal::plain)
                    .collect();
                if !batch.is_empty() {
                    evaluator.evaluate_batch(&batch)?;
                }
            }
            StrategyConfig::Random(config) => {
                let batch: Vec<Proposal> = random_sample(config)
                    .into_iter()
                    .map(Proposal::plain)
                    .collect();
                if !batch.is_empty() {
                    evaluator.evaluate_batch(&batch)?;
                }
            }
            StrategyConfig::Ga(config) => {
                ga::ga_run(config, space.layout(), evaluator)?;
            }
        }
        Ok(())
    }
}
