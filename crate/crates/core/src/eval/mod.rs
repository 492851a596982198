//! Evaluators score candidates. Every strategy maximizes fitness; evaluators
//! that naturally minimize (model size) negate internally.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::protocol::{ExternalConfig, ExternalEvaluator};
use crate::space::{build_plan, count_params, Candidate, IntDomain, PlanConfig};
use crate::{Error, Result};

mod cache;
mod surrogate;
mod table;

pub use cache::EvalCache;
pub use surrogate::{surrogate_fitness, surrogate_noise, SurrogateEvaluator, SurrogateParams};
pub use table::{TableEvaluator, TableRow};

pub const DEFAULT_PENALTY: f64 = -1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalStatus {
    Ok,
    Penalized,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub fitness: f64,
    /// Fraction in `[0, 1]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param_count: Option<u64>,
    /// Size as reported by the evaluator (table rows keep the printed string).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size_label: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub aux: BTreeMap<String, f64>,
    pub status: EvalStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl EvalResult {
    pub fn ok(fitness: f64) -> Self {
        EvalResult {
            fitness,
            accuracy: None,
            param_count: None,
            size_label: None,
            aux: BTreeMap::new(),
            status: EvalStatus::Ok,
            message: None,
        }
    }

    pub fn penalized(penalty: f64, message: impl Into<String>) -> Self {
        EvalResult {
            status: EvalStatus::Penalized,
            message: Some(message.into()),
            ..EvalResult::ok(penalty)
        }
    }

    pub fn failed(penalty: f64, message: impl Into<String>) -> Self {
        EvalResult {
            status: EvalStatus::Failed,
            message: Some(message.into()),
            ..EvalResult::ok(penalty)
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == EvalStatus::Ok
    }
}

/// Training budget forwarded to evaluators that train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub epochs: u32,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { epochs: 50 }
    }
}

/// Per-run information every evaluation sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EvalContext {
    pub budget: Budget,
    pub seed: u64,
}

/// What a concrete evaluator says about one candidate.
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Scored(EvalResult),
    /// The candidate is not valid for this evaluator (table miss, worker
    /// refusal). Becomes a penalized result.
    Rejected(String),
    /// The evaluation broke but the run should continue. Becomes a failed
    /// result carrying the penalty fitness.
    Failed(String),
}

/// A concrete objective. Implementations must tolerate concurrent calls.
/// Returning `Err` aborts the run.
pub trait Evaluator: Send + Sync {
    fn evaluate(&self, candidate: Candidate, ctx: &EvalContext) -> Result<Verdict>;
}

/// Negated parameter count of the canonical plan: smaller models score higher.
#[derive(Debug, Clone, Default)]
pub struct ParamCountEvaluator {
    pub plan: PlanConfig,
}

impl Evaluator for ParamCountEvaluator {
    fn evaluate(&self, candidate: Candidate, _ctx: &EvalContext) -> Result<Verdict> {
        let params = count_params(&build_plan(candidate, &self.plan));
        Ok(Verdict::Scored(EvalResult {
            param_count: Some(params),
            ..EvalResult::ok(-(params as f64))
        }))
    }
}

/// Optional per-field bounds. Candidates outside them are penalized without
/// reaching the evaluator.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Validity {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conv: Option<IntDomain>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dense: Option<IntDomain>,
}

impl Validity {
    pub fn check(&self, candidate: Candidate) -> std::result::Result<(), String> {
        if let Some(d) = &self.conv {
            if !d.contains(candidate.conv_cells) {
                return Err(format!("conv_cells {} outside {d}", candidate.conv_cells));
            }
        }
        if let Some(d) = &self.dense {
            if !d.contains(candidate.dense_cells) {
                return Err(format!("dense_cells {} outside {d}", candidate.dense_cells));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EvaluatorKind {
    Surrogate(SurrogateParams),
    /// Delimited text table; a relative path resolves against the directory
    /// of the configuration file.
    Table {
        path: PathBuf,
    },
    ParamCount,
    External(ExternalConfig),
}

/// Serializable description of the evaluator for a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatorSpec {
    #[serde(flatten)]
    pub kind: EvaluatorKind,
    #[serde(default, skip_serializing_if = "is_default_validity")]
    pub validity: Validity,
    #[serde(default = "default_penalty")]
    pub penalty_fitness: f64,
}

fn is_default_validity(v: &Validity) -> bool {
    *v == Validity::default()
}

fn default_penalty() -> f64 {
    DEFAULT_PENALTY
}

impl EvaluatorSpec {
    pub fn new(kind: EvaluatorKind) -> Self {
        EvaluatorSpec {
            kind,
            validity: Validity::default(),
            penalty_fitness: DEFAULT_PENALTY,
        }
    }

    pub fn with_validity(mut self, validity: Validity) -> Self {
        self.validity = validity;
        self
    }

    /// Rewrites a relative table path against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        if let EvaluatorKind::Table { path } = &mut self.kind {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }

    /// Instantiates the evaluator. `workers` sizes the external worker pool.
    pub fn build(&self, workers: usize) -> Result<EvalDispatcher> {
        if !self.penalty_fitness.is_finite() {
            return Err(Error::Config("penalty_fitness must be finite".into()));
        }
        let inner: Box<dyn Evaluator> = match &self.kind {
            EvaluatorKind::Surrogate(params) => Box::new(SurrogateEvaluator::new(params.clone())?),
            EvaluatorKind::Table { path } => {
                let table = TableEvaluator::load(path)?;
                if let Some(min) = table.min_fitness() {
                    if self.penalty_fitness >= min {
                        return Err(Error::Config(format!(
                            "penalty_fitness {} is not below the lowest table fitness {min}",
                            self.penalty_fitness
                        )));
                    }
                }
                Box::new(table)
            }
            EvaluatorKind::ParamCount => Box::new(ParamCountEvaluator::default()),
            EvaluatorKind::External(cfg) => Box::new(ExternalEvaluator::new(cfg.clone(), workers)?),
        };
        Ok(EvalDispatcher::new(
            inner,
            self.validity.clone(),
            self.penalty_fitness,
        ))
    }
}

/// Applies the validity bounds and penalty policy in front of an evaluator.
pub struct EvalDispatcher {
    inner: Box<dyn Evaluator>,
    validity: Validity,
    penalty: f64,
}

impl EvalDispatcher {
    pub fn new(inner: Box<dyn Evaluator>, validity: Validity, penalty: f64) -> Self {
        EvalDispatcher {
            inner,
            validity,
            penalty,
        }
    }

    pub fn penalty(&self) -> f64 {
        self.penalty
    }

    pub fn evaluate(&self, candidate: Candidate, ctx: &EvalContext) -> Result<EvalResult> {
        if let Err(reason) = self.validity.check(candidate) {
            return Ok(EvalResult::penalized(self.penalty, reason));
        }
        match self.inner.evaluate(candidate, ctx)? {
            Verdict::Scored(mut result) => {
                if !result.fitness.is_finite() || result.fitness <= self.penalty {
                    return Err(Error::Contract(format!(
                        "evaluator returned fitness {} for {candidate}, which does not beat the penalty {}",
                        result.fitness, self.penalty
                    )));
                }
                result.status = EvalStatus::Ok;
                Ok(result)
            }
            Verdict::Rejected(reason) => Ok(EvalResult::penalized(self.penalty, reason)),
            Verdict::Failed(reason) => Ok(EvalResult::failed(self.penalty, reason)),
        }
    }
}

/// One-shot form of [`EvalDispatcher::evaluate`].
pub fn evaluate(
    candidate: Candidate,
    ctx: &EvalContext,
    spec: &EvaluatorSpec,
) -> Result<EvalResult> {
    spec.build(1)?.evaluate(candidate, ctx)
}
