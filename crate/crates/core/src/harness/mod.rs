//! Runs a strategy end to end: evaluation (optionally concurrent and
//! cached), per-trial timing, the append-only trial log and final reports.
//!
//! Output directory layout (all names stable):
//!
//! | file           | contents                                         |
//! |----------------|--------------------------------------------------|
//! | `config.json`  | snapshot of the [`RunSpec`]                      |
//! | `trials.jsonl` | header line, then one line per completed trial   |
//! | `report.json`  | the final [`RunReport`]                          |
//! | `report.txt`   | display table                                    |
//! | `report.csv`   | delimited trial table                            |

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::eval::{
    Budget, EvalCache, EvalContext, EvalDispatcher, EvalResult, EvalStatus, EvaluatorSpec,
};
use crate::space::{
    build_plan, count_params, format_size_millions, Candidate, Genome, PlanConfig, SearchSpace,
};
use crate::strategies::{BatchEvaluator, Proposal, StrategyConfig};
use crate::{Error, Result};

mod log;
mod report;

pub use log::{read_log, LogEntry, LogWriter, RunHeader};
pub use report::{best_row, compare, format_percent, render_csv, render_run_table, Comparison};

pub const CONFIG_FILE: &str = "config.json";
pub const TRIAL_LOG: &str = "trials.jsonl";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TEXT: &str = "report.txt";
pub const REPORT_CSV: &str = "report.csv";

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub strategy: StrategyConfig,
    pub space: SearchSpace,
    pub evaluator: EvaluatorSpec,
    pub seed: u64,
    #[serde(default)]
    pub budget: Budget,
    /// Concurrent evaluations per batch.
    #[serde(default = "one")]
    pub workers: usize,
    /// Evaluation cache; on by default for the genetic algorithm only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache: Option<bool>,
}

fn one() -> usize {
    1
}

impl RunSpec {
    pub fn new(
        strategy: StrategyConfig,
        space: SearchSpace,
        evaluator: EvaluatorSpec,
        seed: u64,
    ) -> Self {
        RunSpec {
            strategy,
            space,
            evaluator,
            seed,
            budget: Budget::default(),
            workers: 1,
            cache: None,
        }
    }

    pub fn cache_enabled(&self) -> bool {
        self.cache
            .unwrap_or(matches!(self.strategy, StrategyConfig::Ga(_)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generation: Option<u32>,
    pub candidate: Candidate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub genome: Option<Genome>,
    pub fitness: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param_count: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size_string: Option<String>,
    pub wall_time_seconds: f64,
    pub timestamp: String,
    pub status: EvalStatus,
    /// Served from the evaluation cache rather than evaluated.
    #[serde(default)]
    pub cached: bool,
    #[serde(default, skip_serializing_if = "std::collections::BTreeMap::is_empty")]
    pub aux: std::collections::BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl TrialRecord {
    pub fn is_ok(&self) -> bool {
        self.status == EvalStatus::Ok
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub strategy: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub trials: Vec<TrialRecord>,
    /// Index into `trials` of the best ok trial.
    pub best: Option<usize>,
    pub total_wall_time_seconds: f64,
    pub unique_evaluations: usize,
    pub total_evaluations: usize,
}

/// Highest fitness among ok trials; the earliest trial wins ties.
pub fn best_index(trials: &[TrialRecord]) -> Option<usize> {
    trials
        .iter()
        .enumerate()
        .filter(|(_, t)| t.is_ok())
        .fold(None, |best: Option<(usize, f64)>, (i, t)| match best {
            Some((_, f)) if f >= t.fitness => best,
            _ => Some((i, t.fitness)),
        })
        .map(|(i, _)| i)
}

impl RunReport {
    pub fn from_trials(
        header: &RunHeader,
        trials: Vec<TrialRecord>,
        total_wall_time_seconds: f64,
    ) -> Self {
        RunReport {
            strategy: header.strategy.clone(),
            config: header.config.clone(),
            seed: header.seed,
            best: best_index(&trials),
            unique_evaluations: trials.iter().filter(|t| !t.cached).count(),
            total_evaluations: trials.len(),
            trials,
            total_wall_time_seconds,
        }
    }

    /// Rebuilds a report from a trial log. The total wall time becomes the
    /// sum of per-trial times.
    pub fn from_log(path: &Path) -> Result<Self> {
        let (header, trials) = read_log(path)?;
        let total = trials.iter().map(|t| t.wall_time_seconds).sum();
        Ok(RunReport::from_trials(&header, trials, total))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn best_trial(&self) -> Option<&TrialRecord> {
        self.best.map(|i| &self.trials[i])
    }

    pub fn count_status(&self, status: EvalStatus) -> usize {
        self.trials.iter().filter(|t| t.status == status).count()
    }

    /// Copy with every timing field zeroed, for reproducibility checks.
    pub fn without_timing(&self) -> Self {
        let mut copy = self.clone();
        copy.total_wall_time_seconds = 0.0;
        for t in &mut copy.trials {
            t.wall_time_seconds = 0.0;
            t.timestamp.clear();
        }
        copy
    }
}

fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

enum Source {
    Fresh,
    Cached(EvalResult),
    SameAs(usize),
}

/// Scores batches for a strategy and records every trial.
struct TrialRunner<'a> {
    dispatcher: &'a EvalDispatcher,
    ctx: EvalContext,
    workers: usize,
    cache: Option<EvalCache>,
    plan: PlanConfig,
    trials: Vec<TrialRecord>,
    log: Option<LogWriter>,
}

impl TrialRunner<'_> {
    fn evaluate_fresh(
        &self,
        batch: &[Proposal],
        fresh: &[usize],
    ) -> HashMap<usize, (Result<EvalResult>, f64, String)> {
        let results = Mutex::new(HashMap::with_capacity(fresh.len()));
        let next = AtomicUsize::new(0);
        let work = || loop {
            let k = next.fetch_add(1, Ordering::Relaxed);
            let Some(&i) = fresh.get(k) else { break };
            let started = Instant::now();
            let stamp = timestamp();
            let result = self.dispatcher.evaluate(batch[i].candidate, &self.ctx);
            let elapsed = started.elapsed().as_secs_f64();
            results.lock().unwrap().insert(i, (result, elapsed, stamp));
        };
        let threads = self.workers.clamp(1, fresh.len().max(1));
        if threads == 1 {
            work();
        } else {
            std::thread::scope(|s| {
                for _ in 0..threads {
                    s.spawn(work);
                }
            });
        }
        results.into_inner().unwrap()
    }

    fn record(
        &mut self,
        proposal: &Proposal,
        result: &EvalResult,
        wall: f64,
        stamp: String,
        cached: bool,
    ) -> Result<()> {
        let param_count = result
            .param_count
            .unwrap_or_else(|| count_params(&build_plan(proposal.candidate, &self.plan)));
        let record = TrialRecord {
            trial_index: self.trials.len(),
            generation: proposal.generation,
            candidate: proposal.candidate,
            genome: proposal.genome.clone(),
            fitness: result.fitness,
            accuracy: result.accuracy,
            param_count: Some(param_count),
            size_string: Some(
                result
                    .size_label
                    .clone()
                    .unwrap_or_else(|| format_size_millions(param_count)),
            ),
            wall_time_seconds: wall,
            timestamp: stamp,
            status: result.status,
            cached,
            aux: result.aux.clone(),
            message: result.message.clone(),
        };
        if let Some(log) = &mut self.log {
            log.append(&LogEntry::Trial(record.clone()))?;
        }
        self.trials.push(record);
        Ok(())
    }
}

impl BatchEvaluator for TrialRunner<'_> {
    fn evaluate_batch(&mut self, batch: &[Proposal]) -> Result<Vec<EvalResult>> {
        let mut sources = Vec::with_capacity(batch.len());
        let mut fresh = Vec::new();
        let mut first_seen: HashMap<Candidate, usize> = HashMap::new();
        for (i, p) in batch.iter().enumerate() {
            let source = match &self.cache {
                Some(cache) => match cache.get(&p.candidate) {
                    Some(hit) => Source::Cached(hit),
                    None => match first_seen.get(&p.candidate) {
                        Some(&j) => Source::SameAs(j),
                        None => {
                            first_seen.insert(p.candidate, i);
                            Source::Fresh
                        }
                    },
                },
                None => Source::Fresh,
            };
            if matches!(source, Source::Fresh) {
                fresh.push(i);
            }
            sources.push(source);
        }

        let mut evaluated = self.evaluate_fresh(batch, &fresh);
        let mut out: Vec<EvalResult> = Vec::with_capacity(batch.len());
        for (i, source) in sources.into_iter().enumerate() {
            let (result, wall, stamp, cached) = match source {
                Source::Fresh => {
                    let (result, wall, stamp) = evaluated.remove(&i).expect("evaluated");
                    let result = result?;
                    if let Some(cache) = &self.cache {
                        cache.insert(batch[i].candidate, &result);
                    }
                    (result, wall, stamp, false)
                }
                Source::Cached(hit) => (hit, 0.0, timestamp(), true),
                Source::SameAs(j) => (out[j].clone(), 0.0, timestamp(), true),
            };
            self.record(&batch[i], &result, wall, stamp, cached)?;
            out.push(result);
        }
        Ok(out)
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::file(path, e))
}

/// Builds the evaluator from `spec` and runs it. See [`run_with`].
pub fn run(spec: &RunSpec, out_dir: Option<&Path>) -> Result<RunReport> {
    let dispatcher = spec.evaluator.build(spec.workers)?;
    run_with(spec, &dispatcher, out_dir)
}

/// Runs the strategy against `dispatcher`. With an output directory, the
/// trial log is appended as trials complete and the reports are written at
/// the end; an aborted run leaves its partial log behind.
pub fn run_with(
    spec: &RunSpec,
    dispatcher: &EvalDispatcher,
    out_dir: Option<&Path>,
) -> Result<RunReport> {
    let mut strategy = spec.strategy.clone();
    strategy.set_seed(spec.seed);
    let snapshot = RunSpec {
        strategy: strategy.clone(),
        ..spec.clone()
    };
    let header = RunHeader {
        strategy: strategy.name().to_string(),
        seed: spec.seed,
        config: serde_json::to_value(&snapshot)?,
    };

    let log = match out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
            write_file(
                &dir.join(CONFIG_FILE),
                &serde_json::to_string_pretty(&snapshot)?,
            )?;
            let mut log = LogWriter::create(&dir.join(TRIAL_LOG))?;
            log.append(&LogEntry::Run(header.clone()))?;
            Some(log)
        }
        None => None,
    };

    let mut runner = TrialRunner {
        dispatcher,
        ctx: EvalContext {
            budget: spec.budget,
            seed: spec.seed,
        },
        workers: spec.workers.max(1),
        cache: spec.cache_enabled().then(EvalCache::new),
        plan: PlanConfig::default(),
        trials: Vec::new(),
        log,
    };
    let started = Instant::now();
    strategy.run(&spec.space, &mut runner)?;
    let total = started.elapsed().as_secs_f64();

    let report = RunReport::from_trials(&header, runner.trials, total);
    if let Some(dir) = out_dir {
        write_file(
            &dir.join(REPORT_JSON),
            &serde_json::to_string_pretty(&report)?,
        )?;
        write_file(&dir.join(REPORT_TEXT), &render_run_table(&report))?;
        write_file(&dir.join(REPORT_CSV), &render_csv(&report)?)?;
    }
    Ok(report)
}
