//! TOML run configuration.
//!
//! ```toml
//! strategy = "grid"          # grid | random | ga
//! seed = 0
//! workers = 1
//! epochs = 50                # budget forwarded to evaluators
//! # cache = true             # default: on for ga, off otherwise
//! # out = "runs/grid"        # output directory
//!
//! [space]
//! conv = [0, 2, 3, 4]        # list, or { lo = 2, hi = 8 }
//! dense = [1, 2]
//! conv_bits = 4
//! dense_bits = 4
//!
//! [random]
//! iterations = 5
//! dedup = false
//!
//! [ga]
//! population_size = 2
//! generations = 8
//!
//! [evaluator]
//! kind = "table"             # surrogate | table | param_count | external
//! path = "../tables/table1.csv"
//! ```
//!
//! Every section is optional. Evaluator paths resolve against the directory
//! holding the file; `out` resolves against the working directory.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::eval::{Budget, EvaluatorKind, EvaluatorSpec, SurrogateParams};
use crate::harness::RunSpec;
use crate::protocol::ExternalConfig;
use crate::space::SearchSpace;
use crate::strategies::{grid_enumerate, GaConfig, GridConfig, RandomConfig, StrategyConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Grid,
    Random,
    Ga,
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid" => Ok(StrategyKind::Grid),
            "random" => Ok(StrategyKind::Random),
            "ga" => Ok(StrategyKind::Ga),
            other => Err(Error::Config(format!("unknown strategy {other:?}"))),
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StrategyKind::Grid => "grid",
            StrategyKind::Random => "random",
            StrategyKind::Ga => "ga",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomSection {
    pub iterations: usize,
    pub dedup: bool,
}

impl Default for RandomSection {
    fn default() -> Self {
        RandomSection {
            iterations: 5,
            dedup: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub strategy: Option<StrategyKind>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub workers: usize,
    #[serde(default)]
    pub epochs: Option<u32>,
    #[serde(default)]
    pub cache: Option<bool>,
    /// Output directory, relative to the working directory.
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub space: SearchSpace,
    #[serde(default)]
    pub random: RandomSection,
    #[serde(default)]
    pub ga: GaConfig,
    #[serde(default)]
    pub evaluator: Option<EvaluatorSpec>,
}

fn one() -> usize {
    1
}

impl Default for ConfigFile {
    fn default() -> Self {
        toml::from_str("").expect("empty config is valid")
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a file and resolves its relative paths.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        let mut config = ConfigFile::parse(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(spec) = &mut config.evaluator {
            spec.resolve_paths(base);
        }
        Ok(config)
    }

    pub fn strategy_config(&self, kind: StrategyKind) -> StrategyConfig {
        match kind {
            StrategyKind::Grid => StrategyConfig::Grid(GridConfig::from_space(&self.space)),
            StrategyKind::Random => StrategyConfig::Random(RandomConfig {
                dedup: self.random.dedup,
                ..RandomConfig::from_space(&self.space, self.random.iterations, self.seed)
            }),
            StrategyKind::Ga => StrategyConfig::Ga(GaConfig {
                seed: self.seed,
                ..self.ga.clone()
            }),
        }
    }

    /// Resolves the run. `kind` overrides the file's `strategy` key; one of
    /// them must be present.
    pub fn run_spec(&self, kind: Option<StrategyKind>) -> Result<RunSpec> {
        let kind = kind
            .or(self.strategy)
            .ok_or_else(|| Error::Config("no strategy given".into()))?;
        let evaluator = self.evaluator.clone().unwrap_or_else(|| {
            EvaluatorSpec::new(EvaluatorKind::Surrogate(SurrogateParams::default()))
        });
        let strategy = self.strategy_config(kind);
        if let StrategyConfig::Grid(grid) = &strategy {
            grid_enumerate(grid)?;
        }
        if let StrategyConfig::Ga(ga) = &strategy {
            ga.validate()?;
            if ga.genome_length != self.space.layout().total_bits() {
                return Err(Error::Config(format!(
                    "ga.genome_length {} does not match space bits {}",
                    ga.genome_length,
                    self.space.layout().total_bits()
                )));
            }
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        Ok(RunSpec {
            strategy,
            space: self.space.clone(),
            evaluator,
            seed: self.seed,
            budget: Budget {
                epochs: self.epochs.unwrap_or(Budget::default().epochs),
            },
            workers: self.workers,
            cache: self.cache,
        })
    }
}

/// Parses a command-line evaluator description:
///
/// - `surrogate`
/// - `param-count`
/// - `table:PATH`
/// - `external:PROGRAM [ARGS...]` (split on whitespace)
pub fn parse_evaluator_arg(arg: &str) -> Result<EvaluatorKind> {
    let (name, rest) = match arg.split_once(':') {
        Some((n, r)) => (n, Some(r)),
        None => (arg, None),
    };
    match (name, rest) {
        ("surrogate", None) => Ok(EvaluatorKind::Surrogate(SurrogateParams::default())),
        ("param-count" | "param_count", None) => Ok(EvaluatorKind::ParamCount),
        ("table", Some(path)) if !path.is_empty() => Ok(EvaluatorKind::Table {
            path: PathBuf::from(path),
        }),
        ("external", Some(cmd)) if !cmd.trim().is_empty() => Ok(EvaluatorKind::External(
            ExternalConfig::new(cmd.split_whitespace().map(String::from).collect()),
        )),
        _ => Err(Error::Config(format!(
            "bad evaluator {arg:?}; expected surrogate, param-count, table:PATH or external:COMMAND"
        ))),
    }
}
