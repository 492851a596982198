use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EvalContext, EvalResult, Evaluator, Verdict};
use crate::space::Candidate;
use crate::{Error, Result};

/// One row of a results table. `accuracy` and `spread` are percentages as
/// printed (`83`, `0.4` for "83 ± 0.4").
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub conv: u32,
    pub dense: u32,
    pub accuracy: f64,
    #[serde(default)]
    pub spread: Option<f64>,
    #[serde(default)]
    pub score: Option<f64>,
    #[serde(default)]
    pub size: Option<String>,
}

/// Looks candidates up in a fixed results table. Fitness is the stored
/// accuracy as a fraction; misses are rejected.
#[derive(Debug, Clone)]
pub struct TableEvaluator {
    rows: Vec<TableRow>,
    index: HashMap<Candidate, usize>,
}

impl TableEvaluator {
    pub fn from_rows(rows: Vec<TableRow>) -> Result<Self> {
        let mut index = HashMap::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            if !(0.0..=100.0).contains(&row.accuracy) {
                return Err(Error::Table(format!(
                    "row {} has accuracy {} outside [0, 100]",
                    i + 1,
                    row.accuracy
                )));
            }
            if index
                .insert(Candidate::new(row.conv, row.dense), i)
                .is_some()
            {
                return Err(Error::Table(format!(
                    "duplicate key conv={} dense={}",
                    row.conv, row.dense
                )));
            }
        }
        Ok(TableEvaluator { rows, index })
    }

    /// Reads `conv,dense,accuracy,spread,score,size` delimited text.
    pub fn from_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let rows = rdr
            .deserialize()
            .collect::<std::result::Result<Vec<TableRow>, _>>()
            .map_err(|e| Error::Table(e.to_string()))?;
        TableEvaluator::from_rows(rows)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
        TableEvaluator::from_reader(file)
            .map_err(|e| Error::Table(format!("{}: {e}", path.display())))
    }

    pub fn rows(&self) -> &[TableRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, candidate: Candidate) -> Option<&TableRow> {
        self.index.get(&candidate).map(|&i| &self.rows[i])
    }

    /// Highest accuracy, earliest row on ties.
    pub fn best(&self) -> Option<&TableRow> {
        self.rows
            .iter()
            .fold(None, |best: Option<&TableRow>, row| match best {
                Some(b) if b.accuracy >= row.accuracy => Some(b),
                _ => Some(row),
            })
    }

    pub fn min_fitness(&self) -> Option<f64> {
        self.rows
            .iter()
            .map(|r| r.accuracy / 100.0)
            .min_by(f64::total_cmp)
    }

    pub fn lookup(&self, candidate: Candidate) -> Option<EvalResult> {
        self.get(candidate).map(|row| {
            let mut result = EvalResult::ok(row.accuracy / 100.0);
            result.accuracy = Some(row.accuracy / 100.0);
            result.size_label = row.size.clone();
            if let Some(spread) = row.spread {
                result.aux.insert("spread".into(), spread / 100.0);
            }
            if let Some(score) = row.score {
                result.aux.insert("score".into(), score);
            }
            result
        })
    }
}

impl Evaluator for TableEvaluator {
    fn evaluate(&self, candidate: Candidate, _ctx: &EvalContext) -> Result<Verdict> {
        Ok(match self.lookup(candidate) {
            Some(result) => Verdict::Scored(result),
            None => Verdict::Rejected(format!("{candidate} not in table")),
        })
    }
}
