use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::TrialRecord;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub strategy: String,
    pub seed: u64,
    pub config: serde_json::Value,
}

/// One line of a trial log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogEntry {
    Run(RunHeader),
    Trial(TrialRecord),
}

/// Append-only JSONL writer; every entry is flushed before `append` returns.
pub struct LogWriter {
    path: PathBuf,
    file: File,
}

impl LogWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::file(path, e))?;
        Ok(LogWriter {
            path: path.to_path_buf(),
            file,
        })
    }

    pub fn append(&mut self, entry: &LogEntry) -> Result<()> {
        let mut line = serde_json::to_string(entry)?;
        line.push('\n');
        self.file
            .write_all(line.as_bytes())
            .and_then(|_| self.file.flush())
            .map_err(|e| Error::file(&self.path, e))
    }
}

/// Reads a trial log: exactly one header line first, then trials.
pub fn read_log(path: &Path) -> Result<(RunHeader, Vec<TrialRecord>)> {
    let file = File::open(path).map_err(|e| Error::file(path, e))?;
    let mut header = None;
    let mut trials = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::file(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<LogEntry>(&line)? {
            LogEntry::Run(h) if header.is_none() && trials.is_empty() => header = Some(h),
            LogEntry::Run(_) => {
                return Err(Error::Config(format!(
                    "{}:{}: unexpected second run header",
                    path.display(),
                    n + 1
                )))
            }
            LogEntry::Trial(t) => {
                if header.is_none() {
                    return Err(Error::Config(format!(
                        "{}: trial before run header",
                        path.display()
                    )));
                }
                if t.trial_index != trials.len() {
                    return Err(Error::Config(format!(
                        "{}:{}: trial index {} out of sequence",
                        path.display(),
                        n + 1,
                        t.trial_index
                    )));
                }
                trials.push(t);
            }
        }
    }
    let header =
        header.ok_or_else(|| Error::Config(format!("{}: empty trial log", path.display())))?;
    Ok((header, trials))
}
