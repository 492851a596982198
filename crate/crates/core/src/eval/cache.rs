use std::collections::HashMap;
use std::sync::Mutex;

use super::{EvalResult, EvalStatus};
use crate::space::Candidate;

/// Shared memo of completed evaluations keyed by candidate. Failed results
/// are never stored so a later attempt can succeed.
#[derive(Debug, Default)]
pub struct EvalCache {
    entries: Mutex<HashMap<Candidate, EvalResult>>,
}

impl EvalCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, candidate: &Candidate) -> Option<EvalResult> {
        self.entries.lock().unwrap().get(candidate).cloned()
    }

    pub fn insert(&self, candidate: Candidate, result: &EvalResult) {
        if result.status != EvalStatus::Failed {
            self.entries
                .lock()
                .unwrap()
                .insert(candidate, result.clone());
        }
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
