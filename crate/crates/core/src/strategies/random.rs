use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::space::{Candidate, IntDomain, SearchSpace};

/// Redraws allowed per sample when deduplicating. When a sample still
/// collides after this many redraws, deduplication is switched off for the
/// rest of the run.
pub const DEDUP_RETRY_CAP: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomConfig {
    pub conv: IntDomain,
    pub dense: IntDomain,
    pub iterations: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub dedup: bool,
}

impl RandomConfig {
    pub fn from_space(space: &SearchSpace, iterations: usize, seed: u64) -> Self {
        RandomConfig {
            conv: space.conv().clone(),
            dense: space.dense().clone(),
            iterations,
            seed,
            dedup: false,
        }
    }
}

/// Draws `iterations` candidates, conv then dense, each uniform on its
/// domain.
pub fn random_sample(config: &RandomConfig) -> Vec<Candidate> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let draw = |rng: &mut ChaCha8Rng| {
        let conv = config.conv.sample(rng);
        let dense = config.dense.sample(rng);
        Candidate::new(conv, dense)
    };

    let mut dedup = config.dedup;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(config.iterations);
    for _ in 0..config.iterations {
        let mut candidate = draw(&mut rng);
        if dedup {
            let mut retries = 0;
            while seen.contains(&candidate) && retries < DEDUP_RETRY_CAP {
                candidate = draw(&mut rng);
                retries += 1;
            }
            if seen.contains(&candidate) {
                dedup = false;
            }
            seen.insert(candidate);
        }
        out.push(candidate);
    }
    out
}
