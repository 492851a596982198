use serde::{Deserialize, Serialize};

use crate::space::{Candidate, IntDomain, SearchSpace};
use crate::{Error, Result};

/// Exhaustive search over two enumerated domains.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridConfig {
    pub conv: IntDomain,
    pub dense: IntDomain,
}

impl GridConfig {
    pub fn from_space(space: &SearchSpace) -> Self {
        GridConfig {
            conv: space.conv().clone(),
            dense: space.dense().clone(),
        }
    }
}

/// Row-major product: conv outer, dense inner, each in domain order.
pub fn grid_enumerate(config: &GridConfig) -> Result<Vec<Candidate>> {
    if !config.conv.is_enumerated() || !config.dense.is_enumerated() {
        return Err(Error::Config(
            "grid search needs enumerated domains, not ranges".into(),
        ));
    }
    let (conv, dense) = (config.conv.values(), config.dense.values());
    if conv.is_empty() || dense.is_empty() {
        return Err(Error::Config("grid domain is empty".into()));
    }
    Ok(conv
        .iter()
        .flat_map(|&c| dense.iter().map(move |&d| Candidate::new(c, d)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(conv: &[u32], dense: &[u32]) -> GridConfig {
        GridConfig {
            conv: IntDomain::enumerated(conv.to_vec()).unwrap(),
            dense: IntDomain::enumerated(dense.to_vec()).unwrap(),
        }
    }

    #[test]
    fn four_by_two() {
        let cands = grid_enumerate(&grid(&[0, 2, 3, 4], &[1, 2])).unwrap();
        assert_eq!(cands.len(), 8);
        assert_eq!(cands[0], Candidate::new(0, 1));
        assert_eq!(cands[1], Candidate::new(0, 2));
        assert_eq!(cands[7], Candidate::new(4, 2));
    }

    #[test]
    fn singleton() {
        assert_eq!(
            grid_enumerate(&grid(&[5], &[1])).unwrap(),
            vec![Candidate::new(5, 1)]
        );
    }

    #[test]
    fn product_size() {
        assert_eq!(grid_enumerate(&grid(&[1, 2], &[1, 2, 3])).unwrap().len(), 6);
    }

    #[test]
    fn ranges_rejected() {
        let cfg = GridConfig {
            conv: IntDomain::range(0, 3).unwrap(),
            dense: IntDomain::enumerated(vec![1]).unwrap(),
        };
        assert!(matches!(grid_enumerate(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn empty_domain_rejected_on_load() {
        let err = serde_json::from_str::<GridConfig>(r#"{"conv": [], "dense": [1]}"#);
        assert!(err.is_err());
    }
}
