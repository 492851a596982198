//! Success rate of the genetic algorithm (population 8, 20 generations) at
//! locating the optimum of the noiseless surrogate, over seeds 0..100.
//!
//! Run with: `cargo run --release -p cellnas-core --example calibrate_ga`

use cellnas::eval::{EvaluatorKind, EvaluatorSpec, SurrogateParams};
use cellnas::harness::{self, RunSpec};
use cellnas::space::{Candidate, SearchSpace};
use cellnas::strategies::{GaConfig, StrategyConfig};

fn main() -> cellnas::Result<()> {
    let optimum = Candidate::new(2, 2);
    let evaluator = EvaluatorSpec::new(EvaluatorKind::Surrogate(SurrogateParams::default()));
    let config = GaConfig {
        population_size: 8,
        generations: 20,
        ..GaConfig::default()
    };
    let mut hits = 0;
    let mut misses = Vec::new();
    for seed in 0..100 {
        let spec = RunSpec::new(
            StrategyConfig::Ga(config.clone()),
            SearchSpace::full_genome(),
            evaluator.clone(),
            seed,
        );
        let report = harness::run(&spec, None)?;
        let best = report.best_trial().map(|t| t.candidate);
        if best == Some(optimum) {
            hits += 1;
        } else {
            misses.push((seed, best));
        }
    }
    println!("config: population 8, generations 20, tournament 2, crossover 0.9, mutation 1/8, elitism 1");
    println!("surrogate: peak 0.86, optimum (2,2), curvature (0.01, 0.01), noise 0");
    println!("seeds 0..100: {hits}/100 found the optimum");
    for (seed, best) in misses {
        match best {
            Some(c) => println!("  seed {seed}: best {c}"),
            None => println!("  seed {seed}: no ok trial"),
        }
    }
    Ok(())
}
