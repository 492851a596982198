//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails or overruns its time limit.

use std::collections::{BTreeMap, HashSet};
use std::time::{Duration, Instant};

use cellnas::eval::{surrogate_fitness, EvalResult, EvaluatorKind, EvaluatorSpec, SurrogateParams};
use cellnas::harness::{self, RunReport, RunSpec};
use cellnas::space::{
    build_plan, count_params, decode_genome, encode_architecture, format_size_millions, Candidate,
    Genome, GenomeLayout, IntDomain, PlanConfig, SearchSpace,
};
use cellnas::strategies::ga::ga_run;
use cellnas::strategies::{
    grid_enumerate, random_sample, BatchEvaluator, GaConfig, GridConfig, Proposal, RandomConfig,
    StrategyConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fixture(name: &str) -> std::path::PathBuf {
    std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn table_sizes() -> Outcome {
    let expected = [
        ((0, 1), "4.2M"),
        ((0, 2), "4.4M"),
        ((2, 1), "0.58M"),
        ((2, 2), "0.84M"),
        ((3, 1), "0.23M"),
        ((3, 2), "0.49M"),
        ((4, 1), "0.16M"),
        ((4, 2), "0.43M"),
    ];
    for ((c, d), want) in expected {
        let got = format_size_millions(count_params(&build_plan(
            Candidate::new(c, d),
            &PlanConfig::default(),
        )));
        check(got == want, || format!("({c},{d}): got {got}, want {want}"))?;
    }
    Ok("8/8 size strings exact".into())
}

fn grid_exhaustive() -> Outcome {
    let space = SearchSpace::default();
    let cells = grid_enumerate(&GridConfig::from_space(&space)).map_err(|e| e.to_string())?;
    let unique: HashSet<_> = cells.iter().copied().collect();
    check(cells.len() == 8 && unique.len() == 8, || {
        format!("{} cells, {} unique", cells.len(), unique.len())
    })?;
    for c in space.conv().values() {
        for d in space.dense().values() {
            check(unique.contains(&Candidate::new(c, d)), || {
                format!("missing ({c},{d})")
            })?;
        }
    }
    let evaluator = EvaluatorSpec::new(EvaluatorKind::Table {
        path: fixture("tables/table1.csv"),
    });
    let spec = RunSpec::new(
        StrategyConfig::Grid(GridConfig::from_space(&space)),
        space,
        evaluator,
        0,
    );
    let report = harness::run(&spec, None).map_err(|e| e.to_string())?;
    check(report.trials.len() == 8, || {
        format!("{} trials", report.trials.len())
    })?;
    let best = report.best_trial().ok_or("no best trial")?;
    check(
        best.candidate == Candidate::new(2, 2) && best.accuracy == Some(0.83),
        || format!("best {} acc {:?}", best.candidate, best.accuracy),
    )?;
    Ok("8 trials, best (2,2) at 83".into())
}

fn genome_codec() -> Outcome {
    let layout = GenomeLayout::default();
    for v in 0u64..256 {
        let g = Genome::from_bits(v, 8);
        let c = decode_genome(&g, &layout).map_err(|e| e.to_string())?;
        let back = encode_architecture(c, &layout).map_err(|e| e.to_string())?;
        check(back == g, || format!("{g} -> {c} -> {back}"))?;
    }
    let g: Genome = "10100001"
        .parse()
        .map_err(|e: cellnas::Error| e.to_string())?;
    let c = decode_genome(&g, &layout).map_err(|e| e.to_string())?;
    check(c == Candidate::new(10, 1), || {
        format!("decode(10100001) = {c}")
    })?;
    Ok("256/256 round-trip, 10100001 -> (10,1)".into())
}

fn random_search() -> Outcome {
    let space = SearchSpace::random_bounds();
    let n = 10_000usize;
    let samples = random_sample(&RandomConfig::from_space(&space, n, 11));
    check(samples.len() == n, || format!("{} samples", samples.len()))?;
    let mut counts: BTreeMap<Candidate, usize> = BTreeMap::new();
    for c in &samples {
        check(
            (2..=8).contains(&c.conv_cells) && (1..=4).contains(&c.dense_cells),
            || format!("{c} out of bounds"),
        )?;
        *counts.entry(*c).or_default() += 1;
    }
    let cells = 7 * 4;
    check(counts.len() == cells, || {
        format!("{} of {cells} cells seen", counts.len())
    })?;
    let p: f64 = 1.0 / cells as f64;
    let mean = n as f64 * p;
    let sigma = (n as f64 * p * (1.0 - p)).sqrt();
    let mut worst: f64 = 0.0;
    for (c, k) in &counts {
        let z = (*k as f64 - mean).abs() / sigma;
        worst = worst.max(z);
        check(z <= 3.0, || format!("{c}: {k} draws, {z:.2} sigma"))?;
    }
    let again = random_sample(&RandomConfig::from_space(&space, n, 11));
    check(again == samples, || {
        "same seed gave a different sequence".into()
    })?;
    Ok(format!(
        "10000 in bounds, max deviation {worst:.2} sigma, deterministic"
    ))
}

struct Surrogate {
    params: SurrogateParams,
    seed: u64,
}

impl BatchEvaluator for Surrogate {
    fn evaluate_batch(&mut self, batch: &[Proposal]) -> cellnas::Result<Vec<EvalResult>> {
        Ok(batch
            .iter()
            .map(|p| EvalResult::ok(surrogate_fitness(p.candidate, &self.params, self.seed)))
            .collect())
    }
}

fn ga_accounting() -> Outcome {
    let space = SearchSpace::full_genome();
    let evaluator = EvaluatorSpec::new(EvaluatorKind::Surrogate(SurrogateParams::default()));
    let mut spec = RunSpec::new(StrategyConfig::Ga(GaConfig::default()), space, evaluator, 0);
    spec.cache = Some(false);
    let report = harness::run(&spec, None).map_err(|e| e.to_string())?;
    check(
        report.total_evaluations == 18 && report.unique_evaluations == 18,
        || {
            format!(
                "{} total, {} unique",
                report.total_evaluations, report.unique_evaluations
            )
        },
    )?;

    let params = SurrogateParams {
        noise_sd: 0.02,
        ..SurrogateParams::default()
    };
    for seed in 0..100 {
        let cfg = GaConfig {
            seed,
            ..GaConfig::default()
        };
        let mut eval = Surrogate {
            params: params.clone(),
            seed,
        };
        let h = ga_run(&cfg, &GenomeLayout::default(), &mut eval).map_err(|e| e.to_string())?;
        check(h.evaluations == 18, || {
            format!("seed {seed}: {} evaluations", h.evaluations)
        })?;
        for w in h.best_so_far.windows(2).chain(h.generation_best.windows(2)) {
            check(w[1] >= w[0], || {
                format!("seed {seed}: best decreased {} -> {}", w[0], w[1])
            })?;
        }
    }
    Ok("18 evaluations, best non-decreasing over 100 seeds".into())
}

fn random_domain(rng: &mut ChaCha8Rng, max: u32) -> IntDomain {
    let mut values: Vec<u32> = (0..=max).collect();
    let k = rng.random_range(1..=6.min(values.len()));
    let mut picked = Vec::new();
    for _ in 0..k {
        let i = rng.random_range(0..values.len());
        picked.push(values.swap_remove(i));
    }
    IntDomain::enumerated(picked).unwrap()
}

fn optimizer_sanity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for round in 0..20 {
        let conv = random_domain(&mut rng, 15);
        let dense = random_domain(&mut rng, 15);
        let cv = conv.values();
        let dv = dense.values();
        let opt = Candidate::new(
            cv[rng.random_range(0..cv.len())],
            dv[rng.random_range(0..dv.len())],
        );
        let params = SurrogateParams {
            optimum: [f64::from(opt.conv_cells), f64::from(opt.dense_cells)],
            curvature: [rng.random_range(0.001..0.1), rng.random_range(0.001..0.1)],
            ..SurrogateParams::default()
        };
        let space =
            SearchSpace::new(conv, dense, GenomeLayout::default()).map_err(|e| e.to_string())?;
        let spec = RunSpec::new(
            StrategyConfig::Grid(GridConfig::from_space(&space)),
            space,
            EvaluatorSpec::new(EvaluatorKind::Surrogate(params)),
            round,
        );
        let report = harness::run(&spec, None).map_err(|e| e.to_string())?;
        let best = report.best_trial().ok_or("no best trial")?;
        check(best.candidate == opt, || {
            format!(
                "domain {round}: grid best {}, optimum {opt}",
                best.candidate
            )
        })?;
    }

    let evaluator = EvaluatorSpec::new(EvaluatorKind::Surrogate(SurrogateParams::default()));
    let cfg = GaConfig {
        population_size: 8,
        generations: 20,
        ..GaConfig::default()
    };
    let mut hits = 0;
    for seed in 0..100 {
        let spec = RunSpec::new(
            StrategyConfig::Ga(cfg.clone()),
            SearchSpace::full_genome(),
            evaluator.clone(),
            seed,
        );
        let report = harness::run(&spec, None).map_err(|e| e.to_string())?;
        if report.best_trial().map(|t| t.candidate) == Some(Candidate::new(2, 2)) {
            hits += 1;
        }
    }
    check(hits >= 90, || {
        format!("grid exact on 20/20 domains; GA found optimum in {hits}/100 seeds, need >= 90")
    })?;
    Ok(format!("grid exact on 20/20 domains, GA {hits}/100 seeds"))
}

fn replayable(report: &RunReport, dir: &std::path::Path) -> Result<(), String> {
    let replayed = RunReport::from_log(&dir.join(harness::TRIAL_LOG)).map_err(|e| e.to_string())?;
    check(replayed.without_timing() == report.without_timing(), || {
        format!("{} log does not replay", report.strategy)
    })
}

fn cache_and_replay() -> Outcome {
    let space = SearchSpace::full_genome();
    let evaluator = EvaluatorSpec::new(EvaluatorKind::Surrogate(SurrogateParams {
        noise_sd: 0.01,
        ..SurrogateParams::default()
    }));
    let cfg = GaConfig {
        population_size: 6,
        generations: 10,
        ..GaConfig::default()
    };
    let mut replays = 0;
    for seed in 0..50 {
        let mut spec = RunSpec::new(
            StrategyConfig::Ga(cfg.clone()),
            space.clone(),
            evaluator.clone(),
            seed,
        );
        let mut runs = Vec::new();
        for cache in [true, false] {
            spec.cache = Some(cache);
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            let report = harness::run(&spec, Some(dir.path())).map_err(|e| e.to_string())?;
            replayable(&report, dir.path())?;
            replays += 1;
            runs.push(report);
        }
        let (on, off) = (&runs[0], &runs[1]);
        let (a, b) = (
            on.best_trial().ok_or("no best")?,
            off.best_trial().ok_or("no best")?,
        );
        check(
            on.best == off.best && a.candidate == b.candidate && a.fitness == b.fitness,
            || {
                format!(
                    "seed {seed}: cache on best {} {:?}, off {} {:?}",
                    a.candidate, a.fitness, b.candidate, b.fitness
                )
            },
        )?;
    }

    let grid_space = SearchSpace::default();
    let random_space = SearchSpace::random_bounds();
    let table = |n: u32| {
        EvaluatorSpec::new(EvaluatorKind::Table {
            path: fixture(&format!("tables/table{n}.csv")),
        })
    };
    let others = [
        RunSpec::new(
            StrategyConfig::Grid(GridConfig::from_space(&grid_space)),
            grid_space.clone(),
            table(1),
            0,
        ),
        RunSpec::new(
            StrategyConfig::Random(RandomConfig::from_space(&random_space, 5, 3)),
            random_space,
            table(2),
            3,
        ),
    ];
    for spec in &others {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let report = harness::run(spec, Some(dir.path())).map_err(|e| e.to_string())?;
        replayable(&report, dir.path())?;
        replays += 1;
    }
    Ok(format!(
        "50/50 seeds same best with cache on and off, {replays} reports replayed"
    ))
}

fn main() {
    let criteria: [Criterion; 7] = [
        (
            "table size reproduction",
            Duration::from_secs(1),
            table_sizes,
        ),
        (
            "grid exhaustiveness",
            Duration::from_secs(1),
            grid_exhaustive,
        ),
        ("genome codec", Duration::from_secs(1), genome_codec),
        ("random search", Duration::from_secs(5), random_search),
        ("ga accounting", Duration::from_secs(5), ga_accounting),
        (
            "optimizer sanity",
            Duration::from_secs(30),
            optimizer_sanity,
        ),
        (
            "cache transparency and log replay",
            Duration::from_secs(30),
            cache_and_replay,
        ),
    ];
    let mut failed = 0;
    for (name, limit, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if elapsed > limit => {
                Err(format!("{msg}; took {elapsed:.2?}, limit {limit:?}"))
            }
            other => other,
        };
        match outcome {
            Ok(msg) => println!("[PASS] {name}: {msg} ({elapsed:.2?})"),
            Err(msg) => {
                failed += 1;
                println!("[FAIL] {name}: {msg} ({elapsed:.2?})");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 7 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
