use std::time::{Duration, Instant};

use cellnas::eval::{
    Budget, EvalContext, EvalStatus, Evaluator, EvaluatorKind, EvaluatorSpec, SurrogateParams,
    Verdict,
};
use cellnas::harness::{self, RunSpec};
use cellnas::protocol::{
    ErrorPolicy, EvalRequest, ExternalConfig, ExternalEvaluator, TrainConfig, Worker,
};
use cellnas::space::{Candidate, SearchSpace};
use cellnas::strategies::{GaConfig, GridConfig, StrategyConfig};
use cellnas::Error;

const WORKER: &str = env!("CARGO_BIN_EXE_cellnas-worker");

fn command(args: &[&str]) -> Vec<String> {
    std::iter::once(WORKER)
        .chain(args.iter().copied())
        .map(String::from)
        .collect()
}

fn external(args: &[&str]) -> ExternalConfig {
    let mut cfg = ExternalConfig::new(command(args));
    cfg.timeout_secs = 2.0;
    cfg.handshake_timeout_secs = 2.0;
    cfg
}

fn request(id: u64, conv: u32, dense: u32) -> EvalRequest {
    EvalRequest {
        id,
        candidate: Candidate::new(conv, dense),
        budget: Budget::default(),
        seed: 0,
        train_config: TrainConfig::default(),
    }
}

fn ctx() -> EvalContext {
    EvalContext::default()
}

#[test]
fn handshake_accepts_version_one() {
    let mut w = Worker::spawn(&command(&["--mode", "echo"])).unwrap();
    assert_eq!(w.handshake(Duration::from_secs(5)).unwrap(), 1);
}

#[test]
fn handshake_rejects_version_two() {
    let mut w = Worker::spawn(&command(&["--mode", "bad-version"])).unwrap();
    let err = w.handshake(Duration::from_secs(5)).unwrap_err();
    assert!(matches!(
        err,
        Error::Version {
            found: 2,
            expected: 1
        }
    ));
    assert!(ExternalEvaluator::new(external(&["--mode", "bad-version"]), 1).is_err());
}

#[test]
fn handshake_times_out_on_silent_worker() {
    let mut w = Worker::spawn(&command(&["--mode", "silent"])).unwrap();
    let started = Instant::now();
    let err = w.handshake(Duration::from_millis(300)).unwrap_err();
    assert!(matches!(err, Error::Timeout(_)));
    assert!(started.elapsed() < Duration::from_secs(5));
}

#[test]
fn missing_program_is_a_transport_error() {
    let err = Worker::spawn(&["/nonexistent/worker".to_string()])
        .err()
        .unwrap();
    assert!(err.is_transport());
}

#[test]
fn echo_worker_round_trip() {
    let ev = ExternalEvaluator::new(external(&["--mode", "echo"]), 1).unwrap();
    let resp = ev.remote_evaluate(&request(1, 2, 2)).unwrap();
    assert_eq!(resp.id, 1);
    assert_eq!(resp.fitness, Some(4.0));
    match ev.evaluate(Candidate::new(2, 2), &ctx()).unwrap() {
        Verdict::Scored(r) => assert_eq!(r.fitness, 4.0),
        other => panic!("{other:?}"),
    }
}

#[test]
fn worker_error_penalizes_or_aborts() {
    let spec = EvaluatorSpec::new(EvaluatorKind::External(external(&["--mode", "error"])));
    let r = spec
        .build(1)
        .unwrap()
        .evaluate(Candidate::new(1, 1), &ctx())
        .unwrap();
    assert_eq!(r.status, EvalStatus::Penalized);
    assert_eq!(r.fitness, spec.penalty_fitness);
    assert_eq!(r.message.as_deref(), Some("refused"));

    let mut cfg = external(&["--mode", "error"]);
    cfg.on_error = ErrorPolicy::Abort;
    let ev = ExternalEvaluator::new(cfg, 1).unwrap();
    assert!(matches!(
        ev.evaluate(Candidate::new(1, 1), &ctx()),
        Err(Error::Aborted(_))
    ));
}

#[test]
fn unparseable_response_fails_the_trial() {
    let ev = ExternalEvaluator::new(external(&["--mode", "garbage"]), 1).unwrap();
    assert!(matches!(
        ev.remote_evaluate(&request(1, 1, 1)),
        Err(Error::Transport(_))
    ));
    match ev.evaluate(Candidate::new(1, 1), &ctx()).unwrap() {
        Verdict::Failed(msg) => assert!(msg.contains("unparseable"), "{msg}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn mismatched_id_is_a_transport_error() {
    let ev = ExternalEvaluator::new(external(&["--mode", "wrong-id"]), 1).unwrap();
    let err = ev.remote_evaluate(&request(4, 1, 1)).unwrap_err();
    assert!(err.to_string().contains("does not match"), "{err}");
}

#[test]
fn request_timeout_fails_then_aborts_under_abort_policy() {
    let mut cfg = external(&["--mode", "hang"]);
    cfg.timeout_secs = 0.3;
    let ev = ExternalEvaluator::new(cfg.clone(), 1).unwrap();
    let started = Instant::now();
    assert!(matches!(
        ev.evaluate(Candidate::new(1, 1), &ctx()).unwrap(),
        Verdict::Failed(_)
    ));
    assert!(started.elapsed() < Duration::from_secs(5));

    cfg.on_error = ErrorPolicy::Abort;
    let ev = ExternalEvaluator::new(cfg, 1).unwrap();
    assert!(matches!(
        ev.evaluate(Candidate::new(1, 1), &ctx()),
        Err(Error::Timeout(_))
    ));
}

#[test]
fn crashed_worker_is_restarted() {
    let ev = ExternalEvaluator::new(external(&["--mode", "exit-after:2"]), 1).unwrap();
    let mut statuses = Vec::new();
    for i in 0..6 {
        statuses.push(match ev.evaluate(Candidate::new(i, 1), &ctx()).unwrap() {
            Verdict::Scored(_) => "ok",
            Verdict::Failed(_) => "failed",
            Verdict::Rejected(_) => "rejected",
        });
    }
    // two answers per process lifetime, then a broken pipe and a respawn
    assert_eq!(statuses, ["ok", "ok", "failed", "ok", "ok", "failed"]);
}

fn surrogate_worker(noise: &str) -> EvaluatorSpec {
    EvaluatorSpec::new(EvaluatorKind::External(external(&[
        "--mode",
        "surrogate",
        "--noise-sd",
        noise,
    ])))
}

fn in_process(noise_sd: f64) -> EvaluatorSpec {
    EvaluatorSpec::new(EvaluatorKind::Surrogate(SurrogateParams {
        noise_sd,
        ..SurrogateParams::default()
    }))
}

#[test]
fn grid_through_worker_matches_in_process() {
    let space = SearchSpace::default();
    let grid = StrategyConfig::Grid(GridConfig::from_space(&space));
    let local = harness::run(
        &RunSpec::new(grid.clone(), space.clone(), in_process(0.0), 0),
        None,
    )
    .unwrap();
    let remote = harness::run(&RunSpec::new(grid, space, surrogate_worker("0"), 0), None).unwrap();
    assert_eq!(local.trials.len(), 8);
    for (a, b) in local.trials.iter().zip(&remote.trials) {
        assert_eq!(a.candidate, b.candidate);
        assert_eq!(a.fitness.to_bits(), b.fitness.to_bits());
        assert_eq!(a.status, b.status);
    }
    assert_eq!(local.best, remote.best);
    assert_eq!(remote.best_trial().unwrap().candidate, Candidate::new(2, 2));
}

#[test]
fn noisy_ga_through_worker_pool_matches_in_process() {
    let space = SearchSpace::full_genome();
    let ga = StrategyConfig::Ga(GaConfig {
        population_size: 6,
        generations: 4,
        ..GaConfig::default()
    });
    let mut local_spec = RunSpec::new(ga.clone(), space.clone(), in_process(0.05), 13);
    local_spec.cache = Some(false);
    let mut remote_spec = RunSpec::new(ga, space, surrogate_worker("0.05"), 13);
    remote_spec.cache = Some(false);
    remote_spec.workers = 3;
    let local = harness::run(&local_spec, None).unwrap();
    let remote = harness::run(&remote_spec, None).unwrap();
    assert_eq!(local.trials.len(), 30);
    for (a, b) in local.trials.iter().zip(&remote.trials) {
        assert_eq!(a.candidate, b.candidate);
        assert_eq!(a.genome, b.genome);
        assert_eq!(a.fitness.to_bits(), b.fitness.to_bits());
    }
    assert_eq!(local.best, remote.best);
}

#[test]
fn external_evaluator_spec_from_toml() {
    let spec: EvaluatorSpec = toml::from_str(
        r#"
        kind = "external"
        command = ["python3", "worker.py", "--mode", "surrogate"]
        timeout_secs = 30
        on_error = "abort"
        "#,
    )
    .unwrap();
    match spec.kind {
        EvaluatorKind::External(cfg) => {
            assert_eq!(cfg.command.len(), 4);
            assert_eq!(cfg.timeout_secs, 30.0);
            assert_eq!(cfg.on_error, ErrorPolicy::Abort);
            assert_eq!(cfg.train_config, TrainConfig::default());
        }
        other => panic!("{other:?}"),
    }
}
