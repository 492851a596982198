use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn config(name: &str) -> PathBuf {
    fixtures().join("configs").join(name)
}

fn cellnas(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cellnas"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> &str {
    std::str::from_utf8(&out.stdout).unwrap()
}

fn run_ok(args: &[&str]) -> String {
    let out = cellnas(args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    stdout(&out).to_string()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn count_params_examples() {
    assert_eq!(
        run_ok(&["count-params", "--conv", "0", "--dense", "1"]),
        "4200970 (4.2M)\n"
    );
    assert_eq!(
        run_ok(&["count-params", "--conv", "2", "--dense", "2"]),
        "849546 (0.84M)\n"
    );
    assert_eq!(
        run_ok(&["count-params", "--conv", "0", "--dense", "0"]),
        "82954 (0.08M)\n"
    );
}

#[test]
fn count_params_rejects_negative() {
    let out = cellnas(&["count-params", "--conv", "-1", "--dense", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn decode_examples() {
    assert_eq!(
        run_ok(&["decode", "--genome", "10100001"]),
        "conv=10 dense=1\n"
    );
    assert_eq!(
        run_ok(&["decode", "--genome", "00000000"]),
        "conv=0 dense=0\n"
    );
    assert_eq!(
        run_ok(&[
            "decode",
            "--genome",
            "1010001",
            "--conv-bits",
            "3",
            "--dense-bits",
            "4"
        ]),
        "conv=5 dense=1\n"
    );
}

#[test]
fn decode_rejects_bad_genomes() {
    for genome in ["1010000", "1010000x", "101000011"] {
        let out = cellnas(&["decode", "--genome", genome]);
        assert_eq!(out.status.code(), Some(2), "{genome}");
        assert!(out.stdout.is_empty());
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn unknown_flag_is_usage_error() {
    assert_eq!(
        cellnas(&["decode", "--genome", "00000000", "--bogus"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(cellnas(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn grid_search_prints_best_row() {
    let out = run_ok(&[
        "search",
        "--strategy",
        "grid",
        "--config",
        p(&config("grid-4x2.toml")),
    ]);
    assert_eq!(out, "2 2 0.84M 83\n");
}

#[test]
fn shipped_experiments_are_one_command() {
    assert_eq!(
        run_ok(&["search", "--config", p(&config("random-5.toml"))]),
        "4 1 0.66M 85.8\n"
    );
    assert_eq!(
        run_ok(&["search", "--config", p(&config("ga-2x8.toml"))]),
        "10 1 0.49M 85.7\n"
    );
}

#[test]
fn missing_config_is_usage_error() {
    let out = cellnas(&[
        "search",
        "--strategy",
        "grid",
        "--config",
        "/nonexistent/run.toml",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/run.toml"));
}

#[test]
fn malformed_config_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "strategy = \"grid\"\nunknown_key = 1\n").unwrap();
    assert_eq!(
        cellnas(&["search", "--config", p(&path)]).status.code(),
        Some(2)
    );
    assert_eq!(
        cellnas(&["search", "--evaluator", "surrogate"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        cellnas(&["search", "--strategy", "grid", "--evaluator", "oracle"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn random_seed_seven_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        run_ok(&[
            "search",
            "--strategy",
            "random",
            "--config",
            p(&config("random-5.toml")),
            "--seed",
            "7",
            "--out",
            p(out),
        ]);
    }
    let strip = |dir: &Path| -> Vec<String> {
        std::fs::read_to_string(dir.join("trials.jsonl"))
            .unwrap()
            .lines()
            .map(strip_timing)
            .collect()
    };
    let (la, lb) = (strip(&a), strip(&b));
    assert_eq!(la.len(), 6);
    assert_eq!(la, lb);
    assert!(la[0].contains("\"seed\":7"));
}

/// A trial log line with the wall-clock fields blanked.
fn strip_timing(line: &str) -> String {
    let mut out = line.to_string();
    for key in ["\"wall_time_seconds\":", "\"timestamp\":"] {
        if let Some(start) = out.find(key) {
            let value = start + key.len();
            let end = out[value..]
                .find([',', '}'])
                .map_or(out.len(), |e| value + e);
            out.replace_range(value..end, "_");
        }
    }
    out
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    run_ok(&[
        "search",
        "--config",
        p(&config("random-5.toml")),
        "--iterations",
        "9",
        "--evaluator",
        "surrogate",
        "--workers",
        "3",
        "--out",
        p(&out),
    ]);
    let report = run_ok(&["report", p(&out), "--csv"]);
    assert_eq!(report.lines().count(), 1 + 9);
    let cfg = std::fs::read_to_string(out.join("config.json")).unwrap();
    assert!(cfg.contains("\"kind\": \"surrogate\""));
    assert!(cfg.contains("\"workers\": 3"));
}

#[test]
fn report_and_compare_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mut runs = Vec::new();
    for name in ["grid-4x2", "random-5", "ga-2x8"] {
        let out = dir.path().join(name);
        run_ok(&[
            "search",
            "--config",
            p(&config(&format!("{name}.toml"))),
            "--out",
            p(&out),
        ]);
        runs.push(out);
    }

    let from_json = run_ok(&["report", p(&runs[0])]);
    let from_log = run_ok(&["report", p(&runs[0]), "--from-log"]);
    assert!(from_json.ends_with("best: 2 2 0.84M 83\n"));
    let no_time = |s: &str| -> Vec<String> {
        s.lines()
            .map(|l| l.rsplitn(3, '|').skip(2).collect::<String>())
            .collect()
    };
    assert_eq!(no_time(&from_json), no_time(&from_log));

    let cmp_dir = dir.path().join("cmp");
    let csv = run_ok(&[
        "compare",
        p(&runs[0]),
        p(&runs[1]),
        p(&runs[2]),
        "--csv",
        "--out",
        p(&cmp_dir),
    ]);
    let best: Vec<Vec<&str>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect::<Vec<_>>()[..6].to_vec())
        .collect();
    assert_eq!(
        best,
        [
            ["ga", "89", "18", "7", "10 1", "85.7"],
            ["grid", "0", "8", "8", "2 2", "83"],
            ["random", "1", "5", "5", "4 1", "85.8"],
        ]
    );
    assert_eq!(
        std::fs::read_to_string(cmp_dir.join("comparison.csv")).unwrap(),
        csv
    );
    assert!(std::fs::read_to_string(cmp_dir.join("comparison.txt"))
        .unwrap()
        .contains("| Best model"));
}

#[test]
fn compare_missing_run_is_usage_error() {
    assert_eq!(
        cellnas(&["compare", "/nonexistent/run"]).status.code(),
        Some(2)
    );
    assert_eq!(cellnas(&["compare"]).status.code(), Some(2));
}

#[test]
fn aborted_run_exits_one() {
    // The reference worker is built alongside the core crate.
    let worker = Path::new(env!("CARGO_BIN_EXE_cellnas"))
        .with_file_name(format!("cellnas-worker{}", std::env::consts::EXE_SUFFIX));
    if !worker.exists() {
        eprintln!("skipping: {} not built", worker.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("abort.toml");
    std::fs::write(
        &cfg,
        format!(
            "strategy = \"grid\"\n[evaluator]\nkind = \"external\"\ncommand = [{worker:?}, \"--mode\", \"exit-after:2\"]\non_error = \"abort\"\n"
        ),
    )
    .unwrap();
    let out_dir = dir.path().join("run");
    let out = cellnas(&["search", "--config", p(&cfg), "--out", p(&out_dir)]);
    assert_eq!(
        out.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(out_dir.join("trials.jsonl").exists());
    assert!(!out_dir.join("report.json").exists());
}

/// Compares against `tests/snapshots/NAME.txt`; set `UPDATE_SNAPSHOTS=1`
/// to rewrite the files.
fn assert_snapshot(name: &str, actual: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/snapshots")
        .join(format!("{name}.txt"));
    if std::env::var_os("UPDATE_SNAPSHOTS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected =
        std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "snapshot {name} differs");
}

#[test]
fn help_snapshots() {
    assert_snapshot("help", stdout(&cellnas(&["--help"])));
    for sub in ["search", "compare", "report", "count-params", "decode"] {
        let out = cellnas(&[sub, "--help"]);
        assert_eq!(out.status.code(), Some(0));
        assert_snapshot(&format!("help_{sub}"), stdout(&out));
    }
}

#[test]
fn search_help_lists_every_flag() {
    let help = stdout(&cellnas(&["search", "--help"])).to_string();
    for flag in [
        "--strategy",
        "--config",
        "--evaluator",
        "--seed",
        "--out",
        "--workers",
        "--epochs",
        "--iterations",
        "--cache",
        "--no-cache",
    ] {
        assert!(help.contains(flag), "{flag}");
    }
}
