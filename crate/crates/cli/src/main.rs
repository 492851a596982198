//! `cellnas` command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cellnas::config::{parse_evaluator_arg, ConfigFile, StrategyKind};
use cellnas::harness::{self, best_row, compare, render_csv, render_run_table, RunReport};
use cellnas::space::{
    build_plan, count_params, decode_genome, format_size_millions, Candidate, Genome, GenomeLayout,
    PlanConfig,
};
use clap::{Args, Parser, Subcommand};

/// Architecture search over convolutional and dense cell counts.
#[derive(Debug, Parser)]
#[command(name = "cellnas", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a search and print the best row: conv dense size accuracy.
    Search(SearchArgs),
    /// Summarize several runs side by side.
    Compare(CompareArgs),
    /// Render the report of a finished or partial run.
    Report(ReportArgs),
    /// Print the parameter count and size string of an architecture.
    CountParams(CountParamsArgs),
    /// Decode a genome bitstring into cell counts.
    Decode(DecodeArgs),
}

#[derive(Debug, Args)]
struct SearchArgs {
    /// Strategy: grid, random or ga [config: strategy]
    #[arg(long, value_parser = parse_strategy)]
    strategy: Option<StrategyKind>,
    /// TOML run configuration
    #[arg(long)]
    config: Option<PathBuf>,
    /// Evaluator: surrogate, param-count, table:PATH or external:COMMAND [config: [evaluator]]
    #[arg(long)]
    evaluator: Option<String>,
    /// Run seed [config: seed]
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for config.json, trials.jsonl and the reports [config: out]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Concurrent evaluations [config: workers]
    #[arg(long)]
    workers: Option<usize>,
    /// Training budget forwarded to evaluators [config: epochs]
    #[arg(long)]
    epochs: Option<u32>,
    /// Random-search draws [config: random.iterations]
    #[arg(long)]
    iterations: Option<usize>,
    /// Enable the evaluation cache (default: on for ga only) [config: cache]
    #[arg(long, conflicts_with = "no_cache")]
    cache: bool,
    /// Disable the evaluation cache [config: cache = false]
    #[arg(long)]
    no_cache: bool,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Run directories or report.json files
    #[arg(required = true)]
    runs: Vec<PathBuf>,
    /// Also write comparison.txt and comparison.csv here
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print CSV instead of the table
    #[arg(long)]
    csv: bool,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Run directory, report.json or trials.jsonl
    run: PathBuf,
    /// Rebuild from trials.jsonl even when report.json exists
    #[arg(long)]
    from_log: bool,
    /// Print CSV instead of the table
    #[arg(long)]
    csv: bool,
}

#[derive(Debug, Args)]
struct CountParamsArgs {
    /// Convolutional cells
    #[arg(long)]
    conv: u32,
    /// Dense cells
    #[arg(long)]
    dense: u32,
}

#[derive(Debug, Args)]
struct DecodeArgs {
    /// Bitstring over {0,1}, conv bits first
    #[arg(long)]
    genome: String,
    /// Bits encoding the conv cell count
    #[arg(long, default_value_t = 4)]
    conv_bits: u32,
    /// Bits encoding the dense cell count
    #[arg(long, default_value_t = 4)]
    dense_bits: u32,
}

fn parse_strategy(s: &str) -> Result<StrategyKind, String> {
    s.parse().map_err(|e: cellnas::Error| e.to_string())
}

enum Failure {
    Usage(String),
    Abort(String),
}

fn usage(e: impl ToString) -> Failure {
    Failure::Usage(e.to_string())
}

fn search(args: SearchArgs) -> Result<(), Failure> {
    let mut config = match &args.config {
        Some(path) => ConfigFile::load(path).map_err(usage)?,
        None => ConfigFile::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(workers) = args.workers {
        config.workers = workers;
    }
    if let Some(epochs) = args.epochs {
        config.epochs = Some(epochs);
    }
    if let Some(iterations) = args.iterations {
        config.random.iterations = iterations;
    }
    if args.cache {
        config.cache = Some(true);
    } else if args.no_cache {
        config.cache = Some(false);
    }
    if let Some(out) = args.out {
        config.out = Some(out);
    }
    if let Some(arg) = &args.evaluator {
        let kind = parse_evaluator_arg(arg).map_err(usage)?;
        config.evaluator = Some(match config.evaluator.take() {
            Some(mut spec) => {
                spec.kind = kind;
                spec
            }
            None => cellnas::EvaluatorSpec::new(kind),
        });
    }
    let spec = config.run_spec(args.strategy).map_err(usage)?;
    let dispatcher = spec.evaluator.build(spec.workers).map_err(usage)?;
    let report = harness::run_with(&spec, &dispatcher, config.out.as_deref())
        .map_err(|e| Failure::Abort(e.to_string()))?;
    println!("{}", best_row(&report));
    Ok(())
}

fn load_report(path: &Path, from_log: bool) -> cellnas::Result<RunReport> {
    if path.is_dir() {
        let json = path.join(harness::REPORT_JSON);
        if !from_log && json.exists() {
            RunReport::load(&json)
        } else {
            RunReport::from_log(&path.join(harness::TRIAL_LOG))
        }
    } else if path.extension().is_some_and(|e| e == "jsonl") {
        RunReport::from_log(path)
    } else {
        RunReport::load(path)
    }
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Abort(format!("{}: {e}", path.display())))
}

fn compare_runs(args: CompareArgs) -> Result<(), Failure> {
    let reports = args
        .runs
        .iter()
        .map(|p| load_report(p, false).map_err(usage))
        .collect::<Result<Vec<_>, _>>()?;
    let cmp = compare(&reports);
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)
            .map_err(|e| Failure::Abort(format!("{}: {e}", dir.display())))?;
        write(&dir.join("comparison.txt"), &cmp.text)?;
        write(&dir.join("comparison.csv"), &cmp.csv)?;
    }
    print!("{}", if args.csv { &cmp.csv } else { &cmp.text });
    Ok(())
}

fn report(args: ReportArgs) -> Result<(), Failure> {
    let report = load_report(&args.run, args.from_log).map_err(usage)?;
    if args.csv {
        print!(
            "{}",
            render_csv(&report).map_err(|e| Failure::Abort(e.to_string()))?
        );
    } else {
        print!("{}", render_run_table(&report));
    }
    Ok(())
}

fn count(args: CountParamsArgs) -> Result<(), Failure> {
    let n = count_params(&build_plan(
        Candidate::new(args.conv, args.dense),
        &PlanConfig::default(),
    ));
    println!("{n} ({})", format_size_millions(n));
    Ok(())
}

fn decode(args: DecodeArgs) -> Result<(), Failure> {
    let layout = GenomeLayout::new(args.conv_bits, args.dense_bits).map_err(usage)?;
    let genome: Genome = args.genome.parse().map_err(usage)?;
    let candidate = decode_genome(&genome, &layout).map_err(usage)?;
    println!("{candidate}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Search(a) => search(a),
        Command::Compare(a) => compare_runs(a),
        Command::Report(a) => report(a),
        Command::CountParams(a) => count(a),
        Command::Decode(a) => decode(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Abort(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
