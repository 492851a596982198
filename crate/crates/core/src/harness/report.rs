use std::fmt::Write as _;

use super::{RunReport, TrialRecord};
use crate::eval::EvalStatus;
use crate::Result;

const MISSING: &str = "—";

/// A fraction as a percentage, rounded to two decimals, without trailing
/// zeros: `0.83 -> "83"`, `0.858 -> "85.8"`.
pub fn format_percent(fraction: f64) -> String {
    let pct = (fraction * 100.0 * 100.0).round() / 100.0;
    format!("{pct}")
}

fn accuracy_cell(t: &TrialRecord) -> String {
    match (t.status, t.accuracy) {
        (EvalStatus::Ok, Some(acc)) => match t.aux.get("spread") {
            Some(spread) => format!("{}±{}", format_percent(acc), format_percent(*spread)),
            None => format_percent(acc),
        },
        _ => MISSING.to_string(),
    }
}

fn score_cell(t: &TrialRecord) -> String {
    t.aux
        .get("score")
        .map_or_else(|| MISSING.to_string(), |s| format!("{s}"))
}

fn status_name(status: EvalStatus) -> &'static str {
    match status {
        EvalStatus::Ok => "ok",
        EvalStatus::Penalized => "penalized",
        EvalStatus::Failed => "failed",
    }
}

/// Pipe table with a spanning group row above the column headers.
fn render_grouped(groups: &[(&str, usize)], headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    // widen the last column of a group whose title does not fit
    let mut col = 0;
    for (title, span) in groups {
        let inner: usize = widths[col..col + span].iter().sum::<usize>() + 3 * (span - 1);
        let need = title.chars().count();
        if need > inner {
            widths[col + span - 1] += need - inner;
        }
        col += span;
    }

    let pad = |s: &str, w: usize| format!("{s}{}", " ".repeat(w - s.chars().count()));
    let mut out = String::new();
    let mut col = 0;
    out.push('|');
    for (title, span) in groups {
        let inner = widths[col..col + span].iter().sum::<usize>() + 3 * (span - 1);
        let _ = write!(out, " {} |", pad(title, inner));
        col += span;
    }
    out.push('\n');
    let line = |cells: &[String]| {
        let mut s = String::from("|");
        for (cell, w) in cells.iter().zip(&widths) {
            let _ = write!(s, " {} |", pad(cell, *w));
        }
        s.push('\n');
        s
    };
    let header_cells: Vec<String> = headers.iter().map(|h| h.to_string()).collect();
    out.push_str(&line(&header_cells));
    out.push('|');
    for w in &widths {
        let _ = write!(out, "{}|", "-".repeat(w + 2));
    }
    out.push('\n');
    for row in rows {
        out.push_str(&line(row));
    }
    out
}

/// One run's trials in the results-table layout: "Model params" (conv
/// cells, dense cells, size) and "Evaluating" (accuracy, score), followed
/// by bookkeeping columns.
pub fn render_run_table(report: &RunReport) -> String {
    let rows: Vec<Vec<String>> = report
        .trials
        .iter()
        .map(|t| {
            vec![
                t.candidate.conv_cells.to_string(),
                t.candidate.dense_cells.to_string(),
                t.size_string.clone().unwrap_or_else(|| MISSING.into()),
                accuracy_cell(t),
                score_cell(t),
                t.trial_index.to_string(),
                format!("{:.6}", t.fitness),
                status_name(t.status).to_string(),
                format!("{:.3}", t.wall_time_seconds),
            ]
        })
        .collect();
    let mut out = format!(
        "{} (seed {}): {} trials, {} unique evaluations, {:.3}s\n",
        report.strategy,
        report.seed,
        report.total_evaluations,
        report.unique_evaluations,
        report.total_wall_time_seconds
    );
    out.push_str(&render_grouped(
        &[("Model params", 3), ("Evaluating", 2), ("Trial", 4)],
        &[
            "Conv cells",
            "Dense cells",
            "Size",
            "Accuracy %",
            "Score",
            "#",
            "Fitness",
            "Status",
            "Time (s)",
        ],
        &rows,
    ));
    let _ = writeln!(out, "best: {}", best_row(report));
    out
}

/// The best trial as `conv dense size accuracy`, e.g. `2 2 0.84M 83`, or
/// a dash when no trial succeeded.
pub fn best_row(report: &RunReport) -> String {
    match report.best_trial() {
        Some(best) => format!(
            "{} {} {} {}",
            best.candidate.conv_cells,
            best.candidate.dense_cells,
            best.size_string.as_deref().unwrap_or(MISSING),
            best_accuracy(report)
        ),
        None => MISSING.to_string(),
    }
}

/// Accuracy of the best trial in percent, falling back to its fitness when
/// the evaluator reports no accuracy.
pub(crate) fn best_accuracy(report: &RunReport) -> String {
    match report.best_trial() {
        Some(t) => match t.accuracy {
            Some(acc) => format_percent(acc),
            None => format!("{}", t.fitness),
        },
        None => MISSING.to_string(),
    }
}

/// Delimited trial table.
pub fn render_csv(report: &RunReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "trial_index",
        "generation",
        "conv",
        "dense",
        "genome",
        "size",
        "params",
        "accuracy",
        "spread",
        "score",
        "fitness",
        "status",
        "cached",
        "wall_time_seconds",
    ])
    .map_err(csv_err)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for t in &report.trials {
        w.write_record([
            t.trial_index.to_string(),
            t.generation.map(|g| g.to_string()).unwrap_or_default(),
            t.candidate.conv_cells.to_string(),
            t.candidate.dense_cells.to_string(),
            t.genome.as_ref().map(|g| g.to_string()).unwrap_or_default(),
            t.size_string.clone().unwrap_or_default(),
            t.param_count.map(|p| p.to_string()).unwrap_or_default(),
            opt(t.accuracy),
            opt(t.aux.get("spread").copied()),
            opt(t.aux.get("score").copied()),
            t.fitness.to_string(),
            status_name(t.status).to_string(),
            t.cached.to_string(),
            t.wall_time_seconds.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| crate::Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn csv_err(e: csv::Error) -> crate::Error {
    crate::Error::Io(std::io::Error::other(e))
}

/// Rendered comparison of several runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// Summary table followed by one results table per run.
    pub text: String,
    /// Summary rows as delimited text.
    pub csv: String,
}

struct SummaryRow {
    strategy: String,
    seed: u64,
    trials: usize,
    unique: usize,
    best: String,
    best_accuracy: String,
    best_fitness: String,
    time: String,
}

/// Summarizes runs ordered by strategy name, then seed.
pub fn compare(reports: &[RunReport]) -> Comparison {
    let mut ordered: Vec<&RunReport> = reports.iter().collect();
    ordered.sort_by(|a, b| a.strategy.cmp(&b.strategy).then(a.seed.cmp(&b.seed)));

    let summary: Vec<SummaryRow> = ordered
        .iter()
        .map(|r| SummaryRow {
            strategy: r.strategy.clone(),
            seed: r.seed,
            trials: r.total_evaluations,
            unique: r.unique_evaluations,
            best: r.best_trial().map_or_else(
                || MISSING.to_string(),
                |t| format!("{} {}", t.candidate.conv_cells, t.candidate.dense_cells),
            ),
            best_accuracy: best_accuracy(r),
            best_fitness: r
                .best_trial()
                .map_or_else(|| MISSING.to_string(), |t| format!("{:.6}", t.fitness)),
            time: format!("{:.3}", r.total_wall_time_seconds),
        })
        .collect();

    let rows: Vec<Vec<String>> = summary
        .iter()
        .map(|s| {
            vec![
                s.strategy.clone(),
                s.seed.to_string(),
                s.trials.to_string(),
                s.unique.to_string(),
                s.best.clone(),
                s.best_accuracy.clone(),
                s.best_fitness.clone(),
                s.time.clone(),
            ]
        })
        .collect();
    let mut text = render_grouped(
        &[("Run", 4), ("Best model", 3), ("Time", 1)],
        &[
            "Strategy",
            "Seed",
            "Trials",
            "Unique evals",
            "Cells",
            "Accuracy %",
            "Fitness",
            "Total (s)",
        ],
        &rows,
    );
    for r in &ordered {
        text.push('\n');
        text.push_str(&render_run_table(r));
    }

    let mut w = csv::Writer::from_writer(Vec::new());
    let _ = w.write_record([
        "strategy",
        "seed",
        "trials",
        "unique_evaluations",
        "best",
        "best_accuracy",
        "best_fitness",
        "total_wall_time_seconds",
    ]);
    for row in &rows {
        let _ = w.write_record(row);
    }
    let csv = String::from_utf8(w.into_inner().unwrap_or_default()).unwrap_or_default();
    Comparison { text, csv }
}
