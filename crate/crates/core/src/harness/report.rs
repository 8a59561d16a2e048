//! CSV report files.
//!
//! * `results.csv`: one row per (method, alpha, seed) with all metrics.
//!   Deterministic for a fixed configuration.
//! * `timings.csv`: wall-clock seconds for the same rows.
//! * `aggregate.csv`: mean and sample std over seeds.
//! * `paired.csv`: paired t-tests on AUC-PR, wins as `k/n`.
//! * `sweep.csv`: per-alpha SilIF means and stds, for plotting.
//! * `metadata.csv`: configuration snapshot and version.

use std::fs;
use std::path::{Path, PathBuf};

use super::{EvalResult, Method, ResultsTable, RowStatus, PRECISION_KS};
use crate::error::{Error, Result};

const RESULT_HEADER: [&str; 11] = [
    "method", "alpha", "seed", "auc_roc", "auc_pr", "p@50", "p@100", "p@500", "p@1000", "seconds",
    "status",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ReportFiles {
    pub results: PathBuf,
    pub timings: PathBuf,
    pub aggregate: PathBuf,
    pub paired: PathBuf,
    pub sweep: PathBuf,
    pub metadata: PathBuf,
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn finish(mut w: csv::Writer<fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn emit_report(results: &ResultsTable, out_dir: impl AsRef<Path>) -> Result<ReportFiles> {
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = ReportFiles {
        results: dir.join("results.csv"),
        timings: dir.join("timings.csv"),
        aggregate: dir.join("aggregate.csv"),
        paired: dir.join("paired.csv"),
        sweep: dir.join("sweep.csv"),
        metadata: dir.join("metadata.csv"),
    };

    // Timing lives in its own file so results.csv stays reproducible.
    let mut w = writer(&files.results)?;
    let header: Vec<&str> = RESULT_HEADER.iter().filter(|h| **h != "seconds").copied().collect();
    w.write_record(&header)?;
    for r in &results.rows {
        let mut rec = vec![r.method.to_string(), opt(r.alpha), r.seed.to_string(), opt(r.auc_roc), opt(r.auc_pr)];
        rec.extend(r.precision_at.iter().map(|p| opt(*p)));
        rec.push(r.status.as_string());
        w.write_record(&rec)?;
    }
    finish(w, &files.results)?;

    let mut w = writer(&files.timings)?;
    w.write_record(["method", "alpha", "seed", "seconds"])?;
    for r in &results.rows {
        w.write_record([r.method.to_string(), opt(r.alpha), r.seed.to_string(), r.seconds.to_string()])?;
    }
    finish(w, &files.timings)?;

    let metric_names = ["auc_roc", "auc_pr", "p@50", "p@100", "p@500", "p@1000"];
    let mut w = writer(&files.aggregate)?;
    let mut header = vec!["method".to_owned(), "alpha".into(), "n".into()];
    for m in metric_names {
        header.push(format!("{m}_mean"));
        header.push(format!("{m}_std"));
    }
    w.write_record(&header)?;
    for a in results.aggregates() {
        let mut rec = vec![a.method.to_string(), opt(a.alpha), a.n.to_string()];
        for m in a.metrics {
            rec.push(opt(m.map(|x| x.0)));
            rec.push(opt(m.map(|x| x.1)));
        }
        w.write_record(&rec)?;
    }
    finish(w, &files.aggregate)?;

    let mut w = writer(&files.paired)?;
    w.write_record([
        "method_a", "alpha_a", "method_b", "alpha_b", "metric", "delta", "wins", "t", "p", "degenerate",
    ])?;
    for p in &results.paired {
        w.write_record([
            p.method_a.to_string(),
            opt(p.alpha_a),
            p.method_b.to_string(),
            opt(p.alpha_b),
            p.metric.clone(),
            p.mean_difference.to_string(),
            p.wins_label(),
            p.t.to_string(),
            p.p.to_string(),
            p.degenerate.to_string(),
        ])?;
    }
    finish(w, &files.paired)?;

    let mut w = writer(&files.sweep)?;
    w.write_record(["alpha", "n", "auc_roc_mean", "auc_roc_std", "auc_pr_mean", "auc_pr_std"])?;
    for a in results.aggregates() {
        if a.method != Method::Silif {
            continue;
        }
        let Some(alpha) = a.alpha else { continue };
        w.write_record([
            alpha.to_string(),
            a.n.to_string(),
            opt(a.metrics[0].map(|x| x.0)),
            opt(a.metrics[0].map(|x| x.1)),
            opt(a.metrics[1].map(|x| x.0)),
            opt(a.metrics[1].map(|x| x.1)),
        ])?;
    }
    finish(w, &files.sweep)?;

    let mut w = writer(&files.metadata)?;
    w.write_record(["key", "value"])?;
    w.write_record(["version", results.version.as_str()])?;
    for (k, v) in &results.config {
        w.write_record([k, v])?;
    }
    finish(w, &files.metadata)?;

    Ok(files)
}

fn parse_opt(cell: &str, line: u64) -> Result<Option<f64>> {
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse().map(Some).map_err(|_| Error::MalformedRow {
        line,
        message: format!("`{cell}` is not a number"),
    })
}

/// Reads `results.csv` back. The seconds column is absent from that file;
/// rows come back with `seconds = 0`.
pub fn read_results_csv(path: impl AsRef<Path>) -> Result<Vec<EvalResult>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != RESULT_HEADER.len() - 1 {
            return Err(Error::MalformedRow {
                line,
                message: format!("expected {} fields", RESULT_HEADER.len() - 1),
            });
        }
        let mut precision_at = [None; PRECISION_KS.len()];
        for (k, slot) in precision_at.iter_mut().enumerate() {
            *slot = parse_opt(&rec[5 + k], line)?;
        }
        rows.push(EvalResult {
            method: rec[0].parse::<Method>()?,
            alpha: parse_opt(&rec[1], line)?,
            seed: rec[2].parse().map_err(|_| Error::MalformedRow {
                line,
                message: format!("bad seed `{}`", &rec[2]),
            })?,
            auc_roc: parse_opt(&rec[3], line)?,
            auc_pr: parse_opt(&rec[4], line)?,
            precision_at,
            seconds: 0.0,
            status: RowStatus::parse(&rec[9]),
        });
    }
    Ok(rows)
}
