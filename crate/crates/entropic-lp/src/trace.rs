//! Convergence traces.
//!
//! Outer (bisection) traces are CSV with header `k,lambda,value,g,residual,elapsed_s`;
//! inner traces are stacked into one CSV with header `k,n,F,residual,elapsed_s`
//! where `k` is the outer step. The `--paper-txt` variants are
//! whitespace-separated two-column files, one per quantity.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use entropic_lp_core::{OuterRecord, TraceRecord};

use crate::AppError;

fn csv_err(path: &Path, e: csv::Error) -> AppError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => AppError::io(path, io),
        other => AppError::Parse(format!("{}: {other:?}", path.display())),
    }
}

pub fn write_outer_csv(path: &Path, records: &[OuterRecord], timing: bool) -> Result<(), AppError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["k", "lambda", "value", "g", "residual", "elapsed_s"])
        .map_err(|e| csv_err(path, e))?;
    for r in records {
        let elapsed = if timing { r.elapsed_s } else { 0.0 };
        w.write_record([
            r.k.to_string(),
            r.lambda.to_string(),
            r.value.to_string(),
            r.g.to_string(),
            r.residual.to_string(),
            elapsed.to_string(),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

pub fn write_inner_csv(path: &Path, traces: &[Vec<TraceRecord>], timing: bool) -> Result<(), AppError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["k", "n", "F", "residual", "elapsed_s"])
        .map_err(|e| csv_err(path, e))?;
    for (k, trace) in traces.iter().enumerate() {
        for r in trace {
            let elapsed = if timing { r.elapsed_s } else { 0.0 };
            w.write_record([
                k.to_string(),
                r.n.to_string(),
                r.objective_f.to_string(),
                r.residual.to_string(),
                elapsed.to_string(),
            ])
            .map_err(|e| csv_err(path, e))?;
        }
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

/// `trace.csv` → `trace.<suffix>`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

type Column = (&'static str, fn(&OuterRecord) -> f64);

fn write_columns(path: &Path, rows: impl Iterator<Item = (usize, f64)>) -> Result<(), AppError> {
    let file = File::create(path).map_err(|e| AppError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for (x, y) in rows {
        writeln!(w, "{x} {y:.17e}").map_err(|e| AppError::io(path, e))?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

/// Writes `<stem>.lambda.txt`, `<stem>.value.txt`, `<stem>.g.txt` and, when
/// iterates were kept, `<stem>.error.txt` (`k  ‖q_k − q_final‖₂`). Returns
/// the paths written.
pub fn write_paper_txt(trace_path: &Path, records: &[OuterRecord]) -> Result<Vec<PathBuf>, AppError> {
    let mut written = Vec::new();
    let columns: [Column; 3] = [
        ("lambda.txt", |r| r.lambda),
        ("value.txt", |r| r.value),
        ("g.txt", |r| r.g),
    ];
    for (suffix, get) in columns {
        let path = sibling(trace_path, suffix);
        write_columns(&path, records.iter().map(|r| (r.k, get(r))))?;
        written.push(path);
    }
    if records.iter().all(|r| r.error_to_final.is_some()) && !records.is_empty() {
        let path = sibling(trace_path, "error.txt");
        write_columns(&path, records.iter().map(|r| (r.k, r.error_to_final.unwrap_or(f64::NAN))))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(k: usize) -> OuterRecord {
        OuterRecord {
            k,
            lambda: 0.5 / (k + 1) as f64,
            value: 0.2,
            g: -0.01,
            residual: 1e-13,
            elapsed_s: 1.5,
            inner_iterations: 3,
            inner_converged: true,
            error_to_final: Some(0.1),
        }
    }

    #[test]
    fn outer_csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        write_outer_csv(&path, &[record(0), record(1)], false).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "k,lambda,value,g,residual,elapsed_s");
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("1,0.25,0.2,-0.01,"));
        assert!(lines[2].ends_with(",0"));
    }

    #[test]
    fn paper_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.csv");
        let written = write_paper_txt(&path, &[record(0), record(1)]).unwrap();
        assert_eq!(written.len(), 4);
        let lambda = std::fs::read_to_string(dir.path().join("run.lambda.txt")).unwrap();
        let first: Vec<&str> = lambda.lines().next().unwrap().split_whitespace().collect();
        assert_eq!(first[0], "0");
        assert_eq!(first[1].parse::<f64>().unwrap(), 0.5);
    }
}
