//! Per-run trace files: one CSV row per evaluation.
//!
//! Initial-design rows carry `d = 0` and no selected indices; `f_next` is the
//! value of the evaluated point and `f_min` the best value so far.

use std::path::{Path, PathBuf};

use adbo::optimizers::RunTrace;

use crate::error::HarnessError;

pub const HEADER: [&str; 6] = ["n_evals", "f_min", "d", "selected_indices", "f_next", "elapsed_ms"];

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub n_evals: usize,
    pub f_min: f64,
    pub d: usize,
    pub selected_indices: Vec<usize>,
    pub f_next: f64,
    pub elapsed_ms: f64,
}

pub fn rows_of(trace: &RunTrace<f64>) -> Vec<TraceRow> {
    let mut rows = Vec::with_capacity(trace.evaluations());
    let mut best = f64::INFINITY;
    for (i, &y) in trace.initial_values.iter().enumerate() {
        best = best.min(y);
        rows.push(TraceRow {
            n_evals: i + 1,
            f_min: best,
            d: 0,
            selected_indices: Vec::new(),
            f_next: y,
            elapsed_ms: 0.0,
        });
    }
    rows.extend(trace.records.iter().map(|r| TraceRow {
        n_evals: r.n_evals,
        f_min: r.f_min,
        d: r.d,
        selected_indices: r.selected.clone(),
        f_next: r.f_next,
        elapsed_ms: r.elapsed_ms,
    }));
    rows
}

/// Shortest decimal text that parses back to the same value.
pub fn format_float(v: f64) -> String {
    format!("{v:?}")
}

pub fn to_csv(rows: &[TraceRow]) -> Result<Vec<u8>, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| HarnessError::Run(format!("csv encoding failed: {e}"));
    w.write_record(HEADER).map_err(csv_err)?;
    for r in rows {
        let indices: Vec<String> = r.selected_indices.iter().map(|i| i.to_string()).collect();
        w.write_record([
            r.n_evals.to_string(),
            format_float(r.f_min),
            r.d.to_string(),
            indices.join(";"),
            format_float(r.f_next),
            format!("{:.3}", r.elapsed_ms),
        ])
        .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| HarnessError::Run(format!("csv encoding failed: {e}")))
}

pub fn parse_csv(text: &[u8], origin: &Path) -> Result<Vec<TraceRow>, HarnessError> {
    let bad = |what: String| HarnessError::Usage(format!("{}: {what}", origin.display()));
    let mut r = csv::Reader::from_reader(text);
    let header = r.headers().map_err(|e| bad(e.to_string()))?;
    if header.iter().ne(HEADER) {
        return Err(bad(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let num = |i: usize| -> Result<f64, HarnessError> {
            field(i)
                .parse()
                .map_err(|_| bad(format!("row {}: bad {} '{}'", line + 1, HEADER[i], field(i))))
        };
        let int = |i: usize| -> Result<usize, HarnessError> {
            field(i)
                .parse()
                .map_err(|_| bad(format!("row {}: bad {} '{}'", line + 1, HEADER[i], field(i))))
        };
        let selected_indices = if field(3).is_empty() {
            Vec::new()
        } else {
            field(3)
                .split(';')
                .map(|s| s.parse().map_err(|_| bad(format!("row {}: bad index '{s}'", line + 1))))
                .collect::<Result<_, _>>()?
        };
        rows.push(TraceRow {
            n_evals: int(0)?,
            f_min: num(1)?,
            d: int(2)?,
            selected_indices,
            f_next: num(4)?,
            elapsed_ms: num(5)?,
        });
    }
    Ok(rows)
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>, HarnessError> {
    let text = std::fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    parse_csv(&text, path)
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(|e| HarnessError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| HarnessError::io(path, e))
}

pub fn trace_path(root: &Path, objective: &str, algorithm: &str, run: usize) -> PathBuf {
    root.join(objective).join(algorithm).join(format!("run_{run:03}.csv"))
}

/// Run index encoded in a `run_<idx>.csv` file name.
pub fn run_index(path: &Path) -> Option<usize> {
    let name = path.file_name()?.to_str()?;
    name.strip_prefix("run_")?.strip_suffix(".csv")?.parse().ok()
}
