//! Per-objective summaries and the verdict table.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use adbo::stats::{summarize_curves, wilcoxon_signed_rank, TestMethod, Verdict, VerdictCounts};
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;
use crate::trace_io::{read_trace, run_index};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSummary {
    pub algorithm: String,
    /// Run indices whose traces reach the full budget.
    pub runs: Vec<usize>,
    /// Run indices whose traces stop early.
    pub incomplete_runs: Vec<usize>,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub std: Option<f64>,
    pub final_values: Vec<f64>,
    pub mean_curve: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub reference: String,
    pub other: String,
    /// `plus` when the reference is significantly better.
    pub verdict: String,
    pub symbol: String,
    pub p_value: f64,
    pub method: String,
    pub paired_runs: usize,
    pub n_effective: usize,
    pub w_plus: f64,
    pub median_reference: Option<f64>,
    pub median_other: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSummary {
    pub objective: String,
    pub evaluations: usize,
    pub alpha: f64,
    pub reference: String,
    pub algorithms: Vec<AlgorithmSummary>,
    pub comparisons: Vec<Comparison>,
    /// `plus/approx/minus` over the comparisons.
    pub verdict_counts: String,
}

impl ObjectiveSummary {
    pub fn algorithm(&self, tag: &str) -> Option<&AlgorithmSummary> {
        self.algorithms.iter().find(|a| a.algorithm == tag)
    }

    pub fn comparison(&self, other: &str) -> Option<&Comparison> {
        self.comparisons.iter().find(|c| c.other == other)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}

/// Best-so-far curves of one algorithm, keyed by run index.
pub type Curves = BTreeMap<usize, Vec<f64>>;

/// Builds the summary for one objective. `algorithms` fixes the output
/// order; every non-reference algorithm is compared with the reference on
/// the runs both completed.
pub fn summarize_objective(
    objective: &str,
    reference: &str,
    alpha: f64,
    algorithms: &[(String, Curves)],
) -> Result<ObjectiveSummary, HarnessError> {
    let evaluations = algorithms
        .iter()
        .flat_map(|(_, c)| c.values().map(Vec::len))
        .max()
        .unwrap_or(0);
    let mut summaries = Vec::new();
    for (tag, curves) in algorithms {
        let (full, short): (Vec<_>, Vec<_>) = curves.iter().partition(|(_, c)| c.len() == evaluations);
        let runs: Vec<usize> = full.iter().map(|(i, _)| **i).collect();
        let incomplete_runs = short.iter().map(|(i, _)| **i).collect();
        let s = if full.is_empty() {
            None
        } else {
            Some(summarize_curves(&full.iter().map(|(_, c)| c.as_slice()).collect::<Vec<_>>())?)
        };
        summaries.push(AlgorithmSummary {
            algorithm: tag.clone(),
            runs,
            incomplete_runs,
            mean: s.as_ref().map(|s| s.mean),
            median: s.as_ref().map(|s| s.median),
            std: s.as_ref().map(|s| s.std),
            final_values: s.as_ref().map(|s| s.final_values.clone()).unwrap_or_default(),
            mean_curve: s.map(|s| s.mean_curve).unwrap_or_default(),
        });
    }
    let reference_summary = summaries
        .iter()
        .find(|s| s.algorithm == reference)
        .ok_or_else(|| HarnessError::Usage(format!("no traces for reference algorithm {reference}")))?
        .clone();
    let mut comparisons = Vec::new();
    let mut counts = VerdictCounts::default();
    for other in summaries.iter().filter(|s| s.algorithm != reference) {
        let paired: Vec<(f64, f64)> = reference_summary
            .runs
            .iter()
            .zip(&reference_summary.final_values)
            .filter_map(|(run, a)| {
                let k = other.runs.iter().position(|r| r == run)?;
                Some((*a, other.final_values[k]))
            })
            .collect();
        let c = if paired.is_empty() {
            Comparison {
                reference: reference.to_string(),
                other: other.algorithm.clone(),
                verdict: Verdict::Approx.name().into(),
                symbol: Verdict::Approx.symbol().into(),
                p_value: 1.0,
                method: "degenerate".into(),
                paired_runs: 0,
                n_effective: 0,
                w_plus: 0.0,
                median_reference: None,
                median_other: None,
            }
        } else {
            let (a, b): (Vec<f64>, Vec<f64>) = paired.iter().copied().unzip();
            let v = wilcoxon_signed_rank(&a, &b, alpha)?;
            Comparison {
                reference: reference.to_string(),
                other: other.algorithm.clone(),
                verdict: v.verdict.name().into(),
                symbol: v.verdict.symbol().into(),
                p_value: v.p_value,
                method: match v.method {
                    TestMethod::Exact => "exact",
                    TestMethod::Normal => "normal",
                    TestMethod::Degenerate => "degenerate",
                }
                .into(),
                paired_runs: paired.len(),
                n_effective: v.n_effective,
                w_plus: v.w_plus,
                median_reference: Some(v.median_a),
                median_other: Some(v.median_b),
            }
        };
        counts.add(Verdict::from_name(&c.verdict).expect("own verdict name"));
        comparisons.push(c);
    }
    Ok(ObjectiveSummary {
        objective: objective.to_string(),
        evaluations,
        alpha,
        reference: reference.to_string(),
        algorithms: summaries,
        comparisons,
        verdict_counts: counts.to_string(),
    })
}

/// Loads `<objective>/<algorithm>/run_*.csv` under `root` for the given
/// algorithm tags, skipping algorithms without a directory.
pub fn load_curves(root: &Path, objective: &str, algorithms: &[String]) -> Result<Vec<(String, Curves)>, HarnessError> {
    let mut out = Vec::new();
    for tag in algorithms {
        let dir = root.join(objective).join(tag);
        if !dir.is_dir() {
            continue;
        }
        let mut curves = Curves::new();
        for path in trace_files(&dir)? {
            let Some(run) = run_index(&path) else { continue };
            let rows = read_trace(&path)?;
            curves.insert(run, rows.iter().map(|r| r.f_min).collect());
        }
        out.push((tag.clone(), curves));
    }
    Ok(out)
}

fn trace_files(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| HarnessError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    Ok(files)
}

/// `1.55E+03` style.
pub fn format_sci(v: f64) -> String {
    let s = format!("{v:.2E}");
    match s.split_once('E') {
        Some((m, e)) => {
            let (sign, digits) = match e.strip_prefix('-') {
                Some(d) => ('-', d),
                None => ('+', e),
            };
            format!("{m}E{sign}{digits:0>2}")
        }
        None => s,
    }
}

/// Plain-text table: one row per objective with each algorithm's mean final
/// value and its verdict against the reference, then a `+/≈/−` tally row.
/// The reference column comes last.
pub fn verdict_table(summaries: &[ObjectiveSummary]) -> String {
    let Some(first) = summaries.first() else {
        return String::new();
    };
    let reference = first.reference.clone();
    let mut columns: Vec<String> = first
        .algorithms
        .iter()
        .map(|a| a.algorithm.clone())
        .filter(|a| *a != reference)
        .collect();
    columns.push(reference.clone());
    let mut counts: Vec<VerdictCounts> = vec![VerdictCounts::default(); columns.len()];
    let mut rows: Vec<Vec<String>> = vec![std::iter::once("f".to_string()).chain(columns.iter().cloned()).collect()];
    for s in summaries {
        let mut row = vec![s.objective.clone()];
        for (k, col) in columns.iter().enumerate() {
            let mean = s.algorithm(col).and_then(|a| a.mean);
            let mut cell = mean.map(format_sci).unwrap_or_else(|| "n/a".into());
            if *col != reference {
                if let Some(c) = s.comparison(col) {
                    cell.push(' ');
                    cell.push_str(&c.symbol);
                    counts[k].add(Verdict::from_name(&c.verdict).expect("own verdict name"));
                }
            }
            row.push(cell);
        }
        rows.push(row);
    }
    let mut tally = vec!["+/≈/−".to_string()];
    for (k, col) in columns.iter().enumerate() {
        tally.push(if *col == reference { "N.A.".into() } else { counts[k].to_string() });
    }
    rows.push(tally);
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &rows {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell}{}", " ".repeat(w - cell.chars().count())))
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}
