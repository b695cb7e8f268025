//! Multi-run experiments: scheduling, persistence and reporting.
//!
//! Layout under the output directory:
//!
//! ```text
//! <objective>/<algorithm>/run_<idx>.csv   one trace per run
//! <objective>/summary.json                statistics and verdicts
//! <objective>/convergence.svg             mean best-so-far curves
//! verdicts.txt                            cross-objective verdict table
//! manifest.json                           settings, seeds and file list
//! ```

use std::path::{Path, PathBuf};

use adbo::objectives::ObjectiveSpec;
use adbo::optimizers::{run, Algorithm, OptimizerConfig};
use adbo::RngState;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::HarnessError;
use crate::plot::emit_convergence_plot;
use crate::report::{load_curves, summarize_objective, verdict_table, ObjectiveSummary};
use crate::trace_io::{rows_of, to_csv, trace_path, write_atomic};

pub const MANIFEST: &str = "manifest.json";
pub const SUMMARY: &str = "summary.json";
pub const PLOT: &str = "convergence.svg";
pub const TABLE: &str = "verdicts.txt";

/// Stream of the transforms (shift, rotation) of objective `index`.
pub fn objective_stream(index: usize) -> u64 {
    (1 << 63) | index as u64
}

/// Stream of run `run` on objective `index`; shared by every algorithm so
/// they all start from the same initial design.
pub fn run_stream(index: usize, run: usize) -> u64 {
    ((index as u64) << 32) | run as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveRecord {
    pub name: String,
    pub kind: String,
    pub dim: usize,
    pub seed: u64,
    pub stream: u64,
    pub shift: Option<Vec<f64>>,
    pub rotated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    /// Path relative to the output directory, `/`-separated.
    pub path: String,
    /// trace, summary, plot or table.
    pub kind: String,
    pub objective: Option<String>,
    pub algorithm: Option<String>,
    pub run: Option<usize>,
    pub seed: u64,
    pub stream: Option<u64>,
    /// ok or failed.
    pub status: String,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub master_seed: u64,
    pub config: ExperimentConfig,
    pub reference: String,
    pub objectives: Vec<ObjectiveRecord>,
    pub files: Vec<FileRecord>,
    pub failed_runs: usize,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self, HarnessError> {
        let path = dir.join(MANIFEST);
        let text = std::fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Usage(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug)]
pub struct ExperimentOutcome {
    pub summaries: Vec<ObjectiveSummary>,
    pub manifest: Manifest,
    pub table: String,
}

struct Job {
    objective: usize,
    algorithm: Algorithm,
    run: usize,
}

struct Planned {
    name: String,
    spec: ObjectiveSpec<f64>,
    record: ObjectiveRecord,
}

fn relative(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

fn optimizer_config(config: &ExperimentConfig, algorithm: Algorithm, spec: &ObjectiveSpec<f64>) -> OptimizerConfig<f64> {
    let mut c = OptimizerConfig::new(algorithm, config.n_init, config.n_max, spec.bounds.clone());
    c.fixed_d = config.fixed_d;
    c.d_init = config.d_init;
    c
}

fn plan(config: &ExperimentConfig) -> Result<Vec<Planned>, HarnessError> {
    config.validate()?;
    let algorithms = config.algorithms()?;
    let mut planned = Vec::new();
    for (i, o) in config.objectives.iter().enumerate() {
        let rng = RngState::new(config.master_seed, objective_stream(i));
        let spec = o.spec(config.dim, rng)?;
        let name = o.label(config.dim);
        for &a in &algorithms {
            optimizer_config(config, a, &spec)
                .validate()
                .map_err(|e| HarnessError::Usage(format!("objective '{name}', {a}: {e}")))?;
        }
        planned.push(Planned {
            record: ObjectiveRecord {
                name: name.clone(),
                kind: o.kind.clone(),
                dim: spec.dim(),
                seed: rng.seed,
                stream: rng.stream,
                shift: spec.shift.clone(),
                rotated: spec.rotation.is_some(),
            },
            name,
            spec,
        });
    }
    Ok(planned)
}

/// Runs every (objective, algorithm, run) job and writes the results.
///
/// Failed runs keep their partial trace and are listed in the manifest; the
/// remaining jobs are unaffected.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome, HarnessError> {
    let planned = plan(config)?;
    let algorithms = config.algorithms()?;
    let reference = config.reference()?;
    let root = config.output_dir.clone();
    std::fs::create_dir_all(&root).map_err(|e| HarnessError::io(&root, e))?;

    let jobs: Vec<Job> = (0..planned.len())
        .flat_map(|objective| {
            algorithms
                .iter()
                .flat_map(move |&algorithm| (0..config.runs).map(move |run| Job { objective, algorithm, run }))
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| HarnessError::Run(format!("cannot start worker pool: {e}")))?;
    let records: Vec<Result<FileRecord, HarnessError>> = pool.install(|| {
        jobs.par_iter()
            .map(|job| execute(config, &root, &planned[job.objective], job))
            .collect()
    });
    let mut files = Vec::with_capacity(records.len());
    for r in records {
        files.push(r?);
    }
    let failed_runs = files.iter().filter(|f| f.status != "ok").count();

    let tags: Vec<String> = algorithms.iter().map(|a| a.tag().to_string()).collect();
    let mut summaries = Vec::new();
    for p in &planned {
        let s = summarize_objective(&p.name, reference.tag(), config.alpha, &load_curves(&root, &p.name, &tags)?)?;
        let path = root.join(&p.name).join(SUMMARY);
        write_atomic(&path, s.to_json().as_bytes())?;
        files.push(aggregate_record(&root, &path, "summary", Some(&p.name), config.master_seed));
        let curves: Vec<(String, Vec<f64>)> = s
            .algorithms
            .iter()
            .filter(|a| !a.mean_curve.is_empty())
            .map(|a| (a.algorithm.clone(), a.mean_curve.clone()))
            .collect();
        if !curves.is_empty() {
            let path = root.join(&p.name).join(PLOT);
            emit_convergence_plot(&p.name, &curves, &path)?;
            files.push(aggregate_record(&root, &path, "plot", Some(&p.name), config.master_seed));
        }
        summaries.push(s);
    }
    let table = verdict_table(&summaries);
    let path = root.join(TABLE);
    write_atomic(&path, table.as_bytes())?;
    files.push(aggregate_record(&root, &path, "table", None, config.master_seed));

    let manifest = Manifest {
        master_seed: config.master_seed,
        config: config.clone(),
        reference: reference.tag().to_string(),
        objectives: planned.into_iter().map(|p| p.record).collect(),
        files,
        failed_runs,
    };
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    json.push('\n');
    write_atomic(&root.join(MANIFEST), json.as_bytes())?;
    Ok(ExperimentOutcome {
        summaries,
        manifest,
        table,
    })
}

fn aggregate_record(root: &Path, path: &Path, kind: &str, objective: Option<&str>, seed: u64) -> FileRecord {
    FileRecord {
        path: relative(root, path),
        kind: kind.into(),
        objective: objective.map(str::to_string),
        algorithm: None,
        run: None,
        seed,
        stream: None,
        status: "ok".into(),
        error: None,
    }
}

fn execute(config: &ExperimentConfig, root: &Path, p: &Planned, job: &Job) -> Result<FileRecord, HarnessError> {
    let rng = RngState::new(config.master_seed, run_stream(job.objective, job.run));
    let path = trace_path(root, &p.name, job.algorithm.tag(), job.run);
    let opt = optimizer_config(config, job.algorithm, &p.spec);
    let (trace, error) = match p.spec.build() {
        Ok(mut objective) => match run(objective.as_mut(), &opt, rng) {
            Ok(trace) => (Some(trace), None),
            Err(e) => (Some(*e.partial), Some(e.source.to_string())),
        },
        Err(e) => (None, Some(e.to_string())),
    };
    if let Some(trace) = &trace {
        write_atomic(&path, &to_csv(&rows_of(trace))?)?;
    }
    Ok(FileRecord {
        path: relative(root, &path),
        kind: "trace".into(),
        objective: Some(p.name.clone()),
        algorithm: Some(job.algorithm.tag().into()),
        run: Some(job.run),
        seed: rng.seed,
        stream: Some(rng.stream),
        status: if error.is_none() { "ok" } else { "failed" }.into(),
        error,
    })
}

/// Recomputes the summaries of a finished experiment from its trace files.
///
/// Objective names, algorithm order, reference and alpha come from the
/// manifest when present; `reference` and `alpha` override them. Without a
/// manifest every sub-directory holding algorithm directories is treated as
/// an objective.
pub fn compare(dir: &Path, reference: Option<&str>, alpha: Option<f64>) -> Result<Vec<ObjectiveSummary>, HarnessError> {
    let manifest = if dir.join(MANIFEST).is_file() { Some(Manifest::load(dir)?) } else { None };
    let (objectives, tags, default_reference, default_alpha) = match &manifest {
        Some(m) => (
            m.objectives.iter().map(|o| o.name.clone()).collect::<Vec<_>>(),
            m.config.algorithms.clone(),
            m.reference.clone(),
            m.config.alpha,
        ),
        None => discover(dir)?,
    };
    let reference = reference.map(str::to_string).unwrap_or(default_reference);
    let alpha = alpha.unwrap_or(default_alpha);
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(HarnessError::Usage(format!("alpha {alpha} outside (0, 1)")));
    }
    if objectives.is_empty() {
        return Err(HarnessError::Usage(format!("no trace files under {}", dir.display())));
    }
    objectives
        .iter()
        .map(|o| summarize_objective(o, &reference, alpha, &load_curves(dir, o, &tags)?))
        .collect()
}

type Discovered = (Vec<String>, Vec<String>, String, f64);

fn discover(dir: &Path) -> Result<Discovered, HarnessError> {
    let subdirs = |d: &Path| -> Result<Vec<PathBuf>, HarnessError> {
        let mut v: Vec<PathBuf> = std::fs::read_dir(d)
            .map_err(|e| HarnessError::io(d, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir())
            .collect();
        v.sort();
        Ok(v)
    };
    let mut objectives = Vec::new();
    let mut seen: Vec<Algorithm> = Vec::new();
    for o in subdirs(dir)? {
        let algs: Vec<Algorithm> = subdirs(&o)?
            .iter()
            .filter_map(|p| p.file_name()?.to_str()?.parse().ok())
            .collect();
        if algs.is_empty() {
            continue;
        }
        seen.extend(algs);
        objectives.push(o.file_name().unwrap_or_default().to_string_lossy().into_owned());
    }
    let tags: Vec<String> = Algorithm::ALL
        .iter()
        .filter(|a| seen.contains(a))
        .map(|a| a.tag().to_string())
        .collect();
    let reference = if seen.contains(&Algorithm::AdaDropout) {
        Algorithm::AdaDropout.tag().to_string()
    } else {
        tags.first().cloned().unwrap_or_default()
    };
    Ok((objectives, tags, reference, 0.05))
}
