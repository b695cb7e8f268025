use std::path::PathBuf;
use std::process::ExitCode;

use adbo_harness::demo::{run_demo, DemoOptions};
use adbo_harness::report::verdict_table;
use adbo_harness::{compare, run_experiment, ExperimentConfig, HarnessError};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "adbo", version, about = "Bayesian optimization with adaptive coordinate dropout")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute an experiment described by a TOML config file.
    Run(RunArgs),
    /// Plot the GP fit and EI curve of the one-dimensional demo function.
    Demo(DemoArgs),
    /// Recompute summaries and verdicts from existing trace files.
    Compare(CompareArgs),
    /// Run the built-in oracle checks.
    Validate(ValidateArgs),
}

#[derive(Args)]
#[command(rename_all = "snake_case")]
struct RunArgs {
    /// Experiment config file.
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated algorithm tags.
    #[arg(long, value_delimiter = ',')]
    algorithms: Option<Vec<String>>,
    #[arg(long)]
    reference: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    n_init: Option<usize>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    master_seed: Option<u64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    fixed_d: Option<usize>,
    #[arg(long)]
    d_init: Option<usize>,
}

#[derive(Args)]
#[command(rename_all = "snake_case")]
struct DemoArgs {
    #[arg(long, default_value = "demo")]
    output_dir: PathBuf,
    #[arg(long, default_value_t = 7)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
#[command(rename_all = "snake_case")]
struct CompareArgs {
    /// Output directory of a previous `run`.
    dir: PathBuf,
    #[arg(long)]
    reference: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Write the recomputed summaries to this directory instead of printing them.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[command(rename_all = "snake_case")]
struct ValidateArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn apply_overrides(c: &mut ExperimentConfig, a: RunArgs) {
    if let Some(v) = a.algorithms {
        c.algorithms = v;
    }
    if a.reference.is_some() {
        c.reference = a.reference;
    }
    macro_rules! set {
        ($($f:ident),*) => { $( if let Some(v) = a.$f { c.$f = v; } )* };
    }
    set!(dim, n_init, n_max, runs, master_seed, output_dir, workers, alpha, fixed_d);
    if a.d_init.is_some() {
        c.d_init = a.d_init;
    }
}

fn execute(cli: Cli) -> Result<ExitCode, HarnessError> {
    match cli.command {
        Command::Run(args) => {
            let mut config = ExperimentConfig::load(&args.config)?;
            apply_overrides(&mut config, args);
            let outcome = run_experiment(&config)?;
            print!("{}", outcome.table);
            println!("results written to {}", config.output_dir.display());
            if outcome.manifest.failed_runs > 0 {
                for f in outcome.manifest.files.iter().filter(|f| f.status != "ok") {
                    eprintln!("failed: {} ({})", f.path, f.error.as_deref().unwrap_or("unknown error"));
                }
                return Err(HarnessError::Run(format!("{} run(s) failed", outcome.manifest.failed_runs)));
            }
        }
        Command::Demo(args) => {
            let options = DemoOptions {
                samples: args.samples,
                seed: args.seed,
                ..DemoOptions::default()
            };
            let out = run_demo(&args.output_dir, &options)?;
            println!("length scale {:.4}", out.model.length_scale());
            for f in &out.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Compare(args) => {
            let summaries = compare(&args.dir, args.reference.as_deref(), args.alpha)?;
            match &args.out {
                Some(out) => {
                    for s in &summaries {
                        let path = out.join(&s.objective).join(adbo_harness::experiment::SUMMARY);
                        adbo_harness::trace_io::write_atomic(&path, s.to_json().as_bytes())?;
                        println!("wrote {}", path.display());
                    }
                }
                None => {
                    for s in &summaries {
                        print!("{}", s.to_json());
                    }
                }
            }
            print!("{}", verdict_table(&summaries));
        }
        Command::Validate(args) => {
            let checks = adbo::validation::run_all(args.seed);
            let mut ok = true;
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                ok &= c.passed;
            }
            if !ok {
                return Err(HarnessError::Run("validation failed".into()));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
