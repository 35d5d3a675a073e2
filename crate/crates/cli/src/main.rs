//! `fairmiss` command-line runner. Log verbosity comes from `RUST_LOG`.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fairmiss::data::write_csv;
use fairmiss::harness::{format_params, run_experiment, theorem1_report, ExperimentConfig, RunResult};
use fairmiss::missingness::gen_synthetic;

#[derive(Parser)]
#[command(name = "fairmiss", version, about = "Fair classification with missing values")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write raw, summary and pareto CSVs.
    Run { config: PathBuf },
    /// Parse and check a config without running it.
    Validate { config: PathBuf },
    /// Exact fairness-accuracy loss from imputation on the three-point construction.
    Theorem1 {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 0.5)]
        q0: f64,
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
    },
    /// Write the two-feature synthetic dataset as CSV.
    Synthetic {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn print_summary(result: &RunResult) {
    if !result.theorem1.is_empty() {
        for r in &result.theorem1 {
            println!("{r}\n");
        }
        return;
    }
    println!("method {}: {} grid points, {} failed jobs", result.method, result.grid.len(), result.failures.len());
    println!("{:>5}  {:>9}  {:>9}  params", "point", "accuracy", "meo");
    for g in 0..result.grid.len() {
        let mark = if result.pareto.contains(&g) { "*" } else { " " };
        match (result.mean(g, "accuracy"), result.mean(g, "meo")) {
            (Some(a), Some(m)) => println!("{g:>4}{mark}  {a:>9.4}  {m:>9.4}  {}", format_params(&result.grid[g])),
            _ => println!("{g:>4}   {:>9}  {:>9}  {}", "-", "-", format_params(&result.grid[g])),
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, fairmiss::Error> {
    match cli.command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let result = run_experiment(&cfg)?;
            print_summary(&result);
            if let Some(dir) = &cfg.output {
                println!("outputs written to {}", dir.display());
            }
            Ok(if result.succeeded() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            cfg.validate()?;
            let points = fairmiss::harness::grid_points(&cfg.sweep).len();
            println!("ok: {} with {points} grid points x {} repeats", cfg.method.kind.name(), cfg.sweep.repeats);
            Ok(ExitCode::SUCCESS)
        }
        Command::Theorem1 { alpha, q0, epsilon } => {
            println!("{}", theorem1_report(alpha, q0, epsilon)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Synthetic { seed, out } => {
            let file = File::create(&out).map_err(|source| fairmiss::Error::Io { path: out.clone(), source })?;
            write_csv(&gen_synthetic(seed), BufWriter::new(file))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            log::error!("{e}");
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
