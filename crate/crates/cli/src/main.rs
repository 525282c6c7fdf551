use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use qdini::{
    budget_from_env, builtin_names, inequality_fuzz, load_target, run_scenario, suite_names, CliError, RunOptions,
};
use qdini_core::Execution;

#[derive(Parser)]
#[command(name = "qdini", version, about = "Convergence diagnostics for entropic functionals of quantum states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file, or a registered scenario as `builtin:NAME`.
    Run {
        target: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Override the window length of every check.
        #[arg(long)]
        n_max: Option<usize>,
        /// Override the truncation window of every check.
        #[arg(long)]
        m_max: Option<usize>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Disable data parallelism.
        #[arg(long)]
        sequential: bool,
    },
    /// Check inequalities on random instances.
    Fuzz {
        /// Suite name, or `all`.
        #[arg(long)]
        suite: String,
        /// Largest dimension drawn; bipartite factors stay at most 4.
        #[arg(long, default_value_t = 6)]
        dim: usize,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        sequential: bool,
    },
    /// Run a registered scenario with default settings.
    Demo { name: String },
    /// List registered scenarios and fuzz suites.
    List,
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

#[cfg(feature = "parallel")]
fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("QDINI_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("QDINI_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot configure {n} threads: {e}")))
}

#[cfg(not(feature = "parallel"))]
fn configure_threads() -> Result<(), CliError> {
    Ok(())
}

fn emit(out: Option<&PathBuf>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, bytes)?,
        None => io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn run(target: &str, seed: u64, opts: RunOptions, out: Option<&PathBuf>, format: Format) -> Result<bool, CliError> {
    let started = Instant::now();
    let scenario = load_target(target)?;
    let report = run_scenario(&scenario, seed, &opts)?;
    let bytes = match format {
        Format::Json => report.to_json()?.into_bytes(),
        Format::Csv => {
            let mut buf = Vec::new();
            report.write_csv(&mut buf)?;
            buf
        }
    };
    emit(out, &bytes)?;
    for c in &report.checks {
        let mark = if c.matched { "ok" } else { "MISMATCH" };
        eprintln!("{mark:>8}  {}  expected {}, observed {}", c.label, c.expected.as_str(), c.observed.as_str());
    }
    eprintln!(
        "{}: {}/{} checks matched in {:.2}s",
        report.scenario,
        report.summary.matched,
        report.summary.checks,
        started.elapsed().as_secs_f64()
    );
    Ok(report.all_matched())
}

fn fuzz(
    suite: &str,
    dim: usize,
    trials: u64,
    seed: u64,
    exec: Execution,
    out: Option<&PathBuf>,
) -> Result<bool, CliError> {
    let started = Instant::now();
    let report = inequality_fuzz(suite, dim, trials, seed, exec)?;
    emit(out, report.to_json()?.as_bytes())?;
    for s in &report.inequalities {
        eprintln!(
            "{:>4}  [{}] {}  ({} evaluated, {} vacuous, min slack {:e})",
            if s.violations == 0 { "ok" } else { "FAIL" },
            s.suite,
            s.inequality,
            s.evaluated,
            s.vacuous,
            s.min_slack
        );
    }
    eprintln!("{} violations in {:.2}s", report.violations, started.elapsed().as_secs_f64());
    Ok(report.passed)
}

fn dispatch(cli: Cli) -> Result<bool, CliError> {
    configure_threads()?;
    let budget = budget_from_env()?;
    match cli.command {
        Command::Run { target, seed, n_max, m_max, out, format, sequential } => {
            let opts = RunOptions { n_max, m_max, exec: execution(sequential), budget };
            run(&target, seed, opts, out.as_ref(), format)
        }
        Command::Fuzz { suite, dim, trials, seed, out, sequential } => {
            fuzz(&suite, dim, trials, seed, execution(sequential), out.as_ref())
        }
        Command::Demo { name } => {
            let opts = RunOptions { budget, ..RunOptions::default() };
            run(&format!("builtin:{name}"), 0, opts, None, Format::Json)
        }
        Command::List => {
            println!("builtin scenarios:");
            for name in builtin_names() {
                println!("  builtin:{name}");
            }
            println!("fuzz suites:");
            for name in suite_names() {
                println!("  {name}");
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
