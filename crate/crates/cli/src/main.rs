mod instance;
mod output;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use l0solve::path::{fit_path, lambda_max};
use l0solve::{solve_with, Exploration, Problem, Progress, SolverOptions, Status};
use log::{info, LevelFilter};

use instance::Instance;
use output::{format_scalar, OptionsEcho, PathFile, SolveRecord};

#[derive(Parser)]
#[command(name = "l0solve", version, about = "Exact solver for l0-regularized problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the instance at its `lmbd`.
    Solve {
        instance: PathBuf,
        #[command(flatten)]
        flags: SolveFlags,
    },
    /// Solve along a decreasing grid of lambda values.
    Path {
        instance: PathBuf,
        #[arg(long)]
        lmbd_ratio_min: Option<f64>,
        #[arg(long)]
        lmbd_ratio_max: Option<f64>,
        #[arg(long)]
        lmbd_num: Option<usize>,
        /// Add the lambda of lowest BIC to the output.
        #[arg(long)]
        select_bic: bool,
        #[command(flatten)]
        flags: SolveFlags,
    },
    /// Print the smallest lambda known to give the zero solution.
    Lmax {
        instance: PathBuf,
        #[arg(short, long, action = clap::ArgAction::Count)]
        verbose: u8,
    },
}

#[derive(Args)]
struct SolveFlags {
    /// Write the result here instead of standard output.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-8)]
    rel_gap_tol: f64,
    #[arg(long, default_value_t = 1e-8)]
    inner_tol: f64,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    node_limit: Option<u64>,
    #[arg(long, default_value = "best-first")]
    exploration: Exploration,
    #[arg(long)]
    no_screening: bool,
    #[arg(long)]
    no_simultaneous_pruning: bool,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// -v logs progress, -vv adds debug detail.
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

impl SolveFlags {
    fn options(&self) -> Result<SolverOptions> {
        let time_limit = match self.time_limit {
            None => None,
            Some(t) if t.is_finite() && t >= 0.0 => Some(Duration::from_secs_f64(t)),
            Some(t) => bail!("--time-limit must be a nonnegative number of seconds, got {t}"),
        };
        let opts = SolverOptions {
            rel_gap_tol: self.rel_gap_tol,
            inner_tol: self.inner_tol,
            node_limit: self.node_limit,
            time_limit,
            exploration: self.exploration,
            enable_simultaneous_pruning: !self.no_simultaneous_pruning,
            enable_screening: !self.no_screening,
            workers: self.workers,
        };
        opts.validate()?;
        Ok(opts)
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.output {
            Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
            None => {
                let mut out = std::io::stdout().lock();
                writeln!(out, "{text}")?;
                Ok(())
            }
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => LevelFilter::Warn,
        1 => LevelFilter::Info,
        _ => LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
}

/// Logs a progress line at most once per second.
fn progress_logger() -> impl Fn(&Progress) + Sync {
    let last = Mutex::new(Instant::now());
    move |p: &Progress| {
        let mut last = last.lock().unwrap();
        if last.elapsed() >= Duration::from_secs(1) {
            *last = Instant::now();
            info!(
                "nodes {} queue {} lower {:.6e} upper {:.6e}",
                p.node_count, p.queue_size, p.global_lower, p.incumbent_value
            );
        }
    }
}

fn exit_for(status: Status) -> ExitCode {
    match status {
        Status::Optimal => ExitCode::SUCCESS,
        Status::NodeLimit | Status::TimeLimit => ExitCode::from(2),
    }
}

fn cmd_solve(path: &PathBuf, flags: &SolveFlags) -> Result<ExitCode> {
    let opts = flags.options()?;
    let inst = Instance::load(path)?;
    let Some(lmbd) = inst.lmbd else {
        bail!("{}: the solve command needs an 'lmbd' field", path.display());
    };
    let problem = Problem::from_data(inst.data, lmbd)?;
    info!("solving m={} n={} lmbd={lmbd:e}", problem.m(), problem.n());
    let logger = progress_logger();
    let result = solve_with(&problem, &opts, None, Some(&logger))?;
    info!(
        "{} after {} nodes, objective {:.6e}, gap {:.2e}",
        result.status, result.node_count, result.objective, result.rel_gap
    );
    let record = SolveRecord {
        options: Some(OptionsEcho::from(&opts)),
        ..SolveRecord::new(lmbd, &result)
    };
    flags.emit(&serde_json::to_string_pretty(&record)?)?;
    Ok(exit_for(result.status))
}

fn cmd_path(
    path: &PathBuf,
    ratio_min: Option<f64>,
    ratio_max: Option<f64>,
    num: Option<usize>,
    select: bool,
    flags: &SolveFlags,
) -> Result<ExitCode> {
    let opts = flags.options()?;
    let inst = Instance::load(path)?;
    let spec = inst.path_spec(ratio_min, num, ratio_max);
    let result = fit_path(&inst.data, &spec, &opts)?;
    for e in &result.entries {
        info!(
            "lmbd {:.6e}: {} nnz {} objective {:.6e} ({} nodes)",
            e.lmbd,
            e.result.status,
            e.result.x_opt.nnz(),
            e.result.objective,
            e.result.node_count
        );
    }
    let file = PathFile::new(&result, &inst.data, &opts, select);
    flags.emit(&serde_json::to_string_pretty(&file)?)?;
    let worst = result
        .entries
        .iter()
        .map(|e| e.result.status)
        .find(|s| *s != Status::Optimal)
        .unwrap_or(Status::Optimal);
    Ok(exit_for(worst))
}

fn cmd_lmax(path: &PathBuf) -> Result<ExitCode> {
    let inst = Instance::load(path)?;
    let value = lambda_max(&inst.data)?;
    println!("{}", format_scalar(value));
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    // usage errors exit 1 like every other input error; 2 means a limit was hit
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let verbose = match &cli.command {
        Command::Solve { flags, .. } | Command::Path { flags, .. } => flags.verbose,
        Command::Lmax { verbose, .. } => *verbose,
    };
    init_logging(verbose);
    let outcome = match &cli.command {
        Command::Solve { instance, flags } => cmd_solve(instance, flags),
        Command::Path {
            instance,
            lmbd_ratio_min,
            lmbd_ratio_max,
            lmbd_num,
            select_bic,
            flags,
        } => cmd_path(instance, *lmbd_ratio_min, *lmbd_ratio_max, *lmbd_num, *select_bic, flags),
        Command::Lmax { instance, .. } => cmd_lmax(instance),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
