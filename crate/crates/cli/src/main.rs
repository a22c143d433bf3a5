//! `bosepath` command-line entry point.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use bosepath::Error;
use clap::{Args, Parser, Subcommand};

use config::{Diagnostic, Problem};

const EXIT_OTHER: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;
const EXIT_BUDGET: u8 = 4;

#[derive(Parser)]
#[command(name = "bosepath", version, about = "Variational solvers and path samplers for trapped bosons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solver, sampler or sweep.
    #[command(flatten)]
    Run(RunCommand),
    /// Check a config without computing anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
        /// problem to check against when the config has no `problem` key
        #[arg(long)]
        problem: Option<Problem>,
    },
}

#[derive(Subcommand)]
enum RunCommand {
    /// Gross-Pitaevskii ground state
    Gp(RunArgs),
    /// Hartree product-state minimizer
    Hartree(RunArgs),
    /// N-body ground state on the product grid
    Canonical(RunArgs),
    /// Scattering length in d = 2 or 3
    Scattering(RunArgs),
    /// Lattice-walk canonical model at one beta
    McCanonical(RunArgs),
    /// Brownian-path Hartree model at one beta
    McHartree(RunArgs),
    /// Continuous-time walks with Dirac interaction at one beta
    RwDirac(RunArgs),
    /// Large-N product-state sweep against the GP energy
    SweepLargeN(RunArgs),
    /// Beta ladder for the canonical or Hartree model
    SweepBeta(RunArgs),
    /// Lambda and beta ladder for the Dirac walk model
    SweepLambda(RunArgs),
    /// Variational and scattering inequalities on a list of instances
    ReportInequalities(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// output directory; falls back to `out` in the config
    #[arg(long)]
    out: Option<PathBuf>,
    /// worker threads for module-internal parallelism
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    seed_override: Option<u64>,
}

impl RunCommand {
    fn split(self) -> (Problem, RunArgs) {
        use RunCommand::*;
        match self {
            Gp(a) => (Problem::Gp, a),
            Hartree(a) => (Problem::Hartree, a),
            Canonical(a) => (Problem::Canonical, a),
            Scattering(a) => (Problem::Scattering, a),
            McCanonical(a) => (Problem::McCanonical, a),
            McHartree(a) => (Problem::McHartree, a),
            RwDirac(a) => (Problem::RwDirac, a),
            SweepLargeN(a) => (Problem::SweepLargeN, a),
            SweepBeta(a) => (Problem::SweepBeta, a),
            SweepLambda(a) => (Problem::SweepLambda, a),
            ReportInequalities(a) => (Problem::ReportInequalities, a),
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidParameter(_)
        | Error::GridMismatch(_)
        | Error::Domain(_)
        | Error::Precondition(_)
        | Error::Degenerate(_)
        | Error::InfiniteAlpha(_)
        | Error::ClassificationIndeterminate(_) => EXIT_CONFIG,
        Error::NotConverged(_)
        | Error::Stalled(_)
        | Error::InnerSolver(_)
        | Error::MonotonicityViolation(_)
        | Error::NotInLogRegime(_)
        | Error::ScatteringInconsistency(_)
        | Error::LadderTooCoarse(_) => EXIT_NOT_CONVERGED,
        Error::TooLarge(_) | Error::RefineGrid(_) => EXIT_BUDGET,
        Error::Io(_) => EXIT_OTHER,
    }
}

fn report(diags: &[Diagnostic]) {
    for d in diags {
        eprintln!("{d}");
    }
}

fn validate(path: &Path, problem: Option<Problem>) -> ExitCode {
    let cfg = match config::load(path) {
        Ok((c, _)) => c,
        Err(d) => {
            println!("{d}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let Some(problem) = problem.or(cfg.problem) else {
        println!("schema: missing `problem` (or pass --problem)");
        return ExitCode::from(EXIT_CONFIG);
    };
    let diags = config::validate(problem, &cfg);
    for d in &diags {
        println!("{d}");
    }
    if diags.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CONFIG)
    }
}

fn run(problem: Problem, args: RunArgs) -> ExitCode {
    let started = Instant::now();
    let (mut cfg, text) = match config::load(&args.config) {
        Ok(x) => x,
        Err(d) => {
            report(&[d]);
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(s) = args.seed_override {
        cfg.seed = s;
    }
    let diags = config::validate(problem, &cfg);
    if !diags.is_empty() {
        report(&diags);
        return ExitCode::from(EXIT_CONFIG);
    }
    let Some(out_dir) = args.out.clone().or_else(|| cfg.out.clone()) else {
        eprintln!("schema: no output directory (pass --out or set `out`)");
        return ExitCode::from(EXIT_CONFIG);
    };
    let threads = args.threads.unwrap_or(1).max(1);
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
        eprintln!("cannot start thread pool: {e}");
        return ExitCode::from(EXIT_OTHER);
    }
    let outcome = match commands::run(problem, &cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{problem}: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let manifest = output::RunManifest {
        tool: "bosepath".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        problem: problem.to_string(),
        config_sha256: output::sha256_hex(text.as_bytes()),
        seed: cfg.seed,
        threads,
        wall_time_s: started.elapsed().as_secs_f64(),
        files: Vec::new(),
        headline: outcome.headline.clone(),
    };
    match output::emit(&out_dir, &outcome, manifest) {
        Ok(path) => {
            for (k, v) in &outcome.headline {
                println!("{k} = {v:.12e}");
            }
            println!("manifest: {}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("cannot write {}: {e}", out_dir.display());
            ExitCode::from(EXIT_OTHER)
        }
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Validate { config, problem } => validate(&config, problem),
        Command::Run(r) => {
            let (p, a) = r.split();
            run(p, a)
        }
    }
}
