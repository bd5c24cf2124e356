//! Batch front-end: one JSON job file in, a directory of artifacts out.
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure (with a
//! diagnostic JSON in the output directory).

mod jobs;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "cutlocus", about = "cut loci, split loci and HJ boundary value problems")]
struct Cli {
    /// JSON job file describing the manifold, command and parameters.
    #[arg(long)]
    job: Option<PathBuf>,

    /// Output directory for artifacts (created if missing).
    #[arg(long, default_value = "out", global = true)]
    out: PathBuf,

    /// Worker threads (falls back to CUTLOCUS_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Integrator tolerance override.
    #[arg(long)]
    tol: Option<f64>,

    /// Minimizer tie window override.
    #[arg(long)]
    epsilon_min: Option<f64>,

    #[command(subcommand)]
    command: Option<Direct>,
}

#[derive(Subcommand)]
enum Direct {
    /// Root analysis of the umbilic alignment cubics without a job file.
    D4Roots {
        #[arg(long)]
        kind: String,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let threads = cli
        .threads
        .or_else(|| std::env::var("CUTLOCUS_THREADS").ok().and_then(|s| s.parse().ok()));
    if let Some(n) = threads {
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            eprintln!("warning: thread pool already initialized");
        }
    }

    if let Err(e) = std::fs::create_dir_all(&cli.out) {
        eprintln!("cannot create output directory: {e}");
        return ExitCode::from(2);
    }

    let result = match (&cli.command, &cli.job) {
        (Some(Direct::D4Roots { kind, a, b }), _) => {
            jobs::run_d4_roots(kind, *a, *b, &cli.out)
        }
        (None, Some(job_path)) => jobs::run_job_file(
            job_path,
            &cli.out,
            jobs::Overrides { tol: cli.tol, epsilon_min: cli.epsilon_min },
        ),
        (None, None) => {
            eprintln!("either --job <file> or a subcommand is required");
            return ExitCode::from(2);
        }
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(jobs::JobError::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(jobs::JobError::Numerical(msg)) => {
            let diag = serde_json::json!({ "error": msg });
            let _ = std::fs::write(
                cli.out.join("error.json"),
                serde_json::to_string_pretty(&diag).unwrap(),
            );
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}
