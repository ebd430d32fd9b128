use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ice_core::experiment::{
    cmd_optimize_with, cmd_sample_dist, cmd_simulate, cmd_steady, load_config, Experiment,
    DISTRIBUTION_CSV,
};
use ice_core::Error;

const EXIT_THRESHOLD_MISSED: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

/// Incoherent control by the environment: simulate, solve and optimize
/// environment-driven open quantum systems.
#[derive(Parser)]
#[command(name = "ice", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate from the initial state under a fixed distribution.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the genetic algorithm over the environment distribution.
    Optimize {
        config: PathBuf,
        /// Exit 0 only if the best objective ends below this value.
        #[arg(long, default_value_t = 0.05)]
        success_threshold: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve for the invariant state and print the null-space report.
    Steady { config: PathBuf },
    /// Sample the fixed distribution onto the configured k grid.
    SampleDist {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Validation(String),
    Numerical(String),
    ThresholdMissed,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

fn load(path: &PathBuf, out: Option<PathBuf>) -> Result<Experiment, Failure> {
    let exp = load_config(path).map_err(|e| match e {
        Error::Io(io) => Failure::Validation(format!("{}: {io}", path.display())),
        other => other.into(),
    })?;
    Ok(match out {
        Some(dir) => exp.with_output_dir(dir),
        None => exp,
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate { config, out } => {
            let exp = load(&config, out)?;
            let report = cmd_simulate(&exp)?;
            println!("final time: {:.6}", report.final_time);
            println!("converged: {}", report.converged);
            println!("final populations: {:?}", report.final_state.populations());
            if let Some(j) = report.final_j {
                println!("final J vs target: {j:.6e}");
            }
            println!("artifacts: {}", exp.output_dir().display());
        }
        Command::Optimize {
            config,
            success_threshold,
            seed,
            out,
        } => {
            let mut exp = load(&config, out)?;
            if let Some(seed) = seed {
                exp = exp.with_seed(seed)?;
            }
            let report = cmd_optimize_with(&exp, |s| {
                if s.generation % 10 == 0 {
                    eprintln!(
                        "generation {:>4}  best J {:.6e}  avg J {:.6e}",
                        s.generation, s.best, s.average
                    );
                }
            })?;
            let j = report.best_objective();
            println!("best J: {j:.6e}");
            println!("steady-state populations: {:?}", report.summary.populations);
            println!("artifacts: {}", exp.output_dir().display());
            if j.is_nan() || j >= success_threshold {
                eprintln!("best J {j:.6e} did not reach the success threshold {success_threshold}");
                return Err(Failure::ThresholdMissed);
            }
        }
        Command::Steady { config } => {
            let exp = load(&config, None)?;
            let report = cmd_steady(&exp)?;
            print!("{}", report.render());
            if report.state.is_none() {
                return Err(Failure::Numerical(format!(
                    "steady state is not unique (null-space dimension {})",
                    report.gap.null_dim
                )));
            }
        }
        Command::SampleDist { config, out } => {
            let exp = load(&config, out)?;
            let samples = cmd_sample_dist(&exp)?;
            println!(
                "wrote {} samples to {}",
                samples.len(),
                exp.output_dir().join(DISTRIBUTION_CSV).display()
            );
        }
    }
    Ok(())
}

fn thread_pool() -> Result<rayon::ThreadPool, Failure> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("ICE_THREADS") {
        let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            Failure::Validation(format!("ICE_THREADS must be a positive integer, got `{v}`"))
        })?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Failure::Numerical(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = thread_pool().and_then(|pool| pool.install(|| run(cli)));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::ThresholdMissed) => ExitCode::from(EXIT_THRESHOLD_MISSED),
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}
