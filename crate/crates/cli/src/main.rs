//! Command-line interface for the two-phase free-boundary flow solver.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use interflow_cli::config::load_config;
use interflow_cli::export::export_series;
use interflow_cli::probes::{probe_norms, probe_smallness};
use interflow_cli::run::{check, print_compat, run, EXIT_CONFIG, EXIT_INCOMPATIBLE};

#[derive(Parser)]
#[command(name = "interflow", version, about = "Two-phase free-boundary flow on a flattened strip")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a configuration and check the initial-data compatibility
    /// conditions without solving.
    Check { config: PathBuf },
    /// Run the full pipeline: compatibility check, Picard solve,
    /// diagnostics, artifacts.
    Run { config: PathBuf },
    /// Re-emit a run artifact in another delimiter format.
    Export {
        run_dir: PathBuf,
        quantity: String,
        #[arg(long, default_value = "tsv")]
        format: String,
    },
    /// Measure the superlinear decay of the nonlinear remainder near zero.
    ProbeSmallness {
        config: PathBuf,
        #[arg(long, default_value = "5")]
        directions: usize,
        #[arg(long, default_value = "0.1,0.03,0.01")]
        eps: String,
        #[arg(long, default_value = "1")]
        seed: u64,
    },
    /// Measure multiplication-algebra constants over a random ensemble.
    ProbeNorms {
        config: PathBuf,
        #[arg(long, default_value = "100")]
        pairs: usize,
        #[arg(long, default_value = "1")]
        seed: u64,
    },
}

fn init_threads() {
    if let Ok(v) = std::env::var("INTERFLOW_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn load_or_exit(path: &PathBuf) -> Result<interflow_cli::config::RunConfig, ExitCode> {
    match load_config(path) {
        Ok(cfg) => Ok(cfg),
        Err(violations) => {
            eprintln!("configuration rejected:");
            for v in violations {
                eprintln!("  - {v}");
            }
            Err(ExitCode::from(EXIT_CONFIG as u8))
        }
    }
}

fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    match cli.command {
        Command::Check { config } => {
            let cfg = match load_or_exit(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            match check(&cfg) {
                Ok(report) => {
                    print_compat(&report);
                    if report.passes() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(EXIT_INCOMPATIBLE as u8)
                    }
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(EXIT_CONFIG as u8)
                }
            }
        }
        Command::Run { config } => {
            let cfg = match load_or_exit(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            match run(&cfg) {
                Ok(outcome) => {
                    println!("artifacts in {}", outcome.dir.display());
                    ExitCode::from(outcome.exit_code as u8)
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(1)
                }
            }
        }
        Command::Export { run_dir, quantity, format } => {
            match export_series(&run_dir, &quantity, &format) {
                Ok(path) => {
                    println!("{}", path.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(1)
                }
            }
        }
        Command::ProbeSmallness { config, directions, eps, seed } => {
            let cfg = match load_or_exit(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let epsilons: Vec<f64> =
                eps.split(',').filter_map(|s| s.trim().parse().ok()).collect();
            if epsilons.len() < 2 {
                eprintln!("need at least two epsilon values");
                return ExitCode::from(EXIT_CONFIG as u8);
            }
            match probe_smallness(&cfg, &epsilons, directions, seed) {
                Ok(reports) => {
                    for (i, r) in reports.iter().enumerate() {
                        match r.slope {
                            Some(s) => println!("direction {i}: slope {s:.4} norms {:?}", r.norms),
                            None => println!("direction {i}: degenerate (zero remainder)"),
                        }
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(1)
                }
            }
        }
        Command::ProbeNorms { config, pairs, seed } => {
            let cfg = match load_or_exit(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            match probe_norms(&cfg, pairs, seed) {
                Ok(r) => {
                    println!("pairs: {}", r.ratios.len());
                    println!(
                        "max multiplication constant (bounded space): {:.6}",
                        r.max_tilde_algebra
                    );
                    println!("max multiplication constant (mixed):         {:.6}", r.max_mixed);
                    println!(
                        "min composition-bound margin:                {:.6e}",
                        r.min_composition_margin
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(1)
                }
            }
        }
    }
}
