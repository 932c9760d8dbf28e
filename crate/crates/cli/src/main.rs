use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use majorant_core::experiment::{calibrate_case, parse_config, run_sweep, write_outputs, DEFAULT_CALIBRATION_LEVELS};
use majorant_core::mesh::{build_uniform_mesh, Rectangle};
use majorant_core::verification::{discrete_lambda1, SolveOptions};

const EXIT_USAGE: u8 = 1;
const EXIT_VIOLATION: u8 = 2;

#[derive(Parser)]
#[command(name = "majorant", version, about = "Guaranteed error majorants for diffusion-reaction problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep described by a TOML config and write CSV + summary.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Calibrate c_dag from sigma=0 solves and print it.
    Calibrate {
        #[arg(long, default_value = "sinsin")]
        case: String,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_CALIBRATION_LEVELS)]
        levels: Vec<usize>,
    },
    /// Print the smallest discrete Dirichlet eigenvalue on the unit square.
    Lambda1 {
        #[arg(long, default_value_t = 64)]
        n: usize,
    },
}

fn usage_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("majorant: {msg}");
    ExitCode::from(EXIT_USAGE)
}

fn run(config: PathBuf, out: Option<PathBuf>, threads: Option<usize>) -> ExitCode {
    let text = match std::fs::read_to_string(&config) {
        Ok(t) => t,
        Err(e) => return usage_error(format!("cannot read {}: {e}", config.display())),
    };
    let mut cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => return usage_error(e),
    };
    if threads == Some(0) {
        return usage_error("--threads must be >= 1");
    }
    cfg.threads = threads.or(cfg.threads);
    for w in &cfg.warnings {
        eprintln!("warning: {w}");
    }
    let Some(out) = out.or_else(|| cfg.output.clone()) else {
        return usage_error("no output path: pass --out or set `output` in the config");
    };
    let outcome = match run_sweep(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("majorant: sweep failed: {e}");
            return ExitCode::from(EXIT_VIOLATION);
        }
    };
    let summary = match write_outputs(&outcome, &out) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("majorant: {e}");
            return ExitCode::from(EXIT_VIOLATION);
        }
    };
    print!("{}", outcome.summary.to_text());
    println!("wrote {} and {}", out.display(), summary.display());
    if outcome.all_guarantees_held() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VIOLATION)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out, threads } => run(config, out, threads),
        Command::Calibrate { case, levels } => match calibrate_case(&case, &levels, SolveOptions::default()) {
            Ok(c) => {
                println!("{c:?}");
                ExitCode::SUCCESS
            }
            Err(e) => usage_error(e),
        },
        Command::Lambda1 { n } => {
            let lambda = build_uniform_mesh(n, Rectangle::unit_square()).and_then(|m| discrete_lambda1(&m));
            match lambda {
                Ok(l) => {
                    println!("{l:?}");
                    ExitCode::SUCCESS
                }
                Err(e) => usage_error(e),
            }
        }
    }
}
