use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vlaser::harness::{self, ExperimentConfig, Plan, RunOptions, OUT_ENV};
use vlaser::model::presets;
use vlaser::Error;

#[derive(Parser)]
#[command(name = "vlaser", version, about = "Driven V-level atoms lasing on the narrow line")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write its result set.
    Run {
        config: PathBuf,
        /// Output root; results go to <root>/<config stem>.
        #[arg(long, env = OUT_ENV, default_value = "results")]
        out_dir: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        /// Base RNG seed, overrides the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Recompute points that an earlier run already finished.
        #[arg(long)]
        force: bool,
        /// Parameter override, e.g. --param nu=1Gamma2.
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
    },
    /// Check configs without running them.
    Validate {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
    },
    /// List the built-in atomic presets.
    Presets,
    /// Compare two result directories (or two data files) column by column.
    Diff {
        a: PathBuf,
        b: PathBuf,
        /// Largest accepted relative deviation.
        #[arg(long, default_value_t = 0.0)]
        tol: f64,
    },
}

const EXIT_CONFIG: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

fn is_config_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Config { .. }
            | Error::Unit(_)
            | Error::InvalidParameter { .. }
            | Error::InvalidGrid(_)
            | Error::Parse { .. }
    )
}

fn load(path: &Path, params: &[String], seed: Option<u64>) -> Result<Plan, Error> {
    let mut cfg = ExperimentConfig::load(path)?;
    for a in params {
        cfg.set_param(a)?;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Plan::new(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out_dir,
            workers,
            seed,
            force,
            params,
        } => {
            let plan = match load(&config, &params, seed) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: {}: {e}", config.display());
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            let dir = harness::output_dir(&out_dir, &config);
            let m = match harness::run(&plan, &dir, &RunOptions { force, workers }) {
                Ok(m) => m,
                Err(e) => {
                    eprintln!("error: {e}");
                    let code = if is_config_error(&e) { EXIT_CONFIG } else { EXIT_SOLVER };
                    return ExitCode::from(code);
                }
            };
            for line in &m.summary {
                println!("{line}");
            }
            println!(
                "{}: {} points ({} ok, {} warned, {} failed, {} reused), config {}",
                dir.display(),
                m.points,
                m.ok,
                m.warned,
                m.failed,
                m.reused,
                &m.config_hash[..12]
            );
            if m.failed == 0 {
                ExitCode::SUCCESS
            } else if m.failed == m.points {
                ExitCode::from(EXIT_SOLVER)
            } else {
                ExitCode::from(EXIT_PARTIAL)
            }
        }
        Command::Validate { configs } => {
            let mut bad = false;
            for c in &configs {
                match load(c, &[], None) {
                    Ok(p) => println!(
                        "ok {}: {} with {} grid points",
                        c.display(),
                        p.config.kind,
                        p.grid().len()
                    ),
                    Err(e) => {
                        bad = true;
                        println!("invalid {}: {e}", c.display());
                    }
                }
            }
            if bad {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            }
        }
        Command::Presets => {
            for p in presets() {
                println!("{}: {}", p.name, p.description);
                for (k, v) in harness::describe(&p.params, &p.units) {
                    println!("  {k:<8} {v}");
                }
            }
            ExitCode::SUCCESS
        }
        Command::Diff { a, b, tol } => match harness::diff_paths(&a, &b) {
            Ok(r) => {
                for c in &r.columns {
                    println!("{} {} {:.3e}", c.file, c.column, c.max_rel);
                }
                for m in &r.mismatched {
                    println!("{m} mismatched");
                }
                println!("max relative error {:.3e}", r.max_rel());
                if r.within(tol) {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(EXIT_PARTIAL)
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_CONFIG)
            }
        },
    }
}
