use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use heatnev::output::num;
use heatnev::{list_builtin_scenarios, resolve, run, Check, ConfigError, HarnessError, RunOptions};
use heatnev_core::oracle;

#[derive(Parser)]
#[command(name = "heatnev", version, about = "Monte Carlo Nevanlinna functionals along Brownian paths")]
struct Cli {
    /// Directory of additional scenario files.
    #[arg(long, global = true, env = "HEATNEV_REGISTRY")]
    registry: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a scenario file or builtin name.
    Validate { scenario: String },
    /// Run a scenario and write its artifacts.
    Run {
        scenario: String,
        /// Comma-separated subset of checks, e.g. fmt,ldl,smt,defect,calc.
        #[arg(long, value_delimiter = ',')]
        checks: Option<Vec<String>>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// List builtin and registry scenarios.
    List,
    /// Tabulate a quadrature oracle.
    Oracle {
        name: String,
        /// Comma-separated evaluation times.
        #[arg(long, value_delimiter = ',')]
        times: Option<Vec<f64>>,
    },
}

fn config_error(e: &ConfigError) -> ExitCode {
    eprintln!("configuration error: {e}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let registry = cli.registry.as_deref();
    match cli.command {
        Command::Validate { scenario } => match resolve(&scenario, registry) {
            Ok(cfg) => {
                println!("{} ok, config hash {}", cfg.name, cfg.hash);
                ExitCode::SUCCESS
            }
            Err(e) => config_error(&e),
        },
        Command::List => match list_builtin_scenarios(registry) {
            Ok(list) => {
                for e in list {
                    println!("{:<18} {}", e.name, e.description);
                }
                ExitCode::SUCCESS
            }
            Err(e) => config_error(&e),
        },
        Command::Oracle { name, times } => {
            let times = times.unwrap_or_else(|| oracle::ORACLE_TIMES.to_vec());
            match oracle::run_oracle(&name, &times) {
                Some(table) => {
                    println!("# {}: {}", table.name, table.description);
                    println!("t,value");
                    for (t, v) in table.rows {
                        println!("{},{}", num(t), num(v));
                    }
                    ExitCode::SUCCESS
                }
                None => {
                    eprintln!("unknown oracle `{name}`; known:");
                    for (n, d) in oracle::oracle_names() {
                        eprintln!("  {n:<36} {d}");
                    }
                    ExitCode::from(2)
                }
            }
        }
        Command::Run { scenario, checks, seed, paths, out, workers } => {
            let cfg = match resolve(&scenario, registry) {
                Ok(c) => c,
                Err(e) => return config_error(&e),
            };
            let selection = match checks {
                None => None,
                Some(names) => {
                    let mut v = Vec::new();
                    for n in names {
                        match Check::from_name(&n) {
                            Some(c) => v.push(c),
                            None => return config_error(&ConfigError::Invalid(vec![format!("unknown check `{n}`")])),
                        }
                    }
                    Some(v)
                }
            };
            let cfg = match cfg.with_overrides(seed, paths, selection.as_deref()) {
                Ok(c) => c,
                Err(e) => return config_error(&e),
            };
            match run(&cfg, &RunOptions { out_dir: out.clone(), workers }) {
                Ok(rec) => {
                    for o in &rec.outcomes {
                        println!("{:<15} {}", o.check.name(), o.status);
                        for n in &o.notes {
                            println!("    {n}");
                        }
                    }
                    println!("artifacts in {}", out.display());
                    if rec.all_pass() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(HarnessError::Config(e)) => config_error(&e),
                Err(e) => {
                    eprintln!("run failed: {e}");
                    ExitCode::from(1)
                }
            }
        }
    }
}
