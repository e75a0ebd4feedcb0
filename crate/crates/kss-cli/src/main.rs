use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kss_cli::run::{EXIT_COMPLETED, EXIT_CONFIG, EXIT_SOLVER_FAILURE};
use kss_cli::{config, lemma, run, sweep};

#[derive(Parser)]
#[command(name = "kss", about = "Chemotaxis-fluid solver with saturated sensitivity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonRunArgs {
    /// Override the output directory from the config file
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Suppress progress output on stderr
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation from a config file
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: CommonRunArgs,
        /// Comma-separated snapshot times overriding output.snapshot_at
        #[arg(long, value_name = "t1,t2,...")]
        snapshot_at: Option<String>,
    },
    /// Run an alpha sweep from a sweep spec file
    Sweep {
        spec: PathBuf,
        #[command(flatten)]
        common: CommonRunArgs,
    },
    /// Verify the ODE comparison bound on randomized cases
    LemmaCheck {
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// RK4 steps per case
        #[arg(long, default_value_t = 20_000)]
        steps: usize,
        /// JSONL report path (defaults to lemma_report.jsonl in the cwd)
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Post-hoc sliding-window functional from a diagnostics CSV
    Diag {
        csv: PathBuf,
        /// Window length, or "auto" for min{1, T/4}
        #[arg(long, default_value = "auto")]
        tau: String,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
    },
}

fn config_fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("{msg}");
    ExitCode::from(EXIT_CONFIG as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config: path,
            common,
            snapshot_at,
        } => {
            let text = match std::fs::read_to_string(&path) {
                Ok(t) => t,
                Err(e) => return config_fail(format!("cannot read {path:?}: {e}")),
            };
            let mut cfg = match config::parse_run_config(&text) {
                Ok(c) => c,
                Err(e) => return config_fail(e),
            };
            if let Some(dir) = common.output_dir {
                cfg.output_dir = dir;
            }
            if let Some(times) = snapshot_at {
                let parsed: Result<Vec<f64>, _> =
                    times.split(',').map(|s| s.trim().parse::<f64>()).collect();
                match parsed {
                    Ok(v) if v.iter().all(|&t| (0.0..=cfg.t_end).contains(&t)) => {
                        cfg.snapshot_times = v
                    }
                    _ => return config_fail("bad --snapshot-at list"),
                }
            }
            match run::run_simulation(&cfg, common.quiet) {
                Ok(out) => ExitCode::from(out.exit_code as u8),
                Err(msg) => {
                    eprintln!("{msg}");
                    ExitCode::from(EXIT_SOLVER_FAILURE as u8)
                }
            }
        }
        Command::Sweep { spec, common } => {
            let text = match std::fs::read_to_string(&spec) {
                Ok(t) => t,
                Err(e) => return config_fail(format!("cannot read {spec:?}: {e}")),
            };
            let parsed = match config::parse_sweep_spec(&text) {
                Ok(s) => s,
                Err(e) => return config_fail(e),
            };
            let root = common
                .output_dir
                .unwrap_or_else(|| parsed.base.output_dir.clone());
            match sweep::run_sweep(&parsed, &root, common.quiet) {
                Ok(rows) => {
                    if !common.quiet {
                        for r in &rows {
                            eprintln!(
                                "alpha = {}, seed = {}: {} (peak |n|_inf = {})",
                                r.alpha, r.seed, r.verdict, r.peak_linf_n
                            );
                        }
                    }
                    ExitCode::from(EXIT_COMPLETED as u8)
                }
                Err(msg) => {
                    eprintln!("{msg}");
                    ExitCode::from(EXIT_SOLVER_FAILURE as u8)
                }
            }
        }
        Command::LemmaCheck {
            cases,
            seed,
            steps,
            report,
        } => {
            if cases == 0 {
                return config_fail("--cases must be >= 1");
            }
            let path = report.unwrap_or_else(|| PathBuf::from("lemma_report.jsonl"));
            match lemma::run_campaign(cases, seed, steps, Some(&path)) {
                Ok(s) => {
                    println!(
                        "verified {}, rejected {}, violations {}",
                        s.verified, s.rejected, s.violations
                    );
                    if s.violations == 0 {
                        ExitCode::from(EXIT_COMPLETED as u8)
                    } else {
                        ExitCode::from(EXIT_SOLVER_FAILURE as u8)
                    }
                }
                Err(msg) => {
                    eprintln!("{msg}");
                    ExitCode::from(EXIT_SOLVER_FAILURE as u8)
                }
            }
        }
        Command::Diag { csv, tau, p } => match run::diag_from_csv(&csv, &tau, p) {
            Ok((tau_used, i)) => {
                println!("{{\"tau\": {tau_used}, \"p\": {p}, \"I\": {i}}}");
                ExitCode::from(EXIT_COMPLETED as u8)
            }
            Err(msg) => config_fail(msg),
        },
    }
}
