//! `lrfsi` command line: run the low-rank method, the consecutive-Newton
//! baseline or both on the 1D coupled model, and export residual CSVs, JSON
//! summaries, singular-value decay tables and spectral-interval estimates.
//!
//! Exit codes: 0 on success, 2 when some subsets or parameters failed but the
//! run produced partial results, 1 on hard errors.

mod config;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use config::{resolve_model, resolve_solver, resolve_workers, FileConfig, ModelArgs, SolverArgs};
use lrfsi::driver::{
    compare, estimate_spectra, export_csv, export_json, export_singular_values, run_algorithm1,
    run_baseline,
};
use lrfsi::newton::NewtonConfig;
use lrfsi::problem::build_burgers_fsi_1d;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "lrfsi",
    about = "Low-rank Newton solver for the parameter-dependent 1D fluid-structure model",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the low-rank method over the whole parameter set
    Run {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// JSON config file mirroring all flags (flags override it)
        #[arg(long)]
        config: Option<PathBuf>,
        /// Residual CSV output (default results.csv)
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON summary output (default summary.json)
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Consecutive per-parameter Newton sweep
    Baseline {
        #[command(flatten)]
        model: ModelArgs,
        /// Warm-start each parameter from the previous solution (default true)
        #[arg(long = "warm-start", action = clap::ArgAction::Set)]
        warm_start: Option<bool>,
        /// Newton relative-residual tolerance (default 1e-12)
        #[arg(long = "newton-tol")]
        newton_tol: Option<f64>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Run both methods on identical inputs and merge the residual CSV
    Compare {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long = "warm-start", action = clap::ArgAction::Set)]
        warm_start: Option<bool>,
        /// Baseline Newton tolerance (the low-rank run uses --newton-tol)
        #[arg(long = "baseline-tol", default_value_t = 1e-12)]
        baseline_tol: f64,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Export exact per-subset singular values (dense path only)
    Svd {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "singular_values.csv")]
        out: PathBuf,
    },
    /// Print the estimated Chebyshev interval (d, c) per subset
    Spectrum {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn install_pool(workers: Option<usize>) -> Result<Option<rayon::ThreadPool>> {
    match workers {
        None => Ok(None),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .context("building worker pool")?;
            Ok(Some(pool))
        }
    }
}

fn with_pool<T>(pool: &Option<rayon::ThreadPool>, f: impl FnOnce() -> T + Send) -> T
where
    T: Send,
{
    match pool {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

fn resolve_out(flag: Option<PathBuf>, file: &FileConfig) -> PathBuf {
    flag.or_else(|| file.out.clone())
        .unwrap_or_else(|| PathBuf::from("results.csv"))
}

fn resolve_summary(flag: Option<PathBuf>, file: &FileConfig) -> PathBuf {
    flag.or_else(|| file.summary.clone())
        .unwrap_or_else(|| PathBuf::from("summary.json"))
}

fn real_main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            model,
            solver,
            config,
            out,
            summary,
        } => {
            let file = FileConfig::load(config.as_deref())?;
            let model_cfg = resolve_model(&model, &file)?;
            let alg1_cfg = resolve_solver(&solver, &file);
            let out = resolve_out(out, &file);
            let summary = resolve_summary(summary, &file);
            let problem = build_burgers_fsi_1d(&model_cfg)?;
            let set = model_cfg.parameter_set()?;
            let pool = install_pool(resolve_workers(&solver, &file))?;
            let (_, report) = with_pool(&pool, || run_algorithm1(&problem, &set, &alg1_cfg))?;
            export_csv(&report.csv_rows(), &out)?;
            export_json(&report, &summary)?;
            let failed = report.n_failed_subsets();
            eprintln!(
                "low-rank run: {} parameters, {} subsets ({} failed), {} Newton steps, {:.2}s",
                report.parameters.len(),
                report.subsets.len(),
                failed,
                report.totals.newton_steps,
                report.totals.wall_seconds
            );
            Ok(if failed > 0 {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Baseline {
            model,
            warm_start,
            newton_tol,
            config,
            out,
            summary,
        } => {
            let file = FileConfig::load(config.as_deref())?;
            let model_cfg = resolve_model(&model, &file)?;
            let warm_start = warm_start.or(file.warm_start).unwrap_or(true);
            let tol = newton_tol.or(file.newton_tol).unwrap_or(1e-12);
            let out = resolve_out(out, &file);
            let summary = resolve_summary(summary, &file);
            let newton_cfg = NewtonConfig {
                tol,
                ..NewtonConfig::default()
            };
            let problem = build_burgers_fsi_1d(&model_cfg)?;
            let set = model_cfg.parameter_set()?;
            let report = run_baseline(&problem, &set, &newton_cfg, warm_start)?;
            export_csv(&report.csv_rows(), &out)?;
            export_json(&report, &summary)?;
            let failed = report
                .parameters
                .iter()
                .filter(|r| !r.converged)
                .count();
            eprintln!(
                "baseline sweep: {} parameters ({} not converged), {} Newton steps, {:.2}s",
                report.parameters.len(),
                failed,
                report.totals.newton_steps,
                report.totals.wall_seconds
            );
            Ok(if failed > 0 {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Compare {
            model,
            solver,
            warm_start,
            baseline_tol,
            config,
            out,
            summary,
        } => {
            let file = FileConfig::load(config.as_deref())?;
            let model_cfg = resolve_model(&model, &file)?;
            let alg1_cfg = resolve_solver(&solver, &file);
            let warm_start = warm_start.or(file.warm_start).unwrap_or(true);
            let out = resolve_out(out, &file);
            let summary = resolve_summary(summary, &file);
            let baseline_cfg = NewtonConfig {
                tol: baseline_tol,
                ..NewtonConfig::default()
            };
            let problem = build_burgers_fsi_1d(&model_cfg)?;
            let set = model_cfg.parameter_set()?;
            let pool = install_pool(resolve_workers(&solver, &file))?;
            let report = with_pool(&pool, || {
                compare(&problem, &set, &baseline_cfg, warm_start, &alg1_cfg)
            })?;
            export_csv(&report.csv_rows(), &out)?;
            export_json(&report, &summary)?;
            let failed_subsets = report.lowrank.n_failed_subsets();
            let failed_params = report
                .baseline
                .parameters
                .iter()
                .filter(|r| !r.converged)
                .count();
            match report.step_ratio() {
                Some(ratio) => eprintln!(
                    "compare: baseline {} steps vs low-rank {} steps (ratio {ratio:.1})",
                    report.baseline.totals.newton_steps, report.lowrank.totals.newton_steps
                ),
                None => eprintln!("compare: step ratio unavailable"),
            }
            Ok(if failed_subsets + failed_params > 0 {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Svd {
            model,
            solver,
            config,
            out,
        } => {
            let file = FileConfig::load(config.as_deref())?;
            let model_cfg = resolve_model(&model, &file)?;
            let alg1_cfg = resolve_solver(&solver, &file);
            let problem = build_burgers_fsi_1d(&model_cfg)?;
            let set = model_cfg.parameter_set()?;
            let partition = set.split(alg1_cfg.subsets)?;
            let newton_cfg = NewtonConfig {
                tol: alg1_cfg.newton_tol,
                ..NewtonConfig::default()
            };
            export_singular_values(&problem, &partition, &newton_cfg, &out)?;
            eprintln!(
                "wrote singular values for {} subsets to {}",
                partition.n_subsets(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Spectrum {
            model,
            solver,
            config,
        } => {
            let file = FileConfig::load(config.as_deref())?;
            let model_cfg = resolve_model(&model, &file)?;
            let alg1_cfg = resolve_solver(&solver, &file);
            let problem = build_burgers_fsi_1d(&model_cfg)?;
            let set = model_cfg.parameter_set()?;
            let pool = install_pool(resolve_workers(&solver, &file))?;
            let records = with_pool(&pool, || estimate_spectra(&problem, &set, &alg1_cfg))?;
            let mut failed = 0;
            for r in &records {
                match (r.d, r.c) {
                    (Some(d), Some(c)) => println!(
                        "subset {:3}  mu_median {:12.4}  d {:10.6}  c {:10.6}",
                        r.subset, r.mu_median, d, c
                    ),
                    _ => {
                        failed += 1;
                        println!(
                            "subset {:3}  mu_median {:12.4}  failed: {}",
                            r.subset,
                            r.mu_median,
                            r.error.as_deref().unwrap_or("unknown")
                        );
                    }
                }
            }
            Ok(if failed > 0 {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            })
        }
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
