//! Flag/file configuration merging. Every flag has an optional counterpart in
//! a JSON config file (keys mirror the flag names in kebab-case); explicit
//! flags win over file values, file values win over defaults.

use anyhow::{Context, Result};
use clap::Args;
use lrfsi::problem::{ModelConfig, ModelKind, ParameterSpec};
use lrfsi::Algorithm1Config;
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Model name (currently only `burgers-fsi-1d`)
    #[arg(long)]
    pub model: Option<String>,
    /// Fluid cells
    #[arg(long)]
    pub nf: Option<usize>,
    /// Solid cells
    #[arg(long)]
    pub ns: Option<usize>,
    /// Inflow velocity magnitude
    #[arg(long = "v-in")]
    pub v_in: Option<f64>,
    /// Fluid density
    #[arg(long = "rho-f")]
    pub rho_f: Option<f64>,
    /// Kinematic fluid viscosity
    #[arg(long = "nu-f")]
    pub nu_f: Option<f64>,
    /// First Lame parameter of the solid
    #[arg(long = "lambda-s")]
    pub lambda_s: Option<f64>,
    /// Smallest shear modulus
    #[arg(long = "mu-min")]
    pub mu_min: Option<f64>,
    /// Largest shear modulus
    #[arg(long = "mu-max")]
    pub mu_max: Option<f64>,
    /// Number of shear moduli (uniform grid including both endpoints)
    #[arg(long = "num-params")]
    pub num_params: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Number of parameter subsets K
    #[arg(long)]
    pub subsets: Option<usize>,
    /// Per-subset rank budget R (the correction is solved at rank R-1)
    #[arg(long)]
    pub rank: Option<usize>,
    /// Newton relative-residual tolerance
    #[arg(long = "newton-tol")]
    pub newton_tol: Option<f64>,
    /// Chebyshev iteration cap per subset
    #[arg(long = "cheb-max-iter")]
    pub cheb_max_iter: Option<usize>,
    /// Chebyshev relative residual target
    #[arg(long = "cheb-tol")]
    pub cheb_tol: Option<f64>,
    /// Low-rank truncation tolerance
    #[arg(long = "trunc-tol")]
    pub trunc_tol: Option<f64>,
    /// Widening factor for the estimated spectral half-width
    #[arg(long)]
    pub safety: Option<f64>,
    /// Worker threads for the subset solves (default: all cores)
    #[arg(long)]
    pub workers: Option<usize>,
    /// Seed for the Krylov start vector used beyond the dense threshold
    #[arg(long)]
    pub seed: Option<u64>,
}

/// File counterpart of all flags.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    pub model: Option<String>,
    pub nf: Option<usize>,
    pub ns: Option<usize>,
    pub v_in: Option<f64>,
    pub rho_f: Option<f64>,
    pub nu_f: Option<f64>,
    pub lambda_s: Option<f64>,
    pub mu_min: Option<f64>,
    pub mu_max: Option<f64>,
    pub num_params: Option<usize>,
    pub subsets: Option<usize>,
    pub rank: Option<usize>,
    pub newton_tol: Option<f64>,
    pub cheb_max_iter: Option<usize>,
    pub cheb_tol: Option<f64>,
    pub trunc_tol: Option<f64>,
    pub safety: Option<f64>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub warm_start: Option<bool>,
    pub out: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config file {}", path.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing config file {}", path.display()))
            }
        }
    }
}

pub fn resolve_model(args: &ModelArgs, file: &FileConfig) -> Result<ModelConfig> {
    let defaults = ModelConfig::default();
    let name = args
        .model
        .clone()
        .or_else(|| file.model.clone())
        .unwrap_or_else(|| "burgers-fsi-1d".to_string());
    let model: ModelKind = name.parse().map_err(anyhow::Error::msg)?;
    let (d_min, d_max, d_count) = match defaults.parameters {
        ParameterSpec::Interval { min, max, count } => (min, max, count),
        _ => unreachable!("default parameter spec is an interval"),
    };
    Ok(ModelConfig {
        model,
        n_fluid: args.nf.or(file.nf).unwrap_or(defaults.n_fluid),
        n_solid: args.ns.or(file.ns).unwrap_or(defaults.n_solid),
        v_in: args.v_in.or(file.v_in).unwrap_or(defaults.v_in),
        rho_f: args.rho_f.or(file.rho_f).unwrap_or(defaults.rho_f),
        nu_f: args.nu_f.or(file.nu_f).unwrap_or(defaults.nu_f),
        lambda_s: args.lambda_s.or(file.lambda_s).unwrap_or(defaults.lambda_s),
        parameters: ParameterSpec::Interval {
            min: args.mu_min.or(file.mu_min).unwrap_or(d_min),
            max: args.mu_max.or(file.mu_max).unwrap_or(d_max),
            count: args.num_params.or(file.num_params).unwrap_or(d_count),
        },
    })
}

pub fn resolve_solver(args: &SolverArgs, file: &FileConfig) -> Algorithm1Config {
    let defaults = Algorithm1Config::default();
    Algorithm1Config {
        subsets: args.subsets.or(file.subsets).unwrap_or(defaults.subsets),
        rank: args.rank.or(file.rank).unwrap_or(defaults.rank),
        newton_tol: args
            .newton_tol
            .or(file.newton_tol)
            .unwrap_or(defaults.newton_tol),
        cheb_max_iter: args
            .cheb_max_iter
            .or(file.cheb_max_iter)
            .unwrap_or(defaults.cheb_max_iter),
        cheb_tol: args.cheb_tol.or(file.cheb_tol).unwrap_or(defaults.cheb_tol),
        trunc_tol: args
            .trunc_tol
            .or(file.trunc_tol)
            .unwrap_or(defaults.trunc_tol),
        safety: args.safety.or(file.safety).unwrap_or(defaults.safety),
        seed: args.seed.or(file.seed).unwrap_or(defaults.seed),
        ..defaults
    }
}

pub fn resolve_workers(args: &SolverArgs, file: &FileConfig) -> Option<usize> {
    args.workers.or(file.workers)
}
