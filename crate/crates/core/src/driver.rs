//! End-to-end orchestration: the low-rank algorithm over all subsets, the
//! consecutive-Newton baseline, residual evaluation, comparison and file
//! exports.

use crate::linalg::{Factorization, LowRankFactors, DENSE_EIG_THRESHOLD};
use crate::matrixeq::{
    build_rhs, chebyshev_solve, ChebyshevConfig, MatrixEqError, PreconditionerAnchor,
    SpectrumOptions, SylvesterOperator,
};
use crate::newton::{
    baseline_sweep, newton_solve, relative_residual, InitialGuess, NewtonConfig, NewtonError,
};
use crate::partition::{ParameterPartition, ParameterSet, PartitionError};
use crate::problem::{ParametricProblem, ProblemError};
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DriverError {
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Newton(#[from] NewtonError),
    #[error(transparent)]
    MatrixEq(#[from] MatrixEqError),
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("problem size {n} exceeds the dense threshold {threshold} for exact singular values")]
    DenseThresholdExceeded { n: usize, threshold: usize },
}

/// Settings of one low-rank run. `rank` is the per-subset budget `R_k`; the
/// Chebyshev solve targets a rank-(R_k - 1) correction so that the updated
/// block stays within rank `R_k`.
#[derive(Debug, Clone, Serialize)]
pub struct Algorithm1Config {
    pub subsets: usize,
    pub rank: usize,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub trunc_tol: f64,
    pub cheb_max_iter: usize,
    pub cheb_tol: f64,
    pub safety: f64,
    pub seed: u64,
    #[serde(skip)]
    pub anchor: PreconditionerAnchor,
    #[serde(skip)]
    pub initial: InitialGuess,
}

impl Default for Algorithm1Config {
    fn default() -> Self {
        Self {
            subsets: 8,
            rank: 10,
            newton_tol: 1e-4,
            newton_max_iter: 50,
            trunc_tol: 1e-10,
            cheb_max_iter: 100,
            cheb_tol: 1e-8,
            safety: 1.1,
            seed: 42,
            anchor: PreconditionerAnchor::MeanShift,
            initial: InitialGuess::DirichletData,
        }
    }
}

impl Algorithm1Config {
    fn newton_config(&self) -> NewtonConfig {
        NewtonConfig {
            tol: self.newton_tol,
            max_iter: self.newton_max_iter,
            initial: self.initial.clone(),
        }
    }

    fn spectrum_options(&self) -> SpectrumOptions {
        SpectrumOptions {
            safety: self.safety,
            seed: self.seed,
            ..SpectrumOptions::default()
        }
    }

    fn cheb_rank(&self) -> usize {
        self.rank.saturating_sub(1).max(1)
    }
}

/// One finished subset: the median approximation and the low-rank correction.
#[derive(Debug, Clone)]
pub struct SubsetBlock {
    pub x_med: Vec<f64>,
    pub s_hat: LowRankFactors,
}

/// The global approximation, stored per subset as
/// `x_med (x) (1,..,1) + S_hat`. Failed subsets hold no block and their
/// columns are unavailable.
pub struct BlockApproximation {
    partition: ParameterPartition,
    blocks: Vec<Option<SubsetBlock>>,
}

impl BlockApproximation {
    pub fn partition(&self) -> &ParameterPartition {
        &self.partition
    }

    pub fn block(&self, k: usize) -> Option<&SubsetBlock> {
        self.blocks.get(k).and_then(|b| b.as_ref())
    }

    pub fn n_params(&self) -> usize {
        self.partition.parent().len()
    }

    /// Reconstructed approximation for global parameter index `i`.
    pub fn column(&self, i: usize) -> Result<Option<Vec<f64>>, PartitionError> {
        let k = self.partition.subset_of(i)?;
        let start = self.partition.subset_range(k)?.start;
        Ok(self.blocks[k].as_ref().map(|block| {
            let mut col = block.s_hat.column(i - start);
            for (c, x) in col.iter_mut().zip(&block.x_med) {
                *c += x;
            }
            col
        }))
    }

    /// Upper bound on the rank of the stacked approximation: one for each
    /// median plus the rank of each correction, capped by the subset width.
    pub fn global_rank(&self) -> usize {
        (0..self.blocks.len())
            .map(|k| {
                let width = self.partition.subset_len(k).expect("valid subset");
                match &self.blocks[k] {
                    Some(b) => (1 + b.s_hat.rank()).min(width),
                    None => 0,
                }
            })
            .sum()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ParamRecord {
    pub index: usize,
    pub mu: f64,
    pub subset: usize,
    pub rel_residual: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SubsetRecord {
    pub subset: usize,
    pub start: usize,
    pub end: usize,
    pub mu_median: f64,
    pub newton_iterations: usize,
    pub cheb_iterations: usize,
    pub d: f64,
    pub c: f64,
    pub correction_rank: usize,
    pub newton_seconds: f64,
    pub spectrum_seconds: f64,
    pub cheb_seconds: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Totals {
    /// Median Newton iterations summed over subsets.
    pub median_newton_steps: usize,
    /// One matrix-equation Newton step per successfully solved subset.
    pub matrix_equation_steps: usize,
    /// Overall Newton-step count: median steps plus matrix-equation steps.
    pub newton_steps: usize,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub config: Algorithm1Config,
    pub parameters: Vec<ParamRecord>,
    pub subsets: Vec<SubsetRecord>,
    pub totals: Totals,
}

impl RunReport {
    pub fn n_failed_subsets(&self) -> usize {
        self.subsets.iter().filter(|s| s.error.is_some()).count()
    }
}

fn solve_subset(
    p: &ParametricProblem,
    partition: &ParameterPartition,
    k: usize,
    cfg: &Algorithm1Config,
) -> (Option<SubsetBlock>, SubsetRecord) {
    let range = partition.subset_range(k).expect("subset in range");
    let mu_median = partition.median_value(k).expect("subset in range");
    let mut record = SubsetRecord {
        subset: k,
        start: range.start,
        end: range.end,
        mu_median,
        newton_iterations: 0,
        cheb_iterations: 0,
        d: f64::NAN,
        c: f64::NAN,
        correction_rank: 0,
        newton_seconds: 0.0,
        spectrum_seconds: 0.0,
        cheb_seconds: 0.0,
        error: None,
    };
    let mut run = || -> Result<SubsetBlock, String> {
        let t = Instant::now();
        let med = newton_solve(p, mu_median, &cfg.newton_config()).map_err(|e| e.to_string())?;
        record.newton_seconds = t.elapsed().as_secs_f64();
        record.newton_iterations = med.iterations;
        if !med.converged {
            return Err(format!(
                "median Newton did not converge within {} iterations (relative residual {:.3e})",
                cfg.newton_max_iter,
                med.residual_history.last().copied().unwrap_or(f64::NAN)
            ));
        }
        let x_med = med.x;

        let t = Instant::now();
        let op =
            SylvesterOperator::from_problem(p, partition, k, &x_med).map_err(|e| e.to_string())?;
        let pfact = op.preconditioner(cfg.anchor).map_err(|e| e.to_string())?;
        let (d, c) = op
            .estimate_spectrum(&pfact, &cfg.spectrum_options())
            .map_err(|e| e.to_string())?;
        record.spectrum_seconds = t.elapsed().as_secs_f64();
        record.d = d;
        record.c = c;

        let t = Instant::now();
        let (_, v) = partition.subset_diag(k, p.mu_ref()).map_err(|e| e.to_string())?;
        let b = build_rhs(p, &x_med, &v).map_err(|e| e.to_string())?;
        let cheb = ChebyshevConfig {
            d,
            c,
            max_rank: cfg.cheb_rank(),
            trunc_tol: cfg.trunc_tol,
            max_iter: cfg.cheb_max_iter,
            residual_tol: cfg.cheb_tol,
        };
        let solve = chebyshev_solve(&op, &pfact, &b, &cheb).map_err(|e| e.to_string())?;
        record.cheb_seconds = t.elapsed().as_secs_f64();
        record.cheb_iterations = solve.iterations;
        record.correction_rank = solve.s_hat.rank();
        Ok(SubsetBlock {
            x_med,
            s_hat: solve.s_hat,
        })
    };
    match run() {
        Ok(block) => (Some(block), record),
        Err(message) => {
            record.error = Some(message);
            (None, record)
        }
    }
}

/// Run the full low-rank method: split the parameter set, solve each subset's
/// median problem to `newton_tol`, take one matrix-equation Newton step per
/// subset at rank `rank - 1`, and stack the blocks. Subset failures are
/// isolated: the remaining subsets still run and the report carries the error
/// strings.
pub fn run_algorithm1(
    p: &ParametricProblem,
    set: &ParameterSet,
    cfg: &Algorithm1Config,
) -> Result<(BlockApproximation, RunReport), DriverError> {
    let started = Instant::now();
    let partition = set.split(cfg.subsets)?;
    let results: Vec<(Option<SubsetBlock>, SubsetRecord)> = (0..cfg.subsets)
        .into_par_iter()
        .map(|k| solve_subset(p, &partition, k, cfg))
        .collect();
    let (blocks, subsets): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let approx = BlockApproximation { partition, blocks };

    let residuals = evaluate(p, &approx)?;
    let parameters = residuals
        .into_iter()
        .enumerate()
        .map(|(index, rel_residual)| {
            Ok(ParamRecord {
                index,
                mu: set.value(index),
                subset: approx.partition.subset_of(index)?,
                rel_residual,
            })
        })
        .collect::<Result<Vec<_>, PartitionError>>()?;

    let median_newton_steps: usize = subsets.iter().map(|s| s.newton_iterations).sum();
    let matrix_equation_steps = subsets.iter().filter(|s| s.error.is_none()).count();
    let report = RunReport {
        config: cfg.clone(),
        parameters,
        subsets,
        totals: Totals {
            median_newton_steps,
            matrix_equation_steps,
            newton_steps: median_newton_steps + matrix_equation_steps,
            wall_seconds: started.elapsed().as_secs_f64(),
        },
    };
    Ok((approx, report))
}

/// Relative residual of every reconstructed column; `None` where the owning
/// subset failed.
pub fn evaluate(
    p: &ParametricProblem,
    approx: &BlockApproximation,
) -> Result<Vec<Option<f64>>, DriverError> {
    (0..approx.n_params())
        .map(|i| {
            let mu = approx.partition.parent().value(i);
            match approx.column(i)? {
                Some(col) => Ok(Some(relative_residual(p, &col, mu)?)),
                None => Ok(None),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct BaselineParamRecord {
    pub index: usize,
    pub mu: f64,
    pub iterations: usize,
    pub converged: bool,
    pub rel_residual: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BaselineTotals {
    pub newton_steps: usize,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BaselineReport {
    pub warm_start: bool,
    pub newton_tol: f64,
    pub parameters: Vec<BaselineParamRecord>,
    pub totals: BaselineTotals,
}

impl BaselineReport {
    pub fn all_converged(&self) -> bool {
        self.parameters.iter().all(|r| r.converged)
    }
}

/// Consecutive per-parameter Newton, the reference the low-rank run is
/// compared against.
pub fn run_baseline(
    p: &ParametricProblem,
    set: &ParameterSet,
    cfg: &NewtonConfig,
    warm_start: bool,
) -> Result<BaselineReport, DriverError> {
    let started = Instant::now();
    let sweep = baseline_sweep(p, set, cfg, warm_start);
    let mut parameters = Vec::with_capacity(sweep.entries.len());
    for entry in &sweep.entries {
        let record = match &entry.outcome {
            Ok(result) => BaselineParamRecord {
                index: entry.index,
                mu: entry.mu,
                iterations: result.iterations,
                converged: result.converged,
                rel_residual: Some(relative_residual(p, &result.x, entry.mu)?),
                error: None,
            },
            Err(e) => BaselineParamRecord {
                index: entry.index,
                mu: entry.mu,
                iterations: 0,
                converged: false,
                rel_residual: None,
                error: Some(e.to_string()),
            },
        };
        parameters.push(record);
    }
    let newton_steps = sweep.total_iterations();
    Ok(BaselineReport {
        warm_start,
        newton_tol: cfg.tol,
        parameters,
        totals: BaselineTotals {
            newton_steps,
            wall_seconds: started.elapsed().as_secs_f64(),
        },
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub baseline: BaselineReport,
    pub lowrank: RunReport,
}

impl ComparisonReport {
    /// Baseline-to-lowrank Newton step ratio, if both counts are nonzero.
    pub fn step_ratio(&self) -> Option<f64> {
        let b = self.baseline.totals.newton_steps;
        let l = self.lowrank.totals.newton_steps;
        if b > 0 && l > 0 {
            Some(b as f64 / l as f64)
        } else {
            None
        }
    }
}

/// Run both methods on identical inputs.
pub fn compare(
    p: &ParametricProblem,
    set: &ParameterSet,
    baseline_cfg: &NewtonConfig,
    warm_start: bool,
    alg1_cfg: &Algorithm1Config,
) -> Result<ComparisonReport, DriverError> {
    let baseline = run_baseline(p, set, baseline_cfg, warm_start)?;
    let (_, lowrank) = run_algorithm1(p, set, alg1_cfg)?;
    Ok(ComparisonReport { baseline, lowrank })
}

/// One row of the residual CSV export.
#[derive(Debug, Clone)]
pub struct CsvRow {
    pub index: usize,
    pub mu: f64,
    pub subset: Option<usize>,
    pub rel_residual: Option<f64>,
    pub method: &'static str,
}

impl RunReport {
    pub fn csv_rows(&self) -> Vec<CsvRow> {
        self.parameters
            .iter()
            .map(|r| CsvRow {
                index: r.index,
                mu: r.mu,
                subset: Some(r.subset),
                rel_residual: r.rel_residual,
                method: "lowrank",
            })
            .collect()
    }
}

impl BaselineReport {
    pub fn csv_rows(&self) -> Vec<CsvRow> {
        self.parameters
            .iter()
            .map(|r| CsvRow {
                index: r.index,
                mu: r.mu,
                subset: None,
                rel_residual: r.rel_residual,
                method: "baseline",
            })
            .collect()
    }
}

impl ComparisonReport {
    pub fn csv_rows(&self) -> Vec<CsvRow> {
        let mut rows = self.baseline.csv_rows();
        rows.extend(self.lowrank.csv_rows());
        rows
    }
}

fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write rows as `index,mu,subset,rel_residual,method`, ordered by ascending
/// index and then method name. Floats are printed with 17 significant digits
/// so parsing recovers them exactly.
pub fn export_csv(rows: &[CsvRow], path: &Path) -> Result<(), DriverError> {
    let mut sorted: Vec<&CsvRow> = rows.iter().collect();
    sorted.sort_by(|a, b| (a.index, a.method).cmp(&(b.index, b.method)));
    let io_err = |source| DriverError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut out = std::io::BufWriter::new(file);
    let write = |out: &mut std::io::BufWriter<std::fs::File>, line: String| {
        out.write_all(line.as_bytes()).map_err(|source| DriverError::Io {
            path: path.to_path_buf(),
            source,
        })
    };
    write(&mut out, "index,mu,subset,rel_residual,method\n".to_string())?;
    for row in sorted {
        let subset = row.subset.map(|s| s.to_string()).unwrap_or_default();
        let residual = row.rel_residual.map(format_float).unwrap_or_default();
        write(
            &mut out,
            format!(
                "{},{},{},{},{}\n",
                row.index,
                format_float(row.mu),
                subset,
                residual,
                row.method
            ),
        )?;
    }
    out.flush().map_err(io_err)?;
    Ok(())
}

/// Write a pretty-printed JSON value to `path`.
pub fn export_json<T: Serialize>(value: &T, path: &Path) -> Result<(), DriverError> {
    let io_err = |source| DriverError::Io {
        path: path.to_path_buf(),
        source,
    };
    let json = serde_json::to_string_pretty(value).map_err(|e| DriverError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    })?;
    std::fs::write(path, json + "\n").map_err(io_err)
}

/// Exact per-subset singular values: solve the subset matrix equation column
/// by column with the direct factorization and write `subset,j,sigma` rows
/// (`j` is 1-based). Refuses problems beyond the dense threshold.
pub fn export_singular_values(
    p: &ParametricProblem,
    partition: &ParameterPartition,
    newton_cfg: &NewtonConfig,
    path: &Path,
) -> Result<(), DriverError> {
    if p.n_dof() > DENSE_EIG_THRESHOLD {
        return Err(DriverError::DenseThresholdExceeded {
            n: p.n_dof(),
            threshold: DENSE_EIG_THRESHOLD,
        });
    }
    let io_err = |source| DriverError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut lines = vec!["subset,j,sigma".to_string()];
    for k in 0..partition.n_subsets() {
        let sigma = exact_subset_singular_values(p, partition, k, newton_cfg)?;
        for (j, s) in sigma.iter().enumerate() {
            lines.push(format!("{},{},{}", k, j + 1, format_float(*s)));
        }
    }
    std::fs::write(path, lines.join("\n") + "\n").map_err(io_err)
}

/// Dense direct solution of the subset matrix equation, one factorization and
/// solve per column.
pub fn exact_subset_solution(
    p: &ParametricProblem,
    partition: &ParameterPartition,
    k: usize,
    x_med: &[f64],
) -> Result<crate::linalg::DenseMatrix, DriverError> {
    let (shifts, v) = partition.subset_diag(k, p.mu_ref())?;
    let a_conv = p.assemble_conv(x_med)?;
    let mut out = crate::linalg::DenseMatrix::zeros(p.n_dof(), v.len());
    for (i, (&shift, &mu)) in shifts.iter().zip(&v).enumerate() {
        let a = p.system_matrix(&a_conv, shift).map_err(MatrixEqError::from)?;
        let fact = Factorization::new(&a).map_err(MatrixEqError::from)?;
        let g = p.residual(x_med, mu)?;
        let rhs: Vec<f64> = g.iter().map(|x| -x).collect();
        let col = fact.solve(&rhs).map_err(MatrixEqError::from)?;
        out.column_mut(i).copy_from_slice(&col);
    }
    Ok(out)
}

fn exact_subset_singular_values(
    p: &ParametricProblem,
    partition: &ParameterPartition,
    k: usize,
    newton_cfg: &NewtonConfig,
) -> Result<Vec<f64>, DriverError> {
    let mu_median = partition.median_value(k)?;
    let med = newton_solve(p, mu_median, newton_cfg)?;
    let s = exact_subset_solution(p, partition, k, &med.x)?;
    let svd = crate::linalg::accurate_svd(&s, false);
    Ok(svd.singular_values.iter().copied().collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumRecord {
    pub subset: usize,
    pub mu_median: f64,
    pub newton_iterations: usize,
    pub d: Option<f64>,
    pub c: Option<f64>,
    pub error: Option<String>,
}

/// Estimate the Chebyshev interval for every subset without solving anything
/// (the `spectrum` diagnostic).
pub fn estimate_spectra(
    p: &ParametricProblem,
    set: &ParameterSet,
    cfg: &Algorithm1Config,
) -> Result<Vec<SpectrumRecord>, DriverError> {
    let partition = set.split(cfg.subsets)?;
    let records: Vec<SpectrumRecord> = (0..cfg.subsets)
        .into_par_iter()
        .map(|k| {
            let mu_median = partition.median_value(k).expect("subset in range");
            let mut record = SpectrumRecord {
                subset: k,
                mu_median,
                newton_iterations: 0,
                d: None,
                c: None,
                error: None,
            };
            let mut run = || -> Result<(f64, f64), String> {
                let med =
                    newton_solve(p, mu_median, &cfg.newton_config()).map_err(|e| e.to_string())?;
                record.newton_iterations = med.iterations;
                if !med.converged {
                    return Err("median Newton did not converge".to_string());
                }
                let op = SylvesterOperator::from_problem(p, &partition, k, &med.x)
                    .map_err(|e| e.to_string())?;
                let pfact = op.preconditioner(cfg.anchor).map_err(|e| e.to_string())?;
                op.estimate_spectrum(&pfact, &cfg.spectrum_options())
                    .map_err(|e| e.to_string())
            };
            match run() {
                Ok((d, c)) => {
                    record.d = Some(d);
                    record.c = Some(c);
                }
                Err(message) => record.error = Some(message),
            }
            record
        })
        .collect();
    Ok(records)
}
