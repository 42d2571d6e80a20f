//! Cross-module solver properties on top of the per-module unit tests.

use lrfsi::linalg::{DenseMatrix, LowRankFactors};
use lrfsi::matrixeq::{chebyshev_solve, ChebyshevConfig, SpectrumOptions, SylvesterOperator};
use lrfsi::newton::{newton_solve, NewtonConfig};
use lrfsi::partition::ParameterSet;
use lrfsi::problem::{build_burgers_fsi_1d, ModelConfig};
use lrfsi::SparseMatrix;
use rand::{Rng, SeedableRng};

fn diag(values: &[f64]) -> SparseMatrix {
    let t: Vec<(usize, usize, f64)> = values
        .iter()
        .enumerate()
        .map(|(i, &v)| (i, i, v))
        .collect();
    SparseMatrix::from_triplets(values.len(), values.len(), &t).unwrap()
}

#[test]
fn chebyshev_residual_decreases_over_five_iteration_windows() {
    // a deliberately wide spectral interval makes convergence slow enough
    // that the burn-in window is meaningful
    let n = 40;
    let m = 10;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    let a0_diag: Vec<f64> = (0..n).map(|_| 1.0 + rng.random::<f64>()).collect();
    let a1_diag: Vec<f64> = (0..n).map(|_| 0.5 + rng.random::<f64>()).collect();
    let shifts: Vec<f64> = (0..m).map(|j| 0.02 + 0.9 * j as f64).collect();
    let op = SylvesterOperator::new(
        diag(&a0_diag),
        diag(&a1_diag),
        SparseMatrix::zeros(n, n),
        0.0,
        shifts,
    )
    .unwrap();
    let pfact = op.mean_preconditioner().unwrap();
    let (d, c) = op
        .estimate_spectrum(
            &pfact,
            &SpectrumOptions {
                safety: 1.0,
                ..SpectrumOptions::default()
            },
        )
        .unwrap();
    let b = LowRankFactors::new(
        DenseMatrix::from_fn(n, 2, |i, j| ((i + j) as f64 * 0.31).sin() + 0.2),
        DenseMatrix::from_fn(m, 2, |i, j| ((i * 2 + j) as f64 * 0.17).cos()),
    )
    .unwrap();
    let solve_to = |j: usize| {
        let cfg = ChebyshevConfig {
            d,
            c,
            max_rank: n.min(m),
            trunc_tol: 0.0,
            max_iter: j,
            residual_tol: 0.0,
        };
        chebyshev_solve(&op, &pfact, &b, &cfg).unwrap()
    };
    // total budget: run until well converged, then check the window property
    let total = 25;
    let residuals: Vec<f64> = (1..=total).map(|j| solve_to(j).final_residual).collect();
    assert!(
        residuals[total - 1] < 1e-6,
        "iteration did not converge: {residuals:?}"
    );
    for j in 0..total - 5 {
        assert!(
            residuals[j + 5] < residuals[j],
            "windows ending at iterations {} and {}: {:.3e} !< {:.3e}",
            j + 6,
            j + 1,
            residuals[j + 5],
            residuals[j]
        );
    }
}

#[test]
fn default_preset_preconditioned_spectra_cluster_near_one() {
    let cfg = ModelConfig::default();
    let p = build_burgers_fsi_1d(&cfg).unwrap();
    let set = cfg.parameter_set().unwrap();
    let partition = set.split(8).unwrap();
    for k in 0..8 {
        let med = newton_solve(&p, partition.median_value(k).unwrap(), &NewtonConfig::default())
            .unwrap();
        assert!(med.converged);
        let op = SylvesterOperator::from_problem(&p, &partition, k, &med.x).unwrap();
        let pfact = op.mean_preconditioner().unwrap();
        let (d, c) = op
            .estimate_spectrum(&pfact, &SpectrumOptions::default())
            .unwrap();
        assert!(
            (d - 1.0).abs() <= 1e-3,
            "subset {k}: center {d} far from 1"
        );
        assert!(c > 0.0 && c < 1.0, "subset {k}: half-width {c} out of range");
    }
}

#[test]
fn warm_start_beats_cold_start_on_the_default_preset() {
    let cfg_model = ModelConfig::default();
    let p = build_burgers_fsi_1d(&cfg_model).unwrap();
    let set = cfg_model.parameter_set().unwrap();
    let cfg = NewtonConfig {
        tol: 1e-12,
        ..NewtonConfig::default()
    };
    let warm = lrfsi::newton::baseline_sweep(&p, &set, &cfg, true);
    let cold = lrfsi::newton::baseline_sweep(&p, &set, &cfg, false);
    assert!(warm.all_converged() && cold.all_converged());
    assert!(warm.total_iterations() < cold.total_iterations());
}

#[test]
fn singleton_parameter_set_runs_end_to_end() {
    let p = build_burgers_fsi_1d(&ModelConfig {
        n_fluid: 24,
        n_solid: 24,
        ..ModelConfig::default()
    })
    .unwrap();
    let set = ParameterSet::new(vec![31_415.9]).unwrap();
    let (approx, report) =
        lrfsi::run_algorithm1(&p, &set, &lrfsi::Algorithm1Config { subsets: 1, ..Default::default() })
            .unwrap();
    assert_eq!(report.n_failed_subsets(), 0);
    assert_eq!(approx.n_params(), 1);
    assert!(approx.global_rank() <= 1);
    let res = report.parameters[0].rel_residual.unwrap();
    assert!(res <= 1e-4, "residual {res}");
}
