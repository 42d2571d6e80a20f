//! Criterion benchmarks for the solver kernels on the default-size model.

use criterion::{criterion_group, criterion_main, Criterion};
use lrfsi::matrixeq::{build_rhs, chebyshev_solve, ChebyshevConfig, SylvesterOperator};
use lrfsi::newton::{newton_solve, NewtonConfig};
use lrfsi::problem::{build_burgers_fsi_1d, ModelConfig};
use lrfsi::Factorization;
use std::hint::black_box;

fn bench_spmv(c: &mut Criterion) {
    let p = build_burgers_fsi_1d(&ModelConfig::default()).unwrap();
    let x: Vec<f64> = (0..p.n_dof()).map(|i| (i as f64 * 0.01).sin()).collect();
    c.bench_function("spmv_a0_n399", |b| {
        b.iter(|| p.a0().spmv(black_box(&x)).unwrap())
    });
}

fn bench_factorize_solve(c: &mut Criterion) {
    let p = build_burgers_fsi_1d(&ModelConfig::default()).unwrap();
    let x0 = vec![0.0; p.n_dof()];
    let jac = p.jacobian(&x0, 40_000.0).unwrap();
    let rhs: Vec<f64> = (0..p.n_dof()).map(|i| (i as f64 * 0.02).cos()).collect();
    c.bench_function("banded_factorize_n399", |b| {
        b.iter(|| Factorization::new(black_box(&jac)).unwrap())
    });
    let fact = Factorization::new(&jac).unwrap();
    c.bench_function("banded_solve_n399", |b| {
        b.iter(|| fact.solve(black_box(&rhs)).unwrap())
    });
}

fn bench_newton_median(c: &mut Criterion) {
    let p = build_burgers_fsi_1d(&ModelConfig::default()).unwrap();
    let cfg = NewtonConfig {
        tol: 1e-10,
        ..NewtonConfig::default()
    };
    c.bench_function("newton_solve_n399_tol1e10", |b| {
        b.iter(|| newton_solve(black_box(&p), 40_000.0, &cfg).unwrap())
    });
}

fn bench_chebyshev_subset(c: &mut Criterion) {
    let cfg_model = ModelConfig::default();
    let p = build_burgers_fsi_1d(&cfg_model).unwrap();
    let set = cfg_model.parameter_set().unwrap();
    let partition = set.split(8).unwrap();
    let med = newton_solve(&p, partition.median_value(0).unwrap(), &NewtonConfig::default())
        .unwrap();
    let op = SylvesterOperator::from_problem(&p, &partition, 0, &med.x).unwrap();
    let pfact = op.mean_preconditioner().unwrap();
    let (_, v) = partition.subset_diag(0, p.mu_ref()).unwrap();
    let b_rhs = build_rhs(&p, &med.x, &v).unwrap();
    let cheb = ChebyshevConfig {
        d: 1.0,
        c: 0.12,
        max_rank: 9,
        trunc_tol: 1e-10,
        max_iter: 100,
        residual_tol: 1e-8,
    };
    c.bench_function("chebyshev_subset_n399_m25", |b| {
        b.iter(|| chebyshev_solve(&op, &pfact, black_box(&b_rhs), &cheb).unwrap())
    });
}

criterion_group!(
    benches,
    bench_spmv,
    bench_factorize_solve,
    bench_newton_median,
    bench_chebyshev_subset
);
criterion_main!(benches);
