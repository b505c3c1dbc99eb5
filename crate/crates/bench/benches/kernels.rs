//! Microbenchmarks of the numeric kernels: Dykstra projection, Jacobi
//! diagonalization, the secular solver, the model builder, and one full
//! escape step on a box-constrained quadratic.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use nalgebra::DVector;

use houdini_bench::{box_escape_instance, far_point, random_polytope, random_symmetric, secular_instance};
use houdini_core::escape::{houdini_escape, EscapeOptions};
use houdini_core::linalg::{jacobi_diagonalize, secular_solve};
use houdini_core::oracle::build_model;

fn bench_projection(c: &mut Criterion) {
    let p = random_polytope(20, 30, 1);
    let x = far_point(20, 2);
    c.bench_function("dykstra_project_d20_k30", |b| {
        b.iter(|| {
            let y = p
                .project(None, black_box(&x), 1e-10, p.default_projection_iters())
                .unwrap();
            black_box(y)
        })
    });
}

fn bench_jacobi(c: &mut Criterion) {
    let m = random_symmetric(40, 3);
    c.bench_function("jacobi_diagonalize_m40", |b| {
        b.iter(|| black_box(jacobi_diagonalize(black_box(&m), 1e-10).unwrap()))
    });
}

fn bench_secular(c: &mut Criterion) {
    let (lambdas, v) = secular_instance(40, 4);
    c.bench_function("secular_solve_m40", |b| {
        b.iter(|| black_box(secular_solve(black_box(&lambdas), &v, 1.0, 1e-12)))
    });
}

fn bench_model(c: &mut Criterion) {
    let (bundle, _) = box_escape_instance(24, 5);
    let x = DVector::<f64>::zeros(24);
    c.bench_function("build_model_d24", |b| {
        b.iter(|| black_box(build_model(&bundle, black_box(&x), 1e-3, 1e-8, 7).unwrap()))
    });
}

fn bench_escape_step(c: &mut Criterion) {
    let (bundle, p) = box_escape_instance(12, 6);
    let x = DVector::<f64>::zeros(12);
    let opts = EscapeOptions::default();
    c.bench_function("houdini_escape_d12_box", |b| {
        b.iter(|| black_box(houdini_escape(&bundle, &p, black_box(&x), 1e-3, 1e-8, 9, &opts).unwrap()))
    });
}

criterion_group!(
    kernels,
    bench_projection,
    bench_jacobi,
    bench_secular,
    bench_model,
    bench_escape_step
);
criterion_main!(kernels);
