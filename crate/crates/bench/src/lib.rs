//! Instance builders shared by the kernel benchmarks.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use houdini_core::oracle::{OracleBundle, Quadratic};
use houdini_core::rng::stream_rng;
use houdini_core::Polyhedron;

/// Random symmetric matrix with entries in `[-1, 1]`.
pub fn random_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = stream_rng(seed, 301);
    let raw = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    (&raw + raw.transpose()) * 0.5
}

/// Random polytope of `k` halfspaces that all contain the origin with
/// positive slack, so intersections with small balls are nonempty.
pub fn random_polytope(d: usize, k: usize, seed: u64) -> Polyhedron {
    let mut rng = stream_rng(seed, 302);
    let a = DMatrix::from_fn(k, d, |_, _| rng.random_range(-1.0..1.0));
    let b = DVector::from_fn(k, |_, _| rng.random_range(0.2..1.0));
    Polyhedron::new(a, b).expect("rows are nonzero with probability one")
}

/// A point outside the polytope to project.
pub fn far_point(d: usize, seed: u64) -> DVector<f64> {
    let mut rng = stream_rng(seed, 303);
    DVector::from_fn(d, |_, _| rng.random_range(2.0..4.0))
}

/// An indefinite quadratic bundle over a box, for whole-escape-step
/// benchmarks.
pub fn box_escape_instance(d: usize, seed: u64) -> (OracleBundle, Polyhedron) {
    let m = random_symmetric(d, seed);
    let objective = Quadratic::homogeneous(m).expect("square matrix");
    let bundle = OracleBundle::new(Arc::new(objective), d as f64, 1.0, 0.0);
    let mut a = DMatrix::<f64>::zeros(2 * d, d);
    for i in 0..d {
        a[(i, i)] = 1.0;
        a[(d + i, i)] = -1.0;
    }
    let p = Polyhedron::new(a, DVector::from_element(2 * d, 1.0)).expect("box");
    (bundle, p)
}

/// Secular-equation data with well-separated poles.
pub fn secular_instance(m: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = stream_rng(seed, 304);
    let lambdas: Vec<f64> = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
    let v: Vec<f64> = (0..m)
        .map(|_| {
            let x: f64 = rng.random_range(0.05..1.0);
            if rng.random::<bool>() {
                x
            } else {
                -x
            }
        })
        .collect();
    (lambdas, v)
}
