//! Shared independent oracles for the integration and acceptance suites:
//! exhaustive active-set projection, dense grid searches, and instance
//! generators. None of these reuse the algorithmic paths they are used to
//! check.

#![allow(dead_code)] // each test binary uses a subset of the helpers

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use houdini_core::rng::stream_rng;
use houdini_core::Polyhedron;

pub fn random_orthogonal(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let raw = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0_f64));
    raw.qr().q()
}

/// Symmetric matrix with the given eigenvalues in a random orthonormal
/// basis.
pub fn symmetric_with_spectrum(lambdas: &[f64], rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let d = lambdas.len();
    let q = random_orthogonal(d, rng);
    &q * DMatrix::from_diagonal(&DVector::from_row_slice(lambdas)) * q.transpose()
}

/// `k` random halfspaces that all contain `interior` with slack drawn from
/// `[slack_lo, slack_hi]`, so the polytope is nonempty.
pub fn polytope_containing(
    interior: &DVector<f64>,
    k: usize,
    slack_lo: f64,
    slack_hi: f64,
    rng: &mut ChaCha8Rng,
) -> Polyhedron {
    let d = interior.len();
    loop {
        let a = DMatrix::from_fn(k, d, |_, _| rng.random_range(-1.0..1.0_f64));
        let mut b = DVector::zeros(k);
        let mut ok = true;
        for i in 0..k {
            let norm = a.row(i).norm();
            if norm < 1e-3 {
                ok = false;
                break;
            }
            b[i] = a.row(i).dot(&interior.transpose()) + rng.random_range(slack_lo..slack_hi);
        }
        if !ok {
            continue;
        }
        if let Ok(p) = Polyhedron::new(a, b) {
            return p;
        }
    }
}

/// Exhaustive active-set projection oracle: for every subset `I` of the
/// rows, the KKT candidate `x - A_I^T (A_I A_I^T)^+ (A_I x - b_I)`; the
/// projection is the feasible candidate closest to `x`. Independent of the
/// Dykstra path (pseudo-inverses via SVD).
pub fn projection_oracle(p: &Polyhedron, x: &DVector<f64>, feas_tol: f64) -> Option<DVector<f64>> {
    let k = p.num_constraints();
    assert!(k <= 20, "oracle is exponential in k");
    let a = p.matrix();
    let b = p.offsets();
    let mut best: Option<(f64, DVector<f64>)> = None;
    for mask in 0u32..(1 << k) {
        let rows: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
        let candidate = if rows.is_empty() {
            x.clone()
        } else {
            let mut ai = DMatrix::<f64>::zeros(rows.len(), p.dim());
            let mut bi = DVector::<f64>::zeros(rows.len());
            for (j, &i) in rows.iter().enumerate() {
                ai.set_row(j, &a.row(i));
                bi[j] = b[i];
            }
            let gram = &ai * ai.transpose();
            let Ok(pinv) = gram.pseudo_inverse(1e-12) else {
                continue;
            };
            x - ai.transpose() * (pinv * (&ai * x - bi))
        };
        let feasible = (0..k).all(|i| {
            (a.row(i).dot(&candidate.transpose()) - b[i]) <= feas_tol * p.row_norm(i)
        });
        if !feasible {
            continue;
        }
        let dist = (x - &candidate).norm();
        if best.as_ref().is_none_or(|(d, _)| dist < *d) {
            best = Some((dist, candidate));
        }
    }
    best.map(|(_, y)| y)
}

/// Dense grid minimum of `f` over `{h : ||h|| <= r, feasible(h)}` for
/// d in {1, 2, 3}, at grid resolution `r / steps_half` per axis. Returns
/// `None` when no grid point is feasible.
pub fn grid_min_in_ball(
    f: &dyn Fn(&DVector<f64>) -> f64,
    feasible: &dyn Fn(&DVector<f64>) -> bool,
    d: usize,
    r: f64,
    steps_half: i64,
) -> Option<f64> {
    let s = r / steps_half as f64;
    let r2 = r * r;
    let mut best: Option<f64> = None;
    let mut h = DVector::<f64>::zeros(d);
    match d {
        1 => {
            for i in -steps_half..=steps_half {
                h[0] = s * i as f64;
                if h[0] * h[0] <= r2 && feasible(&h) {
                    let v = f(&h);
                    best = Some(best.map_or(v, |b: f64| b.min(v)));
                }
            }
        }
        2 => {
            for i in -steps_half..=steps_half {
                let h1 = s * i as f64;
                let n1 = h1 * h1;
                if n1 > r2 {
                    continue;
                }
                for j in -steps_half..=steps_half {
                    let h2 = s * j as f64;
                    if n1 + h2 * h2 > r2 {
                        continue;
                    }
                    h[0] = h1;
                    h[1] = h2;
                    if feasible(&h) {
                        let v = f(&h);
                        best = Some(best.map_or(v, |b: f64| b.min(v)));
                    }
                }
            }
        }
        3 => {
            for i in -steps_half..=steps_half {
                let h1 = s * i as f64;
                let n1 = h1 * h1;
                if n1 > r2 {
                    continue;
                }
                for j in -steps_half..=steps_half {
                    let h2 = s * j as f64;
                    let n2 = n1 + h2 * h2;
                    if n2 > r2 {
                        continue;
                    }
                    for l in -steps_half..=steps_half {
                        let h3 = s * l as f64;
                        if n2 + h3 * h3 > r2 {
                            continue;
                        }
                        h[0] = h1;
                        h[1] = h2;
                        h[2] = h3;
                        if feasible(&h) {
                            let v = f(&h);
                            best = Some(best.map_or(v, |b: f64| b.min(v)));
                        }
                    }
                }
            }
        }
        _ => panic!("grid oracle supports d <= 3"),
    }
    best
}

/// Minimum of the quadratic `u^T M u / 2` over feasible unit directions of
/// the cone, scaled to radius `r` — i.e. the minimum over the feasible
/// sphere `S ∩ ∂B(r)` of a homogeneous quadratic. Directions are swept at
/// angular resolution `angle_step` (d in {2, 3}). Returns `None` when no
/// feasible direction is found.
pub fn cone_sphere_grid_min(
    m: &DMatrix<f64>,
    cone: &Polyhedron,
    r: f64,
    angle_step: f64,
) -> Option<f64> {
    let d = m.nrows();
    let mut best: Option<f64> = None;
    let mut consider = |u: DVector<f64>| {
        if cone.contains(&u, 0.0).unwrap() {
            let v = 0.5 * r * r * (u.transpose() * m * &u)[(0, 0)];
            best = Some(best.map_or(v, |b: f64| b.min(v)));
        }
    };
    match d {
        2 => {
            let n = (std::f64::consts::TAU / angle_step).ceil() as usize;
            for i in 0..n {
                let t = angle_step * i as f64;
                consider(DVector::from_vec(vec![t.cos(), t.sin()]));
            }
        }
        3 => {
            let n_theta = (std::f64::consts::PI / angle_step).ceil() as usize;
            let n_phi = (std::f64::consts::TAU / angle_step).ceil() as usize;
            for i in 0..=n_theta {
                let theta = angle_step * i as f64;
                let (st, ct) = theta.sin_cos();
                for j in 0..n_phi {
                    let phi = angle_step * j as f64;
                    let (sp, cp) = phi.sin_cos();
                    consider(DVector::from_vec(vec![st * cp, st * sp, ct]));
                    if i == 0 || i == n_theta {
                        break; // poles need a single sample
                    }
                }
            }
        }
        _ => panic!("sphere oracle supports d in {{2, 3}}"),
    }
    best
}

/// Uniform sample from the ball `||h|| <= r`.
pub fn sample_in_ball(d: usize, r: f64, rng: &mut ChaCha8Rng) -> DVector<f64> {
    use rand_distr::StandardNormal;
    loop {
        let g = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = g.norm();
        if n > 0.0 {
            let u: f64 = rng.random_range(0.0..1.0_f64);
            return g * (r * u.powf(1.0 / d as f64) / n);
        }
    }
}
