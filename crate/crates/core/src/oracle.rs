//! Gradient oracles and the local quadratic model.
//!
//! [`OracleBundle`] wraps an objective with its smoothness constants and an
//! optional Gaussian gradient-noise level `sigma` (total standard deviation;
//! per-coordinate noise is `sigma / sqrt(d)` so that
//! `E ||g - grad f||^2 <= sigma^2`). [`vrsg`] turns noisy samples into a
//! high-probability estimate by a median of group means, and
//! [`build_model`] assembles the perturbed quadratic model one escape step
//! works on.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::coordinate_median;
use crate::rng::{stream, stream_rng};
use crate::Error;

/// Internal per-estimate failure probability used by the model builder.
const MODEL_FAIL_PROB: f64 = 0.01;

/// Group-count constant of the median-of-means estimator:
/// `M = ceil(2 ln(d / fail_prob))`.
const MEDIAN_GROUPS_C: f64 = 2.0;

/// A twice-differentiable objective with exact value and gradient access.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &DVector<f64>) -> f64;
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;
}

/// `f(x) = x^T M x / 2 + v^T x + c` (the matrix is symmetrized on
/// construction).
#[derive(Debug, Clone)]
pub struct Quadratic {
    m: DMatrix<f64>,
    v: DVector<f64>,
    c: f64,
}

impl Quadratic {
    pub fn new(m: DMatrix<f64>, v: DVector<f64>, c: f64) -> Result<Self, Error> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        if m.nrows() != v.len() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: v.len(),
            });
        }
        let sym = (&m + m.transpose()) * 0.5;
        Ok(Self { m: sym, v, c })
    }

    /// The homogeneous form `x^T M x / 2`.
    pub fn homogeneous(m: DMatrix<f64>) -> Result<Self, Error> {
        let d = m.nrows();
        Self::new(m, DVector::zeros(d), 0.0)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.v.len()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * (x.transpose() * &self.m * x)[(0, 0)] + self.v.dot(x) + self.c
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.m * x + &self.v
    }
}

/// The graph-partition relaxation objective `f(x) = x^T A x / 2` for an
/// adjacency matrix `A`.
#[derive(Debug, Clone)]
pub struct GraphPartition {
    adj: DMatrix<f64>,
}

impl GraphPartition {
    pub fn new(adj: DMatrix<f64>) -> Result<Self, Error> {
        if adj.nrows() != adj.ncols() {
            return Err(Error::DimensionMismatch {
                expected: adj.nrows(),
                got: adj.ncols(),
            });
        }
        Ok(Self {
            adj: (&adj + adj.transpose()) * 0.5,
        })
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adj
    }
}

impl Objective for GraphPartition {
    fn dim(&self) -> usize {
        self.adj.nrows()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * (x.transpose() * &self.adj * x)[(0, 0)]
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.adj * x
    }
}

/// The planar saddle `u^2 - v^2` composed with a rotation by pi/6, applied
/// to consecutive coordinate pairs; an odd leftover coordinate contributes
/// `x^2`. Purely quadratic, with curvature bounded by 2.
#[derive(Debug, Clone)]
pub struct RotatedSaddle {
    dim: usize,
}

impl RotatedSaddle {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }

    const COS: f64 = 0.8660254037844387; // cos(pi/6)
    const SIN: f64 = 0.5;
}

impl Objective for RotatedSaddle {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let (c, s) = (Self::COS, Self::SIN);
        let mut f = 0.0;
        let mut i = 0;
        while i + 1 < self.dim {
            let (a, b) = (x[i], x[i + 1]);
            let u = c * a + s * b;
            let v = -s * a + c * b;
            f += u * u - v * v;
            i += 2;
        }
        if i < self.dim {
            f += x[i] * x[i];
        }
        f
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let (c, s) = (Self::COS, Self::SIN);
        let mut g = DVector::zeros(self.dim);
        let mut i = 0;
        while i + 1 < self.dim {
            let (a, b) = (x[i], x[i + 1]);
            let u = c * a + s * b;
            let v = -s * a + c * b;
            g[i] = 2.0 * u * c + 2.0 * v * s;
            g[i + 1] = 2.0 * u * s - 2.0 * v * c;
            i += 2;
        }
        if i < self.dim {
            g[i] = 2.0 * x[i];
        }
        g
    }
}

/// A smooth cubic test objective `sum_i x_i^3 / 6 + x^T Q x / 2 + q^T x`
/// with a fixed, deterministic quadratic part. Its Hessian is
/// `diag(x) + Q`, so the Hessian-Lipschitz constant is 1.
#[derive(Debug, Clone)]
pub struct CubicMix {
    q: DMatrix<f64>,
    lin: DVector<f64>,
}

impl CubicMix {
    pub fn new(dim: usize) -> Self {
        let q = DMatrix::from_fn(dim, dim, |i, j| {
            0.3 / (1.0 + (i as f64 - j as f64).abs())
        });
        let lin = DVector::from_fn(dim, |i, _| 0.2 * if i % 2 == 0 { 1.0 } else { -1.0 } / (i + 1) as f64);
        Self { q, lin }
    }
}

impl Objective for CubicMix {
    fn dim(&self) -> usize {
        self.lin.len()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let cubic: f64 = x.iter().map(|&t| t * t * t / 6.0).sum();
        cubic + 0.5 * (x.transpose() * &self.q * x)[(0, 0)] + self.lin.dot(x)
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut g = &self.q * x + &self.lin;
        for i in 0..x.len() {
            g[i] += 0.5 * x[i] * x[i];
        }
        g
    }
}

/// An objective bundled with smoothness constants, a noise level, and a
/// monotone stochastic-gradient call counter.
pub struct OracleBundle {
    objective: Arc<dyn Objective>,
    l: f64,
    rho: f64,
    sigma: f64,
    calls: AtomicU64,
}

impl OracleBundle {
    pub fn new(objective: Arc<dyn Objective>, l: f64, rho: f64, sigma: f64) -> Self {
        Self {
            objective,
            l,
            rho,
            sigma,
            calls: AtomicU64::new(0),
        }
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Exact function value (the value oracle is exact even in the
    /// stochastic-gradient setting; acceptance checks evaluate `f` itself).
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        self.objective.value(x)
    }

    /// One stochastic gradient sample; increments the call counter by
    /// exactly one. With `sigma = 0` the sample is the exact gradient and
    /// consumes no randomness.
    pub fn stochastic_gradient(&self, x: &DVector<f64>, rng: &mut ChaCha8Rng) -> DVector<f64> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        let mut g = self.objective.gradient(x);
        if self.sigma > 0.0 {
            use rand::Rng;
            let scale = self.sigma / (self.dim() as f64).sqrt();
            for i in 0..g.len() {
                let z: f64 = rng.sample(StandardNormal);
                g[i] += scale * z;
            }
        }
        g
    }

    pub fn gradient_calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}

/// Variance-reduced stochastic gradient: the coordinate-wise median of
/// `M = ceil(2 ln(d / fail_prob))` group means of `K = ceil(2 sigma^2 /
/// sigma_tilde^2)` samples each, satisfying
/// `||g - grad f(x)|| < sigma_tilde` with probability `>= 1 - fail_prob`.
///
/// With `sigma = 0` a single exact call is returned. The call count is
/// exactly `M * K` otherwise.
pub fn vrsg(
    bundle: &OracleBundle,
    x: &DVector<f64>,
    sigma_tilde: f64,
    fail_prob: f64,
    rng: &mut ChaCha8Rng,
) -> DVector<f64> {
    assert!(sigma_tilde > 0.0, "vrsg needs sigma_tilde > 0");
    if bundle.sigma == 0.0 {
        return bundle.stochastic_gradient(x, rng);
    }
    let d = bundle.dim() as f64;
    let k = (2.0 * bundle.sigma * bundle.sigma / (sigma_tilde * sigma_tilde)).ceil() as usize;
    let k = k.max(1);
    let groups = (MEDIAN_GROUPS_C * (d / fail_prob).ln()).ceil().max(1.0) as usize;

    let mut means = Vec::with_capacity(groups);
    for _ in 0..groups {
        let mut acc = DVector::<f64>::zeros(bundle.dim());
        for _ in 0..k {
            acc += bundle.stochastic_gradient(x, rng);
        }
        means.push(acc / k as f64);
    }
    coordinate_median(&means).expect("non-empty group list")
}

/// Finite-difference Hessian estimate: column `i` is
/// `(vrsg(x + theta e_i) - vrsg(x)) / theta`, with the base estimate
/// computed once; the result is symmetrized. Uses `d + 1` gradient-estimate
/// sites.
pub fn estimate_hessian(
    bundle: &OracleBundle,
    x: &DVector<f64>,
    theta: f64,
    sigma_tilde: f64,
    fail_prob: f64,
    rng_seed: u64,
) -> DMatrix<f64> {
    assert!(theta > 0.0, "finite-difference step must be positive");
    let d = bundle.dim();
    let mut base_rng = stream_rng(rng_seed, stream::HESSIAN_BASE);
    let g0 = vrsg(bundle, x, sigma_tilde, fail_prob, &mut base_rng);

    let mut h = DMatrix::<f64>::zeros(d, d);
    for i in 0..d {
        let mut shifted = x.clone();
        shifted[i] += theta;
        let mut rng = stream_rng(rng_seed, stream::HESSIAN_COL + i as u64);
        let gi = vrsg(bundle, &shifted, sigma_tilde, fail_prob, &mut rng);
        h.set_column(i, &((gi - &g0) / theta));
    }
    (&h + h.transpose()) * 0.5
}

/// The perturbed local quadratic model
/// `f'(base + h) = f(base) + h^T v + h^T M h / 2`.
#[derive(Debug, Clone)]
pub struct QuadraticModel {
    /// The saddle candidate the model is anchored at.
    pub base: DVector<f64>,
    /// `f(base)`, from the exact value oracle.
    pub base_value: f64,
    /// Perturbed gradient estimate.
    pub v: DVector<f64>,
    /// Perturbed symmetric Hessian estimate.
    pub m: DMatrix<f64>,
    /// Decrease target of the escape step.
    pub delta: f64,
    /// Model radius `cbrt(delta / rho)`.
    pub r: f64,
    /// Noise scale used for the perturbations.
    pub xi: f64,
}

impl QuadraticModel {
    /// Model value at an ambient point.
    pub fn value(&self, u: &DVector<f64>) -> f64 {
        let h = u - &self.base;
        self.base_value + h.dot(&self.v) + 0.5 * (h.transpose() * &self.m * &h)[(0, 0)]
    }
}

/// Builds the perturbed quadratic model at `x`:
///
/// * `r = cbrt(delta / rho)`, `theta = r / (4 sqrt(d))`,
///   Hessian accuracy `rho r^2 / (16 d)`, gradient accuracy
///   `delta / (12 r)`;
/// * `v = vrsg(x) + zeta` with `zeta` Gaussian of per-coordinate standard
///   deviation `xi delta / (r sqrt(d))`;
/// * `M = H + gamma I` with `gamma` uniform on `[-xi, xi]`.
pub fn build_model(
    bundle: &OracleBundle,
    x: &DVector<f64>,
    delta: f64,
    xi: f64,
    rng_seed: u64,
) -> Result<QuadraticModel, Error> {
    if delta <= 0.0 || xi <= 0.0 {
        return Err(Error::InvalidParameter("build_model needs delta > 0 and xi > 0"));
    }
    if bundle.rho <= 0.0 {
        return Err(Error::InvalidParameter(
            "build_model needs rho > 0 (for quadratics back-solve rho = delta / r^3)",
        ));
    }
    let d = bundle.dim();
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x.len(),
        });
    }
    let dd = d as f64;
    let r = (delta / bundle.rho).cbrt();
    let theta = r / (4.0 * dd.sqrt());
    let sigma_h = bundle.rho * r * r / (16.0 * dd);
    let sigma_v = delta / (12.0 * r);

    let h = estimate_hessian(bundle, x, theta, sigma_h, MODEL_FAIL_PROB, rng_seed);

    let mut grad_rng = stream_rng(rng_seed, stream::MODEL_GRADIENT);
    let mut v = vrsg(bundle, x, sigma_v, MODEL_FAIL_PROB, &mut grad_rng);
    let zeta_std = xi * delta / (r * dd.sqrt());
    let mut zeta_rng = stream_rng(rng_seed, stream::MODEL_ZETA);
    for i in 0..d {
        use rand::Rng;
        let z: f64 = zeta_rng.sample(StandardNormal);
        v[i] += zeta_std * z;
    }

    let mut gamma_rng = stream_rng(rng_seed, stream::MODEL_GAMMA);
    let gamma = {
        use rand::Rng;
        gamma_rng.random_range(-xi..=xi)
    };
    let m = h + DMatrix::<f64>::identity(d, d) * gamma;

    Ok(QuadraticModel {
        base: x.clone(),
        base_value: bundle.value(x),
        v,
        m,
        delta,
        r,
        xi,
    })
}
