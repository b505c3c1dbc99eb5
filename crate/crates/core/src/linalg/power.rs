//! Projected power iteration for the most-negative curvature direction of a
//! quadratic restricted to an affine subspace.
//!
//! With step `1/L` the gradient-difference update emulates the power method
//! on `I - P M P / L` (`P` the subspace projector), whose top eigenvector is
//! the eigenvector of the smallest eigenvalue of `P M P`. Iterates are kept
//! normalized; that rescales the classical power sequence without changing
//! its direction.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::polyhedron::AffineSubspace;
use crate::rng::{stream, stream_rng};
use crate::Error;

/// Iterations needed for the power method to reach a `(1 - eps)`-approximate
/// most-negative curvature value `delta` with failure probability
/// `fail_prob`:
///
/// `ceil(8 (L r^2 / (eps delta)) ln(L r d / (fail_prob eps delta)))`,
///
/// floored at `10 ln d`.
pub fn iteration_count(l: f64, r: f64, delta: f64, eps: f64, d: usize, fail_prob: f64) -> usize {
    const C: f64 = 8.0;
    let dd = d as f64;
    let log_arg = l * r * dd / (fail_prob * eps * delta);
    let t = C * (l * r * r / (eps * delta)) * log_arg.ln();
    let floor = 10.0 * dd.ln();
    t.max(floor).ceil().max(1.0) as usize
}

/// Runs `t` steps of `x <- proj_A(x - (grad(x) - grad(saddle)) / L)` from a
/// Gaussian start projected onto the subspace, and returns the final unit
/// direction (relative to the saddle).
///
/// `grad_at` must be the gradient of a quadratic whose curvature is bounded
/// by `l` in absolute value, and the saddle must lie in the subspace.
pub fn projected_power_iteration<G>(
    mut grad_at: G,
    saddle: &DVector<f64>,
    subspace: &AffineSubspace,
    l: f64,
    t: usize,
    rng_seed: u64,
) -> Result<DVector<f64>, Error>
where
    G: FnMut(&DVector<f64>) -> DVector<f64>,
{
    let (direction, _) = power_iterates(&mut grad_at, saddle, subspace, l, t, rng_seed, false)?;
    Ok(direction)
}

pub(crate) fn power_iterates<G>(
    grad_at: &mut G,
    saddle: &DVector<f64>,
    subspace: &AffineSubspace,
    l: f64,
    t: usize,
    rng_seed: u64,
    keep_trace: bool,
) -> Result<(DVector<f64>, Vec<DVector<f64>>), Error>
where
    G: FnMut(&DVector<f64>) -> DVector<f64>,
{
    if t == 0 {
        return Err(Error::InvalidParameter("power iteration needs t >= 1"));
    }
    if subspace.dim() == 0 {
        return Err(Error::InvalidParameter(
            "power iteration on a zero-dimensional subspace",
        ));
    }
    if l <= 0.0 {
        return Err(Error::InvalidParameter("power iteration needs L > 0"));
    }
    let d = saddle.len();
    let eta = 1.0 / l;
    let grad_saddle = grad_at(saddle);

    let mut rng = stream_rng(rng_seed, stream::POWER_INIT);
    let mut trace = Vec::new();

    // y is the offset x - saddle, confined to the subspace direction span.
    let mut y = DVector::<f64>::zeros(d);
    for _ in 0..16 {
        let noise = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        y = subspace.project_direction(&noise);
        let n = y.norm();
        if n > 1e-12 {
            y /= n;
            break;
        }
    }
    if y.norm() == 0.0 {
        return Err(Error::InvalidParameter(
            "could not draw a nonzero start in the subspace",
        ));
    }
    if keep_trace {
        trace.push(saddle + &y);
    }

    let mut last_unit = y.clone();
    for _ in 0..t {
        let grad = grad_at(&(saddle + &y));
        let stepped = &y - (grad - &grad_saddle) * eta;
        y = subspace.project_direction(&stepped);
        let n = y.norm();
        if n < 1e-300 {
            // The whole iterate was annihilated (curvature exactly L along
            // every surviving component); the previous direction is already
            // an extremal eigendirection.
            y = last_unit.clone();
            break;
        }
        y /= n;
        last_unit.copy_from(&y);
        if keep_trace {
            trace.push(saddle + &y);
        }
    }

    Ok((y, trace))
}
