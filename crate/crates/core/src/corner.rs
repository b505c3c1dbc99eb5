//! Saddle escape for purely quadratic objectives anchored at a corner of a
//! linear cone `{x | Ax <= 0}`.
//!
//! The search enumerates constraint subsets from largest to smallest; for
//! each, the most-negative curvature direction of the quadratic restricted
//! to the subset's subspace is found by projected power iteration and
//! rescaled to the ball radius. Whichever of the two signed endpoints is
//! feasible and decreases the objective past the threshold is the escape.
//! Trying maximal subsets first matches the induction that makes an accepted
//! point automatically feasible.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};

use crate::linalg::{iteration_count, projected_power_iteration};
use crate::polyhedron::{AffineSubspace, Polyhedron};
use crate::rng::mix_seed;
use crate::Error;

/// Feasibility band for cone membership checks, relative to row norms.
const ACTIVE_TOL: f64 = 1e-9;

/// A quadratic corner saddle point instance: `f(x) = x^T M x / 2` over the
/// cone `{x | Ax <= 0}`, with the saddle shifted to the origin.
#[derive(Debug, Clone)]
pub struct QcspInstance {
    m: DMatrix<f64>,
    cone: Polyhedron,
    delta: f64,
    r: f64,
    l: f64,
}

impl QcspInstance {
    /// Builds an instance from the quadratic term and the cone normals. The
    /// offsets are zero by construction and `M` is symmetrized exactly.
    /// `l` must bound the absolute eigenvalues of `M` (caller guarantee).
    pub fn new(
        m: DMatrix<f64>,
        cone_normals: DMatrix<f64>,
        delta: f64,
        r: f64,
        l: f64,
    ) -> Result<Self, Error> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        if cone_normals.ncols() != m.nrows() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: cone_normals.ncols(),
            });
        }
        if delta <= 0.0 || r <= 0.0 || l <= 0.0 {
            return Err(Error::InvalidParameter("delta, r and L must be positive"));
        }
        let k = cone_normals.nrows();
        let cone = Polyhedron::new(cone_normals, DVector::zeros(k))?;
        Ok(Self {
            m: (&m + m.transpose()) * 0.5,
            cone,
            delta,
            r,
            l,
        })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn cone(&self) -> &Polyhedron {
        &self.cone
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * (x.transpose() * &self.m * x)[(0, 0)]
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.m * x
    }
}

/// Outcome of [`escape_corner_detailed`], with the counters the complexity
/// bound is stated in.
#[derive(Debug, Clone)]
pub struct CornerSearch {
    /// The escape point, when one was accepted.
    pub point: Option<DVector<f64>>,
    /// Total gradient evaluations across all power iterations.
    pub gradient_evals: u64,
    /// Subsets on which the inner search actually ran.
    pub subsets_examined: u64,
}

/// Searches every constraint subset (decreasing cardinality, lexicographic
/// within a cardinality) for a feasible point of norm `r` with
/// `f(y) < -(1 - eps) delta`. Returns `None` when no subset yields one —
/// absence of an escape is a valid answer.
pub fn escape_corner(
    inst: &QcspInstance,
    eps: f64,
    fail_prob: f64,
    rng_seed: u64,
) -> Option<DVector<f64>> {
    escape_corner_detailed(inst, eps, fail_prob, rng_seed).point
}

/// [`escape_corner`] with evaluation counters.
pub fn escape_corner_detailed(
    inst: &QcspInstance,
    eps: f64,
    fail_prob: f64,
    rng_seed: u64,
) -> CornerSearch {
    let k = inst.cone.num_constraints();
    let origin = DVector::<f64>::zeros(inst.dim());
    let threshold = -(1.0 - eps) * inst.delta;
    // The approximation loss is split as eps/k per enforced constraint so
    // the per-subset targets telescope to the global one.
    let eps_per = eps / k.max(1) as f64;
    let subset_fail = (fail_prob / 2f64.powi(k.min(60) as i32)).max(1e-15);

    let mut gradient_evals = 0u64;
    let mut subsets_examined = 0u64;
    let mut subset_counter = 0u64;

    for size in (0..=k).rev() {
        for subset in (0..k).combinations(size) {
            subset_counter += 1;
            let Ok(subspace) = inst.cone.affine_subspace(&origin, &subset) else {
                continue; // rank-deficient selections are redundant
            };
            if subspace.dim() == 0 {
                continue;
            }
            subsets_examined += 1;
            let target_delta = inst.delta * (1.0 - subset.len() as f64 * eps_per);
            if target_delta <= 0.0 {
                continue;
            }
            let candidate = find_inside_with_target(
                inst,
                &subspace,
                target_delta,
                eps_per.min(eps),
                subset_fail,
                mix_seed(rng_seed, subset_counter),
                &mut gradient_evals,
            );
            let Ok(y) = candidate else { continue };
            let feasible = inst.cone.contains(&y, ACTIVE_TOL).unwrap_or(false);
            if feasible && inst.value(&y) < threshold {
                return CornerSearch {
                    point: Some(y),
                    gradient_evals,
                    subsets_examined,
                };
            }
        }
    }
    CornerSearch {
        point: None,
        gradient_evals,
        subsets_examined,
    }
}

/// Runs the power iteration on the subspace and rescales the direction to
/// radius `r`, picking a feasible sign (`+` first; ties go to the smaller
/// objective value, which for quadratics is a pure tie-break).
///
/// The subspace must pass through the corner; zero-dimensional subspaces
/// are rejected.
pub fn find_inside_corner(
    inst: &QcspInstance,
    subspace: &AffineSubspace,
    eps: f64,
    fail_prob: f64,
    rng_seed: u64,
) -> Result<DVector<f64>, Error> {
    let mut evals = 0;
    find_inside_with_target(inst, subspace, inst.delta, eps, fail_prob, rng_seed, &mut evals)
}

fn find_inside_with_target(
    inst: &QcspInstance,
    subspace: &AffineSubspace,
    target_delta: f64,
    eps: f64,
    fail_prob: f64,
    rng_seed: u64,
    evals: &mut u64,
) -> Result<DVector<f64>, Error> {
    let t = iteration_count(inst.l, inst.r, target_delta, eps, inst.dim(), fail_prob);
    let origin = DVector::<f64>::zeros(inst.dim());
    let m = &inst.m;
    let grad = |x: &DVector<f64>| {
        *evals += 1;
        m * x
    };
    let e = projected_power_iteration(grad, &origin, subspace, inst.l, t, rng_seed)?;

    let plus = &e * inst.r;
    let minus = -&plus;
    let plus_ok = inst.cone.contains(&plus, ACTIVE_TOL)?;
    let minus_ok = inst.cone.contains(&minus, ACTIVE_TOL)?;
    Ok(match (plus_ok, minus_ok) {
        (true, false) => plus,
        (false, true) => minus,
        // Both feasible: f(plus) == f(minus) for quadratics, so this is a
        // deterministic tie-break. Neither feasible: return one anyway and
        // let the caller's membership check reject it.
        _ => {
            if inst.value(&plus) <= inst.value(&minus) {
                plus
            } else {
                minus
            }
        }
    })
}
