//! Feasible sets cut out by linear inequalities `Ax <= b`: membership and
//! activity tests, affine subspaces from constraint subsets, and projections
//! onto intersections of the set with a ball.

use nalgebra::{DMatrix, DVector};

use crate::linalg::qr::pivoted_qr;
use crate::Error;

/// Relative pivot threshold below which a constraint subset is declared
/// rank deficient (and skipped as redundant by enumerations).
const RANK_TOL: f64 = 1e-12;

/// The set `S = {x in R^d | Ax <= b}` with `k` constraint rows.
#[derive(Debug, Clone)]
pub struct Polyhedron {
    a: DMatrix<f64>,
    b: DVector<f64>,
    row_norms: Vec<f64>,
}

impl Polyhedron {
    /// Builds the set, rejecting non-finite entries and zero rows.
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self, Error> {
        if a.ncols() == 0 {
            return Err(Error::InvalidParameter("ambient dimension must be >= 1"));
        }
        if a.nrows() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                got: b.len(),
            });
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { what: "constraint matrix" });
        }
        if b.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { what: "constraint offsets" });
        }
        let mut row_norms = Vec::with_capacity(a.nrows());
        for i in 0..a.nrows() {
            let n = a.row(i).norm();
            if n == 0.0 {
                return Err(Error::ZeroRow { row: i });
            }
            row_norms.push(n);
        }
        Ok(Self { a, b, row_norms })
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn num_constraints(&self) -> usize {
        self.a.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn offsets(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn row_norm(&self, i: usize) -> f64 {
        self.row_norms[i]
    }

    fn check_dim(&self, x: &DVector<f64>) -> Result<(), Error> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Residuals `Ax - b`; negative entries are slack.
    fn residuals(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x - &self.b
    }

    /// Largest constraint violation relative to the row norm (0 when
    /// feasible).
    pub fn max_violation(&self, x: &DVector<f64>) -> f64 {
        let res = self.residuals(x);
        (0..self.num_constraints())
            .map(|i| res[i] / self.row_norms[i])
            .fold(0.0, f64::max)
    }

    /// True iff `A_i^T x <= b_i + tol * ||A_i||` for every row.
    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> Result<bool, Error> {
        self.check_dim(x)?;
        let res = self.residuals(x);
        Ok((0..self.num_constraints()).all(|i| res[i] <= tol * self.row_norms[i]))
    }

    /// Indices of constraints holding with equality at `x`, within a band of
    /// `tol` relative to the row norm. `x` must be feasible at that
    /// tolerance.
    pub fn active_set(&self, x: &DVector<f64>, tol: f64) -> Result<Vec<usize>, Error> {
        self.check_dim(x)?;
        let res = self.residuals(x);
        let mut active = Vec::new();
        for i in 0..self.num_constraints() {
            let rel = res[i] / self.row_norms[i];
            if rel > tol {
                return Err(Error::Infeasible { violation: rel });
            }
            if rel.abs() <= tol {
                active.push(i);
            }
        }
        Ok(active)
    }

    /// Constraints whose active hyperplane intersects the ball `B(x, r)`,
    /// i.e. `b_i - A_i^T x <= r * ||A_i||`. `x` is assumed feasible.
    pub fn reachable_constraints(&self, x: &DVector<f64>, r: f64) -> Vec<usize> {
        let res = self.residuals(x);
        (0..self.num_constraints())
            .filter(|&i| -res[i] <= r * self.row_norms[i])
            .collect()
    }

    /// The affine set `{y | A_i^T y = b_i, i in I}` described by the
    /// projection of `x` onto it (the anchor) and an orthonormal basis of
    /// its direction space.
    ///
    /// Linearly dependent selections report [`Error::RankDeficient`]; such
    /// subsets are redundant for enumeration purposes.
    pub fn affine_subspace(&self, x: &DVector<f64>, indices: &[usize]) -> Result<AffineSubspace, Error> {
        self.check_dim(x)?;
        let d = self.dim();
        let mut idx: Vec<usize> = indices.to_vec();
        idx.sort_unstable();
        idx.dedup();
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.num_constraints()) {
            return Err(Error::DimensionMismatch {
                expected: self.num_constraints(),
                got: bad,
            });
        }
        let m = idx.len();
        if m == 0 {
            return Ok(AffineSubspace {
                indices: idx,
                anchor: x.clone(),
                basis: DMatrix::identity(d, d),
            });
        }
        if m > d {
            return Err(Error::RankDeficient { rank: d, rows: m });
        }

        // Factor A_I^T; the null-space columns of Q span the subspace
        // direction and the triangular factor gives the anchor.
        let mut e = DMatrix::<f64>::zeros(d, m);
        for (j, &i) in idx.iter().enumerate() {
            e.set_column(j, &self.a.row(i).transpose());
        }
        let qr = pivoted_qr(&e, RANK_TOL);
        if qr.rank < m {
            return Err(Error::RankDeficient { rank: qr.rank, rows: m });
        }

        // anchor = x + Q_1 R^-T P^T (b_I - A_I x)
        let mut w = DVector::<f64>::zeros(m);
        for (j, &i) in idx.iter().enumerate() {
            w[j] = self.b[i] - self.a.row(i).dot(&x.transpose());
        }
        let mut w_permuted = DVector::<f64>::zeros(m);
        for j in 0..m {
            w_permuted[j] = w[qr.perm[j]];
        }
        let z = qr.solve_rt(&w_permuted);
        let anchor = x + qr.q.columns(0, m) * z;
        let basis = qr.q.columns(m, d - m).into_owned();

        Ok(AffineSubspace {
            indices: idx,
            anchor,
            basis,
        })
    }

    /// Default Dykstra iteration budget, `100 k d` (floored at `100 d` so
    /// ball-only projections get a budget too).
    pub fn default_projection_iters(&self) -> usize {
        100 * self.num_constraints().max(1) * self.dim()
    }

    /// Projects `x` onto the intersection of the set with an optional ball,
    /// by Dykstra's alternating projections over the halfspaces and the
    /// ball. Converges when the max feasibility violation and the change
    /// over a full cycle are both at most `tol`.
    ///
    /// A budget exhaustion usually means the intersection is empty.
    pub fn project(
        &self,
        ball: Option<(&DVector<f64>, f64)>,
        x: &DVector<f64>,
        tol: f64,
        max_iter: usize,
    ) -> Result<DVector<f64>, Error> {
        self.check_dim(x)?;
        if tol <= 0.0 {
            return Err(Error::InvalidParameter("projection tolerance must be positive"));
        }
        let k = self.num_constraints();
        let n_sets = k + usize::from(ball.is_some());
        if n_sets == 0 {
            return Ok(x.clone());
        }

        let mut y = x.clone();
        let mut increments = vec![DVector::<f64>::zeros(self.dim()); n_sets];
        let mut violation = f64::INFINITY;
        for _cycle in 0..max_iter {
            let y_before = y.clone();
            for (i, increment) in increments.iter_mut().take(k).enumerate() {
                let z = &y + &*increment;
                let overshoot = self.a.row(i).dot(&z.transpose()) - self.b[i];
                let projected = if overshoot > 0.0 {
                    let scale = overshoot / (self.row_norms[i] * self.row_norms[i]);
                    &z - self.a.row(i).transpose() * scale
                } else {
                    z.clone()
                };
                *increment = z - &projected;
                y = projected;
            }
            if let Some((center, radius)) = ball {
                let z = &y + &increments[k];
                let offset = &z - center;
                let n = offset.norm();
                let projected = if n > radius {
                    center + offset * (radius / n)
                } else {
                    z.clone()
                };
                increments[k] = z - &projected;
                y = projected;
            }

            violation = self.max_violation(&y);
            if let Some((center, radius)) = ball {
                violation = violation.max((&y - center).norm() - radius);
            }
            let change = (&y - &y_before).norm();
            if violation <= tol && change <= tol {
                return Ok(y);
            }
        }
        Err(Error::ProjectionStalled {
            max_iter,
            violation,
        })
    }
}

/// An affine subspace `{anchor + O y}` with orthonormal direction basis `O`
/// (columns), produced from a subset of constraints held at equality.
#[derive(Debug, Clone)]
pub struct AffineSubspace {
    indices: Vec<usize>,
    anchor: DVector<f64>,
    basis: DMatrix<f64>,
}

impl AffineSubspace {
    /// Sorted indices of the constraints held at equality.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// The projection of the defining point onto the subspace.
    pub fn anchor(&self) -> &DVector<f64> {
        &self.anchor
    }

    /// Orthonormal `d x dim` basis of the direction space.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Orthogonal projection of an ambient point onto the subspace.
    pub fn project(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.anchor + self.project_direction(&(z - &self.anchor))
    }

    /// Projection of a direction onto the span of the basis.
    pub fn project_direction(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.basis * (self.basis.transpose() * z)
    }
}

/// Minimizes the linear objective `y^T v` over `{A y <= b} ∩ B(0, r)` by
/// projected gradient steps of length `r` (the problem is convex and every
/// projection is a Dykstra solve). With no linear constraints the closed
/// form `-r v / ||v||` is returned; `v = 0` returns the origin.
pub fn linear_min_over_ball_polytope(
    p_sub: &Polyhedron,
    r: f64,
    v: &DVector<f64>,
    tol: f64,
) -> Result<DVector<f64>, Error> {
    if r <= 0.0 {
        return Err(Error::InvalidParameter("ball radius must be positive"));
    }
    let norm_v = v.norm();
    if norm_v == 0.0 {
        return Ok(DVector::zeros(v.len()));
    }
    if p_sub.num_constraints() == 0 {
        return Ok(-(v * (r / norm_v)));
    }

    const MAX_STEPS: usize = 10_000;
    let origin = DVector::<f64>::zeros(v.len());
    let proj_tol = (tol * r * 1e-2).clamp(1e-14, 1e-10);
    let proj_iters = p_sub.default_projection_iters();
    let step = v * (r / norm_v);

    let mut y = p_sub.project(Some((&origin, r)), &origin, proj_tol, proj_iters)?;
    let stop = tol * r;
    for _ in 0..MAX_STEPS {
        let next = p_sub.project(Some((&origin, r)), &(&y - &step), proj_tol, proj_iters)?;
        let moved = (&next - &y).norm();
        y = next;
        if moved <= stop {
            break;
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn negative_orthant() -> Polyhedron {
        Polyhedron::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]),
            DVector::zeros(2),
        )
        .unwrap()
    }

    fn box2(half: f64) -> Polyhedron {
        Polyhedron::new(
            DMatrix::from_row_slice(4, 2, &[1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0]),
            DVector::from_element(4, half),
        )
        .unwrap()
    }

    fn v(entries: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(entries)
    }

    #[test]
    fn construction_rejects_zero_rows_and_non_finite() {
        let zero_row = Polyhedron::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
            DVector::zeros(2),
        );
        assert!(matches!(zero_row, Err(Error::ZeroRow { row: 1 })));
        let nan = Polyhedron::new(
            DMatrix::from_row_slice(1, 2, &[f64::NAN, 1.0]),
            DVector::zeros(1),
        );
        assert!(nan.is_err());
    }

    #[test]
    fn contains_examples() {
        let p = negative_orthant();
        assert!(p.contains(&v(&[-0.5, -0.5]), 0.0).unwrap());
        assert!(!p.contains(&v(&[0.1, -1.0]), 0.0).unwrap());
        assert!(p.contains(&v(&[0.0, 0.0]), 0.0).unwrap());
        assert!(p.contains(&v(&[0.0]), 0.0).is_err());
    }

    #[test]
    fn active_set_examples() {
        let p = negative_orthant();
        assert_eq!(p.active_set(&v(&[0.0, -1.0]), 1e-9).unwrap(), vec![0]);
        assert_eq!(p.active_set(&v(&[0.0, 0.0]), 1e-9).unwrap(), vec![0, 1]);
        assert!(p.active_set(&v(&[-1.0, -1.0]), 1e-9).unwrap().is_empty());
        assert!(matches!(
            p.active_set(&v(&[0.5, 0.0]), 1e-9),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn reachable_constraints_examples() {
        let b = box2(1.0);
        assert!(b.reachable_constraints(&v(&[0.0, 0.0]), 0.1).is_empty());
        assert_eq!(b.reachable_constraints(&v(&[0.95, 0.0]), 0.1), vec![0]);

        let half = Polyhedron::new(DMatrix::from_row_slice(1, 2, &[1.0, 0.0]), DVector::zeros(1))
            .unwrap();
        assert_eq!(half.reachable_constraints(&v(&[-0.05, 0.0]), 0.1), vec![0]);
    }

    #[test]
    fn affine_subspace_examples() {
        let p = negative_orthant();
        let x = v(&[-1.0, -1.0]);

        let wall = p.affine_subspace(&x, &[0]).unwrap();
        assert_eq!(wall.dim(), 1);
        assert!((wall.anchor() - v(&[0.0, -1.0])).norm() < 1e-12);
        assert!(wall.basis()[(0, 0)].abs() < 1e-12);
        assert!((wall.basis()[(1, 0)].abs() - 1.0).abs() < 1e-12);

        let free = p.affine_subspace(&x, &[]).unwrap();
        assert_eq!(free.dim(), 2);
        assert_eq!(free.anchor(), &x);
        assert_eq!(free.basis(), &DMatrix::identity(2, 2));

        let corner = p.affine_subspace(&x, &[0, 1]).unwrap();
        assert_eq!(corner.dim(), 0);
        assert!((corner.anchor() - v(&[0.0, 0.0])).norm() < 1e-12);
    }

    #[test]
    fn affine_subspace_rejects_dependent_rows() {
        let p = Polyhedron::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]),
            DVector::zeros(2),
        )
        .unwrap();
        assert!(matches!(
            p.affine_subspace(&v(&[-1.0, -1.0]), &[0, 1]),
            Err(Error::RankDeficient { rank: 1, rows: 2 })
        ));
    }

    #[test]
    fn anchor_satisfies_selected_rows() {
        use rand::Rng;
        let mut rng = crate::rng::stream_rng(3, 77);
        for _ in 0..50 {
            let d = rng.random_range(2..6);
            let k = rng.random_range(1..5u32) as usize;
            let a = DMatrix::from_fn(k, d, |_, _| rng.random_range(-1.0..1.0));
            let b = DVector::from_fn(k, |_, _| rng.random_range(-1.0..1.0));
            let Ok(p) = Polyhedron::new(a.clone(), b.clone()) else {
                continue;
            };
            let x = DVector::from_fn(d, |_, _| rng.random_range(-2.0..2.0));
            let take = rng.random_range(1..=k.min(d));
            let idx: Vec<usize> = (0..take).collect();
            match p.affine_subspace(&x, &idx) {
                Ok(sub) => {
                    for &i in &idx {
                        let res = (a.row(i).dot(&sub.anchor().transpose()) - b[i]).abs();
                        assert!(res <= 1e-9 * p.row_norm(i));
                    }
                    // Selected rows hold at anchor + O y for arbitrary y.
                    let y = DVector::from_fn(sub.dim(), |_, _| rng.random_range(-3.0..3.0));
                    let point = sub.anchor() + sub.basis() * y;
                    for &i in &idx {
                        let res = (a.row(i).dot(&point.transpose()) - b[i]).abs();
                        assert!(res <= 1e-8 * p.row_norm(i) * (1.0 + point.norm()));
                    }
                    // basis orthonormality
                    let o = sub.basis();
                    let gram = o.transpose() * o;
                    let err = (gram - DMatrix::identity(sub.dim(), sub.dim())).amax();
                    assert!(err <= 1e-10);
                }
                Err(Error::RankDeficient { .. }) => {}
                Err(e) => panic!("unexpected error {e}"),
            }
        }
    }

    #[test]
    fn projection_examples() {
        let p = negative_orthant();
        let proj = p
            .project(None, &v(&[1.0, 1.0]), 1e-10, p.default_projection_iters())
            .unwrap();
        assert!((proj - v(&[0.0, 0.0])).norm() < 1e-9);

        let half = Polyhedron::new(DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), v(&[1.0]))
            .unwrap();
        let proj = half
            .project(None, &v(&[1.0, 1.0]), 1e-10, half.default_projection_iters())
            .unwrap();
        assert!((proj - v(&[0.5, 0.5])).norm() < 1e-9);
    }

    #[test]
    fn projection_is_idempotent_and_respects_the_ball() {
        use rand::Rng;
        let mut rng = crate::rng::stream_rng(5, 13);
        for trial in 0..20 {
            let d = rng.random_range(2..5);
            let k = rng.random_range(1..6u32) as usize;
            // Halfspaces all containing an interior point keep S nonempty.
            let interior = DVector::from_fn(d, |_, _| rng.random_range(-0.5..0.5));
            let a = DMatrix::from_fn(k, d, |_, _| rng.random_range(-1.0..1.0));
            let Ok(mut b) = Ok::<_, Error>(DVector::zeros(k)) else {
                unreachable!()
            };
            for i in 0..k {
                b[i] = a.row(i).dot(&interior.transpose()) + rng.random_range(0.1..1.0);
            }
            let Ok(p) = Polyhedron::new(a, b) else { continue };
            let x = DVector::from_fn(d, |_, _| rng.random_range(-3.0..3.0));
            let ball_center = interior.clone();
            let ball = (trial % 2 == 0).then_some((&ball_center, 2.0));
            let tol = 1e-10;
            let y = p.project(ball, &x, tol, p.default_projection_iters()).unwrap();
            let y2 = p.project(ball, &y, tol, p.default_projection_iters()).unwrap();
            assert!((y2 - &y).norm() <= 2.0 * 1e-8, "projection not idempotent");
            assert!(p.max_violation(&y) <= tol);
            if let Some((c, r)) = ball {
                assert!((y - c).norm() <= r + tol);
            }
        }
    }

    #[test]
    fn projection_optimality_against_feasible_samples() {
        use rand::Rng;
        let mut rng = crate::rng::stream_rng(6, 14);
        for _ in 0..10 {
            let d = 3;
            let k = 4;
            let interior = DVector::from_fn(d, |_, _| rng.random_range(-0.3..0.3));
            let a = DMatrix::from_fn(k, d, |_, _| rng.random_range(-1.0..1.0));
            let mut b = DVector::zeros(k);
            for i in 0..k {
                b[i] = a.row(i).dot(&interior.transpose()) + rng.random_range(0.2..1.0);
            }
            let Ok(p) = Polyhedron::new(a, b) else { continue };
            let x = DVector::from_fn(d, |_, _| rng.random_range(-3.0..3.0));
            let y = p
                .project(None, &x, 1e-10, p.default_projection_iters())
                .unwrap();
            let dist = (&x - &y).norm();
            // Feasible points sampled by projecting random draws can't be
            // closer to x than the projection.
            for _ in 0..20 {
                let z = DVector::from_fn(d, |_, _| rng.random_range(-2.0..2.0));
                let f = p
                    .project(None, &z, 1e-10, p.default_projection_iters())
                    .unwrap();
                assert!(dist <= (&x - &f).norm() + 1e-7);
            }
        }
    }

    #[test]
    fn unreachable_subsets_have_far_anchors() {
        use rand::Rng;
        let mut rng = crate::rng::stream_rng(8, 15);
        for _ in 0..50 {
            let d = rng.random_range(2..5);
            let k = rng.random_range(1..5u32) as usize;
            let interior = DVector::from_fn(d, |_, _| rng.random_range(-0.5..0.5));
            let a = DMatrix::from_fn(k, d, |_, _| rng.random_range(-1.0..1.0));
            let mut b = DVector::zeros(k);
            for i in 0..k {
                b[i] = a.row(i).dot(&interior.transpose()) + rng.random_range(0.05..2.0);
            }
            let Ok(p) = Polyhedron::new(a, b) else { continue };
            let r = rng.random_range(0.05..0.5);
            let reach = p.reachable_constraints(&interior, r);
            for i in 0..k {
                if reach.contains(&i) {
                    continue;
                }
                if let Ok(sub) = p.affine_subspace(&interior, &[i]) {
                    let dist = (sub.anchor() - &interior).norm();
                    assert!(
                        dist > r,
                        "unreachable row {i} has anchor at distance {dist} <= r {r}"
                    );
                }
            }
        }
    }

    #[test]
    fn linear_min_closed_form_and_degenerate_cases() {
        let free = Polyhedron::new(DMatrix::zeros(0, 2), DVector::zeros(0)).unwrap();
        let y = linear_min_over_ball_polytope(&free, 1.0, &v(&[3.0, 4.0]), 1e-8).unwrap();
        assert!((y - v(&[-0.6, -0.8])).norm() < 1e-12);

        let y = linear_min_over_ball_polytope(&free, 1.0, &v(&[0.0, 0.0]), 1e-8).unwrap();
        assert_eq!(y, v(&[0.0, 0.0]));
    }

    #[test]
    fn linear_min_respects_halfplane() {
        // {y_1 >= 0} written as -y_1 <= 0; minimizing y_1 over the unit
        // disk intersected with it gives objective 0.
        let p = Polyhedron::new(DMatrix::from_row_slice(1, 2, &[-1.0, 0.0]), v(&[0.0])).unwrap();
        let y = linear_min_over_ball_polytope(&p, 1.0, &v(&[1.0, 0.0]), 1e-6).unwrap();

        // Grid oracle over the disk ∩ halfplane at resolution 1e-3.
        let mut best = f64::INFINITY;
        let n = 2000;
        for i in 0..=n {
            let a = -1.0 + 2.0 * i as f64 / n as f64;
            if a < 0.0 {
                continue;
            }
            for j in 0..=n {
                let b = -1.0 + 2.0 * j as f64 / n as f64;
                if a * a + b * b <= 1.0 && a < best {
                    best = a;
                }
            }
        }
        assert!((best - 0.0).abs() < 1e-3);
        assert!(y[0].abs() <= 1e-4, "objective {} vs oracle {}", y[0], best);
    }
}
