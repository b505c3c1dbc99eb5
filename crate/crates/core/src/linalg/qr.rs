//! Column-pivoted Householder QR with an explicitly accumulated full `Q`.
//!
//! Used to build orthonormal bases of affine subspaces: for a selection of
//! constraint rows `A_I` (m x d), the factorization of `A_I^T` yields the
//! range (first `rank` columns of `Q`) and the null space (remaining
//! columns), plus a triangular solve for the least-squares anchor. Pivots
//! falling below `rel_tol` times the leading pivot mark rank deficiency.

use nalgebra::{DMatrix, DVector};

pub(crate) struct PivotedQr {
    /// Full orthogonal factor, `d x d`.
    pub q: DMatrix<f64>,
    /// Upper-triangular factor, `d x m` (only the top `m x m` block is used).
    pub r: DMatrix<f64>,
    /// Column permutation: column `j` of `r` is input column `perm[j]`.
    pub perm: Vec<usize>,
    /// Number of pivots at or above `rel_tol * |r[0,0]|`.
    pub rank: usize,
}

pub(crate) fn pivoted_qr(a: &DMatrix<f64>, rel_tol: f64) -> PivotedQr {
    let d = a.nrows();
    let m = a.ncols();
    let mut w = a.clone();
    let mut q = DMatrix::<f64>::identity(d, d);
    let mut perm: Vec<usize> = (0..m).collect();

    let steps = d.min(m);
    for j in 0..steps {
        // Column norms are recomputed exactly each step (no downdating).
        let mut best = j;
        let mut best_norm2 = 0.0;
        for c in j..m {
            let mut s = 0.0;
            for i in j..d {
                s += w[(i, c)] * w[(i, c)];
            }
            if s > best_norm2 {
                best_norm2 = s;
                best = c;
            }
        }
        if best != j {
            w.swap_columns(j, best);
            perm.swap(j, best);
        }
        let norm = best_norm2.sqrt();
        if norm == 0.0 {
            break;
        }

        // Householder reflector annihilating w[j+1.., j].
        let mut v = DVector::<f64>::zeros(d - j);
        for i in j..d {
            v[i - j] = w[(i, j)];
        }
        let alpha = if v[0] >= 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vtv = v.dot(&v);
        if vtv > 0.0 {
            let beta = 2.0 / vtv;
            // W[j.., j..] <- H W[j.., j..]
            for c in j..m {
                let mut dot = 0.0;
                for i in j..d {
                    dot += v[i - j] * w[(i, c)];
                }
                let f = beta * dot;
                for i in j..d {
                    w[(i, c)] -= f * v[i - j];
                }
            }
            // Q <- Q H (reflectors are symmetric, so Q = H_1 H_2 ...).
            for row in 0..d {
                let mut dot = 0.0;
                for i in j..d {
                    dot += q[(row, i)] * v[i - j];
                }
                let f = beta * dot;
                for i in j..d {
                    q[(row, i)] -= f * v[i - j];
                }
            }
        }
        w[(j, j)] = alpha;
        for i in (j + 1)..d {
            w[(i, j)] = 0.0;
        }
    }

    let leading = w[(0, 0)].abs();
    let mut rank = 0;
    for j in 0..steps {
        if w[(j, j)].abs() > rel_tol * leading && w[(j, j)] != 0.0 {
            rank = j + 1;
        } else {
            break;
        }
    }

    PivotedQr { q, r: w, perm, rank }
}

impl PivotedQr {
    /// Solves `R^T z = rhs_permuted` by forward substitution over the top
    /// `n x n` triangle. Callers must have checked `rank >= n`.
    pub fn solve_rt(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let n = rhs.len();
        let mut z = DVector::<f64>::zeros(n);
        for i in 0..n {
            let mut s = rhs[i];
            for k in 0..i {
                s -= self.r[(k, i)] * z[k];
            }
            z[i] = s / self.r[(i, i)];
        }
        z
    }
}
