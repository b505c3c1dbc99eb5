//! Cyclic Jacobi diagonalization of symmetric matrices.
//!
//! Sweeps of plane rotations drive the off-diagonal Frobenius norm below the
//! requested tolerance, which in turn bounds the spectral-norm residual of
//! the reconstruction: with `Q` orthogonal and `Lambda` the final diagonal,
//! `||Q^T Lambda Q - M|| <= off_frobenius(final)`.

use nalgebra::{DMatrix, DVector};

use crate::Error;

/// An approximate eigendecomposition `M ~= Q^T Lambda Q`.
///
/// Rows of `q` are the eigenvector approximations, matching the convention
/// in which a vector `v` has eigenbasis coordinates `q * v`.
#[derive(Debug, Clone)]
pub struct Diagonalization {
    /// Orthogonal `m x m` factor.
    pub q: DMatrix<f64>,
    /// Eigenvalue approximations (unsorted).
    pub lambdas: DVector<f64>,
    /// Achieved bound on the spectral norm of `Q^T Lambda Q - M`.
    pub residual: f64,
}

fn off_diagonal_frobenius(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for p in 0..n {
        for q in 0..n {
            if p != q {
                s += a[(p, q)] * a[(p, q)];
            }
        }
    }
    s.sqrt()
}

/// Diagonalizes a symmetric matrix to the requested off-diagonal tolerance.
///
/// The input is symmetrized as `(M + M^T) / 2` before the sweeps.
pub fn jacobi_diagonalize(m: &DMatrix<f64>, tol: f64) -> Result<Diagonalization, Error> {
    if tol <= 0.0 {
        return Err(Error::InvalidParameter("jacobi tolerance must be positive"));
    }
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(Diagonalization {
            q: DMatrix::zeros(0, 0),
            lambdas: DVector::zeros(0),
            residual: 0.0,
        });
    }

    let mut a = (m + m.transpose()) * 0.5;
    // v accumulates column eigenvectors: A_final = V^T A V.
    let mut v = DMatrix::<f64>::identity(n, n);

    const MAX_SWEEPS: usize = 100;
    let mut residual = off_diagonal_frobenius(&a);
    let mut converged = residual <= tol;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = 0.5 * (aqq - app) / apq;
                let t = if theta.abs() > 1e150 {
                    // Avoid overflow in theta^2; the rotation is tiny.
                    0.5 / theta
                } else {
                    let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sign / (theta.abs() + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for i in 0..n {
                    if i != p && i != q {
                        let aip = a[(i, p)];
                        let aiq = a[(i, q)];
                        a[(i, p)] = aip - s * (aiq + tau * aip);
                        a[(i, q)] = aiq + s * (aip - tau * aiq);
                        a[(p, i)] = a[(i, p)];
                        a[(q, i)] = a[(i, q)];
                    }
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip - s * (viq + tau * vip);
                    v[(i, q)] = viq + s * (vip - tau * viq);
                }
            }
        }
        residual = off_diagonal_frobenius(&a);
        converged = residual <= tol;
    }
    if !converged {
        return Err(Error::Exhausted("jacobi sweeps"));
    }

    Ok(Diagonalization {
        q: v.transpose(),
        lambdas: a.diagonal(),
        residual,
    })
}
