//! Continuous Lyapunov equation `A C + C Aᵀ + Q = 0` by vectorization.
//!
//! With column-major `vec`, the equation becomes
//! `(I ⊗ A + A ⊗ I) vec(C) = −vec(Q)`, an n²×n² dense system (144 unknowns
//! for the 12-quadrature model) solved by partial-pivot LU with a few rounds
//! of iterative refinement.

use nalgebra::{DMatrix, DVector};

use super::{spectral_abscissa, LinalgError, RealMatrix};

/// Contracted bound on `‖AC + CAᵀ + Q‖_F / ‖Q‖_F`.
pub const LYAPUNOV_RESIDUAL_TOL: f64 = 1e-10;

/// Largest dimension the Kronecker form is built for (n² = 1024 unknowns).
const MAX_DIM: usize = 32;

const REFINE_TARGET: f64 = 1e-14;
const MAX_REFINEMENTS: usize = 4;

/// Relative residual `‖AC + CAᵀ + Q‖_F / ‖Q‖_F` (absolute when `Q = 0`).
pub fn lyapunov_residual(a: &RealMatrix, c: &RealMatrix, q: &RealMatrix) -> f64 {
    let r = residual_matrix(a.as_dmatrix(), c.as_dmatrix(), q.as_dmatrix());
    let qn = q.frobenius_norm();
    if qn > 0.0 {
        r.norm() / qn
    } else {
        r.norm()
    }
}

fn residual_matrix(a: &DMatrix<f64>, c: &DMatrix<f64>, q: &DMatrix<f64>) -> DMatrix<f64> {
    a * c + c * a.transpose() + q
}

/// Solves `A C + C Aᵀ = −Q` for symmetric `C`.
///
/// `A` must be Hurwitz; otherwise the stationary solution does not describe
/// the long-time limit and a stability error is returned.
pub fn solve_lyapunov(a: &RealMatrix, q: &RealMatrix) -> Result<RealMatrix, LinalgError> {
    let n = a.rows();
    if !a.is_square() || !q.is_square() || q.rows() != n {
        return Err(LinalgError::Dimension(format!(
            "Lyapunov solve needs square operands of equal size, got {}x{} and {}x{}",
            a.rows(),
            a.cols(),
            q.rows(),
            q.cols()
        )));
    }
    if n > MAX_DIM {
        return Err(LinalgError::Dimension(format!("Lyapunov dimension {n} exceeds the supported maximum {MAX_DIM}")));
    }
    if !q.is_symmetric(1e-12) {
        return Err(LinalgError::Dimension("Lyapunov source term is not symmetric".into()));
    }
    let abscissa = spectral_abscissa(a)?;
    if abscissa >= 0.0 {
        return Err(LinalgError::NotHurwitz { abscissa });
    }

    let qn = q.frobenius_norm();
    if qn == 0.0 {
        return Ok(RealMatrix::zeros(n, n));
    }

    let am = a.as_dmatrix();
    let qm = q.as_dmatrix();
    let kron = kronecker_sum(am);
    let lu = kron.lu();

    let rhs = DVector::from_iterator(n * n, qm.iter().map(|x| -x));
    let sol = lu.solve(&rhs).ok_or(LinalgError::Singular("Lyapunov Kronecker system"))?;
    let mut c = DMatrix::from_column_slice(n, n, sol.as_slice());

    for _ in 0..MAX_REFINEMENTS {
        let r = residual_matrix(am, &c, qm);
        if r.norm() <= REFINE_TARGET * qn {
            break;
        }
        let rv = DVector::from_iterator(n * n, r.iter().map(|x| -x));
        let delta = lu.solve(&rv).ok_or(LinalgError::Singular("Lyapunov refinement"))?;
        c += DMatrix::from_column_slice(n, n, delta.as_slice());
    }

    let c = (&c + c.transpose()) * 0.5;
    let residual = residual_matrix(am, &c, qm).norm() / qn;
    if !(residual <= LYAPUNOV_RESIDUAL_TOL) {
        return Err(LinalgError::Residual { residual, tol: LYAPUNOV_RESIDUAL_TOL });
    }
    RealMatrix::from_dmatrix(c)
}

/// `I ⊗ A + A ⊗ I` acting on column-major `vec(C)`.
fn kronecker_sum(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut k = DMatrix::zeros(n * n, n * n);
    // vec(C) index of C[i, j] is i + n j.
    for j in 0..n {
        for i in 0..n {
            let row = i + n * j;
            // (A C)[i, j] = Σ_l A[i, l] C[l, j]
            for l in 0..n {
                k[(row, l + n * j)] += a[(i, l)];
            }
            // (C Aᵀ)[i, j] = Σ_l C[i, l] A[j, l]
            for l in 0..n {
                k[(row, i + n * l)] += a[(j, l)];
            }
        }
    }
    k
}
