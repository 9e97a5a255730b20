//! Dense linear-algebra kernel sized for the 12-quadrature problem.
//!
//! Everything here is a pure function of its inputs. Matrices are small
//! (dimension ≤ 64), so direct dense methods are used throughout.

mod lyapunov;
mod propagate;

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

pub use lyapunov::{lyapunov_residual, solve_lyapunov, LYAPUNOV_RESIDUAL_TOL};
pub use propagate::{
    propagate_covariance, propagate_observed, DiffusionSource, Propagation, PropagationOptions, DEFAULT_STEP_BUDGET,
};

/// Largest dimension accepted by the eigenvalue routine.
pub const MAX_EIGEN_DIM: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("eigenvalue iteration did not converge (matrix Frobenius norm {norm:.6e})")]
    NoConvergence { norm: f64 },
    #[error("matrix is not Hurwitz (spectral abscissa {abscissa:.6e})")]
    NotHurwitz { abscissa: f64 },
    #[error("singular system in {0}")]
    Singular(&'static str),
    #[error("Lyapunov residual {residual:.3e} exceeds tolerance {tol:.1e}")]
    Residual { residual: f64, tol: f64 },
    #[error("step budget exceeded: {required} steps required, budget is {budget}")]
    StepBudget { required: u64, budget: u64 },
    #[error("integration diverged (non-finite state) at t = {time:.6e}")]
    Divergence { time: f64 },
}

/// Real dense matrix with all entries finite.
#[derive(Clone, PartialEq)]
pub struct RealMatrix(DMatrix<f64>);

impl RealMatrix {
    /// Builds a matrix from entries in row-major order.
    pub fn from_row_slice(rows: usize, cols: usize, data: &[f64]) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::Dimension(format!("empty shape {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(LinalgError::Dimension(format!("{} entries supplied for a {rows}x{cols} matrix", data.len())));
        }
        Self::from_dmatrix(DMatrix::from_row_slice(rows, cols, data))
    }

    pub fn from_dmatrix(m: DMatrix<f64>) -> Result<Self, LinalgError> {
        if m.nrows() == 0 || m.ncols() == 0 {
            return Err(LinalgError::Dimension(format!("empty shape {}x{}", m.nrows(), m.ncols())));
        }
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                if !m[(i, j)].is_finite() {
                    return Err(LinalgError::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(Self(m))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        assert!(n > 0, "matrix dimension must be positive");
        Self(DMatrix::identity(n, n))
    }

    /// Square diagonal matrix. Panics on an empty or non-finite diagonal.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        assert!(!diag.is_empty(), "diagonal must be non-empty");
        assert!(diag.iter().all(|x| x.is_finite()), "diagonal must be finite");
        Self(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(diag)))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.0[(row, col)]
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_dmatrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn scaled(&self, s: f64) -> Self {
        assert!(s.is_finite(), "scale factor must be finite");
        Self(&self.0 * s)
    }

    /// `‖M − Mᵀ‖_F`.
    pub fn asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (&self.0 - self.0.transpose()).norm()
    }

    /// True when `‖M − Mᵀ‖_F ≤ rel_tol · ‖M‖_F`.
    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        self.asymmetry() <= rel_tol * self.frobenius_norm()
    }

    pub fn symmetrized(&self) -> Self {
        Self((&self.0 + self.0.transpose()) * 0.5)
    }

    /// Principal submatrix on the given row/column indices, in the given order.
    pub fn principal_submatrix(&self, indices: &[usize]) -> Result<Self, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::Dimension("principal submatrix of a non-square matrix".into()));
        }
        if indices.is_empty() {
            return Err(LinalgError::Dimension("empty index set".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.rows()) {
            return Err(LinalgError::Dimension(format!("index {bad} out of range for dimension {}", self.rows())));
        }
        let k = indices.len();
        Ok(Self(DMatrix::from_fn(k, k, |i, j| self.0[(indices[i], indices[j])])))
    }

    /// Row-major copy of the entries.
    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }
}

impl fmt::Debug for RealMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RealMatrix {}x{} {:?}", self.rows(), self.cols(), self.to_row_major())
    }
}

impl std::ops::Index<(usize, usize)> for RealMatrix {
    type Output = f64;
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

/// Eigenvalues of a real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrum(Vec<Complex64>);

impl ComplexSpectrum {
    pub fn values(&self) -> &[Complex64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_real(&self) -> f64 {
        self.0.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Sorted by real part, then imaginary part.
    pub fn sorted(&self) -> Vec<Complex64> {
        let mut v = self.0.clone();
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    /// Largest distance between an eigenvalue and the nearest conjugate of
    /// another eigenvalue, relative to the spectral radius.
    pub fn conjugation_defect(&self) -> f64 {
        let radius = self.0.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let mut unused: Vec<Complex64> = self.0.iter().map(|z| z.conj()).collect();
        let mut worst: f64 = 0.0;
        for z in &self.0 {
            let (k, d) = unused
                .iter()
                .enumerate()
                .map(|(k, w)| (k, (z - w).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("spectrum non-empty");
            worst = worst.max(d / radius);
            unused.swap_remove(k);
        }
        worst
    }
}

const SCHUR_TOLERANCES: [f64; 4] = [f64::EPSILON, 1e-15, 1e-14, 1e-13];

/// All eigenvalues of a square real matrix (real Schur decomposition).
pub fn eigenvalues(m: &RealMatrix) -> Result<ComplexSpectrum, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::Dimension(format!("eigenvalues of a non-square {}x{} matrix", m.rows(), m.cols())));
    }
    if m.rows() > MAX_EIGEN_DIM {
        return Err(LinalgError::Dimension(format!(
            "dimension {} exceeds the supported maximum {MAX_EIGEN_DIM}",
            m.rows()
        )));
    }
    // At machine epsilon the QR sweep can stall on a subdiagonal entry a few
    // ulps above the threshold; the looser deflation tolerances still leave
    // eigenvalue errors far below anything the callers resolve.
    let norm = m.frobenius_norm();
    for eps in SCHUR_TOLERANCES {
        if let Some(schur) = m.as_dmatrix().clone().try_schur(eps, 10_000) {
            return Ok(ComplexSpectrum(schur.complex_eigenvalues().iter().copied().collect()));
        }
    }
    Err(LinalgError::NoConvergence { norm })
}

/// Largest real part over the spectrum. Negative certifies asymptotic
/// stability of `u̇ = M u`.
pub fn spectral_abscissa(m: &RealMatrix) -> Result<f64, LinalgError> {
    Ok(eigenvalues(m)?.max_real())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, cols: usize, data: &[f64]) -> RealMatrix {
        RealMatrix::from_row_slice(rows, cols, data).unwrap()
    }

    #[test]
    fn rejects_bad_shapes_and_nan() {
        assert!(matches!(RealMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0]), Err(LinalgError::Dimension(_))));
        assert!(matches!(RealMatrix::from_row_slice(0, 2, &[]), Err(LinalgError::Dimension(_))));
        assert_eq!(
            RealMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, 0.0, 1.0]),
            Err(LinalgError::NonFinite { row: 0, col: 1 })
        );
        assert!(matches!(RealMatrix::from_row_slice(1, 1, &[f64::INFINITY]), Err(LinalgError::NonFinite { .. })));
    }

    #[test]
    fn row_major_round_trip() {
        let a = m(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(a[(0, 2)], 3.0);
        assert_eq!(a[(1, 0)], 4.0);
        assert_eq!(a.to_row_major(), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn identity_eigenvalues() {
        let spec = eigenvalues(&RealMatrix::identity(2)).unwrap();
        for z in spec.values() {
            assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        }
        assert_eq!(spec.len(), 2);
    }

    #[test]
    fn rotation_generator_eigenvalues() {
        let spec = eigenvalues(&m(2, 2, &[0.0, 1.0, -1.0, 0.0])).unwrap();
        let s = spec.sorted();
        assert!((s[0] - Complex64::new(0.0, -1.0)).norm() < 1e-14);
        assert!((s[1] - Complex64::new(0.0, 1.0)).norm() < 1e-14);
        assert!(spec.conjugation_defect() < 1e-12);
    }

    #[test]
    fn non_square_is_rejected() {
        let err = eigenvalues(&m(2, 3, &[0.0; 6])).unwrap_err();
        assert!(matches!(err, LinalgError::Dimension(_)));
        assert!(matches!(spectral_abscissa(&m(1, 2, &[0.0; 2])), Err(LinalgError::Dimension(_))));
    }

    #[test]
    fn oversized_is_rejected() {
        let big = RealMatrix::identity(MAX_EIGEN_DIM + 1);
        assert!(matches!(eigenvalues(&big), Err(LinalgError::Dimension(_))));
    }

    #[test]
    fn abscissa_of_diagonal() {
        let d = RealMatrix::from_diagonal(&[-1.0, -2.0]);
        assert!((spectral_abscissa(&d).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn principal_submatrix_picks_rows_and_cols() {
        let a = m(3, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);
        let s = a.principal_submatrix(&[2, 0]).unwrap();
        assert_eq!(s.to_row_major(), vec![9.0, 7.0, 3.0, 1.0]);
        assert!(a.principal_submatrix(&[3]).is_err());
    }
}
