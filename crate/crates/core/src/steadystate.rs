//! Stationary covariance matrix and two-mode logarithmic negativity.

use nalgebra::{DMatrix, Matrix2, Matrix4};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, solve_lyapunov, LinalgError, RealMatrix};
use crate::model::matrices::min_symmetric_eigenvalue;
use crate::model::{quadrature_index, LinearModel, ModeKind, SystemParams, MODE_LABELS, N_QUADRATURES};

/// Floor on the smallest eigenvalue of `C + (i/2)Ω`, relative to `‖C‖_F`.
pub const PHYSICALITY_TOL: f64 = 1e-10;
/// Agreement required between the two symplectic-eigenvalue routes.
pub const SYMPLECTIC_AGREEMENT_TOL: f64 = 1e-10;
const PAIRING_TOL: f64 = 1e-8;

/// Symplectic form `⊕ⁿ [[0, 1], [−1, 0]]`.
pub fn symplectic_form(modes: usize) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(2 * modes, 2 * modes);
    for k in 0..modes {
        w[(2 * k, 2 * k + 1)] = 1.0;
        w[(2 * k + 1, 2 * k)] = -1.0;
    }
    w
}

/// Stationary covariance matrix in the quadrature order of [`MODE_LABELS`].
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    entries: RealMatrix,
}

impl CovarianceMatrix {
    pub fn new(entries: RealMatrix) -> Result<Self> {
        if entries.rows() != N_QUADRATURES || entries.cols() != N_QUADRATURES {
            return Err(Error::Domain(format!(
                "covariance must be {N_QUADRATURES}x{N_QUADRATURES}, got {}x{}",
                entries.rows(),
                entries.cols()
            )));
        }
        if !entries.is_symmetric(1e-12) {
            return Err(Error::Domain("covariance matrix is not symmetric".into()));
        }
        Ok(Self { entries })
    }

    pub fn matrix(&self) -> &RealMatrix {
        &self.entries
    }

    pub fn labels(&self) -> &'static [&'static str; N_QUADRATURES] {
        &MODE_LABELS
    }

    /// Smallest eigenvalue of `C + (i/2)Ω`, divided by `‖C‖_F`.
    pub fn physicality_margin(&self) -> f64 {
        physicality_margin(self.entries.as_dmatrix())
    }

    /// Uncertainty principle in matrix form plus per-mode determinants ≥ 1/4.
    pub fn is_physical(&self) -> bool {
        let c = self.entries.as_dmatrix();
        self.physicality_margin() >= -PHYSICALITY_TOL
            && (0..N_QUADRATURES / 2).all(|k| {
                let i = 2 * k;
                c[(i, i)] * c[(i + 1, i + 1)] - c[(i, i + 1)] * c[(i + 1, i)] >= 0.25 - 1e-10
            })
    }
}

/// `C + (i/2)Ω ⪰ 0` checked on the real symmetric embedding
/// `[[C, −Ω/2], [Ω/2, C]]` of the Hermitian matrix.
pub fn physicality_margin(c: &DMatrix<f64>) -> f64 {
    let n = c.nrows();
    let half_w = symplectic_form(n / 2) * 0.5;
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(c);
    h.view_mut((n, n), (n, n)).copy_from(c);
    h.view_mut((0, n), (n, n)).copy_from(&(-&half_w));
    h.view_mut((n, 0), (n, n)).copy_from(&half_w);
    min_symmetric_eigenvalue(&h) / c.norm().max(f64::MIN_POSITIVE)
}

/// Unique stationary covariance of a Hurwitz model.
pub fn steady_covariance(model: &LinearModel) -> Result<CovarianceMatrix> {
    let s = model.rate_scale;
    let a = model.drift.scaled(1.0 / s);
    let d = model.diffusion.scaled(1.0 / s);
    let c = solve_lyapunov(&a, &d).map_err(|e| match e {
        LinalgError::NotHurwitz { abscissa } => Error::Unstable { abscissa: abscissa * s },
        other => Error::Linalg(other),
    })?;
    CovarianceMatrix::new(c)
}

/// One bosonic mode: a type and a site (0 or 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Mode {
    pub kind: ModeKind,
    pub site: usize,
}

impl Mode {
    pub fn new(kind: ModeKind, site: usize) -> Result<Self> {
        if site > 1 {
            return Err(Error::Domain(format!("site index {site} out of range")));
        }
        Ok(Self { kind, site })
    }
}

/// 4×4 covariance of two modes, ordered (first x, first y, second x, second y).
pub fn reduce_modes(c: &CovarianceMatrix, first: Mode, second: Mode) -> Result<RealMatrix> {
    if first == second {
        return Err(Error::Domain("two-mode reduction needs distinct modes".into()));
    }
    let i = quadrature_index(first.kind, first.site);
    let k = quadrature_index(second.kind, second.site);
    Ok(c.entries.principal_submatrix(&[i, i + 1, k, k + 1])?)
}

/// Same-type pair across the two sites.
pub fn reduce_pair(c: &CovarianceMatrix, kind: ModeKind) -> RealMatrix {
    reduce_modes(c, Mode { kind, site: 0 }, Mode { kind, site: 1 })
        .expect("same-type modes at distinct sites are always valid")
}

fn as_matrix4(c4: &RealMatrix) -> Result<Matrix4<f64>> {
    if c4.rows() != 4 || c4.cols() != 4 {
        return Err(Error::Domain(format!("expected a 4x4 matrix, got {}x{}", c4.rows(), c4.cols())));
    }
    Ok(Matrix4::from_fn(|i, j| c4[(i, j)]))
}

/// `P C P` with `P = diag(1, −1, 1, 1)`: time reversal of the first mode.
pub fn partial_transpose(c4: &RealMatrix) -> Result<RealMatrix> {
    let m = as_matrix4(c4)?;
    let sign = [1.0, -1.0, 1.0, 1.0];
    let flipped = Matrix4::from_fn(|i, j| sign[i] * sign[j] * m[(i, j)]);
    Ok(RealMatrix::from_row_slice(4, 4, flipped.transpose().as_slice())?)
}

/// Symplectic eigenvalues from the invariants `Δ = det A + det B + 2 det C`
/// and `det σ` of `σ = [[A, C], [Cᵀ, B]]`.
pub fn symplectic_eigenvalues_closed_form(c4: &RealMatrix) -> Result<(f64, f64)> {
    let m = as_matrix4(c4)?;
    let block = |r: usize, c: usize| Matrix2::new(m[(r, c)], m[(r, c + 1)], m[(r + 1, c)], m[(r + 1, c + 1)]);
    let invariant = block(0, 0).determinant() + block(2, 2).determinant() + 2.0 * block(0, 2).determinant();
    let det = m.determinant();
    let disc = (invariant * invariant - 4.0 * det).max(0.0).sqrt();
    let plus_sq = 0.5 * (invariant + disc);
    // Cancellation-free form of (Δ − √(Δ² − 4 det))/2.
    let minus_sq = if plus_sq > 0.0 { det / plus_sq } else { 0.0 };
    Ok((minus_sq.max(0.0).sqrt(), plus_sq.max(0.0).sqrt()))
}

/// Symplectic eigenvalues `(ν₋, ν₊)` as the distinct moduli of the spectrum of
/// `iΩ₂C`, cross-checked against the closed form.
pub fn symplectic_eigenvalues(c4: &RealMatrix) -> Result<(f64, f64)> {
    let m = as_matrix4(c4)?;
    if !c4.is_symmetric(1e-12) {
        return Err(Error::Domain("symplectic eigenvalues need a symmetric matrix".into()));
    }
    let w = symplectic_form(2);
    let product = &w * DMatrix::from_fn(4, 4, |i, j| m[(i, j)]);
    let spectrum = eigenvalues(&RealMatrix::from_dmatrix(product)?)?;
    let mut moduli: Vec<f64> = spectrum.values().iter().map(|z| z.norm()).collect();
    moduli.sort_by(f64::total_cmp);
    let scale = moduli[3].max(f64::MIN_POSITIVE);
    let paired = |a: f64, b: f64| (a - b).abs() <= PAIRING_TOL * b.max(16.0 * f64::EPSILON * scale);
    let closed = symplectic_eigenvalues_closed_form(c4)?;
    if !paired(moduli[0], moduli[1]) || !paired(moduli[2], moduli[3]) {
        return Err(Error::SymplecticMismatch { spectral: (moduli[0], moduli[2]), closed_form: closed });
    }
    let spectral = (0.5 * (moduli[0] + moduli[1]), 0.5 * (moduli[2] + moduli[3]));
    let agree =
        |a: f64, b: f64| (a - b).abs() <= SYMPLECTIC_AGREEMENT_TOL * a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    if !agree(spectral.0, closed.0) || !agree(spectral.1, closed.1) {
        return Err(Error::SymplecticMismatch { spectral, closed_form: closed });
    }
    Ok(spectral)
}

/// `E_N = max(0, −ln 2ν̃₋)` together with `ν̃₋`, the smallest symplectic
/// eigenvalue of the partially transposed CM.
pub fn log_negativity_detail(c4: &RealMatrix) -> Result<(f64, f64)> {
    let (nu_minus, _) = symplectic_eigenvalues(&partial_transpose(c4)?)?;
    Ok((negativity_from_nu(nu_minus), nu_minus))
}

pub fn log_negativity(c4: &RealMatrix) -> Result<f64> {
    Ok(log_negativity_detail(c4)?.0)
}

fn negativity_from_nu(nu_minus: f64) -> f64 {
    (-(2.0 * nu_minus).ln()).max(0.0)
}

/// Per-pair quantity for the cavity–cavity, magnon–magnon and phonon–phonon pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairValues {
    pub cavity: f64,
    pub magnon: f64,
    pub phonon: f64,
}

impl PairValues {
    pub fn get(&self, kind: ModeKind) -> f64 {
        match kind {
            ModeKind::Cavity => self.cavity,
            ModeKind::Magnon => self.magnon,
            ModeKind::Phonon => self.phonon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntanglementReport {
    pub e_cavity: f64,
    pub e_magnon: f64,
    pub e_phonon: f64,
    pub stable: bool,
    pub rwa_suspect: bool,
    /// `ν̃₋` per same-type pair.
    pub min_symplectic: PairValues,
}

impl EntanglementReport {
    pub fn entanglement(&self) -> PairValues {
        PairValues { cavity: self.e_cavity, magnon: self.e_magnon, phonon: self.e_phonon }
    }

    /// Stored `E_N` agree with `max(0, −ln 2ν̃₋)` within `tol`.
    pub fn is_consistent(&self, tol: f64) -> bool {
        let e = self.entanglement();
        ModeKind::ALL.iter().all(|&k| (e.get(k) - negativity_from_nu(self.min_symplectic.get(k))).abs() <= tol)
    }
}

pub fn report_from_covariance(c: &CovarianceMatrix, rwa_suspect: bool) -> Result<EntanglementReport> {
    let mut e = [0.0; 3];
    let mut nu = [0.0; 3];
    for (k, kind) in ModeKind::ALL.into_iter().enumerate() {
        (e[k], nu[k]) = log_negativity_detail(&reduce_pair(c, kind))?;
    }
    Ok(EntanglementReport {
        e_cavity: e[0],
        e_magnon: e[1],
        e_phonon: e[2],
        stable: true,
        rwa_suspect,
        min_symplectic: PairValues { cavity: nu[0], magnon: nu[1], phonon: nu[2] },
    })
}

/// Builds the model, solves the steady state and evaluates all three pairs.
pub fn full_report(p: &SystemParams) -> Result<EntanglementReport> {
    let model = LinearModel::from_params(p)?;
    let c = steady_covariance(&model)?;
    report_from_covariance(&c, model.rwa_suspect)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmsv(r: f64) -> RealMatrix {
        let (c, s) = ((2.0 * r).cosh() / 2.0, (2.0 * r).sinh() / 2.0);
        RealMatrix::from_row_slice(4, 4, &[c, 0.0, s, 0.0, 0.0, c, 0.0, -s, s, 0.0, c, 0.0, 0.0, -s, 0.0, c]).unwrap()
    }

    #[test]
    fn partial_transpose_basics() {
        let id = RealMatrix::identity(4);
        assert_eq!(partial_transpose(&id).unwrap(), id);
        let t = tmsv(0.4);
        let pt = partial_transpose(&t).unwrap();
        assert_eq!(partial_transpose(&pt).unwrap(), t);
        // Only entries coupling y1 to another quadrature change sign.
        assert_eq!(pt[(0, 2)], t[(0, 2)]);
        assert_eq!(pt[(1, 3)], -t[(1, 3)]);
        assert_eq!(pt[(1, 1)], t[(1, 1)]);
        assert!(matches!(partial_transpose(&RealMatrix::identity(3)), Err(Error::Domain(_))));
    }

    #[test]
    fn vacuum_and_thermal_symplectic_values() {
        let (lo, hi) = symplectic_eigenvalues(&RealMatrix::identity(4).scaled(0.5)).unwrap();
        assert!((lo - 0.5).abs() < 1e-14 && (hi - 0.5).abs() < 1e-14);
        let (lo, hi) = symplectic_eigenvalues(&RealMatrix::from_diagonal(&[3.0, 3.0, 1.5, 1.5])).unwrap();
        assert!((lo - 1.5).abs() < 1e-13 && (hi - 3.0).abs() < 1e-13);
    }

    #[test]
    fn transposed_tmsv_minimum() {
        let pt = partial_transpose(&tmsv(0.4)).unwrap();
        let (lo, _) = symplectic_eigenvalues(&pt).unwrap();
        assert!((lo - (-0.8f64).exp() / 2.0).abs() < 1e-12);
        assert!((lo - 0.2247).abs() < 1e-4);
        let closed = symplectic_eigenvalues_closed_form(&pt).unwrap();
        assert!((closed.0 - lo).abs() < 1e-14);
    }

    #[test]
    fn tmsv_log_negativity_is_twice_r() {
        for r in [0.1, 0.4, 1.0, 1.5] {
            let e = log_negativity(&tmsv(r)).unwrap();
            assert!((e - 2.0 * r).abs() < 1e-10, "r = {r}: {e}");
        }
    }

    #[test]
    fn product_states_are_separable() {
        let c = RealMatrix::from_row_slice(
            4,
            4,
            &[0.9, 0.2, 0.0, 0.0, 0.2, 0.5, 0.0, 0.0, 0.0, 0.0, 2.0, -0.3, 0.0, 0.0, -0.3, 1.0],
        )
        .unwrap();
        assert_eq!(log_negativity(&c).unwrap(), 0.0);
        assert_eq!(log_negativity(&RealMatrix::identity(4).scaled(0.5)).unwrap(), 0.0);
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let mut v = RealMatrix::identity(4).to_row_major();
        v[1] = 0.3;
        let m = RealMatrix::from_row_slice(4, 4, &v).unwrap();
        assert!(symplectic_eigenvalues(&m).is_err());
    }

    #[test]
    fn reductions_pick_the_right_blocks() {
        let mut data = vec![0.0; 144];
        for i in 0..12 {
            data[i * 12 + i] = 1.0 + i as f64;
        }
        data[8 * 12 + 10] = 0.25;
        data[10 * 12 + 8] = 0.25;
        let c = CovarianceMatrix::new(RealMatrix::from_row_slice(12, 12, &data).unwrap()).unwrap();
        let ph = reduce_pair(&c, ModeKind::Phonon);
        assert_eq!(
            ph.to_row_major(),
            vec![9.0, 0.0, 0.25, 0.0, 0.0, 10.0, 0.0, 0.0, 0.25, 0.0, 11.0, 0.0, 0.0, 0.0, 0.0, 12.0]
        );
        let cav = reduce_pair(&c, ModeKind::Cavity);
        assert_eq!(cav, RealMatrix::from_diagonal(&[1.0, 2.0, 3.0, 4.0]));
        let cross =
            reduce_modes(&c, Mode::new(ModeKind::Magnon, 1).unwrap(), Mode::new(ModeKind::Cavity, 0).unwrap()).unwrap();
        assert_eq!(cross, RealMatrix::from_diagonal(&[7.0, 8.0, 1.0, 2.0]));
        assert!(Mode::new(ModeKind::Cavity, 2).is_err());
        let m = Mode::new(ModeKind::Cavity, 0).unwrap();
        assert!(reduce_modes(&c, m, m).is_err());
    }

    #[test]
    fn vacuum_covariance_is_physical_and_boundary() {
        let c = CovarianceMatrix::new(RealMatrix::identity(12).scaled(0.5)).unwrap();
        assert!(c.is_physical());
        assert!(c.physicality_margin().abs() < 1e-14);
        let squashed = CovarianceMatrix::new(RealMatrix::identity(12).scaled(0.4)).unwrap();
        assert!(!squashed.is_physical());
    }
}
