//! Drift and diffusion matrices of the linearized quadrature dynamics
//! `u̇ = A u + n` in the frame where the beamsplitter couplings are resonant.
//!
//! Quadrature order: `(x1, y1, x2, y2, X1, Y1, X2, Y2, q1, p1, q2, p2)`:
//! cavity, magnon, phonon blocks, each holding site 1 then site 2, with
//! `x = (a + a†)/√2` and `y = i(a† − a)/√2`, so the vacuum variance is 1/2.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::noise::{build_noise, NoiseSpec};
use super::params::SystemParams;
use crate::error::{Error, Result};
use crate::linalg::RealMatrix;

pub const N_QUADRATURES: usize = 12;

pub const MODE_LABELS: [&str; N_QUADRATURES] = ["x1", "y1", "x2", "y2", "X1", "Y1", "X2", "Y2", "q1", "p1", "q2", "p2"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    Cavity,
    Magnon,
    Phonon,
}

impl ModeKind {
    pub const ALL: [ModeKind; 3] = [ModeKind::Cavity, ModeKind::Magnon, ModeKind::Phonon];

    fn block_offset(self) -> usize {
        match self {
            ModeKind::Cavity => 0,
            ModeKind::Magnon => 4,
            ModeKind::Phonon => 8,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModeKind::Cavity => "cavity",
            ModeKind::Magnon => "magnon",
            ModeKind::Phonon => "phonon",
        }
    }
}

impl fmt::Display for ModeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cavity" => Ok(ModeKind::Cavity),
            "magnon" => Ok(ModeKind::Magnon),
            "phonon" => Ok(ModeKind::Phonon),
            other => Err(Error::Domain(format!("unknown mode type {other:?}"))),
        }
    }
}

/// Index of the position-like quadrature of `kind` at `site` (0-based); the
/// momentum-like quadrature follows it.
pub fn quadrature_index(kind: ModeKind, site: usize) -> usize {
    assert!(site < 2, "site index {site} out of range");
    kind.block_offset() + 2 * site
}

/// Block assembly of the 12×12 drift matrix.
pub fn build_drift(p: &SystemParams) -> Result<RealMatrix> {
    p.validate()?;
    let mut a = DMatrix::zeros(N_QUADRATURES, N_QUADRATURES);
    for (j, s) in p.sites.iter().enumerate() {
        let c = quadrature_index(ModeKind::Cavity, j);
        let m = quadrature_index(ModeKind::Magnon, j);
        let b = quadrature_index(ModeKind::Phonon, j);
        for k in 0..2 {
            a[(c + k, c + k)] = -s.cavity_decay;
            a[(m + k, m + k)] = -s.magnon_decay;
            a[(b + k, b + k)] = -s.phonon_damp;
        }
        let g = s.cavity_magnon_g;
        // [[0, g], [−g, 0]] in both cavity–magnon positions.
        a[(c, m + 1)] = g;
        a[(c + 1, m)] = -g;
        a[(m, c + 1)] = g;
        a[(m + 1, c)] = -g;
        // −G·I₂ at (magnon, phonon) and +G·I₂ at (phonon, magnon).
        let big_g = s.magnon_phonon_g;
        a[(m, b)] = -big_g;
        a[(m + 1, b + 1)] = -big_g;
        a[(b, m)] = big_g;
        a[(b + 1, m + 1)] = big_g;
    }
    Ok(RealMatrix::from_dmatrix(a)?)
}

/// Smallest eigenvalue of a symmetric matrix.
pub(crate) fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

fn check_psd(d: &DMatrix<f64>) -> Result<()> {
    let min = min_symmetric_eigenvalue(d);
    if min < -1e-12 * d.norm() {
        return Err(Error::UnphysicalNoise { min_eigenvalue: min });
    }
    Ok(())
}

/// Diffusion matrix: squeezed cavity block ⊕ thermal magnon block ⊕ thermal
/// phonon block.
pub fn build_diffusion(p: &SystemParams, noise: &NoiseSpec) -> Result<RealMatrix> {
    p.validate()?;
    let mut d = DMatrix::zeros(N_QUADRATURES, N_QUADRATURES);
    for (j, s) in p.sites.iter().enumerate() {
        let c = quadrature_index(ModeKind::Cavity, j);
        let m = quadrature_index(ModeKind::Magnon, j);
        let b = quadrature_index(ModeKind::Phonon, j);
        for k in 0..2 {
            d[(c + k, c + k)] = s.cavity_decay * (2.0 * noise.n_squeeze + 1.0);
            d[(m + k, m + k)] = s.magnon_decay * (2.0 * noise.n_magnon[j] + 1.0);
            d[(b + k, b + k)] = s.phonon_damp * (2.0 * noise.n_phonon[j] + 1.0);
        }
    }
    // √(κ₁κ₂)(ℳ + ℳ*) and i√(κ₁κ₂)(−ℳ + ℳ*) are both real.
    let root = (p.sites[0].cavity_decay * p.sites[1].cavity_decay).sqrt();
    let sum = root * 2.0 * noise.m_squeeze.re;
    let diff = root * 2.0 * noise.m_squeeze.im;
    let (x1, y1, x2, y2) = (0, 1, 2, 3);
    for (i, k, v) in [(x1, x2, sum), (x1, y2, diff), (y1, x2, diff), (y1, y2, -sum)] {
        d[(i, k)] = v;
        d[(k, i)] = v;
    }
    check_psd(&d)?;
    Ok(RealMatrix::from_dmatrix(d)?)
}

/// `u̇ = A u + n` with the diffusion matrix of `n`.
#[derive(Debug, Clone)]
pub struct LinearModel {
    pub drift: RealMatrix,
    pub diffusion: RealMatrix,
    pub rwa_suspect: bool,
    /// Rate (rad/s) used to make time dimensionless before solving.
    pub rate_scale: f64,
}

impl LinearModel {
    pub fn from_params(p: &SystemParams) -> Result<Self> {
        let noise = build_noise(p)?;
        Ok(Self {
            drift: build_drift(p)?,
            diffusion: build_diffusion(p, &noise)?,
            rwa_suspect: p.rwa_suspect(),
            rate_scale: p.sites[0].cavity_decay,
        })
    }

    /// Wraps an arbitrary 12×12 drift/diffusion pair. The diffusion must be
    /// symmetric positive semidefinite.
    pub fn new(drift: RealMatrix, diffusion: RealMatrix, rate_scale: f64) -> Result<Self> {
        for (name, m) in [("drift", &drift), ("diffusion", &diffusion)] {
            if m.rows() != N_QUADRATURES || m.cols() != N_QUADRATURES {
                return Err(Error::Domain(format!(
                    "{name} must be {N_QUADRATURES}x{N_QUADRATURES}, got {}x{}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        if !diffusion.is_symmetric(1e-12) {
            return Err(Error::Domain("diffusion matrix is not symmetric".into()));
        }
        check_psd(diffusion.as_dmatrix())?;
        if !(rate_scale > 0.0) || !rate_scale.is_finite() {
            return Err(Error::Domain(format!("rate scale must be positive, got {rate_scale}")));
        }
        Ok(Self { drift, diffusion, rwa_suspect: false, rate_scale })
    }

    pub fn mode_order(&self) -> &'static [&'static str; N_QUADRATURES] {
        &MODE_LABELS
    }
}
