use num_complex::Complex64;
use serde::Serialize;

use super::params::{SystemParams, HBAR, K_BOLTZMANN};
use crate::error::{Error, Result};

/// Input-noise statistics: two-mode squeezed vacuum on the cavities, thermal
/// baths on magnons and phonons.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseSpec {
    /// `𝒩 = sinh² r`.
    pub n_squeeze: f64,
    /// `ℳ = e^{iφ} sinh r cosh r`.
    pub m_squeeze: Complex64,
    pub n_magnon: [f64; 2],
    pub n_phonon: [f64; 2],
}

/// Bose–Einstein occupancy at angular frequency `freq` and temperature `temp`,
/// using CODATA ħ and k_B.
pub fn thermal_occupancy(freq: f64, temp: f64) -> Result<f64> {
    thermal_occupancy_with(freq, temp, HBAR, K_BOLTZMANN)
}

pub fn thermal_occupancy_with(freq: f64, temp: f64, hbar: f64, k_boltzmann: f64) -> Result<f64> {
    if !(freq > 0.0) || !freq.is_finite() {
        return Err(Error::Domain(format!("thermal occupancy needs a positive frequency, got {freq}")));
    }
    if !(temp >= 0.0) || !temp.is_finite() {
        return Err(Error::Domain(format!("temperature must be non-negative, got {temp}")));
    }
    if temp == 0.0 {
        return Ok(0.0);
    }
    let x = hbar * freq / (k_boltzmann * temp);
    if x > 700.0 {
        // 1/(eˣ − 1) = e⁻ˣ (1 + e⁻ˣ + …); the correction is below f64 resolution here.
        Ok((-x).exp())
    } else {
        Ok(1.0 / x.exp_m1())
    }
}

pub fn build_noise(p: &SystemParams) -> Result<NoiseSpec> {
    p.validate()?;
    let (sh, ch) = (p.squeeze_r.sinh(), p.squeeze_r.cosh());
    let occ = |freq: f64| thermal_occupancy_with(freq, p.bath_temp, p.hbar, p.k_boltzmann);
    Ok(NoiseSpec {
        n_squeeze: sh * sh,
        m_squeeze: Complex64::from_polar(sh * ch, p.squeeze_phase),
        n_magnon: [occ(p.sites[0].magnon_freq)?, occ(p.sites[1].magnon_freq)?],
        n_phonon: [occ(p.sites[0].phonon_freq)?, occ(p.sites[1].phonon_freq)?],
    })
}
