//! Audits of the approximations behind the linearized model: low magnon
//! excitation (Holstein–Primakoff), negligible magnomechanical frequency
//! shift, negligible magnon Kerr effect, and the rotating-wave condition.
//!
//! An audit never fails; it only flags.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{rabi_for_target_g, solve_semiclassical, SemiclassicalState, SystemParams};

/// Number of spins in a sphere of the given diameter: `ρ·(4π/3)(d/2)³`,
/// rounded to the nearest integer.
pub fn spin_count(diameter: f64, spin_density: f64) -> Result<f64> {
    if !(diameter > 0.0) || !diameter.is_finite() {
        return Err(Error::Domain(format!("sphere diameter must be positive, got {diameter}")));
    }
    let radius = 0.5 * diameter;
    Ok((spin_density * 4.0 / 3.0 * std::f64::consts::PI * radius.powi(3)).round())
}

/// Thresholds below which each ratio counts as "much smaller than".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub excitation: f64,
    pub shift: f64,
    pub kerr: f64,
    /// Kerr ratios above this pass but carry a warning.
    pub kerr_warning: f64,
    pub rwa: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { excitation: 0.01, shift: 0.01, kerr: 0.5, kerr_warning: 0.1, rwa: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SiteAudit {
    /// `⟨m†m⟩ ≈ |⟨m⟩|²`.
    pub magnon_number: f64,
    /// `2 N s`.
    pub spin_capacity: f64,
    pub excitation_ratio: f64,
    /// `2 G₀ |⟨b⟩|`, rad/s.
    pub frequency_shift: f64,
    pub detuning: f64,
    pub shift_ratio: f64,
    /// `𝒦 |⟨m⟩|³`, rad/s.
    pub kerr_term: f64,
    pub rabi: f64,
    pub kerr_ratio: f64,
    /// `max(G, g, κ_a, κ_m, γ)`, rad/s, with `G = G₀|⟨m⟩|`.
    pub max_rate: f64,
    pub phonon_freq: f64,
    pub rwa_ratio: f64,
    pub excitation_pass: bool,
    pub shift_pass: bool,
    pub kerr_pass: bool,
    pub kerr_warning: bool,
    pub rwa_pass: bool,
}

impl SiteAudit {
    pub fn pass(&self) -> bool {
        self.excitation_pass && self.shift_pass && self.kerr_pass && self.rwa_pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidityReport {
    pub spin_count: [f64; 2],
    pub sites: [SiteAudit; 2],
    pub thresholds: Thresholds,
}

impl ValidityReport {
    pub fn pass(&self) -> bool {
        self.sites.iter().all(SiteAudit::pass)
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else if den > 0.0 {
        num / den
    } else {
        f64::INFINITY
    }
}

/// Mean fields at the drive strengths that realize each site's configured
/// magnomechanical coupling `G_j`.
pub fn operating_point(p: &SystemParams) -> Result<SemiclassicalState> {
    let rabi =
        [rabi_for_target_g(p, p.sites[0].magnon_phonon_g, 0)?, rabi_for_target_g(p, p.sites[1].magnon_phonon_g, 1)?];
    solve_semiclassical(p, rabi)
}

/// Audit at [`operating_point`].
pub fn audit_operating_point(p: &SystemParams, thresholds: Thresholds) -> Result<(SemiclassicalState, ValidityReport)> {
    let sc = operating_point(p)?;
    let report = audit_with(p, &sc, thresholds)?;
    Ok((sc, report))
}

pub fn audit(p: &SystemParams, sc: &SemiclassicalState) -> Result<ValidityReport> {
    audit_with(p, sc, Thresholds::default())
}

pub fn audit_with(p: &SystemParams, sc: &SemiclassicalState, thresholds: Thresholds) -> Result<ValidityReport> {
    let counts = [
        spin_count(p.sites[0].sphere_diameter, p.spin_density)?,
        spin_count(p.sites[1].sphere_diameter, p.spin_density)?,
    ];
    let site = |j: usize| {
        let s = &p.sites[j];
        let m_abs = sc.avg_m[j].norm();
        let magnon_number = m_abs * m_abs;
        let spin_capacity = 2.0 * counts[j] * p.spin_s;
        let frequency_shift = 2.0 * s.bare_g0 * sc.avg_b[j].norm();
        let detuning = s.detuning();
        let kerr_term = s.kerr * m_abs.powi(3);
        let rabi = sc.rabi[j];
        let max_rate = [s.bare_g0 * m_abs, s.cavity_magnon_g, s.cavity_decay, s.magnon_decay, s.phonon_damp]
            .into_iter()
            .fold(0.0, f64::max);
        let excitation_ratio = ratio(magnon_number, spin_capacity);
        let shift_ratio = ratio(frequency_shift, detuning);
        let kerr_ratio = ratio(kerr_term, rabi);
        let rwa_ratio = ratio(max_rate, s.phonon_freq);
        SiteAudit {
            magnon_number,
            spin_capacity,
            excitation_ratio,
            frequency_shift,
            detuning,
            shift_ratio,
            kerr_term,
            rabi,
            kerr_ratio,
            max_rate,
            phonon_freq: s.phonon_freq,
            rwa_ratio,
            excitation_pass: excitation_ratio < thresholds.excitation,
            shift_pass: shift_ratio < thresholds.shift,
            kerr_pass: kerr_ratio < thresholds.kerr,
            kerr_warning: kerr_ratio > thresholds.kerr_warning,
            rwa_pass: rwa_ratio < thresholds.rwa,
        }
    };
    Ok(ValidityReport { spin_count: counts, sites: [site(0), site(1)], thresholds })
}
