use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
pub const HBAR: f64 = 1.054_571_817e-34;
pub const K_BOLTZMANN: f64 = 1.380_649e-23;

/// `ω_b` must exceed every coupling and decay rate by this factor for the
/// rotating-wave model to be trusted.
pub const RWA_MARGIN: f64 = 10.0;

/// Parameters of one cavity + YIG sphere. All frequencies and rates are
/// angular (rad/s); decay rates follow the half-linewidth convention, i.e.
/// the linewidth of a mode with decay `κ` is `2κ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteParams {
    pub cavity_freq: f64,
    pub magnon_freq: f64,
    pub squeeze_freq: f64,
    pub phonon_freq: f64,
    /// Magnon drive frequency `ω_0`.
    pub drive_freq: f64,
    pub cavity_decay: f64,
    pub magnon_decay: f64,
    pub phonon_damp: f64,
    /// Cavity–magnon coupling `g`.
    pub cavity_magnon_g: f64,
    /// Effective (drive-enhanced) magnon–phonon coupling `G`.
    pub magnon_phonon_g: f64,
    /// Single-magnon magnomechanical coupling `G_0`.
    pub bare_g0: f64,
    /// Sphere diameter in meters.
    pub sphere_diameter: f64,
    /// Magnon Kerr coefficient.
    pub kerr: f64,
}

impl SiteParams {
    /// Detuning of cavity/magnon/squeezed drive from the magnon drive, `Δ = ω_a − ω_0`.
    pub fn detuning(&self) -> f64 {
        self.cavity_freq - self.drive_freq
    }

    /// Largest of `G, g, κ_a, κ_m, γ`.
    pub fn max_rate(&self) -> f64 {
        [self.magnon_phonon_g, self.cavity_magnon_g, self.cavity_decay, self.magnon_decay, self.phonon_damp]
            .into_iter()
            .fold(0.0, f64::max)
    }

    pub fn rwa_suspect(&self) -> bool {
        self.phonon_freq < RWA_MARGIN * self.max_rate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub sites: [SiteParams; 2],
    pub squeeze_r: f64,
    /// Phase of the squeezing correlation `ℳ`.
    pub squeeze_phase: f64,
    /// Bath temperature in kelvin.
    pub bath_temp: f64,
    /// Spin density of YIG, m⁻³.
    pub spin_density: f64,
    pub spin_s: f64,
    /// Gyromagnetic ratio `γ_0`, rad/s/T.
    pub gyromagnetic: f64,
    pub hbar: f64,
    pub k_boltzmann: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::baseline()
    }
}

impl SystemParams {
    /// Operating point of the r-sweep and temperature sweep: 10 GHz cavities
    /// and magnons, 10 MHz and 12 MHz phonons, κ_a/2π = 3 MHz, κ_m = κ_a/5,
    /// γ/2π = 100 Hz, g = κ_a, G = 0.2κ_a, r = 0.4, T = 10 mK, 250 μm spheres.
    pub fn baseline() -> Self {
        let omega = TWO_PI * 10e9;
        let omega_b1 = TWO_PI * 10e6;
        let kappa_a = TWO_PI * 3e6;
        let site = |omega_b: f64| SiteParams {
            cavity_freq: omega,
            magnon_freq: omega,
            squeeze_freq: omega,
            phonon_freq: omega_b,
            drive_freq: omega - omega_b,
            cavity_decay: kappa_a,
            magnon_decay: kappa_a / 5.0,
            phonon_damp: TWO_PI * 100.0,
            cavity_magnon_g: kappa_a,
            magnon_phonon_g: 0.2 * kappa_a,
            bare_g0: TWO_PI * 50e-3,
            sphere_diameter: 250e-6,
            kerr: TWO_PI * 6.4e-9,
        };
        Self {
            sites: [site(omega_b1), site(1.2 * omega_b1)],
            squeeze_r: 0.4,
            squeeze_phase: 0.0,
            bath_temp: 10e-3,
            spin_density: 4.22e27,
            spin_s: 2.5,
            gyromagnetic: TWO_PI * 28e9,
            hbar: HBAR,
            k_boltzmann: K_BOLTZMANN,
        }
    }

    /// Re-derives each magnon drive frequency so that `Δ_j = ω_bj`.
    pub fn retune_drives(&mut self) {
        for s in &mut self.sites {
            s.drive_freq = s.cavity_freq - s.phonon_freq;
        }
    }

    /// Copy with `γ_j = ratio · κ_aj`, used to make time-domain checks affordable.
    pub fn with_rescaled_damping(&self, ratio: f64) -> Self {
        let mut p = self.clone();
        for s in &mut p.sites {
            s.phonon_damp = ratio * s.cavity_decay;
        }
        p
    }

    /// Copy with both phonon frequencies scaled by a common factor so that the
    /// tighter site sits at `ω_b = margin · max(G, g, κ_a, κ_m, γ)`; drives are
    /// retuned to keep `Δ_j = ω_bj`.
    pub fn with_phonon_margin(&self, margin: f64) -> Self {
        let current = self.sites.iter().map(|s| s.phonon_freq / s.max_rate()).fold(f64::INFINITY, f64::min);
        let mut p = self.clone();
        for s in &mut p.sites {
            s.phonon_freq *= margin / current;
        }
        p.retune_drives();
        p
    }

    /// True when any site violates `ω_b ≥ 10 · max(G, g, κ_a, κ_m, γ)`.
    pub fn rwa_suspect(&self) -> bool {
        self.sites.iter().any(SiteParams::rwa_suspect)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        let global = [
            ("squeeze_r", self.squeeze_r),
            ("bath_temp", self.bath_temp),
            ("spin_density", self.spin_density),
            ("spin_s", self.spin_s),
            ("gyromagnetic", self.gyromagnetic),
            ("hbar", self.hbar),
            ("k_boltzmann", self.k_boltzmann),
        ];
        for (name, v) in global {
            if !v.is_finite() || v < 0.0 {
                return bad(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        if !self.squeeze_phase.is_finite() {
            return bad("squeeze_phase must be finite".into());
        }
        if self.hbar == 0.0 || self.k_boltzmann == 0.0 {
            return bad("physical constants must be positive".into());
        }
        for (j, s) in self.sites.iter().enumerate() {
            let site = j + 1;
            let fields = [
                ("cavity_freq", s.cavity_freq),
                ("magnon_freq", s.magnon_freq),
                ("squeeze_freq", s.squeeze_freq),
                ("phonon_freq", s.phonon_freq),
                ("drive_freq", s.drive_freq),
                ("cavity_decay", s.cavity_decay),
                ("magnon_decay", s.magnon_decay),
                ("phonon_damp", s.phonon_damp),
                ("cavity_magnon_g", s.cavity_magnon_g),
                ("magnon_phonon_g", s.magnon_phonon_g),
                ("bare_g0", s.bare_g0),
                ("sphere_diameter", s.sphere_diameter),
                ("kerr", s.kerr),
            ];
            for (name, v) in fields {
                if !v.is_finite() || v < 0.0 {
                    return bad(format!("site{site}.{name} must be finite and non-negative, got {v}"));
                }
            }
            if s.phonon_freq <= 0.0 {
                return bad(format!("site{site}.phonon_freq must be positive"));
            }
            let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
            if rel(s.cavity_freq, s.magnon_freq) > 1e-12 || rel(s.cavity_freq, s.squeeze_freq) > 1e-12 {
                return bad(format!("site{site}: cavity, magnon and squeezed-drive frequencies must coincide"));
            }
            if rel(s.detuning(), s.phonon_freq) > 1e-9 {
                return bad(format!(
                    "site{site}: detuning {:.9e} rad/s does not match phonon frequency {:.9e} rad/s",
                    s.detuning(),
                    s.phonon_freq
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid_and_flagged_rwa_suspect() {
        let p = SystemParams::baseline();
        p.validate().unwrap();
        // ω_b1 = 10 MHz against κ_a = g = 3 MHz misses the 10× margin.
        assert!(p.rwa_suspect());
        let mut fast = p.clone();
        for s in &mut fast.sites {
            s.phonon_freq = 40.0 * s.cavity_decay;
        }
        fast.retune_drives();
        assert!(!fast.rwa_suspect());
        assert!((p.sites[1].phonon_freq / p.sites[0].phonon_freq - 1.2).abs() < 1e-15);
        assert!((p.sites[0].detuning() / p.sites[0].phonon_freq - 1.0).abs() < 1e-9);
    }

    #[test]
    fn resonance_and_detuning_are_enforced() {
        let mut p = SystemParams::baseline();
        p.sites[0].magnon_freq *= 1.001;
        assert!(matches!(p.validate(), Err(Error::InvalidParams(_))));

        let mut p = SystemParams::baseline();
        p.sites[1].phonon_freq *= 1.1;
        assert!(p.validate().is_err());
        p.retune_drives();
        p.validate().unwrap();
    }

    #[test]
    fn negative_or_nan_rates_are_rejected() {
        let mut p = SystemParams::baseline();
        p.sites[0].phonon_damp = -1.0;
        assert!(p.validate().is_err());
        let mut p = SystemParams::baseline();
        p.squeeze_r = f64::NAN;
        assert!(p.validate().is_err());
    }

    #[test]
    fn rwa_flag_marks_slow_phonons() {
        let mut p = SystemParams::baseline();
        p.sites[0].phonon_freq = 5.0 * p.sites[0].cavity_decay;
        p.retune_drives();
        p.validate().unwrap();
        assert!(p.rwa_suspect());
    }

    #[test]
    fn phonon_margin_keeps_the_frequency_ratio() {
        let p = SystemParams::baseline().with_rescaled_damping(0.1).with_phonon_margin(20.0);
        p.validate().unwrap();
        let s = &p.sites[0];
        assert!((s.phonon_freq / s.max_rate() - 20.0).abs() < 1e-12);
        assert!((p.sites[1].phonon_freq / s.phonon_freq - 1.2).abs() < 1e-12);
        assert!(!p.rwa_suspect());
        assert!(p.with_phonon_margin(2.0).rwa_suspect());
    }

    #[test]
    fn rescaled_damping() {
        let p = SystemParams::baseline().with_rescaled_damping(0.1);
        assert!((p.sites[0].phonon_damp - 0.1 * p.sites[0].cavity_decay).abs() < 1e-9);
    }
}
