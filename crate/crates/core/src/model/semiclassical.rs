//! Steady-state mean fields of the driven system.
//!
//! Per site, the magnon amplitude solves
//! `⟨m⟩ = (iΔ + κ_a) Ω / (g² + (iΔ̃ + κ_m)(iΔ + κ_a))` with the
//! magnomechanical shift `Δ̃ = Δ + 2 G₀ Re⟨b⟩` and
//! `⟨b⟩ = −i G₀ |⟨m⟩|² / (iω_b + γ)`.

use num_complex::Complex64;
use serde::Serialize;

use super::params::{SiteParams, SystemParams};
use crate::error::{Error, Result};
use crate::validity::spin_count;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemiclassicalOptions {
    /// Include the magnomechanical shift of the magnon detuning.
    pub detuning_shift: bool,
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for SemiclassicalOptions {
    fn default() -> Self {
        Self { detuning_shift: true, rel_tol: 1e-12, max_iter: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiclassicalState {
    pub avg_a: [Complex64; 2],
    pub avg_m: [Complex64; 2],
    pub avg_b: [Complex64; 2],
    /// Effective magnon detuning `Δ̃`, rad/s.
    pub eff_detuning: [f64; 2],
    /// Drive Rabi frequency `Ω`, rad/s.
    pub rabi: [f64; 2],
    /// Drive field amplitude `B_0`, tesla.
    pub drive_field_b0: [f64; 2],
    pub iterations: [usize; 2],
}

impl SemiclassicalState {
    /// Effective magnomechanical coupling `|G| = |G₀⟨m⟩|` per site.
    pub fn effective_coupling(&self, p: &SystemParams) -> [f64; 2] {
        [0, 1].map(|j| p.sites[j].bare_g0 * self.avg_m[j].norm())
    }
}

/// Closed-form magnon amplitude for a given effective detuning.
pub fn magnon_amplitude(site: &SiteParams, rabi: f64, eff_detuning: f64) -> Complex64 {
    let delta = site.detuning();
    let cav = I * delta + site.cavity_decay;
    let g = site.cavity_magnon_g;
    cav * rabi / (g * g + (I * eff_detuning + site.magnon_decay) * cav)
}

/// Large-detuning form `iΔΩ/(g² − Δ²)`, valid for `Δ ≫ κ_a, κ_m`.
pub fn magnon_amplitude_approx(site: &SiteParams, rabi: f64) -> Complex64 {
    let delta = site.detuning();
    let g = site.cavity_magnon_g;
    I * delta * rabi / (g * g - delta * delta)
}

fn phonon_amplitude(site: &SiteParams, m: Complex64) -> Complex64 {
    -I * site.bare_g0 * m.norm_sqr() / (I * site.phonon_freq + site.phonon_damp)
}

struct SiteSolution {
    a: Complex64,
    m: Complex64,
    b: Complex64,
    eff_detuning: f64,
    iterations: usize,
}

fn solve_site(site: &SiteParams, j: usize, rabi: f64, opts: &SemiclassicalOptions) -> Result<SiteSolution> {
    let delta = site.detuning();
    let mut eff = delta;
    let mut m = magnon_amplitude(site, rabi, eff);
    let mut history = vec![m.norm()];
    let mut iterations = 1;
    let converged = loop {
        if !opts.detuning_shift {
            break true;
        }
        let b = phonon_amplitude(site, m);
        eff = delta + 2.0 * site.bare_g0 * b.re;
        let next = magnon_amplitude(site, rabi, eff);
        iterations += 1;
        let (prev, now) = (m.norm(), next.norm());
        m = next;
        history.push(now);
        if !now.is_finite() {
            break false;
        }
        if (now - prev).abs() <= opts.rel_tol * now.max(prev) {
            break true;
        }
        if iterations >= opts.max_iter {
            break false;
        }
    };
    if !converged {
        let n = history.len();
        let last = history[n - 1];
        let previous = history[n.saturating_sub(2)];
        return Err(Error::FixedPoint { site: j + 1, previous, last, bistable: oscillating(&history) });
    }
    let b = phonon_amplitude(site, m);
    let a = -I * site.cavity_magnon_g * m / (I * delta + site.cavity_decay);
    Ok(SiteSolution { a, m, b, eff_detuning: eff, iterations })
}

/// Successive differences alternate in sign without shrinking.
fn oscillating(history: &[f64]) -> bool {
    let diffs: Vec<f64> = history.windows(2).map(|w| w[1] - w[0]).collect();
    let tail = &diffs[diffs.len().saturating_sub(6)..];
    tail.len() >= 4
        && tail.windows(2).all(|w| w[0] * w[1] < 0.0)
        && tail.windows(2).all(|w| w[1].abs() >= 0.5 * w[0].abs())
}

pub fn solve_semiclassical(p: &SystemParams, drive_rabi: [f64; 2]) -> Result<SemiclassicalState> {
    solve_semiclassical_with(p, drive_rabi, &SemiclassicalOptions::default())
}

pub fn solve_semiclassical_with(
    p: &SystemParams,
    drive_rabi: [f64; 2],
    opts: &SemiclassicalOptions,
) -> Result<SemiclassicalState> {
    p.validate()?;
    if drive_rabi.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
        return Err(Error::Domain(format!("drive Rabi frequencies must be non-negative, got {drive_rabi:?}")));
    }
    let s0 = solve_site(&p.sites[0], 0, drive_rabi[0], opts)?;
    let s1 = solve_site(&p.sites[1], 1, drive_rabi[1], opts)?;
    let b0 = |j: usize| -> Result<f64> {
        let n = spin_count(p.sites[j].sphere_diameter, p.spin_density)?;
        let per_tesla = 5f64.sqrt() / 4.0 * p.gyromagnetic * n.sqrt();
        Ok(if per_tesla > 0.0 { drive_rabi[j] / per_tesla } else { 0.0 })
    };
    Ok(SemiclassicalState {
        avg_a: [s0.a, s1.a],
        avg_m: [s0.m, s1.m],
        avg_b: [s0.b, s1.b],
        eff_detuning: [s0.eff_detuning, s1.eff_detuning],
        rabi: drive_rabi,
        drive_field_b0: [b0(0)?, b0(1)?],
        iterations: [s0.iterations, s1.iterations],
    })
}

/// Drive Rabi frequency at site `j` (0-based) such that `|G₀⟨m⟩| = target_g`.
pub fn rabi_for_target_g(p: &SystemParams, target_g: f64, j: usize) -> Result<f64> {
    p.validate()?;
    if j > 1 {
        return Err(Error::Domain(format!("site index {j} out of range")));
    }
    if !(target_g >= 0.0) || !target_g.is_finite() {
        return Err(Error::Domain(format!("target coupling must be non-negative, got {target_g}")));
    }
    let site = &p.sites[j];
    if !(site.bare_g0 > 0.0) {
        return Err(Error::Domain(format!("site{}: bare coupling G0 must be positive", j + 1)));
    }
    if target_g == 0.0 {
        return Ok(0.0);
    }
    let opts = SemiclassicalOptions::default();
    let coupling = |rabi: f64| -> Result<f64> { Ok(site.bare_g0 * solve_site(site, j, rabi, &opts)?.m.norm()) };

    // |⟨m⟩| is linear in Ω up to the small detuning shift, so rescaling the
    // drive by target/current converges in a handful of steps.
    let unshifted = magnon_amplitude(site, 1.0, site.detuning()).norm();
    let mut rabi = target_g / (site.bare_g0 * unshifted);
    for _ in 0..100 {
        let current = coupling(rabi)?;
        let ratio = target_g / current;
        if (ratio - 1.0).abs() <= 1e-14 {
            return Ok(rabi);
        }
        let next = rabi * ratio;
        if !next.is_finite() || next <= 0.0 {
            break;
        }
        rabi = next;
    }
    let current = coupling(rabi)?;
    if (current / target_g - 1.0).abs() <= 1e-10 {
        return Ok(rabi);
    }
    Err(Error::Search(format!(
        "site{}: could not reach G = {target_g:.6e} rad/s (last Ω = {rabi:.6e}, G = {current:.6e})",
        j + 1
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TWO_PI;

    fn baseline() -> SystemParams {
        SystemParams::baseline()
    }

    #[test]
    fn undriven_is_empty() {
        let sc = solve_semiclassical(&baseline(), [0.0, 0.0]).unwrap();
        for j in 0..2 {
            assert_eq!(sc.avg_a[j].norm(), 0.0);
            assert_eq!(sc.avg_m[j].norm(), 0.0);
            assert_eq!(sc.avg_b[j].norm(), 0.0);
            assert_eq!(sc.drive_field_b0[j], 0.0);
        }
    }

    #[test]
    fn operating_point_mean_fields() {
        let p = baseline();
        let sc = solve_semiclassical(&p, [6.9e14, 6.9e14]).unwrap();
        let m = sc.avg_m[0].norm();
        assert!((m / 1.2e7 - 1.0).abs() < 0.05, "|m| = {m:e}");
        assert!((sc.avg_b[0].re / -7.2e5 - 1.0).abs() < 0.05, "Re b = {:e}", sc.avg_b[0].re);
        assert!((sc.drive_field_b0[0] / 3.8e-5 - 1.0).abs() < 0.05, "B0 = {:e}", sc.drive_field_b0[0]);
        // Mechanical momentum mean is suppressed by γ/ω_b.
        for j in 0..2 {
            let s = &p.sites[j];
            assert!(sc.avg_b[j].im.abs() <= 2.0 * s.phonon_damp / s.phonon_freq * sc.avg_b[j].norm());
        }
        // ⟨a⟩ = −ig⟨m⟩/(iΔ + κ_a)
        let s = &p.sites[0];
        let a = -I * s.cavity_magnon_g * sc.avg_m[0] / (I * s.detuning() + s.cavity_decay);
        assert!((a - sc.avg_a[0]).norm() < 1e-12 * a.norm());
    }

    #[test]
    fn fixed_point_residual() {
        let p = baseline();
        let sc = solve_semiclassical(&p, [6.9e14, 8.0e14]).unwrap();
        for j in 0..2 {
            let s = &p.sites[j];
            let b = phonon_amplitude(s, sc.avg_m[j]);
            let eff = s.detuning() + 2.0 * s.bare_g0 * b.re;
            let m = magnon_amplitude(s, sc.rabi[j], eff);
            assert!((m - sc.avg_m[j]).norm() <= 1e-10 * m.norm());
        }
    }

    #[test]
    fn approximate_form_is_close() {
        let p = baseline();
        let full = solve_semiclassical(&p, [6.9e14, 6.9e14]).unwrap();
        let approx = magnon_amplitude_approx(&p.sites[0], 6.9e14);
        assert!(approx.re == 0.0);
        let rel = (approx.norm() - full.avg_m[0].norm()).abs() / full.avg_m[0].norm();
        assert!(rel < 0.02, "relative gap {rel}");
    }

    #[test]
    fn shift_disabled_matches_closed_form() {
        let p = baseline();
        let opts = SemiclassicalOptions { detuning_shift: false, ..Default::default() };
        let sc = solve_semiclassical_with(&p, [6.9e14, 3.0e14], &opts).unwrap();
        for j in 0..2 {
            let s = &p.sites[j];
            let want = (I * s.detuning() + s.cavity_decay) * sc.rabi[j]
                / (s.cavity_magnon_g.powi(2)
                    + (I * s.detuning() + s.magnon_decay) * (I * s.detuning() + s.cavity_decay));
            assert!((sc.avg_m[j] - want).norm() <= 1e-14 * want.norm());
            assert_eq!(sc.eff_detuning[j], s.detuning());
        }
    }

    #[test]
    fn runaway_shift_is_reported() {
        let mut p = baseline();
        // A huge bare coupling makes the detuning shift dominate.
        p.sites[0].bare_g0 = TWO_PI * 5e3;
        let err = solve_semiclassical(&p, [6.9e14, 0.0]).unwrap_err();
        match err {
            Error::FixedPoint { site, .. } => assert_eq!(site, 1),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn rabi_round_trip() {
        let p = baseline();
        for j in 0..2 {
            let target = p.sites[j].magnon_phonon_g;
            let rabi = rabi_for_target_g(&p, target, j).unwrap();
            let mut drive = [0.0; 2];
            drive[j] = rabi;
            let sc = solve_semiclassical(&p, drive).unwrap();
            let got = sc.effective_coupling(&p)[j];
            assert!((got / target - 1.0).abs() < 1e-9, "site {j}: {got} vs {target}");
        }
    }

    #[test]
    fn rabi_for_baseline_coupling() {
        let p = baseline();
        let rabi = rabi_for_target_g(&p, TWO_PI * 0.6e6, 0).unwrap();
        assert!((rabi / 6.9e14 - 1.0).abs() < 0.05, "Ω = {rabi:e}");
        assert_eq!(rabi_for_target_g(&p, 0.0, 0).unwrap(), 0.0);
        let tiny = rabi_for_target_g(&p, 1e-6, 0).unwrap();
        assert!(tiny > 0.0 && tiny < 1e3);
    }

    #[test]
    fn rabi_is_linear_in_target() {
        let p = baseline();
        let one = rabi_for_target_g(&p, TWO_PI * 0.3e6, 0).unwrap();
        let two = rabi_for_target_g(&p, TWO_PI * 0.6e6, 0).unwrap();
        assert!((two / one - 2.0).abs() < 0.02 * 1.0 && (two / (2.0 * one) - 1.0).abs() < 0.01);
    }

    #[test]
    fn rabi_errors() {
        let mut p = baseline();
        assert!(matches!(rabi_for_target_g(&p, -1.0, 0), Err(Error::Domain(_))));
        assert!(matches!(rabi_for_target_g(&p, 1.0, 2), Err(Error::Domain(_))));
        p.sites[0].bare_g0 = 0.0;
        assert!(matches!(rabi_for_target_g(&p, 1.0, 0), Err(Error::Domain(_))));
    }
}
