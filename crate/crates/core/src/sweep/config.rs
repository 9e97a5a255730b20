//! Flat `key = value` run configuration.
//!
//! Frequencies and rates are given in Hz (converted to angular units on
//! read), lengths in meters, temperatures in kelvin or, with the `_mk`
//! suffix, millikelvin. Per-site keys take a `site1.` or `site2.` prefix;
//! without a prefix they apply to both sites. `#` starts a comment.
//!
//! ```text
//! squeeze_r = 0.4
//! bath_temp_mk = 10
//! phonon_freq_hz = 10e6
//! site2.phonon_freq_hz = 12e6
//! sweep.axis1 = squeeze_r 0 1.2 61 lin
//! ```
//!
//! Unless `drive_freq_hz` is set for a site, its drive is retuned so that
//! `Δ_j = ω_bj` when the configuration is resolved.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{SiteParams, SystemParams, TWO_PI};
use crate::oracle::OracleConfig;
use crate::validity::Thresholds;

type SiteField = fn(&mut SiteParams) -> &mut f64;
type GlobalField = fn(&mut SystemParams) -> &mut f64;

/// Per-site numeric keys: name, factor from config units to model units, field.
const SITE_KEYS: &[(&str, f64, SiteField)] = &[
    ("cavity_freq_hz", TWO_PI, |s| &mut s.cavity_freq),
    ("magnon_freq_hz", TWO_PI, |s| &mut s.magnon_freq),
    ("squeeze_freq_hz", TWO_PI, |s| &mut s.squeeze_freq),
    ("phonon_freq_hz", TWO_PI, |s| &mut s.phonon_freq),
    ("drive_freq_hz", TWO_PI, |s| &mut s.drive_freq),
    ("cavity_decay_hz", TWO_PI, |s| &mut s.cavity_decay),
    ("magnon_decay_hz", TWO_PI, |s| &mut s.magnon_decay),
    ("phonon_damp_hz", TWO_PI, |s| &mut s.phonon_damp),
    ("g_hz", TWO_PI, |s| &mut s.cavity_magnon_g),
    ("G_hz", TWO_PI, |s| &mut s.magnon_phonon_g),
    ("G0_hz", TWO_PI, |s| &mut s.bare_g0),
    ("diameter_m", 1.0, |s| &mut s.sphere_diameter),
    ("kerr_hz", TWO_PI, |s| &mut s.kerr),
];

/// Sets cavity, magnon and squeezed-drive frequencies together.
const RESONANCE_KEY: &str = "resonance_freq_hz";

/// Global numeric keys; the flag marks the canonical spelling written to
/// output headers.
const GLOBAL_KEYS: &[(&str, f64, bool, GlobalField)] = &[
    ("squeeze_r", 1.0, true, |p| &mut p.squeeze_r),
    ("squeeze_phase_rad", 1.0, true, |p| &mut p.squeeze_phase),
    ("bath_temp_k", 1.0, true, |p| &mut p.bath_temp),
    ("bath_temp_mk", 1e-3, false, |p| &mut p.bath_temp),
    ("spin_density_m3", 1.0, true, |p| &mut p.spin_density),
    ("spin_s", 1.0, true, |p| &mut p.spin_s),
    ("gyromagnetic_hz_per_t", TWO_PI, true, |p| &mut p.gyromagnetic),
    ("hbar_js", 1.0, true, |p| &mut p.hbar),
    ("k_boltzmann_jk", 1.0, true, |p| &mut p.k_boltzmann),
];

/// Most grid points a sweep may request.
pub const MAX_GRID_POINTS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

/// One sweep axis: `path start stop points [lin|log]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub path: String,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl Axis {
    fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split_whitespace().collect();
        if !(4..=5).contains(&parts.len()) {
            return Err(Error::Config(format!("axis must read `path start stop points [lin|log]`, got {text:?}")));
        }
        let spacing = match parts.get(4).copied().unwrap_or("lin") {
            "lin" => Spacing::Linear,
            "log" => Spacing::Log,
            other => return Err(Error::Config(format!("unknown axis spacing {other:?}"))),
        };
        let points = parts[3]
            .parse::<usize>()
            .map_err(|_| Error::Config(format!("axis point count {:?} is not an integer", parts[3])))?;
        let axis = Self {
            path: parts[0].to_string(),
            start: parse_number(parts[1])?,
            stop: parse_number(parts[2])?,
            points,
            spacing,
        };
        axis.check()?;
        Ok(axis)
    }

    fn check(&self) -> Result<()> {
        if self.points < 2 {
            return Err(Error::Config(format!("axis {} needs at least 2 points", self.path)));
        }
        if !is_param_path(&self.path) {
            return Err(Error::Config(format!("axis path {:?} is not a numeric parameter", self.path)));
        }
        if self.spacing == Spacing::Log && !(self.start > 0.0 && self.stop > 0.0) {
            return Err(Error::Config(format!("log axis {} needs positive bounds", self.path)));
        }
        Ok(())
    }

    /// Grid values; the first and last are exactly `start` and `stop`.
    pub fn values(&self) -> Vec<f64> {
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|k| {
                if k == 0 {
                    return self.start;
                }
                if k == self.points - 1 {
                    return self.stop;
                }
                let f = k as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.start + (self.stop - self.start) * f,
                    Spacing::Log => (self.start.ln() + (self.stop.ln() - self.start.ln()) * f).exp(),
                }
            })
            .collect()
    }

    fn describe(&self) -> String {
        let spacing = match self.spacing {
            Spacing::Linear => "lin",
            Spacing::Log => "log",
        };
        format!("{} {:e} {:e} {} {spacing}", self.path, self.start, self.stop, self.points)
    }
}

/// Grid and output selection of a sweep.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepSpec {
    /// Outer axis first.
    pub axes: Vec<Axis>,
    /// Skip the validity audit (the `validity_pass` column stays empty).
    pub skip_validity: bool,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(Error::Config(format!("a sweep needs 1 or 2 axes, got {}", self.axes.len())));
        }
        for a in &self.axes {
            a.check()?;
        }
        let total = self.axes.iter().try_fold(1usize, |acc, a| acc.checked_mul(a.points));
        match total {
            Some(n) if n <= MAX_GRID_POINTS => Ok(()),
            _ => Err(Error::Config(format!("sweep grid exceeds {MAX_GRID_POINTS} points"))),
        }
    }
}

/// Everything a CLI run needs: physical parameters plus audit thresholds,
/// sweep grid, critical-temperature bracket and oracle settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    params: SystemParams,
    explicit_drive: [bool; 2],
    pub thresholds: Thresholds,
    pub sweep: SweepSpec,
    /// Kelvin.
    pub critical_bracket: (f64, f64),
    pub oracle: OracleConfig,
    /// `γ/κ_a` used by the oracle unless a long run is requested.
    pub oracle_damping_ratio: f64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            params: SystemParams::baseline(),
            explicit_drive: [false; 2],
            thresholds: Thresholds::default(),
            sweep: SweepSpec::default(),
            critical_bracket: (10e-3, 200e-3),
            oracle: OracleConfig::default(),
            oracle_damping_ratio: 0.1,
        }
    }
}

fn parse_number(v: &str) -> Result<f64> {
    let x: f64 = v.trim().parse().map_err(|_| Error::Config(format!("{v:?} is not a number")))?;
    if !x.is_finite() {
        return Err(Error::Config(format!("{v:?} is not finite")));
    }
    Ok(x)
}

fn parse_bool(v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(Error::Config(format!("{other:?} is not a boolean"))),
    }
}

fn split_site(key: &str) -> (Option<usize>, &str) {
    if let Some(rest) = key.strip_prefix("site1.") {
        (Some(0), rest)
    } else if let Some(rest) = key.strip_prefix("site2.") {
        (Some(1), rest)
    } else {
        (None, key)
    }
}

/// True for keys that name a numeric physical parameter, i.e. valid sweep axes.
pub fn is_param_path(key: &str) -> bool {
    let (site, name) = split_site(key);
    let per_site = name == RESONANCE_KEY || SITE_KEYS.iter().any(|(k, ..)| *k == name);
    per_site || (site.is_none() && GLOBAL_KEYS.iter().any(|(k, ..)| *k == name))
}

impl Config {
    /// Baseline operating point with default thresholds and settings, updated by
    /// the lines of `text`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {}", n + 1, strip_prefix(e))))?;
        }
        Ok(())
    }

    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if let Some(name) = key.strip_prefix("validity.") {
            let t = &mut self.thresholds;
            let slot = match name {
                "excitation" => &mut t.excitation,
                "shift" => &mut t.shift,
                "kerr" => &mut t.kerr,
                "kerr_warning" => &mut t.kerr_warning,
                "rwa" => &mut t.rwa,
                _ => return Err(unknown(key)),
            };
            *slot = parse_number(value)?;
            return Ok(());
        }
        if let Some(name) = key.strip_prefix("sweep.") {
            match name {
                "axis1" | "axis2" => {
                    let k = if name == "axis1" { 0 } else { 1 };
                    let axis = Axis::parse(value)?;
                    if k > self.sweep.axes.len() {
                        return Err(Error::Config("sweep.axis2 needs sweep.axis1 first".into()));
                    }
                    if k == self.sweep.axes.len() {
                        self.sweep.axes.push(axis);
                    } else {
                        self.sweep.axes[k] = axis;
                    }
                }
                "validity" => self.sweep.skip_validity = !parse_bool(value)?,
                _ => return Err(unknown(key)),
            }
            return Ok(());
        }
        if let Some(name) = key.strip_prefix("critical.") {
            let v = parse_number(value)?;
            match name {
                "t_low_k" => self.critical_bracket.0 = v,
                "t_high_k" => self.critical_bracket.1 = v,
                "t_low_mk" => self.critical_bracket.0 = v * 1e-3,
                "t_high_mk" => self.critical_bracket.1 = v * 1e-3,
                _ => return Err(unknown(key)),
            }
            return Ok(());
        }
        if let Some(name) = key.strip_prefix("oracle.") {
            let v = parse_number(value)?;
            let o = &mut self.oracle;
            match name {
                "horizon_factor" => o.horizon_factor = v,
                "dt_factor" => o.dt_factor = v,
                "report_cadence" => o.report_cadence = as_count(key, v)?,
                "converge_tol" => o.converge_tol = v,
                "step_budget" => o.step_budget = as_count(key, v)? as u64,
                "damping_ratio" => self.oracle_damping_ratio = v,
                _ => return Err(unknown(key)),
            }
            return self.oracle.validate().map_err(|e| Error::Config(strip_prefix(e)));
        }

        let (site, name) = split_site(key);
        if name == "drive_freq_hz" && value == "auto" {
            for j in sites(site) {
                self.explicit_drive[j] = false;
            }
            return Ok(());
        }
        self.set_numeric(key, parse_number(value)?)
    }

    /// Sets a numeric physical parameter in config units.
    pub fn set_numeric(&mut self, key: &str, value: f64) -> Result<()> {
        let (site, name) = split_site(key);
        if name == RESONANCE_KEY {
            for j in sites(site) {
                let s = &mut self.params.sites[j];
                let w = TWO_PI * value;
                (s.cavity_freq, s.magnon_freq, s.squeeze_freq) = (w, w, w);
            }
            return Ok(());
        }
        if let Some((_, factor, field)) = SITE_KEYS.iter().find(|(k, ..)| *k == name) {
            for j in sites(site) {
                *field(&mut self.params.sites[j]) = factor * value;
                if name == "drive_freq_hz" {
                    self.explicit_drive[j] = true;
                }
            }
            return Ok(());
        }
        if site.is_none() {
            if let Some((_, factor, _, field)) = GLOBAL_KEYS.iter().find(|(k, ..)| *k == name) {
                *field(&mut self.params) = factor * value;
                return Ok(());
            }
        }
        Err(unknown(key))
    }

    /// Parameters with non-explicit drives retuned, validated.
    pub fn resolved_params(&self) -> Result<SystemParams> {
        let mut p = self.params.clone();
        for (s, explicit) in p.sites.iter_mut().zip(self.explicit_drive) {
            if !explicit {
                s.drive_freq = s.cavity_freq - s.phonon_freq;
            }
        }
        p.validate()?;
        Ok(p)
    }

    /// Canonical `key = value` lines that reproduce this configuration,
    /// with drives written out as resolved.
    pub fn to_text(&self) -> Result<String> {
        let p = self.resolved_params()?;
        let mut out = String::new();
        let mut tmp = p.clone();
        for (key, factor, canonical, field) in GLOBAL_KEYS {
            if *canonical {
                let _ = writeln!(out, "{key} = {:e}", *field(&mut tmp) / factor);
            }
        }
        for j in 0..2 {
            for (key, factor, field) in SITE_KEYS {
                let _ = writeln!(out, "site{}.{key} = {:e}", j + 1, *field(&mut tmp.sites[j]) / factor);
            }
        }
        let t = &self.thresholds;
        for (k, v) in [
            ("excitation", t.excitation),
            ("shift", t.shift),
            ("kerr", t.kerr),
            ("kerr_warning", t.kerr_warning),
            ("rwa", t.rwa),
        ] {
            let _ = writeln!(out, "validity.{k} = {v:e}");
        }
        for (k, a) in self.sweep.axes.iter().enumerate() {
            let _ = writeln!(out, "sweep.axis{} = {}", k + 1, a.describe());
        }
        let _ = writeln!(out, "sweep.validity = {}", !self.sweep.skip_validity);
        let _ = writeln!(out, "critical.t_low_k = {:e}", self.critical_bracket.0);
        let _ = writeln!(out, "critical.t_high_k = {:e}", self.critical_bracket.1);
        let o = &self.oracle;
        let _ = writeln!(out, "oracle.horizon_factor = {:e}", o.horizon_factor);
        let _ = writeln!(out, "oracle.dt_factor = {:e}", o.dt_factor);
        let _ = writeln!(out, "oracle.report_cadence = {}", o.report_cadence);
        let _ = writeln!(out, "oracle.converge_tol = {:e}", o.converge_tol);
        let _ = writeln!(out, "oracle.step_budget = {}", o.step_budget);
        let _ = writeln!(out, "oracle.damping_ratio = {:e}", self.oracle_damping_ratio);
        Ok(out)
    }
}

fn sites(site: Option<usize>) -> std::ops::RangeInclusive<usize> {
    match site {
        Some(j) => j..=j,
        None => 0..=1,
    }
}

fn as_count(key: &str, v: f64) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 && v <= u64::MAX as f64 {
        Ok(v as usize)
    } else {
        Err(Error::Config(format!("{key} must be a positive integer, got {v}")))
    }
}

fn unknown(key: &str) -> Error {
    Error::Config(format!("unknown key {key:?}"))
}

fn strip_prefix(e: Error) -> String {
    match e {
        Error::Config(msg) => msg,
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_the_baseline() {
        let cfg = Config::parse("# nothing\n\n").unwrap();
        assert_eq!(cfg.resolved_params().unwrap(), SystemParams::baseline());
    }

    #[test]
    fn units_and_site_prefixes() {
        let cfg = Config::parse(
            "bath_temp_mk = 25  # inline comment\nsite2.phonon_freq_hz = 15e6\nG_hz = 1e6\nresonance_freq_hz = 9e9",
        )
        .unwrap();
        let p = cfg.resolved_params().unwrap();
        assert!((p.bath_temp - 0.025).abs() < 1e-15);
        assert!((p.sites[1].phonon_freq - TWO_PI * 15e6).abs() < 1e-6);
        assert!((p.sites[0].phonon_freq - TWO_PI * 10e6).abs() < 1e-6);
        for s in &p.sites {
            assert_eq!(s.magnon_phonon_g, TWO_PI * 1e6);
            assert_eq!(s.magnon_freq, TWO_PI * 9e9);
            // Drives follow the phonon frequencies.
            assert!((s.detuning() / s.phonon_freq - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn explicit_drive_is_respected_and_checked() {
        let mut cfg = Config::parse("site1.drive_freq_hz = 9.98e9").unwrap();
        assert!(matches!(cfg.resolved_params(), Err(Error::InvalidParams(_))));
        cfg.set("site1.drive_freq_hz", "auto").unwrap();
        cfg.resolved_params().unwrap();
    }

    #[test]
    fn bad_lines_name_the_line() {
        let err = Config::parse("squeeze_r = 0.4\nbogus = 1").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(Config::parse("squeeze_r 0.4").is_err());
        assert!(Config::parse("squeeze_r = abc").is_err());
        assert!(Config::parse("site1.squeeze_r = 0.1").is_err());
        assert!(Config::parse("oracle.horizon_factor = 2").is_err());
        assert!(Config::parse("sweep.axis2 = squeeze_r 0 1 3").is_err());
    }

    #[test]
    fn axes() {
        let cfg = Config::parse("sweep.axis1 = squeeze_r 0 1.2 61\nsweep.axis2 = bath_temp_mk 1 100 3 log").unwrap();
        let r = cfg.sweep.axes[0].values();
        assert_eq!(r.len(), 61);
        assert_eq!((r[0], r[60]), (0.0, 1.2));
        assert!((r[10] - 0.2).abs() < 1e-15);
        let t = cfg.sweep.axes[1].values();
        assert!((t[1] - 10.0).abs() < 1e-12);
        cfg.sweep.validate().unwrap();

        for bad in [
            "sweep.axis1 = squeeze_r 0 1 1",
            "sweep.axis1 = nonsense 0 1 3",
            "sweep.axis1 = squeeze_r 0 1 3 log",
            "sweep.axis1 = sweep.validity 0 1 3",
        ] {
            assert!(Config::parse(bad).is_err(), "{bad}");
        }
        let big = Config::parse("sweep.axis1 = squeeze_r 0 1 2000\nsweep.axis2 = G_hz 0 1 2000").unwrap();
        assert!(big.sweep.validate().is_err());
    }

    #[test]
    fn canonical_text_reproduces_the_config() {
        let cfg =
            Config::parse("squeeze_r = 0.7\nsite2.kerr_hz = 1e-8\nsweep.axis1 = G_hz 0 3e6 4\nvalidity.rwa = 0.4")
                .unwrap();
        let again = Config::parse(&cfg.to_text().unwrap()).unwrap();
        let (a, b) = (cfg.resolved_params().unwrap(), again.resolved_params().unwrap());
        assert_eq!(a.squeeze_r, b.squeeze_r);
        for (x, y) in a.sites.iter().zip(&b.sites) {
            assert!((x.drive_freq / y.drive_freq - 1.0).abs() < 1e-15);
            assert!((x.kerr / y.kerr - 1.0).abs() < 1e-15);
        }
        assert_eq!(again.sweep, cfg.sweep);
        assert_eq!(again.thresholds, cfg.thresholds);
    }
}
