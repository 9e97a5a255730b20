//! Single points, parameter grids and the critical-temperature search.

mod config;
mod output;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{LinearModel, ModeKind, SystemParams};
use crate::steadystate::{full_report, log_negativity_detail, reduce_pair, steady_covariance, PairValues};
use crate::validity::audit_operating_point;

pub use config::{is_param_path, Axis, Config, Spacing, SweepSpec, MAX_GRID_POINTS};
pub use output::{to_json_pretty, write_csv, write_json, write_outputs, OutputFormat, VERSION};

/// Outcome of one grid point. Numeric fields are `None` when the point failed;
/// `error_code` then says why.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub index: Vec<usize>,
    pub values: Vec<f64>,
    pub entanglement: Option<PairValues>,
    /// `ν̃₋` per same-type pair.
    pub min_symplectic: Option<PairValues>,
    /// `Some(false)` for points whose drift is not Hurwitz.
    pub stable: Option<bool>,
    pub rwa_suspect: Option<bool>,
    pub validity_pass: Option<bool>,
    pub error_code: Option<&'static str>,
    pub error: Option<String>,
}

impl ResultRow {
    fn failed(index: Vec<usize>, values: Vec<f64>, e: &Error) -> Self {
        let unstable = e.code() == "unstable";
        Self {
            index,
            values,
            entanglement: None,
            min_symplectic: None,
            stable: unstable.then_some(false),
            rwa_suspect: None,
            validity_pass: None,
            error_code: Some(e.code()),
            error: Some(e.to_string()),
        }
    }
}

fn evaluate(cfg: &Config, with_validity: bool, index: Vec<usize>, values: Vec<f64>) -> ResultRow {
    let p = match cfg.resolved_params() {
        Ok(p) => p,
        Err(e) => return ResultRow::failed(index, values, &e),
    };
    let report = match full_report(&p) {
        Ok(r) => r,
        Err(e) => return ResultRow::failed(index, values, &e),
    };
    let mut row = ResultRow {
        index,
        values,
        entanglement: Some(report.entanglement()),
        min_symplectic: Some(report.min_symplectic),
        stable: Some(report.stable),
        rwa_suspect: Some(report.rwa_suspect),
        validity_pass: None,
        error_code: None,
        error: None,
    };
    if with_validity {
        match audit_operating_point(&p, cfg.thresholds) {
            Ok((_, audit)) => row.validity_pass = Some(audit.pass()),
            Err(e) => {
                row.error_code = Some(e.code());
                row.error = Some(e.to_string());
            }
        }
    }
    row
}

/// Steady state, entanglement and validity audit for one configuration.
/// Failures are reported in the row, never returned.
pub fn run_point(cfg: &Config) -> ResultRow {
    evaluate(cfg, true, Vec::new(), Vec::new())
}

/// Evaluates every point of `cfg.sweep` on `threads` worker threads (0 lets
/// the pool decide). Rows come back in row-major grid order, outer axis
/// first, regardless of the thread count.
pub fn run_sweep(cfg: &Config, threads: usize) -> Result<Vec<ResultRow>> {
    let spec = &cfg.sweep;
    spec.validate()?;
    // Resolve once so that configuration mistakes abort the whole sweep.
    cfg.resolved_params()?;
    let grids: Vec<Vec<f64>> = spec.axes.iter().map(Axis::values).collect();
    let total: usize = grids.iter().map(Vec::len).product();
    let point = |flat: usize| -> ResultRow {
        let mut index = vec![0; grids.len()];
        let mut rem = flat;
        for k in (0..grids.len()).rev() {
            index[k] = rem % grids[k].len();
            rem /= grids[k].len();
        }
        let values: Vec<f64> = index.iter().zip(&grids).map(|(&i, g)| g[i]).collect();
        let mut c = cfg.clone();
        for (axis, &v) in spec.axes.iter().zip(&values) {
            if let Err(e) = c.set_numeric(&axis.path, v) {
                return ResultRow::failed(index, values, &e);
            }
        }
        evaluate(&c, !spec.skip_validity, index, values)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| (0..total).into_par_iter().map(point).collect()))
}

/// `2ν̃₋ − 1` of the phonon pair at bath temperature `temp`; negative while
/// the phonons are entangled.
fn phonon_margin(p: &SystemParams, temp: f64) -> Result<(f64, f64)> {
    let mut q = p.clone();
    q.bath_temp = temp;
    let c = steady_covariance(&LinearModel::from_params(&q)?)?;
    let (e, nu) = log_negativity_detail(&reduce_pair(&c, ModeKind::Phonon))?;
    Ok((2.0 * nu - 1.0, e))
}

/// Temperature resolution of [`find_critical_temperature`], kelvin.
pub const CRITICAL_TEMP_TOL: f64 = 0.5e-3;
const CRITICAL_MAX_ITER: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalTemperature {
    /// Kelvin, midpoint of the final bracket.
    pub temperature: f64,
    /// Final bracket, kelvin.
    pub bracket: (f64, f64),
    pub iterations: usize,
}

/// Bisects on the bath temperature for the point where the phonon–phonon
/// logarithmic negativity vanishes (`2ν̃₋` crosses 1).
pub fn find_critical_temperature(p: &SystemParams, t_low: f64, t_high: f64) -> Result<CriticalTemperature> {
    if !(t_low >= 0.0 && t_high > t_low) || !t_high.is_finite() {
        return Err(Error::Domain(format!("need 0 <= t_low < t_high, got [{t_low}, {t_high}]")));
    }
    let (f_low, e_low) = phonon_margin(p, t_low)?;
    let (f_high, e_high) = phonon_margin(p, t_high)?;
    if !(f_low < 0.0 && f_high >= 0.0) {
        return Err(Error::Bracket { e_low, e_high });
    }
    let (mut lo, mut hi) = (t_low, t_high);
    let mut iterations = 0;
    while hi - lo > CRITICAL_TEMP_TOL && iterations < CRITICAL_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if phonon_margin(p, mid)?.0 < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Ok(CriticalTemperature { temperature: 0.5 * (lo + hi), bracket: (lo, hi), iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_point_row() {
        let row = run_point(&Config::default());
        let e = row.entanglement.unwrap();
        assert!((e.phonon - 0.54).abs() < 0.03, "{}", e.phonon);
        assert_eq!(row.stable, Some(true));
        assert_eq!(row.rwa_suspect, Some(true));
        // Fails only on the rotating-wave ratio.
        assert_eq!(row.validity_pass, Some(false));
        assert!(row.error_code.is_none());
    }

    #[test]
    fn unstable_and_invalid_points_are_coded() {
        // An undamped, uncoupled phonon has a marginal drift.
        let mut cfg = Config::default();
        cfg.set("site1.G_hz", "0").unwrap();
        cfg.set("site1.phonon_damp_hz", "0").unwrap();
        let row = run_point(&cfg);
        assert_eq!(row.error_code, Some("unstable"));
        assert_eq!(row.stable, Some(false));
        assert!(row.entanglement.is_none());

        let mut cfg = Config::default();
        cfg.set("squeeze_r", "-1").unwrap();
        let row = run_point(&cfg);
        assert_eq!(row.error_code, Some("invalid_params"));
        assert!(row.entanglement.is_none() && row.stable.is_none());
    }

    #[test]
    fn weak_phonon_coupling_points_solve() {
        // Drift matrices on which a machine-epsilon Schur sweep stalls.
        let mut cfg = Config::default();
        cfg.set("squeeze_r", "1").unwrap();
        cfg.set("G_hz", "1e5").unwrap();
        for g in ["8e5", "9e5", "1e6"] {
            cfg.set("g_hz", g).unwrap();
            let row = run_point(&cfg);
            assert!(row.error_code.is_none(), "g = {g}: {:?}", row.error);
        }
    }

    #[test]
    fn sweep_order_is_row_major() {
        let cfg = Config::parse(
            "sweep.axis1 = squeeze_r 0 0.4 3\nsweep.axis2 = bath_temp_mk 10 50 2\nsweep.validity = false",
        )
        .unwrap();
        let rows = run_sweep(&cfg, 2).unwrap();
        let idx: Vec<_> = rows.iter().map(|r| r.index.clone()).collect();
        assert_eq!(idx, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1], vec![2, 0], vec![2, 1]]);
        assert_eq!(rows[3].values, vec![0.2, 50.0]);
        assert!(rows.iter().all(|r| r.validity_pass.is_none()));
        assert_eq!(rows[0].entanglement.unwrap().phonon, 0.0);
    }

    #[test]
    fn critical_temperature_bracket_errors() {
        let mut p = SystemParams::baseline();
        p.squeeze_r = 0.0;
        assert!(matches!(find_critical_temperature(&p, 0.01, 0.2), Err(Error::Bracket { .. })));
        assert!(matches!(find_critical_temperature(&p, 0.2, 0.01), Err(Error::Domain(_))));
    }
}
