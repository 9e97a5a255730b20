//! Time-domain cross-checks of the Lyapunov steady state.
//!
//! [`steady_by_integration`] relaxes the covariance ODE of a linear model from
//! the vacuum. [`integrate_pre_rwa`] keeps the counter-rotating magnomechanical
//! terms and the oscillating squeezed-bath correlations, averages the
//! asymptotic covariance in the rotating frame and measures how far it sits
//! from the rotating-wave steady state.

use std::io::Write;
use std::ops::ControlFlow;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    eigenvalues, propagate_observed, DiffusionSource, LinalgError, PropagationOptions, RealMatrix, DEFAULT_STEP_BUDGET,
};
use crate::model::{
    build_diffusion, build_noise, quadrature_index, LinearModel, ModeKind, SystemParams, N_QUADRATURES,
};
use crate::steadystate::{physicality_margin, steady_covariance, CovarianceMatrix};

/// Covariance entries recorded in traces: `⟨q1²⟩, ⟨p1²⟩, ⟨q1 q2⟩, ⟨p1 p2⟩`.
pub const TRACE_ENTRIES: [(usize, usize); 4] = [(8, 8), (9, 9), (8, 10), (9, 11)];

const RESCALED_ADVICE: &str = "use the rescaled-damping parameter set (gamma = kappa_a/10) or raise the step budget";
const HORIZON_ADVICE: &str = "increase horizon_factor or loosen converge_tol";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleConfig {
    /// Horizon in units of the slowest decay time `1/|Re λ|max`.
    pub horizon_factor: f64,
    /// Step as a fraction of the fastest timescale.
    pub dt_factor: f64,
    /// Approximate number of trace samples over the horizon.
    pub report_cadence: usize,
    /// Stop once `‖Ċ‖_F / max(‖C‖_F, ‖C₀‖_F)` (dimensionless time) drops below this.
    pub converge_tol: f64,
    pub step_budget: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            horizon_factor: 20.0,
            dt_factor: 1.0 / 50.0,
            report_cadence: 200,
            converge_tol: 1e-9,
            step_budget: DEFAULT_STEP_BUDGET,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon_factor >= 5.0) || !self.horizon_factor.is_finite() {
            return Err(Error::InvalidParams(format!(
                "horizon_factor must be at least 5, got {}",
                self.horizon_factor
            )));
        }
        if !(self.dt_factor > 0.0 && self.dt_factor <= 0.1) {
            return Err(Error::InvalidParams(format!("dt_factor must lie in (0, 1/10], got {}", self.dt_factor)));
        }
        if self.report_cadence == 0 {
            return Err(Error::InvalidParams("report_cadence must be positive".into()));
        }
        if !(self.converge_tol > 0.0) {
            return Err(Error::InvalidParams("converge_tol must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceSample {
    /// Seconds.
    pub time: f64,
    pub derivative_norm: f64,
    pub physicality_margin: f64,
    /// Values at [`TRACE_ENTRIES`].
    pub entries: [f64; 4],
}

impl TraceSample {
    fn new(time: f64, derivative_norm: f64, c: &DMatrix<f64>) -> Self {
        Self {
            time,
            derivative_norm,
            physicality_margin: physicality_margin(c),
            entries: TRACE_ENTRIES.map(|(i, k)| c[(i, k)]),
        }
    }
}

#[derive(Debug, Clone)]
pub struct IntegrationRun {
    pub covariance: CovarianceMatrix,
    pub trace: Vec<TraceSample>,
    /// Seconds at which the convergence test passed.
    pub time: f64,
    pub steps: u64,
}

#[derive(Debug, Clone)]
pub struct PreRwaRun {
    /// Window-averaged covariance, rotated into the rotating-wave frame.
    pub covariance: CovarianceMatrix,
    /// Rotating-wave steady state of the same parameters.
    pub reference: CovarianceMatrix,
    /// `‖C̄ − C_rwa‖_F / ‖C_rwa‖_F`.
    pub rwa_error: f64,
    /// Averaging window in seconds.
    pub window: (f64, f64),
    pub steps: u64,
    pub trace: Vec<TraceSample>,
}

/// Spectral abscissa and spectral radius.
fn spectrum_bounds(a: &RealMatrix) -> Result<(f64, f64)> {
    let spec = eigenvalues(a)?;
    let radius = spec.values().iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok((spec.max_real(), radius))
}

fn budget_error(e: LinalgError) -> Error {
    match e {
        LinalgError::StepBudget { required, budget } => Error::StepBudget { required, budget, advice: RESCALED_ADVICE },
        other => Error::Linalg(other),
    }
}

fn vacuum() -> RealMatrix {
    RealMatrix::identity(N_QUADRATURES).scaled(0.5)
}

/// Propagates `Ċ = AC + CAᵀ + D` from the vacuum until the relative derivative
/// norm falls below `cfg.converge_tol`, in time units of `1/model.rate_scale`.
pub fn steady_by_integration(model: &LinearModel, cfg: &OracleConfig) -> Result<IntegrationRun> {
    cfg.validate()?;
    let s = model.rate_scale;
    let a = model.drift.scaled(1.0 / s);
    let d = model.diffusion.scaled(1.0 / s);
    let (abscissa, radius) = spectrum_bounds(&a)?;
    if abscissa >= 0.0 {
        return Err(Error::Unstable { abscissa: abscissa * s });
    }
    let horizon = cfg.horizon_factor / -abscissa;
    let dt = cfg.dt_factor / radius;
    let stride = ((horizon / dt) as u64 / cfg.report_cadence as u64).max(1);

    let c0 = vacuum();
    let norm0 = c0.frobenius_norm();
    let mut trace = Vec::new();
    let mut last = f64::INFINITY;
    let mut converged = false;
    let mut k = 0u64;
    let run = propagate_observed(
        &a,
        &d,
        &c0,
        0.0,
        horizon,
        dt,
        PropagationOptions { step_budget: cfg.step_budget },
        |t, c, cdot| {
            last = cdot.norm() / c.norm().max(norm0);
            converged = last < cfg.converge_tol;
            if k.is_multiple_of(stride) || converged {
                trace.push(TraceSample::new(t / s, last, c));
            }
            k += 1;
            if converged {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        },
    )
    .map_err(budget_error)?;
    if !converged {
        return Err(Error::Convergence { time: run.time / s, derivative_norm: last, advice: HORIZON_ADVICE });
    }
    Ok(IntegrationRun {
        covariance: CovarianceMatrix::new(run.covariance)?,
        trace,
        time: run.time / s,
        steps: run.steps,
    })
}

/// Drift of the linearized fluctuations in the frame rotating at each magnon
/// drive frequency, before any rotating-wave approximation. Each mode rotates
/// at `Δ_j` (cavity, magnon) or `ω_bj` (phonon), and the magnomechanical
/// coupling acts through `−G(δb† + δb)` on the magnon and `−G(δm† − δm)` on
/// the phonon.
pub fn pre_rwa_drift(p: &SystemParams) -> Result<RealMatrix> {
    p.validate()?;
    let mut a = DMatrix::zeros(N_QUADRATURES, N_QUADRATURES);
    for (j, s) in p.sites.iter().enumerate() {
        let c = quadrature_index(ModeKind::Cavity, j);
        let m = quadrature_index(ModeKind::Magnon, j);
        let b = quadrature_index(ModeKind::Phonon, j);
        for (i, decay, freq) in
            [(c, s.cavity_decay, s.detuning()), (m, s.magnon_decay, s.detuning()), (b, s.phonon_damp, s.phonon_freq)]
        {
            a[(i, i)] = -decay;
            a[(i + 1, i + 1)] = -decay;
            a[(i, i + 1)] = freq;
            a[(i + 1, i)] = -freq;
        }
        let g = s.cavity_magnon_g;
        a[(c, m + 1)] = g;
        a[(c + 1, m)] = -g;
        a[(m, c + 1)] = g;
        a[(m + 1, c)] = -g;
        let big_g = s.magnon_phonon_g;
        a[(m, b)] = -2.0 * big_g;
        a[(b + 1, m + 1)] = 2.0 * big_g;
    }
    Ok(RealMatrix::from_dmatrix(a)?)
}

/// Diffusion with the squeezed cross-correlation `ℳ e^{−i(Δ₁+Δ₂)t}`.
struct OscillatingDiffusion {
    base: DMatrix<f64>,
    /// `2√(κ₁κ₂) ℳ`, in the same units as `base`.
    cross: num_complex::Complex64,
    beat: f64,
}

impl DiffusionSource for OscillatingDiffusion {
    fn diffusion_at(&self, t: f64) -> DMatrix<f64> {
        let z = self.cross * num_complex::Complex64::from_polar(1.0, -self.beat * t);
        let mut d = self.base.clone();
        let (x1, y1, x2, y2) = (0, 1, 2, 3);
        for (i, k, v) in [(x1, x2, z.re), (x1, y2, z.im), (y1, x2, z.im), (y1, y2, -z.re)] {
            d[(i, k)] = v;
            d[(k, i)] = v;
        }
        d
    }
}

/// Per-mode rotation into the rotating-wave frame, `x̃ + iỹ = (x + iy) e^{iωt}`.
fn frame_rotation(freqs: &[f64; 6], t: f64) -> DMatrix<f64> {
    let mut r = DMatrix::zeros(N_QUADRATURES, N_QUADRATURES);
    for (k, w) in freqs.iter().enumerate() {
        let (sin, cos) = (w * t).sin_cos();
        let i = 2 * k;
        r[(i, i)] = cos;
        r[(i, i + 1)] = -sin;
        r[(i + 1, i)] = sin;
        r[(i + 1, i + 1)] = cos;
    }
    r
}

/// Averaging window: ten periods of the slowest of `2Δ₁`, `2Δ₂`, `Δ₁ + Δ₂`.
pub fn averaging_window(p: &SystemParams) -> f64 {
    let (d1, d2) = (p.sites[0].detuning(), p.sites[1].detuning());
    10.0 * std::f64::consts::TAU / (2.0 * d1).min(2.0 * d2).min(d1 + d2)
}

/// Integrates the pre-rotating-wave model into its asymptotic regime, averages
/// the rotated covariance over [`averaging_window`] with the trapezoid rule,
/// and compares against the rotating-wave steady state.
pub fn integrate_pre_rwa(p: &SystemParams, cfg: &OracleConfig) -> Result<PreRwaRun> {
    cfg.validate()?;
    let s = p.sites[0].cavity_decay;
    let a = pre_rwa_drift(p)?.scaled(1.0 / s);
    let (abscissa, radius) = spectrum_bounds(&a)?;
    if abscissa >= 0.0 {
        return Err(Error::Unstable { abscissa: abscissa * s });
    }
    let (d1, d2) = (p.sites[0].detuning() / s, p.sites[1].detuning() / s);
    let horizon = cfg.horizon_factor / -abscissa;
    let window = averaging_window(p) * s;
    let dt = cfg.dt_factor / radius.max(d1 + d2);
    let required = (horizon / dt).ceil() + (window / dt).ceil();
    if required > cfg.step_budget as f64 {
        return Err(Error::StepBudget {
            required: required.min(u64::MAX as f64) as u64,
            budget: cfg.step_budget,
            advice: RESCALED_ADVICE,
        });
    }

    let noise = build_noise(p)?;
    let root = (p.sites[0].cavity_decay * p.sites[1].cavity_decay).sqrt();
    let diffusion = OscillatingDiffusion {
        base: build_diffusion(p, &noise)?.scaled(1.0 / s).into_dmatrix(),
        cross: noise.m_squeeze * (2.0 * root / s),
        beat: d1 + d2,
    };
    let freqs = [d1, d2, d1, d2, p.sites[0].phonon_freq / s, p.sites[1].phonon_freq / s];

    let opts = PropagationOptions { step_budget: cfg.step_budget };
    let stride = ((required as u64) / cfg.report_cadence as u64).max(1);
    let norm0 = vacuum().frobenius_norm();
    let mut trace = Vec::new();
    let mut k = 0u64;
    let mut record = |t: f64, c: &DMatrix<f64>, cdot: &DMatrix<f64>| {
        if k.is_multiple_of(stride) {
            trace.push(TraceSample::new(t / s, cdot.norm() / c.norm().max(norm0), c));
        }
        k += 1;
    };

    let settle = propagate_observed(&a, &diffusion, &vacuum(), 0.0, horizon, dt, opts, |t, c, cdot| {
        record(t, c, cdot);
        ControlFlow::Continue(())
    })
    .map_err(budget_error)?;

    let mut sum = DMatrix::zeros(N_QUADRATURES, N_QUADRATURES);
    let mut first: Option<DMatrix<f64>> = None;
    let mut last = DMatrix::zeros(N_QUADRATURES, N_QUADRATURES);
    let mut samples = 0u64;
    let t0 = settle.time;
    let avg = propagate_observed(&a, &diffusion, &settle.covariance, t0, t0 + window, dt, opts, |t, c, cdot| {
        if samples > 0 {
            record(t, c, cdot);
        }
        let r = frame_rotation(&freqs, t);
        let rotated = &r * c * r.transpose();
        sum += &rotated;
        if first.is_none() {
            first = Some(rotated.clone());
        }
        last = rotated;
        samples += 1;
        ControlFlow::Continue(())
    })
    .map_err(budget_error)?;
    let first = first.expect("observer sees the initial point");
    let mean = if avg.steps == 0 { first } else { (sum - (first + last) * 0.5) / avg.steps as f64 };
    let mean = (&mean + mean.transpose()) * 0.5;

    let covariance = CovarianceMatrix::new(RealMatrix::from_dmatrix(mean)?)?;
    let reference = steady_covariance(&LinearModel::from_params(p)?)?;
    let diff = covariance.matrix().as_dmatrix() - reference.matrix().as_dmatrix();
    let rwa_error = diff.norm() / reference.matrix().frobenius_norm();
    Ok(PreRwaRun {
        covariance,
        reference,
        rwa_error,
        window: (t0 / s, (t0 + window) / s),
        steps: settle.steps + avg.steps,
        trace,
    })
}

/// Writes a trace as CSV with a `#` comment header.
pub fn write_trace_csv<W: Write>(mut out: W, trace: &[TraceSample]) -> std::io::Result<()> {
    writeln!(out, "# covariance entries are (row, col) in the x1,y1,x2,y2,X1,Y1,X2,Y2,q1,p1,q2,p2 order")?;
    writeln!(out, "time_s,derivative_norm,physicality_margin,C_q1q1,C_p1p1,C_q1q2,C_p1p2")?;
    for s in trace {
        write!(out, "{:.11e},{:.11e},{:.11e}", s.time, s.derivative_norm, s.physicality_margin)?;
        for v in s.entries {
            write!(out, ",{v:.11e}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}
