//! Fixed-step RK4 propagation of the covariance ODE `Ċ = A C + C Aᵀ + D(t)`.

use std::ops::ControlFlow;

use nalgebra::DMatrix;

use super::{LinalgError, RealMatrix};

pub const DEFAULT_STEP_BUDGET: u64 = 100_000_000;

/// Time-dependent symmetric source term.
pub trait DiffusionSource {
    fn diffusion_at(&self, t: f64) -> DMatrix<f64>;
}

impl DiffusionSource for RealMatrix {
    fn diffusion_at(&self, _t: f64) -> DMatrix<f64> {
        self.as_dmatrix().clone()
    }
}

impl<F> DiffusionSource for F
where
    F: Fn(f64) -> RealMatrix,
{
    fn diffusion_at(&self, t: f64) -> DMatrix<f64> {
        self(t).into_dmatrix()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationOptions {
    /// Maximum number of RK4 steps a single call may take.
    pub step_budget: u64,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self { step_budget: DEFAULT_STEP_BUDGET }
    }
}

#[derive(Debug, Clone)]
pub struct Propagation {
    pub covariance: RealMatrix,
    /// Time at which propagation stopped (`t_final` unless the observer broke early).
    pub time: f64,
    pub steps: u64,
}

fn check_operands(a: &RealMatrix, c0: &RealMatrix) -> Result<(), LinalgError> {
    if !a.is_square() || c0.rows() != a.rows() || c0.cols() != a.cols() {
        return Err(LinalgError::Dimension(format!(
            "propagation needs square A and C0 of equal size, got {}x{} and {}x{}",
            a.rows(),
            a.cols(),
            c0.rows(),
            c0.cols()
        )));
    }
    if !c0.is_symmetric(1e-12) {
        return Err(LinalgError::Dimension("initial covariance is not symmetric".into()));
    }
    Ok(())
}

/// Integrates from `t_start` to `t_final` in `n = ⌈(t_final − t_start)/dt_max⌉`
/// equal steps.
///
/// `observer(t, C, Ċ)` is called on every grid point, including both ends,
/// with the derivative evaluated at that point. Returning `Break` stops the
/// run there.
#[allow(clippy::too_many_arguments)]
pub fn propagate_observed<S, F>(
    a: &RealMatrix,
    diffusion: &S,
    c0: &RealMatrix,
    t_start: f64,
    t_final: f64,
    dt_max: f64,
    opts: PropagationOptions,
    mut observer: F,
) -> Result<Propagation, LinalgError>
where
    S: DiffusionSource + ?Sized,
    F: FnMut(f64, &DMatrix<f64>, &DMatrix<f64>) -> ControlFlow<()>,
{
    check_operands(a, c0)?;
    if !(dt_max > 0.0) || !dt_max.is_finite() {
        return Err(LinalgError::Dimension(format!("dt_max must be positive, got {dt_max}")));
    }
    if !(t_final >= t_start) || !t_final.is_finite() || !t_start.is_finite() {
        return Err(LinalgError::Dimension(format!("invalid horizon [{t_start}, {t_final}]")));
    }
    let span = t_final - t_start;
    let required = (span / dt_max).ceil();
    if required > opts.step_budget as f64 {
        return Err(LinalgError::StepBudget {
            required: required.min(u64::MAX as f64) as u64,
            budget: opts.step_budget,
        });
    }
    let n = required as u64;
    let h = if n == 0 { 0.0 } else { span / n as f64 };

    let am = a.as_dmatrix();
    let dim = am.nrows();
    let mut c = c0.as_dmatrix().clone();
    let mut ac = DMatrix::zeros(dim, dim);

    let rhs = |c: &DMatrix<f64>, d: &DMatrix<f64>, ac: &mut DMatrix<f64>| -> DMatrix<f64> {
        am.mul_to(c, ac);
        // C symmetric ⇒ C Aᵀ = (A C)ᵀ.
        ac.transpose() + &*ac + d
    };

    let mut d_now = diffusion.diffusion_at(t_start);
    if d_now.nrows() != dim || d_now.ncols() != dim {
        return Err(LinalgError::Dimension("diffusion source has the wrong size".into()));
    }
    let mut t = t_start;
    let mut step = 0u64;
    loop {
        let k1 = rhs(&c, &d_now, &mut ac);
        if observer(t, &c, &k1).is_break() || step == n {
            break;
        }
        let d_mid = diffusion.diffusion_at(t + 0.5 * h);
        let d_end = diffusion.diffusion_at(t + h);
        let k2 = rhs(&(&c + &k1 * (0.5 * h)), &d_mid, &mut ac);
        let k3 = rhs(&(&c + &k2 * (0.5 * h)), &d_mid, &mut ac);
        let k4 = rhs(&(&c + &k3 * h), &d_end, &mut ac);
        c += (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
        c = (&c + c.transpose()) * 0.5;

        step += 1;
        t = t_start + step as f64 * h;
        if c.iter().any(|x| !x.is_finite()) {
            return Err(LinalgError::Divergence { time: t });
        }
        d_now = d_end;
    }

    Ok(Propagation { covariance: RealMatrix::from_dmatrix(c)?, time: t, steps: step })
}

/// Integrates `Ċ = A C + C Aᵀ + D(t)` from `C(0) = C0` to `t_final` with
/// steps no longer than `dt_max`.
pub fn propagate_covariance<S>(
    a: &RealMatrix,
    diffusion: &S,
    c0: &RealMatrix,
    t_final: f64,
    dt_max: f64,
    opts: PropagationOptions,
) -> Result<RealMatrix, LinalgError>
where
    S: DiffusionSource + ?Sized,
{
    propagate_observed(a, diffusion, c0, 0.0, t_final, dt_max, opts, |_, _, _| ControlFlow::Continue(()))
        .map(|p| p.covariance)
}
