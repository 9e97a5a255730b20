use thiserror::Error;

use crate::linalg::LinalgError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error(
        "semiclassical fixed point did not converge at site {site}: last |<m>| iterates {previous:.12e}, {last:.12e}{}",
        if *bistable { " (oscillating iterates: possible bistability)" } else { "" }
    )]
    FixedPoint { site: usize, previous: f64, last: f64, bistable: bool },
    #[error("root search failed: {0}")]
    Search(String),
    #[error("diffusion matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.6e})")]
    UnphysicalNoise { min_eigenvalue: f64 },
    #[error("drift matrix is not Hurwitz (spectral abscissa {abscissa:.6e} rad/s)")]
    Unstable { abscissa: f64 },
    #[error("symplectic eigenvalue methods disagree: spectral {spectral:?}, closed form {closed_form:?}")]
    SymplecticMismatch { spectral: (f64, f64), closed_form: (f64, f64) },
    #[error(
        "integration did not converge by t = {time:.6e} s (relative derivative norm {derivative_norm:.3e}); {advice}"
    )]
    Convergence { time: f64, derivative_norm: f64, advice: &'static str },
    #[error("integration needs {required} steps, budget is {budget}; {advice}")]
    StepBudget { required: u64, budget: u64, advice: &'static str },
    #[error(
        "bracket does not enclose the entanglement threshold: E_N(t_low) = {e_low:.6e}, E_N(t_high) = {e_high:.6e}"
    )]
    Bracket { e_low: f64, e_high: f64 },
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short stable identifier used in the error column of sweep outputs.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Linalg(LinalgError::NotHurwitz { .. }) | Error::Unstable { .. } => "unstable",
            Error::Linalg(_) | Error::SymplecticMismatch { .. } => "numeric",
            Error::InvalidParams(_) | Error::Domain(_) => "invalid_params",
            Error::FixedPoint { .. } | Error::Search(_) => "semiclassical",
            Error::UnphysicalNoise { .. } => "unphysical_noise",
            Error::Convergence { .. } | Error::StepBudget { .. } => "convergence",
            Error::Bracket { .. } => "bracket",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }

    /// Configuration problems (as opposed to numeric failures).
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::InvalidParams(_) | Error::Domain(_) | Error::Io(_))
    }
}
