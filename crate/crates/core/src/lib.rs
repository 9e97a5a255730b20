//! Steady-state covariance and entanglement of two cavity–magnon–phonon
//! systems driven by a two-mode squeezed vacuum.
//!
//! Layers, bottom-up: [`linalg`] (dense kernels), [`model`] (parameters and
//! the linearized drift/diffusion pair), [`steadystate`] (Lyapunov steady
//! state and logarithmic negativity), [`validity`] (approximation audits),
//! [`oracle`] (time-domain cross-checks) and [`sweep`] (config, grids and
//! output files for the CLI).

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod steadystate;
pub mod sweep;
pub mod validity;

pub use error::{Error, Result};
