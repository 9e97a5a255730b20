//! The dual-cavity magnomechanical system: parameters, noise statistics,
//! semiclassical operating point, and the linearized drift/diffusion pair.

pub(crate) mod matrices;
mod noise;
mod params;
mod semiclassical;

pub use matrices::{build_diffusion, build_drift, quadrature_index, LinearModel, ModeKind, MODE_LABELS, N_QUADRATURES};
pub use noise::{build_noise, thermal_occupancy, thermal_occupancy_with, NoiseSpec};
pub use params::{SiteParams, SystemParams, HBAR, K_BOLTZMANN, RWA_MARGIN, TWO_PI};
pub use semiclassical::{
    magnon_amplitude, magnon_amplitude_approx, rabi_for_target_g, solve_semiclassical, solve_semiclassical_with,
    SemiclassicalOptions, SemiclassicalState,
};
