//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use magnomech::linalg::RealMatrix;
use magnomech::model::{ModeKind, SystemParams, TWO_PI};
use magnomech::steadystate::{reduce_modes, CovarianceMatrix, Mode};
use rand::Rng;

/// A random parameter set with every rate positive and an arbitrary squeezing
/// phase. The couplings are all beam-splitter type, so the drift is always
/// Hurwitz.
pub fn random_params<R: Rng>(rng: &mut R) -> SystemParams {
    let mut p = SystemParams::baseline();
    for s in &mut p.sites {
        let kappa_a = TWO_PI * rng.gen_range(0.5e6..5e6);
        s.cavity_decay = kappa_a;
        s.magnon_decay = kappa_a * rng.gen_range(0.05..1.0);
        s.phonon_damp = TWO_PI * 10f64.powf(rng.gen_range(1.0..5.0));
        s.cavity_magnon_g = kappa_a * rng.gen_range(0.0..2.0);
        s.magnon_phonon_g = kappa_a * rng.gen_range(0.0..1.0);
        s.phonon_freq = TWO_PI * rng.gen_range(5e6..50e6);
    }
    p.retune_drives();
    p.squeeze_r = rng.gen_range(0.0..1.5);
    p.squeeze_phase = rng.gen_range(0.0..TWO_PI);
    p.bath_temp = rng.gen_range(0.0..0.2);
    p
}

/// Covariance of the two-mode squeezed vacuum with squeezing `r`.
pub fn tmsv(r: f64) -> RealMatrix {
    let (a, c) = (0.5 * (2.0 * r).cosh(), 0.5 * (2.0 * r).sinh());
    #[rustfmt::skip]
    let m = [
        a, 0.0, c, 0.0,
        0.0, a, 0.0, -c,
        c, 0.0, a, 0.0,
        0.0, -c, 0.0, a,
    ];
    RealMatrix::from_row_slice(4, 4, &m).unwrap()
}

/// All 15 two-mode reductions, labelled.
pub fn all_pairs(c: &CovarianceMatrix) -> Vec<(String, RealMatrix)> {
    let modes: Vec<Mode> = ModeKind::ALL.iter().flat_map(|&kind| (0..2).map(move |site| Mode { kind, site })).collect();
    let mut out = Vec::new();
    for (i, &a) in modes.iter().enumerate() {
        for &b in &modes[i + 1..] {
            let label = format!("{}{}-{}{}", a.kind, a.site + 1, b.kind, b.site + 1);
            out.push((label, reduce_modes(c, a, b).unwrap()));
        }
    }
    out
}

pub fn relative_difference(a: &RealMatrix, b: &RealMatrix) -> f64 {
    (a.as_dmatrix() - b.as_dmatrix()).norm() / b.frobenius_norm()
}
