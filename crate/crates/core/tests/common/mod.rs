#![allow(dead_code)]

use num_complex::Complex64;
use oldroyd_core::initial::{make_initial_data, InitialData, Recipe};
use oldroyd_core::{FlowState, Grid, SpectralField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random dealiased, divergence-free state with `‖u‖_{H^s} + ‖τ‖_{H^s} = eps`.
pub fn random_state(grid: &Grid, seed: u64, band: f64, eps: f64) -> FlowState {
    let spec = InitialData { recipe: Recipe::RandomBand, epsilon: eps, seed, band };
    make_initial_data(grid, &spec, 2.01).unwrap()
}

/// Random real scalar with every mode populated (not dealiased).
pub fn random_scalar(grid: &Grid, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = SpectralField::from_fn(grid, |_| Complex64::new(0.0, 0.0));
    for c in f.coeffs_mut() {
        *c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    f.symmetrize();
    f
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
