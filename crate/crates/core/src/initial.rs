//! Initial-data recipes, scaled to a prescribed `H^s` size.

use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{SpectralField, TensorField, VectorField};
use crate::grid::Grid;
use crate::model::{strain_rate, FlowState};
use crate::spectral::{forward_transform, sobolev_norm, SobolevWeight};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Recipe {
    /// `u = (cos x₂, 0, ..)`, `τ₁₂ = sin x₂`.
    SingleMode,
    /// Random coefficients on the shell `1 <= |k| <= band`.
    RandomBand,
    /// Taylor-Green vortex with `τ = D(u)`.
    TaylorGreenPlusStress,
}

impl FromStr for Recipe {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single-mode" => Ok(Self::SingleMode),
            "random-band" => Ok(Self::RandomBand),
            "taylor-green-plus-stress" => Ok(Self::TaylorGreenPlusStress),
            other => Err(Error::Config(format!("unknown initial-data recipe '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialData {
    #[serde(rename = "type")]
    pub recipe: Recipe,
    /// Target `‖u₀‖_{H^s} + ‖τ₀‖_{H^s}`.
    pub epsilon: f64,
    pub seed: u64,
    /// Outer radius of the random band.
    pub band: f64,
}

impl Default for InitialData {
    fn default() -> Self {
        Self { recipe: Recipe::RandomBand, epsilon: 1e-2, seed: 0, band: 3.0 }
    }
}

/// Builds a divergence-free, dealiased initial state with
/// `‖u₀‖_{H^s} + ‖τ₀‖_{H^s} = ε`.
pub fn make_initial_data(grid: &Grid, spec: &InitialData, s: f64) -> Result<FlowState> {
    if !(spec.epsilon >= 0.0) {
        return Err(Error::Config(format!("epsilon must be >= 0, got {}", spec.epsilon)));
    }
    let mut state = match spec.recipe {
        Recipe::SingleMode => single_mode(grid)?,
        Recipe::RandomBand => random_band(grid, spec.band, spec.seed)?,
        Recipe::TaylorGreenPlusStress => taylor_green(grid)?,
    };
    state.enforce_invariants();
    let size = state_hs_size(&state, s);
    if size == 0.0 {
        return Err(Error::Config("initial-data recipe produced a zero state".into()));
    }
    let factor = spec.epsilon / size;
    state.fields_mut().for_each(|f| f.scale(factor));
    Ok(state)
}

/// `‖u‖_{H^s} + ‖τ‖_{H^s}`.
pub fn state_hs_size(state: &FlowState, s: f64) -> f64 {
    sobolev_norm(&state.u, s, SobolevWeight::Inhomogeneous) + sobolev_norm(&state.tau, s, SobolevWeight::Inhomogeneous)
}

fn single_mode(grid: &Grid) -> Result<FlowState> {
    let mut state = FlowState::zeros(grid);
    *state.u.component_mut(0) = forward_transform(grid, &grid.sample(|x| x[1].cos()))?;
    *state.tau.get_mut(0, 1) = forward_transform(grid, &grid.sample(|x| x[1].sin()))?;
    Ok(state)
}

fn taylor_green(grid: &Grid) -> Result<FlowState> {
    let dim = grid.dim();
    let u1 = grid.sample(|x| {
        let z = if dim == 3 { x[2].cos() } else { 1.0 };
        x[0].sin() * x[1].cos() * z
    });
    let u2 = grid.sample(|x| {
        let z = if dim == 3 { x[2].cos() } else { 1.0 };
        -x[0].cos() * x[1].sin() * z
    });
    let mut comps = vec![forward_transform(grid, &u1)?, forward_transform(grid, &u2)?];
    if dim == 3 {
        comps.push(SpectralField::zeros(grid));
    }
    let u = VectorField::new(comps)?;
    let tau = strain_rate(&u);
    Ok(FlowState { u, tau, t: 0.0 })
}

fn random_band(grid: &Grid, band: f64, seed: u64) -> Result<FlowState> {
    if !(band >= 1.0) {
        return Err(Error::Config(format!("random band radius must be >= 1, got {band}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |grid: &Grid| {
        let mut f = SpectralField::from_fn(grid, |_| Complex64::new(0.0, 0.0));
        for idx in 0..grid.len() {
            let k2 = grid.k_sq(idx);
            if k2 >= 1.0 && k2 <= band * band && grid.is_resolved(idx) {
                f.coeffs_mut()[idx] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        f.symmetrize();
        f
    };
    let u = VectorField::new((0..grid.dim()).map(|_| draw(grid)).collect())?;
    let tau = TensorField::from_fn(grid, |_, _| draw(grid));
    let mut state = FlowState { u, tau, t: 0.0 };
    state.enforce_invariants();
    // Equal H^s share for velocity and stress.
    let un = sobolev_norm(&state.u, 0.0, SobolevWeight::Inhomogeneous);
    let tn = sobolev_norm(&state.tau, 0.0, SobolevWeight::Inhomogeneous);
    if un > 0.0 {
        state.u.components_mut().iter_mut().for_each(|c| c.scale(1.0 / un));
    }
    if tn > 0.0 {
        state.tau.upper_mut().iter_mut().for_each(|c| c.scale(1.0 / tn));
    }
    Ok(state)
}
