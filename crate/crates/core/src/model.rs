//! Right-hand side of the Oldroyd-B system with fractional stress dissipation
//! and optional kinematic dissipation and stress damping.
//!
//! Momentum:  `∂_t u = P(−u·∇u + ∇·τ) − ν(−Δ)^α u`
//! Stress:    `∂_t τ = −u·∇τ − Q(τ,∇u) + D(u) − η(−Δ)^β τ − aτ`
//!
//! with `Q(τ,∇u) = τW − Wτ − b(Dτ + τD)` and `(∇u)_ij = ∂_j u_i`.
//! Pointwise products are formed on the physical grid from dealiased data and
//! the result is dealiased again after the forward transform.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{sym_len, MatrixField, SpectralField, TensorField, VectorField};
use crate::grid::Grid;
use crate::spectral::{
    dealias_in_place, divergence, forward_transform, fractional_multiplier, leray_project_in_place, partial,
};

/// Independent switches for each term of the tendency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Toggles {
    pub advection_u: bool,
    pub advection_tau: bool,
    pub q_term: bool,
    pub coupling_div_tau: bool,
    pub coupling_strain: bool,
    pub nu_dissipation: bool,
    pub eta_dissipation: bool,
    pub damping: bool,
}

impl Default for Toggles {
    fn default() -> Self {
        Self {
            advection_u: true,
            advection_tau: true,
            q_term: true,
            coupling_div_tau: true,
            coupling_strain: true,
            nu_dissipation: true,
            eta_dissipation: true,
            damping: true,
        }
    }
}

impl Toggles {
    /// Coupling and stress dissipation only: the linearized wave system.
    pub fn linear() -> Self {
        Self { advection_u: false, advection_tau: false, q_term: false, ..Self::default() }
    }

    pub fn all_off() -> Self {
        Self {
            advection_u: false,
            advection_tau: false,
            q_term: false,
            coupling_div_tau: false,
            coupling_strain: false,
            nu_dissipation: false,
            eta_dissipation: false,
            damping: false,
        }
    }

    pub fn nonlinear_off(&self) -> bool {
        !(self.advection_u || self.advection_tau || self.q_term)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    /// Stress dissipation coefficient.
    pub eta: f64,
    /// Stress dissipation exponent.
    pub beta: f64,
    /// Kinematic dissipation coefficient.
    pub nu: f64,
    /// Kinematic dissipation exponent.
    pub alpha: f64,
    /// Slip parameter of `Q`.
    pub b: f64,
    /// Linear stress damping.
    pub a: f64,
    pub toggles: Toggles,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self { eta: 1.0, beta: 1.0, nu: 0.0, alpha: 1.0, b: 1.0, a: 0.0, toggles: Toggles::default() }
    }
}

impl ModelParams {
    /// Hard errors are returned as `Err`; hypothesis violations as warnings.
    pub fn validate(&self) -> std::result::Result<Vec<String>, Vec<String>> {
        let mut errors = Vec::new();
        let mut warnings = Vec::new();
        if !(self.eta > 0.0) {
            errors.push(format!("eta must be > 0, got {}", self.eta));
        }
        if !(-1.0..=1.0).contains(&self.b) {
            errors.push(format!("b must lie in [-1, 1], got {}", self.b));
        }
        if !(self.a >= 0.0) {
            errors.push(format!("a must be >= 0, got {}", self.a));
        }
        if !(self.nu >= 0.0) {
            errors.push(format!("nu must be >= 0, got {}", self.nu));
        }
        if !(self.beta >= 0.0) {
            errors.push(format!("beta must be >= 0, got {}", self.beta));
        }
        if !(self.alpha >= 0.0) {
            errors.push(format!("alpha must be >= 0, got {}", self.alpha));
        }
        if !errors.is_empty() {
            return Err(errors);
        }
        if !(0.5..=1.0).contains(&self.beta) {
            warnings.push(format!("beta = {} outside [1/2, 1]: small-data theory does not apply", self.beta));
        }
        if self.alpha > 1.0 {
            warnings.push(format!("alpha = {} exceeds 1", self.alpha));
        }
        if self.nu > 0.0 {
            let bound = 1f64.min(3.0 * self.beta - 1.0);
            if self.alpha > bound {
                warnings.push(format!("alpha = {} violates alpha <= min{{1, 3 beta - 1}} = {bound}", self.alpha));
            }
        }
        Ok(warnings)
    }

    /// Effective stress dissipation coefficient after toggles.
    pub fn eta_eff(&self) -> f64 {
        if self.toggles.eta_dissipation {
            self.eta
        } else {
            0.0
        }
    }

    pub fn nu_eff(&self) -> f64 {
        if self.toggles.nu_dissipation {
            self.nu
        } else {
            0.0
        }
    }

    pub fn a_eff(&self) -> f64 {
        if self.toggles.damping {
            self.a
        } else {
            0.0
        }
    }

    /// Diagonal decay rate `ν|k|^{2α}` of each velocity mode.
    pub fn velocity_rates(&self, grid: &Grid) -> Result<Vec<f64>> {
        let nu = self.nu_eff();
        let mut m = fractional_multiplier(grid, self.alpha)?;
        m.iter_mut().for_each(|x| *x *= nu);
        Ok(m)
    }

    /// Diagonal decay rate `η|k|^{2β} + a` of each stress mode.
    pub fn stress_rates(&self, grid: &Grid) -> Result<Vec<f64>> {
        let eta = self.eta_eff();
        let a = self.a_eff();
        let mut m = fractional_multiplier(grid, self.beta)?;
        m.iter_mut().for_each(|x| *x = eta * *x + a);
        Ok(m)
    }
}

/// Velocity, symmetric added stress and clock.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub u: VectorField,
    pub tau: TensorField,
    pub t: f64,
}

impl FlowState {
    pub fn zeros(grid: &Grid) -> Self {
        Self { u: VectorField::zeros(grid), tau: TensorField::zeros(grid), t: 0.0 }
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    /// Stored spectral components: velocity first, then the packed stress.
    pub fn fields(&self) -> impl Iterator<Item = &SpectralField> {
        self.u.components().iter().chain(self.tau.upper())
    }

    pub fn fields_mut(&mut self) -> impl Iterator<Item = &mut SpectralField> {
        self.u.components_mut().iter_mut().chain(self.tau.upper_mut().iter_mut())
    }

    pub fn is_finite(&self) -> bool {
        self.fields().all(SpectralField::is_finite)
    }

    /// `max_k |k·û(k)| / max_k |û(k)|` (0 for a zero field).
    pub fn divergence_defect(&self) -> f64 {
        divergence_defect(&self.u)
    }

    /// Leray-projects `u` and applies the 2/3 truncation to every component.
    pub fn enforce_invariants(&mut self) {
        leray_project_in_place(&mut self.u);
        self.fields_mut().for_each(dealias_in_place);
    }
}

/// Relative size of the largest `|k·v̂(k)|`.
pub fn divergence_defect(v: &VectorField) -> f64 {
    let grid = v.grid();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for idx in 0..grid.len() {
        let k = grid.wavevector(idx);
        let mut kv = num_complex::Complex64::new(0.0, 0.0);
        let mut mag: f64 = 0.0;
        for (j, c) in v.components().iter().enumerate() {
            kv += c.coeffs()[idx] * k[j];
            mag += c.coeffs()[idx].norm_sqr();
        }
        worst = worst.max(kv.norm());
        scale = scale.max(mag.sqrt());
    }
    if scale == 0.0 {
        0.0
    } else {
        worst / scale
    }
}

/// `∇u` with entries `(i, j) = ∂_j u_i`.
pub fn velocity_gradient(u: &VectorField) -> MatrixField {
    MatrixField::from_fn(u.grid(), |i, j| partial(u.component(i), j))
}

/// `D(u) = ½(∇u + (∇u)ᵀ)`.
pub fn strain_rate(u: &VectorField) -> TensorField {
    TensorField::from_fn(u.grid(), |i, j| {
        let mut d = partial(u.component(i), j);
        d.axpy(1.0, &partial(u.component(j), i));
        d.scale(0.5);
        d
    })
}

/// `W(u) = ½(∇u − (∇u)ᵀ)`.
pub fn vorticity_tensor(u: &VectorField) -> MatrixField {
    MatrixField::from_fn(u.grid(), |i, j| {
        let mut w = partial(u.component(i), j);
        w.axpy(-1.0, &partial(u.component(j), i));
        w.scale(0.5);
        w
    })
}

/// Forward transform of a physical product followed by the 2/3 truncation.
fn to_spectral_dealiased(grid: &Grid, samples: &[f64]) -> SpectralField {
    let mut f = forward_transform(grid, samples).expect("product array matches grid");
    dealias_in_place(&mut f);
    f
}

fn physical_gradient(u: &VectorField) -> Vec<Vec<Vec<f64>>> {
    let dim = u.dim();
    (0..dim).map(|i| (0..dim).map(|j| partial(u.component(i), j).to_physical()).collect()).collect()
}

/// Pointwise `Q(τ,∇u)` given physical stress (packed) and physical `∇u`.
fn q_pointwise(dim: usize, tau: &[Vec<f64>], grad: &[Vec<Vec<f64>>], b: f64, len: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; len]; sym_len(dim)];
    let mut t = [[0.0; 3]; 3];
    let mut dm = [[0.0; 3]; 3];
    let mut wm = [[0.0; 3]; 3];
    for p in 0..len {
        for i in 0..dim {
            for j in 0..dim {
                t[i][j] = tau[crate::field::sym_index(dim, i, j)][p];
                let gij = grad[i][j][p];
                let gji = grad[j][i][p];
                dm[i][j] = 0.5 * (gij + gji);
                wm[i][j] = 0.5 * (gij - gji);
            }
        }
        let mut slot = 0;
        for i in 0..dim {
            for j in i..dim {
                let mut acc = 0.0;
                for m in 0..dim {
                    acc += t[i][m] * wm[m][j] - wm[i][m] * t[m][j];
                    acc -= b * (dm[i][m] * t[m][j] + t[i][m] * dm[m][j]);
                }
                out[slot][p] = acc;
                slot += 1;
            }
        }
    }
    out
}

/// `Q(τ,∇u) = τW − Wτ − b(Dτ + τD)`, formed on the grid and dealiased.
pub fn q_bilinear(tau: &TensorField, u: &VectorField, b: f64) -> TensorField {
    let grid = tau.grid().clone();
    let tau_phys: Vec<Vec<f64>> = tau.upper().iter().map(SpectralField::to_physical).collect();
    let grad = physical_gradient(u);
    let q = q_pointwise(grid.dim(), &tau_phys, &grad, b, grid.len());
    TensorField::from_upper(q.iter().map(|s| to_spectral_dealiased(&grid, s)).collect())
        .expect("packed tensor on shared grid")
}

/// Transport term `u·∇f` for scalars, vectors and tensors (componentwise).
pub trait Advect: Sized {
    fn advected_by(&self, u_phys: &[Vec<f64>]) -> Self;
}

fn advect_component(f: &SpectralField, u_phys: &[Vec<f64>]) -> SpectralField {
    let grid = f.grid();
    let mut acc = vec![0.0; grid.len()];
    for (j, uj) in u_phys.iter().enumerate() {
        let df = partial(f, j).to_physical();
        for ((a, &x), &y) in acc.iter_mut().zip(uj).zip(&df) {
            *a += x * y;
        }
    }
    to_spectral_dealiased(grid, &acc)
}

impl Advect for SpectralField {
    fn advected_by(&self, u_phys: &[Vec<f64>]) -> Self {
        advect_component(self, u_phys)
    }
}

impl Advect for VectorField {
    fn advected_by(&self, u_phys: &[Vec<f64>]) -> Self {
        self.map(|c| advect_component(c, u_phys))
    }
}

impl Advect for TensorField {
    fn advected_by(&self, u_phys: &[Vec<f64>]) -> Self {
        self.map(|c| advect_component(c, u_phys))
    }
}

/// `u·∇f`, dealiased.
pub fn advect<F: Advect>(u: &VectorField, f: &F) -> F {
    let u_phys: Vec<Vec<f64>> = u.components().iter().map(SpectralField::to_physical).collect();
    f.advected_by(&u_phys)
}

/// Time derivative of a state, or any term of it.
#[derive(Debug, Clone)]
pub struct Tendency {
    pub du: VectorField,
    pub dtau: TensorField,
}

impl Tendency {
    pub fn zeros(grid: &Grid) -> Self {
        Self { du: VectorField::zeros(grid), dtau: TensorField::zeros(grid) }
    }

    pub fn fields(&self) -> impl Iterator<Item = &SpectralField> {
        self.du.components().iter().chain(self.dtau.upper())
    }

    pub fn fields_mut(&mut self) -> impl Iterator<Item = &mut SpectralField> {
        self.du.components_mut().iter_mut().chain(self.dtau.upper_mut().iter_mut())
    }
}

/// Every term except the diagonal dissipation and damping, which an
/// integrating-factor scheme treats exactly.
pub fn explicit_tendency(state: &FlowState, params: &ModelParams) -> Tendency {
    let grid = state.grid().clone();
    let dim = grid.dim();
    let len = grid.len();
    let tg = params.toggles;
    let mut out = Tendency::zeros(&grid);

    let need_u_phys = tg.advection_u || tg.advection_tau;
    let u_phys: Vec<Vec<f64>> =
        if need_u_phys { state.u.components().iter().map(SpectralField::to_physical).collect() } else { Vec::new() };
    let grad = if tg.advection_u || tg.q_term { physical_gradient(&state.u) } else { Vec::new() };

    if tg.advection_u {
        for i in 0..dim {
            let mut acc = vec![0.0; len];
            for j in 0..dim {
                for p in 0..len {
                    acc[p] -= u_phys[j][p] * grad[i][j][p];
                }
            }
            *out.du.component_mut(i) = to_spectral_dealiased(&grid, &acc);
        }
    }
    if tg.coupling_div_tau {
        let div = divergence(&state.tau);
        for (o, d) in out.du.components_mut().iter_mut().zip(div.components()) {
            o.axpy(1.0, d);
        }
    }
    leray_project_in_place(&mut out.du);

    if tg.advection_tau || tg.q_term {
        let tau_phys: Vec<Vec<f64>> = state.tau.upper().iter().map(SpectralField::to_physical).collect();
        let mut acc = if tg.q_term {
            let mut q = q_pointwise(dim, &tau_phys, &grad, params.b, len);
            q.iter_mut().flatten().for_each(|x| *x = -*x);
            q
        } else {
            vec![vec![0.0; len]; sym_len(dim)]
        };
        if tg.advection_tau {
            for (slot, comp) in state.tau.upper().iter().enumerate() {
                for j in 0..dim {
                    let d = partial(comp, j).to_physical();
                    for p in 0..len {
                        acc[slot][p] -= u_phys[j][p] * d[p];
                    }
                }
            }
        }
        for (o, a) in out.dtau.upper_mut().iter_mut().zip(&acc) {
            *o = to_spectral_dealiased(&grid, a);
        }
    }
    if tg.coupling_strain {
        let d = strain_rate(&state.u);
        for (o, s) in out.dtau.upper_mut().iter_mut().zip(d.upper()) {
            o.axpy(1.0, s);
        }
    }
    out
}

/// Full tendency `(du/dt, dτ/dt)` including the diagonal dissipation terms.
pub fn rhs(state: &FlowState, params: &ModelParams) -> Result<Tendency> {
    let grid = state.grid().clone();
    let mut out = explicit_tendency(state, params);
    let u_rates = params.velocity_rates(&grid)?;
    let tau_rates = params.stress_rates(&grid)?;
    for (o, c) in out.du.components_mut().iter_mut().zip(state.u.components()) {
        let mut d = c.clone();
        d.apply_multiplier(&u_rates);
        o.axpy(-1.0, &d);
    }
    for (o, c) in out.dtau.upper_mut().iter_mut().zip(state.tau.upper()) {
        let mut d = c.clone();
        d.apply_multiplier(&tau_rates);
        o.axpy(-1.0, &d);
    }
    Ok(out)
}

/// Zero-mean pressure whose gradient is the non-solenoidal part of
/// `−u·∇u + ∇·τ` (terms gated by the same toggles as the momentum tendency).
pub fn recover_pressure(state: &FlowState, params: &ModelParams) -> SpectralField {
    let forcing = unprojected_momentum_forcing(state, params);
    let grid = state.grid();
    SpectralField::from_fn(grid, |idx| {
        let k2 = grid.k_sq(idx);
        if k2 == 0.0 {
            return num_complex::Complex64::new(0.0, 0.0);
        }
        let k = grid.wavevector(idx);
        let mut kg = num_complex::Complex64::new(0.0, 0.0);
        for (j, c) in forcing.components().iter().enumerate() {
            kg += c.coeffs()[idx] * k[j];
        }
        kg * num_complex::Complex64::new(0.0, -1.0 / k2)
    })
}

/// `−u·∇u + ∇·τ` before projection.
pub fn unprojected_momentum_forcing(state: &FlowState, params: &ModelParams) -> VectorField {
    let grid = state.grid();
    let mut g = if params.toggles.advection_u {
        let mut a = advect(&state.u, &state.u);
        a.components_mut().iter_mut().for_each(|c| c.scale(-1.0));
        a
    } else {
        VectorField::zeros(grid)
    };
    if params.toggles.coupling_div_tau {
        let div = divergence(&state.tau);
        for (o, d) in g.components_mut().iter_mut().zip(div.components()) {
            o.axpy(1.0, d);
        }
    }
    g
}

/// Checks that two fields live on the same grid.
pub fn same_grid(a: &Grid, b: &Grid) -> Result<()> {
    if a != b {
        return Err(Error::Config(format!("grid mismatch: {a:?} vs {b:?}")));
    }
    Ok(())
}
