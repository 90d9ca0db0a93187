//! Energy and Lyapunov functionals along a trajectory, energy-identity
//! residuals, and boundedness monitors.
//!
//! With `‖·‖_s` the inhomogeneous `H^s` norm:
//!
//! ```text
//! E(t) = ‖u‖_s² + ‖τ‖_s² + 2∫₀ᵗ (η‖Λ^β τ‖_s² + (k/2)‖∇u‖²_{s−β}) dt'
//! L(t) = ‖u‖_s² + ‖τ‖_s² + 2k (u, ∇·τ)_{s−β}
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{sym_index, Field, SpectralField, TensorField, VectorField};
use crate::model::{advect, q_bilinear, rhs, same_grid, velocity_gradient, FlowState, ModelParams};
use crate::spectral::{
    divergence, leray_project, sobolev_inner_product, sobolev_norm, sobolev_weights, weighted_inner_product,
    SobolevWeight,
};

const INHOM: SobolevWeight = SobolevWeight::Inhomogeneous;

/// Default cross-term coefficient.
pub const DEFAULT_K: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticParams {
    /// Sobolev index; `None` picks `1 + d/2 + 0.01`.
    pub s: Option<f64>,
    /// Cross-term coefficient of the Lyapunov functional.
    pub k: f64,
    /// Sampling interval in simulation time.
    pub interval: f64,
}

impl Default for DiagnosticParams {
    fn default() -> Self {
        Self { s: None, k: DEFAULT_K, interval: 0.1 }
    }
}

impl DiagnosticParams {
    pub fn sobolev_index(&self, dim: usize) -> f64 {
        self.s.unwrap_or(1.0 + dim as f64 / 2.0 + 0.01)
    }

    /// `(errors, warnings)`.
    pub fn check(&self, dim: usize, model: &ModelParams, convergence_study: bool) -> (Vec<String>, Vec<String>) {
        let mut errors = Vec::new();
        let mut warnings = Vec::new();
        let s = self.sobolev_index(dim);
        if !(s >= 0.0 && s.is_finite()) {
            errors.push(format!("s must be finite and >= 0, got {s}"));
        }
        if !(self.k > 0.0) {
            errors.push(format!("k must be > 0, got {}", self.k));
        } else if self.k >= 0.25 {
            warnings.push(format!("k = {} outside (0, 1/4): Lyapunov equivalence constants degenerate", self.k));
        }
        if !(self.interval > 0.0) {
            errors.push(format!("diagnostic interval must be > 0, got {}", self.interval));
        }
        if s <= 1.0 + dim as f64 / 2.0 {
            warnings.push(format!("s = {s} violates s > 1 + d/2 = {}", 1.0 + dim as f64 / 2.0));
        }
        if convergence_study && s < 2.0 * model.alpha + 2.0 * model.beta - 1.0 {
            warnings.push(format!(
                "s = {s} violates s >= 2 alpha + 2 beta - 1 = {}",
                2.0 * model.alpha + 2.0 * model.beta - 1.0
            ));
        }
        (errors, warnings)
    }
}

/// One diagnostic sample. Column order is stable and used verbatim for CSV output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub u_hs: f64,
    pub tau_hs: f64,
    pub u_l2: f64,
    pub tau_l2: f64,
    /// `‖Λ^β τ‖²_{H^s}`
    pub diss_tau: f64,
    /// `‖∇u‖²_{H^{s−β}}`
    pub diss_u: f64,
    /// `ν‖Λ^α u‖²_{H^s}`
    pub visc_u: f64,
    /// `(u, ∇·τ)_{H^{s−β}}`
    pub cross: f64,
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "L")]
    pub lyapunov: f64,
    /// `(Q(τ,∇u), τ)_{L²}`
    pub q_work: f64,
    /// Instantaneous `L²` energy law evaluated on the tendency.
    pub identity_residual: f64,
    /// Minimum over the grid of the smallest eigenvalue of `τ + 𝕀`.
    pub min_eig_sigma: f64,
    /// `η‖Λ^β τ‖²_{L²} + ν‖Λ^α u‖²_{L²} + a‖τ‖²_{L²}`
    pub l2_dissipation: f64,
    /// `η‖Λ^β τ‖²_{H^s} + ν‖Λ^α u‖²_{H^s} + a‖τ‖²_{H^s}`
    pub hs_dissipation: f64,
    /// `−(u·∇u, u)_{H^s} − (u·∇τ, τ)_{H^s} − (Q, τ)_{H^s}`
    pub hs_transfer: f64,
}

/// Trapezoidal accumulation of the dissipation integral in `E(t)`.
#[derive(Debug, Clone, Default)]
pub struct DissipationHistory {
    pub accumulated: f64,
    last: Option<(f64, f64)>,
}

fn sq(x: f64) -> f64 {
    x * x
}

fn homogeneous_weighted(grid: &crate::grid::Grid, s: f64, gamma: f64) -> Vec<f64> {
    // (1+|k|²)^s |k|^{2γ}
    let inhom = sobolev_weights(grid, s, INHOM);
    let hom = crate::spectral::fractional_multiplier(grid, gamma).expect("gamma >= 0");
    inhom.iter().zip(&hom).map(|(a, b)| a * b).collect()
}

fn norm_sq_with<F: Field>(f: &F, w: &[f64]) -> f64 {
    weighted_inner_product(f, f, w).expect("same field")
}

/// Evaluates one record and advances `history`.
pub fn record(
    state: &FlowState,
    history: &mut DissipationHistory,
    model: &ModelParams,
    diag: &DiagnosticParams,
) -> Result<DiagnosticsRecord> {
    let grid = state.grid().clone();
    let s = diag.sobolev_index(grid.dim());
    let k = diag.k;
    let eta = model.eta_eff();
    let nu = model.nu_eff();
    let a = model.a_eff();
    let tg = model.toggles;

    let u_hs = sobolev_norm(&state.u, s, INHOM);
    let tau_hs = sobolev_norm(&state.tau, s, INHOM);
    let u_l2 = sobolev_norm(&state.u, 0.0, INHOM);
    let tau_l2 = sobolev_norm(&state.tau, 0.0, INHOM);
    let diss_tau = norm_sq_with(&state.tau, &homogeneous_weighted(&grid, s, model.beta));
    let diss_u = norm_sq_with(&state.u, &homogeneous_weighted(&grid, s - model.beta, 1.0));
    let lambda_alpha_hs = norm_sq_with(&state.u, &homogeneous_weighted(&grid, s, model.alpha));
    let visc_u = nu * lambda_alpha_hs;
    let div_tau = divergence(&state.tau);
    let cross = sobolev_inner_product(&state.u, &div_tau, s - model.beta, INHOM)?;

    let q = if tg.q_term { Some(q_bilinear(&state.tau, &state.u, model.b)) } else { None };
    let q_work = match &q {
        Some(q) => sobolev_inner_product(q, &state.tau, 0.0, INHOM)?,
        None => 0.0,
    };

    let l2_dissipation = eta * norm_sq_with(&state.tau, &homogeneous_weighted(&grid, 0.0, model.beta))
        + nu * norm_sq_with(&state.u, &homogeneous_weighted(&grid, 0.0, model.alpha))
        + a * sq(tau_l2);
    let hs_dissipation = eta * diss_tau + visc_u + a * sq(tau_hs);

    let tendency = rhs(state, model)?;
    let identity_residual = sobolev_inner_product(&state.u, &tendency.du, 0.0, INHOM)?
        + sobolev_inner_product(&state.tau, &tendency.dtau, 0.0, INHOM)?
        + l2_dissipation
        + q_work;

    let mut hs_transfer = 0.0;
    if tg.advection_u {
        let adv = leray_project(&advect(&state.u, &state.u));
        hs_transfer -= sobolev_inner_product(&adv, &state.u, s, INHOM)?;
    }
    if tg.advection_tau {
        let adv = advect(&state.u, &state.tau);
        hs_transfer -= sobolev_inner_product(&adv, &state.tau, s, INHOM)?;
    }
    if let Some(q) = &q {
        hs_transfer -= sobolev_inner_product(q, &state.tau, s, INHOM)?;
    }

    let integrand = eta * diss_tau + 0.5 * k * diss_u;
    if let Some((t_prev, f_prev)) = history.last {
        history.accumulated += 0.5 * (state.t - t_prev) * (f_prev + integrand);
    }
    history.last = Some((state.t, integrand));
    let norms = sq(u_hs) + sq(tau_hs);

    Ok(DiagnosticsRecord {
        t: state.t,
        u_hs,
        tau_hs,
        u_l2,
        tau_l2,
        diss_tau,
        diss_u,
        visc_u,
        cross,
        energy: norms + 2.0 * history.accumulated,
        lyapunov: norms + 2.0 * k * cross,
        q_work,
        identity_residual,
        min_eig_sigma: min_eig_sigma(&state.tau),
        l2_dissipation,
        hs_dissipation,
        hs_transfer,
    })
}

/// Stateful wrapper that keeps the dissipation history and the record stream.
#[derive(Debug, Clone)]
pub struct Recorder {
    model: ModelParams,
    diag: DiagnosticParams,
    history: DissipationHistory,
    records: Vec<DiagnosticsRecord>,
}

impl Recorder {
    pub fn new(model: &ModelParams, diag: &DiagnosticParams) -> Self {
        Self { model: *model, diag: *diag, history: DissipationHistory::default(), records: Vec::new() }
    }

    pub fn observe(&mut self, state: &FlowState) -> Result<&DiagnosticsRecord> {
        let rec = record(state, &mut self.history, &self.model, &self.diag)?;
        self.records.push(rec);
        Ok(self.records.last().expect("just pushed"))
    }

    pub fn records(&self) -> &[DiagnosticsRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<DiagnosticsRecord> {
        self.records
    }
}

/// Pointwise minimum eigenvalue of `τ + 𝕀`.
pub fn min_eig_sigma(tau: &TensorField) -> f64 {
    let dim = tau.dim();
    let phys: Vec<Vec<f64>> = tau.upper().iter().map(SpectralField::to_physical).collect();
    let len = tau.grid().len();
    let at = |i: usize, j: usize, p: usize| phys[sym_index(dim, i, j)][p] + if i == j { 1.0 } else { 0.0 };
    (0..len)
        .map(|p| {
            if dim == 2 {
                min_eig_2x2(at(0, 0, p), at(0, 1, p), at(1, 1, p))
            } else {
                min_eig_3x3([
                    [at(0, 0, p), at(0, 1, p), at(0, 2, p)],
                    [at(0, 1, p), at(1, 1, p), at(1, 2, p)],
                    [at(0, 2, p), at(1, 2, p), at(2, 2, p)],
                ])
            }
        })
        .fold(f64::INFINITY, f64::min)
}

/// Smaller eigenvalue of `[[a, b], [b, c]]`.
pub fn min_eig_2x2(a: f64, b: f64, c: f64) -> f64 {
    0.5 * (a + c) - (0.25 * sq(a - c) + sq(b)).sqrt()
}

/// Smallest eigenvalue of a symmetric 3×3 matrix (trigonometric closed form).
pub fn min_eig_3x3(m: [[f64; 3]; 3]) -> f64 {
    let p1 = sq(m[0][1]) + sq(m[0][2]) + sq(m[1][2]);
    let q = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
    if p1 == 0.0 {
        return m[0][0].min(m[1][1]).min(m[2][2]);
    }
    let p2 = sq(m[0][0] - q) + sq(m[1][1] - q) + sq(m[2][2] - q) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let mut b = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            b[i][j] = (m[i][j] - if i == j { q } else { 0.0 }) / p;
        }
    }
    let det = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let r = (0.5 * det).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos()
}

/// Outcome of the two-sided Lyapunov equivalence test on one record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovCheck {
    pub pass: bool,
    /// `½‖u‖² + 2k²‖τ‖² − |2k·cross|`
    pub slack: f64,
    /// `L − (½‖u‖² + (1 − 2k²)‖τ‖²)`
    pub lower_slack: f64,
    /// `(3/2)‖u‖² + (1 + 2k²)‖τ‖² − L`
    pub upper_slack: f64,
}

pub fn lyapunov_equivalence_check(rec: &DiagnosticsRecord, k: f64) -> LyapunovCheck {
    let u2 = sq(rec.u_hs);
    let t2 = sq(rec.tau_hs);
    let slack = 0.5 * u2 + 2.0 * k * k * t2 - (2.0 * k * rec.cross).abs();
    let lower_slack = rec.lyapunov - (0.5 * u2 + (1.0 - 2.0 * k * k) * t2);
    let upper_slack = 1.5 * u2 + (1.0 + 2.0 * k * k) * t2 - rec.lyapunov;
    let tol = -1e-12 * (u2 + t2);
    LyapunovCheck { pass: slack >= tol && lower_slack >= tol && upper_slack >= tol, slack, lower_slack, upper_slack }
}

/// Discrete residuals of the `L²` and `H^s` energy laws along a record stream.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ResidualSeries {
    pub t: Vec<f64>,
    /// `½ d/dt(‖u‖² + ‖τ‖²)_{L²} + dissipation + (Q, τ)`
    pub l2_absolute: Vec<f64>,
    pub l2_relative: Vec<f64>,
    /// `½ d/dt(‖u‖² + ‖τ‖²)_{H^s} + dissipation − transfer`
    pub hs_absolute: Vec<f64>,
    pub hs_relative: Vec<f64>,
}

impl ResidualSeries {
    pub fn max_l2_absolute(&self) -> f64 {
        self.l2_absolute.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_l2_relative(&self) -> f64 {
        self.l2_relative.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_hs_relative(&self) -> f64 {
        self.hs_relative.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Three-point derivative at the middle sample, second order on uneven spacing.
fn centered_derivative(t: [f64; 3], f: [f64; 3]) -> f64 {
    let hm = t[1] - t[0];
    let hp = t[2] - t[1];
    (hm * hm * f[2] - hp * hp * f[0] + (hp * hp - hm * hm) * f[1]) / (hm * hp * (hm + hp))
}

fn relative(res: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        0.0
    } else {
        res / scale
    }
}

/// Residuals at every interior record.
pub fn energy_identity_residual(records: &[DiagnosticsRecord]) -> Result<ResidualSeries> {
    if records.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "energy-identity residual needs at least 3 records, got {}",
            records.len()
        )));
    }
    let mut out = ResidualSeries::default();
    for w in records.windows(3) {
        let t = [w[0].t, w[1].t, w[2].t];
        if !(t[0] < t[1] && t[1] < t[2]) {
            return Err(Error::Config("record times must be strictly increasing".into()));
        }
        let mid = &w[1];
        let e_l2 = w.iter().map(|r| 0.5 * (sq(r.u_l2) + sq(r.tau_l2)));
        let de_l2 = centered_derivative(t, to3(e_l2));
        let l2 = de_l2 + mid.l2_dissipation + mid.q_work;
        let e_hs = w.iter().map(|r| 0.5 * (sq(r.u_hs) + sq(r.tau_hs)));
        let de_hs = centered_derivative(t, to3(e_hs));
        let hs = de_hs + mid.hs_dissipation - mid.hs_transfer;
        out.t.push(mid.t);
        out.l2_absolute.push(l2);
        out.l2_relative.push(relative(l2, de_l2.abs() + mid.l2_dissipation.abs() + mid.q_work.abs()));
        out.hs_absolute.push(hs);
        out.hs_relative.push(relative(hs, de_hs.abs() + mid.hs_dissipation.abs() + mid.hs_transfer.abs()));
    }
    Ok(out)
}

fn to3(it: impl Iterator<Item = f64>) -> [f64; 3] {
    let v: Vec<f64> = it.collect();
    [v[0], v[1], v[2]]
}

/// Summary of the bootstrap inequality `E(t) ≤ E(0) + C E^{3/2}(t)` along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BootstrapReport {
    pub e0: f64,
    pub sup_e: f64,
    /// Smallest `C` for which the inequality holds on every record.
    pub c_star: f64,
    /// `sup_t (‖u‖²_{H^s} + ‖τ‖²_{H^s})`
    pub sup_norm_sq: f64,
    /// `sup_t E ≤ 4 E(0)`; the factor 4 is a convention, not a theorem constant.
    pub bounded: bool,
    /// `sup_t (‖u‖² + ‖τ‖²)_{H^s} ≤ 4 (‖u₀‖² + ‖τ₀‖²)_{H^s}`.
    pub norm_bounded: bool,
}

/// Growth factor used by the empirical boundedness verdicts.
pub const BOUNDEDNESS_FACTOR: f64 = 4.0;

pub fn bootstrap_monitor(records: &[DiagnosticsRecord]) -> BootstrapReport {
    let Some(first) = records.first() else {
        return BootstrapReport {
            e0: 0.0,
            sup_e: 0.0,
            c_star: 0.0,
            sup_norm_sq: 0.0,
            bounded: true,
            norm_bounded: true,
        };
    };
    let e0 = first.energy;
    let norm0 = sq(first.u_hs) + sq(first.tau_hs);
    let mut sup_e: f64 = 0.0;
    let mut sup_norm_sq: f64 = 0.0;
    let mut c_star: f64 = 0.0;
    for r in records {
        sup_e = sup_e.max(r.energy);
        sup_norm_sq = sup_norm_sq.max(sq(r.u_hs) + sq(r.tau_hs));
        let denom = r.energy.powf(1.5);
        if denom > 0.0 {
            c_star = c_star.max((r.energy - e0) / denom);
        }
    }
    BootstrapReport {
        e0,
        sup_e,
        c_star,
        sup_norm_sq,
        bounded: sup_e <= BOUNDEDNESS_FACTOR * e0,
        norm_bounded: sup_norm_sq <= BOUNDEDNESS_FACTOR * norm0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceReport {
    pub per_time: Vec<(f64, f64)>,
    pub sup: f64,
}

/// `‖(u_a − u_b, τ_a − τ_b)‖_{L²}`.
pub fn state_distance(a: &FlowState, b: &FlowState) -> Result<f64> {
    same_grid(a.grid(), b.grid())?;
    let du = VectorField::new(
        a.u.components()
            .iter()
            .zip(b.u.components())
            .map(|(x, y)| {
                let mut d = x.clone();
                d.axpy(-1.0, y);
                d
            })
            .collect(),
    )?;
    let dtau = TensorField::from_upper(
        a.tau
            .upper()
            .iter()
            .zip(b.tau.upper())
            .map(|(x, y)| {
                let mut d = x.clone();
                d.axpy(-1.0, y);
                d
            })
            .collect(),
    )?;
    Ok((sq(sobolev_norm(&du, 0.0, INHOM)) + sq(sobolev_norm(&dtau, 0.0, INHOM))).sqrt())
}

/// Per-time and supremum `L²` distance between two runs sampled at the same times.
pub fn trajectory_distance(run_a: &[FlowState], run_b: &[FlowState]) -> Result<DistanceReport> {
    if run_a.len() != run_b.len() {
        return Err(Error::Config(format!("runs have different snapshot counts: {} vs {}", run_a.len(), run_b.len())));
    }
    let mut per_time = Vec::with_capacity(run_a.len());
    let mut sup: f64 = 0.0;
    for (a, b) in run_a.iter().zip(run_b) {
        if (a.t - b.t).abs() > 1e-12 * a.t.abs().max(1.0) {
            return Err(Error::Config(format!("snapshot times differ: {} vs {}", a.t, b.t)));
        }
        let d = state_distance(a, b)?;
        sup = sup.max(d);
        per_time.push((a.t, d));
    }
    Ok(DistanceReport { per_time, sup })
}

/// `∇u` is exposed for diagnostics that need the raw gradient.
pub fn velocity_gradient_norm(u: &VectorField, sigma: f64) -> f64 {
    let g = velocity_gradient(u);
    let dim = u.dim();
    let mut acc = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            acc += sq(sobolev_norm(g.get(i, j), sigma, INHOM));
        }
    }
    acc.sqrt()
}
