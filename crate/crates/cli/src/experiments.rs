//! The three canonical experiments: a single run, verification against the
//! linear closed form, and the vanishing-viscosity sweep.

use std::path::Path;

use num_complex::Complex64;
use oldroyd_core::diagnostics::{
    bootstrap_monitor, energy_identity_residual, lyapunov_equivalence_check, state_distance, BootstrapReport,
    DiagnosticsRecord, Recorder, BOUNDEDNESS_FACTOR,
};
use oldroyd_core::initial::{make_initial_data, state_hs_size};
use oldroyd_core::integrator::{cfl_dt, integrate, Cadence, TimeStep};
use oldroyd_core::linear::linear_mode_solution;
use oldroyd_core::spectral::{divergence, leray_project};
use oldroyd_core::{Error, FlowState, Grid};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::error::{CliError, Result};
use crate::output::{self, snapshot::Snapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    BlowUp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlowUpMarker {
    pub t: f64,
    pub steps: usize,
}

/// A finished (or aborted) trajectory held in memory.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub records: Vec<DiagnosticsRecord>,
    /// States at the snapshot cadence, when one is configured.
    pub snapshots: Vec<FlowState>,
    /// Final state, or the last finite state after a blow-up.
    pub final_state: FlowState,
    pub steps: usize,
    pub blow_up: Option<BlowUpMarker>,
}

/// Integrates `config` from its initial data, recording diagnostics at the
/// configured cadence. A blow-up is reported in the result, not as an error.
pub fn simulate(config: &RunConfig) -> Result<Simulation> {
    let grid = config.grid()?;
    let s = config.sobolev_index();
    let initial = make_initial_data(&grid, &config.initial, s)?;
    simulate_from(config, initial)
}

pub fn simulate_from(config: &RunConfig, initial: FlowState) -> Result<Simulation> {
    let interval = config.diagnostics.interval;
    let every = config.output.snapshot_interval.map(|si| (si / interval).round().max(1.0) as usize);
    let mut recorder = Recorder::new(&config.model, &config.diagnostics);
    let mut snapshots = Vec::new();
    let mut sample = 0usize;
    let outcome = integrate(initial, &config.model, &config.stepper, Cadence { interval }, |st| {
        recorder.observe(st)?;
        if every.is_some_and(|m| sample.is_multiple_of(m)) {
            snapshots.push(st.clone());
        }
        sample += 1;
        Ok(())
    });
    match outcome {
        Ok(out) => Ok(Simulation {
            records: recorder.into_records(),
            snapshots,
            final_state: out.state,
            steps: out.steps,
            blow_up: None,
        }),
        Err(aborted) => match aborted.error {
            Error::BlowUp(b) => Ok(Simulation {
                records: recorder.into_records(),
                snapshots,
                final_state: b.last_finite.clone(),
                steps: b.steps,
                blow_up: Some(BlowUpMarker { t: b.t, steps: b.steps }),
            }),
            e => Err(e.into()),
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovSummary {
    /// The two-sided bound is only claimed for `β ≥ 1/2`.
    pub applicable: bool,
    pub checked: usize,
    pub violations: usize,
    pub min_slack: f64,
}

pub fn lyapunov_summary(records: &[DiagnosticsRecord], k: f64, beta: f64) -> LyapunovSummary {
    let applicable = beta >= 0.5;
    let mut violations = 0;
    let mut min_slack = f64::INFINITY;
    for r in records {
        let c = lyapunov_equivalence_check(r, k);
        min_slack = min_slack.min(c.slack.min(c.lower_slack).min(c.upper_slack));
        if !c.pass {
            violations += 1;
        }
    }
    LyapunovSummary { applicable, checked: records.len(), violations, min_slack }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualSummary {
    pub max_l2_relative: f64,
    pub max_hs_relative: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub status: RunStatus,
    pub blow_up: Option<BlowUpMarker>,
    pub steps: usize,
    pub t_final: f64,
    pub records: usize,
    pub sobolev_index: f64,
    pub sup_u_hs: f64,
    pub sup_tau_hs: f64,
    pub bootstrap: BootstrapReport,
    pub boundedness_factor: f64,
    pub boundedness_note: &'static str,
    pub lyapunov: LyapunovSummary,
    pub energy_residual: Option<ResidualSummary>,
    pub min_eig_sigma: f64,
    pub warnings: Vec<String>,
}

impl RunSummary {
    pub fn new(config: &RunConfig, sim: &Simulation, warnings: Vec<String>) -> Self {
        let recs = &sim.records;
        let energy_residual = energy_identity_residual(recs)
            .ok()
            .map(|r| ResidualSummary { max_l2_relative: r.max_l2_relative(), max_hs_relative: r.max_hs_relative() });
        RunSummary {
            status: if sim.blow_up.is_some() { RunStatus::BlowUp } else { RunStatus::Completed },
            blow_up: sim.blow_up,
            steps: sim.steps,
            t_final: sim.final_state.t,
            records: recs.len(),
            sobolev_index: config.sobolev_index(),
            sup_u_hs: recs.iter().map(|r| r.u_hs).fold(0.0, f64::max),
            sup_tau_hs: recs.iter().map(|r| r.tau_hs).fold(0.0, f64::max),
            bootstrap: bootstrap_monitor(recs),
            boundedness_factor: BOUNDEDNESS_FACTOR,
            boundedness_note: "the growth factor is an empirical convention, not a theorem constant",
            lyapunov: lyapunov_summary(recs, config.diagnostics.k, config.model.beta),
            energy_residual,
            min_eig_sigma: recs.iter().map(|r| r.min_eig_sigma).fold(f64::INFINITY, f64::min),
            warnings,
        }
    }

    /// Boundedness verdicts and, where applicable, the Lyapunov equivalence.
    pub fn checks_pass(&self) -> bool {
        self.status == RunStatus::Completed
            && self.bootstrap.bounded
            && self.bootstrap.norm_bounded
            && (!self.lyapunov.applicable || self.lyapunov.violations == 0)
    }
}

/// Runs `config` and writes its outputs into `dir`: `diagnostics.csv`,
/// `summary.json`, `config.json` and, if requested, binary snapshots.
pub fn run(config: &RunConfig, warnings: Vec<String>, dir: &Path) -> Result<RunSummary> {
    let sim = simulate(config)?;
    let summary = RunSummary::new(config, &sim, warnings);
    write_run(config, &sim, &summary, dir)?;
    Ok(summary)
}

pub fn write_run(config: &RunConfig, sim: &Simulation, summary: &RunSummary, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    output::write_json(&dir.join("config.json"), config)?;
    if config.output.wants(Format::Csv) {
        output::write_records(&dir.join("diagnostics.csv"), &sim.records)?;
    }
    if config.output.wants(Format::Snapshot) {
        for (i, st) in sim.snapshots.iter().enumerate() {
            let path = dir.join("snapshots").join(format!("snap_{i:05}.obsf"));
            output::atomic_write(&path, &Snapshot::from_state(st)?.encode())?;
        }
        output::atomic_write(&dir.join("final.obsf"), &Snapshot::from_state(&sim.final_state)?.encode())?;
    }
    // The summary goes last: its presence marks a complete output set.
    output::write_json(&dir.join("summary.json"), summary)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinearRegime {
    /// Nonlinear terms switched off; the deviation is pure integrator error.
    TogglesOff,
    /// Full physics at amplitude `ε ≤ 1e-6`; the deviation adds `O(ε²)` contamination.
    TinyAmplitude,
}

/// Largest admissible amplitude for verification with nonlinear terms on.
pub const TINY_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeDeviation {
    pub k: Vec<i64>,
    pub k_mag: f64,
    pub max_deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LinearReport {
    pub regime: LinearRegime,
    pub epsilon: f64,
    pub samples: usize,
    pub max_deviation: f64,
    pub deviation_over_epsilon: Option<f64>,
    pub deviation_over_epsilon_sq: Option<f64>,
    pub modes: Vec<ModeDeviation>,
}

struct TrackedMode {
    idx: usize,
    u0: Vec<Complex64>,
    s0: Vec<Complex64>,
    worst: f64,
}

/// Compares the solver trajectory of `(û, (P∇·τ)^)` with the closed-form
/// linear solution, mode by mode, at every diagnostic sample.
pub fn linear_verify(config: &RunConfig) -> Result<LinearReport> {
    let model = &config.model;
    let tg = model.toggles;
    let regime = if tg.nonlinear_off() {
        LinearRegime::TogglesOff
    } else if config.initial.epsilon <= TINY_EPSILON {
        LinearRegime::TinyAmplitude
    } else {
        return Err(CliError::Config(vec![format!(
            "linear verification needs nonlinear toggles off or initial.epsilon <= {TINY_EPSILON}"
        )]));
    };
    let mut errors = Vec::new();
    if model.nu_eff() != 0.0 || model.a_eff() != 0.0 {
        errors.push("linear verification needs nu = 0 and a = 0".to_string());
    }
    if !(tg.coupling_div_tau && tg.coupling_strain) {
        errors.push("linear verification needs both coupling terms switched on".to_string());
    }
    if !errors.is_empty() {
        return Err(CliError::Config(errors));
    }

    let grid = config.grid()?;
    let dim = grid.dim();
    let initial = make_initial_data(&grid, &config.initial, config.sobolev_index())?;
    let s_init = leray_project(&divergence(&initial.tau));
    let mut modes: Vec<TrackedMode> = (0..grid.len())
        .filter(|&idx| grid.k_sq(idx) > 0.0)
        .filter_map(|idx| {
            let u0: Vec<_> = (0..dim).map(|i| initial.u.component(i).coeffs()[idx]).collect();
            let s0: Vec<_> = (0..dim).map(|i| s_init.component(i).coeffs()[idx]).collect();
            let live = u0.iter().chain(&s0).any(|c| c.norm() > 0.0);
            live.then_some(TrackedMode { idx, u0, s0, worst: 0.0 })
        })
        .collect();

    let eta = model.eta_eff();
    let beta = model.beta;
    let mut samples = 0usize;
    let cadence = Cadence { interval: config.diagnostics.interval };
    let result = integrate(initial, model, &config.stepper, cadence, |st| {
        let s_now = leray_project(&divergence(&st.tau));
        for m in modes.iter_mut() {
            let k_mag = grid.k_mag(m.idx);
            for i in 0..dim {
                let (ue, se) = linear_mode_solution(m.u0[i], m.s0[i], k_mag, eta, beta, st.t)?;
                let du = (st.u.component(i).coeffs()[m.idx] - ue).norm();
                let ds = (s_now.component(i).coeffs()[m.idx] - se).norm();
                m.worst = m.worst.max(du).max(ds);
            }
        }
        samples += 1;
        Ok(())
    });
    if let Err(aborted) = result {
        return Err(match aborted.error {
            Error::BlowUp(b) => CliError::BlowUp { t: b.t, steps: b.steps },
            e => e.into(),
        });
    }

    let max_deviation = modes.iter().map(|m| m.worst).fold(0.0, f64::max);
    let eps = config.initial.epsilon;
    let ratio = |p: i32| (eps > 0.0).then(|| max_deviation / eps.powi(p));
    let mut out: Vec<ModeDeviation> = modes
        .iter()
        .map(|m| ModeDeviation {
            k: integer_wavevector(&grid, m.idx),
            k_mag: grid.k_mag(m.idx),
            max_deviation: m.worst,
        })
        .collect();
    out.sort_by(|a, b| b.max_deviation.total_cmp(&a.max_deviation).then_with(|| a.k.cmp(&b.k)));
    Ok(LinearReport {
        regime,
        epsilon: eps,
        samples,
        max_deviation,
        deviation_over_epsilon: ratio(1),
        deviation_over_epsilon_sq: ratio(2),
        modes: out,
    })
}

fn integer_wavevector(grid: &Grid, idx: usize) -> Vec<i64> {
    grid.wavevector(idx)[..grid.dim()].iter().map(|k| k.round() as i64).collect()
}

/// Acceptance range of the fitted distance-vs-ν slope.
pub const SLOPE_RANGE: (f64, f64) = (0.9, 1.1);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemberStatus {
    pub nu: f64,
    pub status: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    /// Strictly decreasing viscosities.
    pub nus: Vec<f64>,
    /// `sup_t ‖(u^ν − u⁰, τ^ν − τ⁰)‖_{L²}` per viscosity.
    pub distances: Vec<f64>,
    /// Least-squares fit `log₁₀ distance = slope·log₁₀ ν + intercept`.
    pub slope: f64,
    pub intercept: f64,
    /// `sup_t (‖u^ν‖²_{H^s} + ‖τ^ν‖²_{H^s})^{1/2}` per viscosity.
    pub sup_hs: Vec<f64>,
    pub baseline_sup_hs: f64,
    /// `‖u₀‖_{H^s} + ‖τ₀‖_{H^s}`.
    pub epsilon: f64,
    /// Every `sup_hs` (baseline included) is at most `4·epsilon`.
    pub uniform_bound: bool,
    pub dt: f64,
    pub t_end: f64,
}

impl SweepResult {
    pub fn checks_pass(&self) -> bool {
        (SLOPE_RANGE.0..=SLOPE_RANGE.1).contains(&self.slope) && self.uniform_bound
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub result: SweepResult,
    pub baseline: Vec<DiagnosticsRecord>,
    pub members: Vec<Vec<DiagnosticsRecord>>,
}

pub fn validate_nu_list(nus: &[f64]) -> Result<()> {
    let mut errors = Vec::new();
    if nus.len() < 3 {
        errors.push(format!("the viscosity list needs at least 3 values, got {}", nus.len()));
    }
    if nus.contains(&0.0) {
        errors.push("nu = 0 is the baseline and may not appear in the list".to_string());
    }
    if nus.iter().any(|&nu| !(nu > 0.0 && nu.is_finite())) {
        errors.push("every viscosity must be finite and > 0".to_string());
    }
    if nus.windows(2).any(|w| !(w[0] > w[1])) {
        errors.push("the viscosity list must be strictly decreasing".to_string());
    }
    if errors.is_empty() && nus.len() >= 2 && (nus[0] / nus[nus.len() - 1]).log10() < 2.0 - 1e-9 {
        errors.push("the viscosity list must span at least two decades".to_string());
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(CliError::Config(errors))
    }
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

fn sup_hs(records: &[DiagnosticsRecord]) -> f64 {
    records.iter().map(|r| (r.u_hs * r.u_hs + r.tau_hs * r.tau_hs).sqrt()).fold(0.0, f64::max)
}

struct Member {
    records: Vec<DiagnosticsRecord>,
    distance: f64,
}

/// Runs the `ν = 0` baseline and every `ν` in `nus` from the same initial
/// data with one frozen step size, then fits the distance-vs-ν slope.
///
/// Members run concurrently on `threads` workers (the global pool when
/// `None`); results do not depend on the schedule.
pub fn sweep_viscosity(config: &RunConfig, nus: &[f64], threads: Option<usize>) -> Result<SweepOutcome> {
    validate_nu_list(nus)?;
    let grid = config.grid()?;
    let s = config.sobolev_index();
    let initial = make_initial_data(&grid, &config.initial, s)?;
    let epsilon = state_hs_size(&initial, s);
    let mut base_cfg = config.clone();
    let dt = match config.stepper.dt {
        TimeStep::Fixed(dt) => dt,
        TimeStep::Auto => cfl_dt(&initial, &config.stepper),
    };
    base_cfg.stepper.dt = TimeStep::Fixed(dt);
    base_cfg.model.nu = 0.0;
    base_cfg.output.snapshot_interval = Some(config.diagnostics.interval);

    let baseline = simulate_from(&base_cfg, initial.clone())?;
    if let Some(b) = baseline.blow_up {
        return Err(CliError::SweepAborted(vec![MemberStatus { nu: 0.0, status: format!("blow-up at t = {}", b.t) }]));
    }

    let member = |nu: f64| -> Result<Member> {
        let mut cfg = base_cfg.clone();
        cfg.model.nu = nu;
        cfg.model.toggles.nu_dissipation = true;
        let cadence = Cadence { interval: cfg.diagnostics.interval };
        let mut recorder = Recorder::new(&cfg.model, &cfg.diagnostics);
        let mut distance: f64 = 0.0;
        let mut j = 0usize;
        integrate(initial.clone(), &cfg.model, &cfg.stepper, cadence, |st| {
            recorder.observe(st)?;
            let base = baseline
                .snapshots
                .get(j)
                .ok_or_else(|| Error::Consistency("sweep member sampled more often than the baseline".into()))?;
            if (base.t - st.t).abs() > 1e-12 * st.t.abs().max(1.0) {
                return Err(Error::Consistency(format!("sample times differ: {} vs {}", base.t, st.t)));
            }
            distance = distance.max(state_distance(st, base)?);
            j += 1;
            Ok(())
        })
        .map_err(|a| match a.error {
            Error::BlowUp(b) => CliError::BlowUp { t: b.t, steps: b.steps },
            e => e.into(),
        })?;
        Ok(Member { records: recorder.into_records(), distance })
    };

    let run_all = || nus.par_iter().map(|&nu| member(nu)).collect::<Vec<_>>();
    let results = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(vec![format!("cannot start {n} worker threads: {e}")]))?
            .install(run_all),
        None => run_all(),
    };

    if results.iter().any(Result::is_err) {
        let statuses = nus
            .iter()
            .zip(&results)
            .map(|(&nu, r)| MemberStatus {
                nu,
                status: match r {
                    Ok(_) => "ok".to_string(),
                    Err(e) => e.to_string(),
                },
            })
            .collect();
        return Err(CliError::SweepAborted(statuses));
    }
    let members: Vec<Member> = results.into_iter().map(|r| r.expect("checked")).collect();

    let distances: Vec<f64> = members.iter().map(|m| m.distance).collect();
    let lx: Vec<f64> = nus.iter().map(|v| v.log10()).collect();
    let ly: Vec<f64> = distances.iter().map(|v| v.log10()).collect();
    let (slope, intercept) = fit_line(&lx, &ly);
    let sups: Vec<f64> = members.iter().map(|m| sup_hs(&m.records)).collect();
    let baseline_sup_hs = sup_hs(&baseline.records);
    let uniform_bound = sups.iter().chain([&baseline_sup_hs]).all(|&v| v <= BOUNDEDNESS_FACTOR * epsilon);
    Ok(SweepOutcome {
        result: SweepResult {
            nus: nus.to_vec(),
            distances,
            slope,
            intercept,
            sup_hs: sups,
            baseline_sup_hs,
            epsilon,
            uniform_bound,
            dt,
            t_end: config.stepper.t_end,
        },
        baseline: baseline.records,
        members: members.into_iter().map(|m| m.records).collect(),
    })
}

#[derive(Serialize)]
struct SweepRow {
    nu: f64,
    sup_l2_distance: f64,
    sup_hs_norm: f64,
}

pub fn member_csv_name(nu: f64) -> String {
    format!("diagnostics_nu_{nu:e}.csv")
}

/// Writes `sweep.csv`, `sweep_summary.json` and one diagnostics CSV per run.
pub fn write_sweep(outcome: &SweepOutcome, dir: &Path) -> Result<()> {
    let r = &outcome.result;
    output::write_records(&dir.join(member_csv_name(0.0)), &outcome.baseline)?;
    for (nu, recs) in r.nus.iter().zip(&outcome.members) {
        output::write_records(&dir.join(member_csv_name(*nu)), recs)?;
    }
    let rows: Vec<SweepRow> = r
        .nus
        .iter()
        .zip(&r.distances)
        .zip(&r.sup_hs)
        .map(|((&nu, &d), &h)| SweepRow { nu, sup_l2_distance: d, sup_hs_norm: h })
        .collect();
    output::atomic_write(&dir.join("sweep.csv"), &output::csv_bytes(&rows)?)?;
    output::write_json(&dir.join("sweep_summary.json"), r)?;
    Ok(())
}
