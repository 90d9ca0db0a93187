//! Integrating-factor Runge-Kutta time stepping.
//!
//! The diagonal terms `ν|k|^{2α}`, `η|k|^{2β}` and `a` are integrated exactly
//! through exponential factors; everything else (transport, `Q`, coupling) is
//! explicit. After every stage the velocity is re-projected and all fields are
//! truncated to the dealiased band.

use serde::{Deserialize, Serialize};

use crate::error::{BlowUp, Error, Result};
use crate::field::SpectralField;
use crate::grid::Grid;
use crate::model::{explicit_tendency, FlowState, ModelParams, Tendency};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    IfRk4,
    /// First order; for debugging only.
    IfEuler,
}

/// Fixed step or CFL-controlled step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    Fixed(f64),
    Auto,
}

impl Serialize for TimeStep {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            TimeStep::Fixed(dt) => s.serialize_f64(*dt),
            TimeStep::Auto => s.serialize_str("auto"),
        }
    }
}

impl<'de> Deserialize<'de> for TimeStep {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(TimeStep::Fixed(x)),
            Raw::Word(w) if w == "auto" => Ok(TimeStep::Auto),
            Raw::Word(w) => Err(serde::de::Error::custom(format!("dt must be a number or \"auto\", got \"{w}\""))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepperConfig {
    pub scheme: Scheme,
    pub dt: TimeStep,
    pub cfl_advective: f64,
    pub cfl_wave: f64,
    /// Upper bound on automatic steps.
    pub dt_cap: f64,
    pub t_end: f64,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self { scheme: Scheme::IfRk4, dt: TimeStep::Auto, cfl_advective: 0.4, cfl_wave: 0.4, dt_cap: 1e-2, t_end: 10.0 }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut errors = Vec::new();
        if let TimeStep::Fixed(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                errors.push(format!("dt must be > 0, got {dt}"));
            }
        }
        for (name, v) in [("cfl_advective", self.cfl_advective), ("cfl_wave", self.cfl_wave)] {
            if !(v > 0.0 && v <= 1.0) {
                errors.push(format!("{name} must lie in (0, 1], got {v}"));
            }
        }
        if !(self.dt_cap > 0.0) {
            errors.push(format!("dt_cap must be > 0, got {}", self.dt_cap));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            errors.push(format!("t_end must be finite and >= 0, got {}", self.t_end));
        }
        errors
    }
}

/// Stable step from the advective and linear-wave limits, capped by `dt_cap`.
///
/// The wave bound uses the linear wave speed `1/√2` and `k_max = n/2`.
pub fn cfl_dt(state: &FlowState, config: &StepperConfig) -> f64 {
    let grid = state.grid();
    let mut umax: f64 = 0.0;
    for c in state.u.components() {
        let phys = c.to_physical();
        umax = phys.iter().fold(umax, |m, x| m.max(x.abs()));
    }
    let advective = if umax > 0.0 { config.cfl_advective * grid.dx() / umax } else { f64::INFINITY };
    let k_max = (grid.n() / 2) as f64;
    let wave = config.cfl_wave * std::f64::consts::SQRT_2 / k_max;
    advective.min(wave).min(config.dt_cap)
}

/// Exponential factors for one step size.
struct Factors {
    h: f64,
    u_full: Vec<f64>,
    u_half: Vec<f64>,
    tau_full: Vec<f64>,
    tau_half: Vec<f64>,
}

impl Factors {
    fn new(u_rates: &[f64], tau_rates: &[f64], h: f64) -> Self {
        let ex = |r: &[f64], s: f64| r.iter().map(|x| (-x * s).exp()).collect::<Vec<_>>();
        Self {
            h,
            u_full: ex(u_rates, h),
            u_half: ex(u_rates, 0.5 * h),
            tau_full: ex(tau_rates, h),
            tau_half: ex(tau_rates, 0.5 * h),
        }
    }
}

/// Reusable stepper holding the diagonal rates of one parameter set.
pub struct Stepper {
    params: ModelParams,
    scheme: Scheme,
    u_rates: Vec<f64>,
    tau_rates: Vec<f64>,
    cache: Option<Factors>,
}

impl Stepper {
    pub fn new(grid: &Grid, params: &ModelParams, scheme: Scheme) -> Result<Self> {
        Ok(Self {
            params: *params,
            scheme,
            u_rates: params.velocity_rates(grid)?,
            tau_rates: params.stress_rates(grid)?,
            cache: None,
        })
    }

    fn factors(&mut self, h: f64) -> &Factors {
        if self.cache.as_ref().is_none_or(|f| f.h != h) {
            self.cache = Some(Factors::new(&self.u_rates, &self.tau_rates, h));
        }
        self.cache.as_ref().expect("just filled")
    }

    /// Advances `state` by `h`, returning a blow-up error if any stage turns non-finite.
    pub fn step(&mut self, state: &FlowState, h: f64) -> Result<FlowState> {
        if !(h > 0.0) {
            return Err(Error::Config(format!("time step must be > 0, got {h}")));
        }
        let params = self.params;
        let scheme = self.scheme;
        let check_finite = |s: &FlowState, stage: &FlowState| -> Result<()> {
            if stage.is_finite() {
                Ok(())
            } else {
                Err(Error::BlowUp(Box::new(BlowUp { t: s.t + h, last_finite: s.clone(), steps: 0 })))
            }
        };
        let f = self.factors(h);
        let next = match scheme {
            Scheme::IfEuler => {
                let k1 = explicit_tendency(state, &params);
                let mut y = state.clone();
                combine(&mut y, f, Which::Full, &[(h, &k1, Which::None)]);
                y
            }
            Scheme::IfRk4 => {
                let k1 = explicit_tendency(state, &params);
                let mut ya = state.clone();
                axpy_state(&mut ya, 0.5 * h, &k1);
                scale_state(&mut ya, f, Which::Half);
                finish_stage(&mut ya);
                check_finite(state, &ya)?;

                let k2 = explicit_tendency(&ya, &params);
                let mut yb = state.clone();
                combine(&mut yb, f, Which::Half, &[(0.5 * h, &k2, Which::None)]);
                finish_stage(&mut yb);
                check_finite(state, &yb)?;

                let k3 = explicit_tendency(&yb, &params);
                let mut yc = state.clone();
                combine(&mut yc, f, Which::Full, &[(h, &k3, Which::Half)]);
                finish_stage(&mut yc);
                check_finite(state, &yc)?;

                let k4 = explicit_tendency(&yc, &params);
                let mut y = state.clone();
                combine(
                    &mut y,
                    f,
                    Which::Full,
                    &[
                        (h / 6.0, &k1, Which::Full),
                        (h / 3.0, &k2, Which::Half),
                        (h / 3.0, &k3, Which::Half),
                        (h / 6.0, &k4, Which::None),
                    ],
                );
                y
            }
        };
        let mut next = next;
        finish_stage(&mut next);
        next.t = state.t + h;
        check_finite(state, &next)?;
        Ok(next)
    }
}

#[derive(Clone, Copy)]
enum Which {
    None,
    Half,
    Full,
}

fn pick(f: &Factors, which: Which, velocity: bool) -> Option<&[f64]> {
    match (which, velocity) {
        (Which::None, _) => None,
        (Which::Half, true) => Some(&f.u_half),
        (Which::Half, false) => Some(&f.tau_half),
        (Which::Full, true) => Some(&f.u_full),
        (Which::Full, false) => Some(&f.tau_full),
    }
}

fn scale_state(y: &mut FlowState, f: &Factors, which: Which) {
    let dim = y.u.dim();
    for (i, c) in y.fields_mut().enumerate() {
        if let Some(m) = pick(f, which, i < dim) {
            c.apply_multiplier(m);
        }
    }
}

fn axpy_state(y: &mut FlowState, a: f64, k: &Tendency) {
    for (c, kc) in y.fields_mut().zip(k.fields()) {
        c.axpy(a, kc);
    }
}

/// `y ← E_y ∘ y + Σ a_i E_i ∘ k_i`, mode by mode.
fn combine(y: &mut FlowState, f: &Factors, on_y: Which, terms: &[(f64, &Tendency, Which)]) {
    let dim = y.u.dim();
    let term_fields: Vec<Vec<&SpectralField>> = terms.iter().map(|(_, k, _)| k.fields().collect()).collect();
    for (slot, c) in y.fields_mut().enumerate() {
        let velocity = slot < dim;
        let ey = pick(f, on_y, velocity);
        let coeffs = c.coeffs_mut();
        for (idx, z) in coeffs.iter_mut().enumerate() {
            let mut acc = match ey {
                Some(m) => *z * m[idx],
                None => *z,
            };
            for (t, (a, _, which)) in terms.iter().enumerate() {
                let kz = term_fields[t][slot].coeffs()[idx];
                let e = pick(f, *which, velocity).map_or(1.0, |m| m[idx]);
                acc += kz * (a * e);
            }
            *z = acc;
        }
    }
}

fn finish_stage(y: &mut FlowState) {
    y.enforce_invariants();
}

/// Sampling cadence of observer callbacks, in simulation time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cadence {
    pub interval: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    Sample { t: f64, steps: usize },
    BlowUp { t: f64, steps: usize },
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub state: FlowState,
    pub events: Vec<Event>,
    pub steps: usize,
}

/// Failed integration: the blow-up report plus the events seen before it.
#[derive(Debug)]
pub struct Aborted {
    pub error: Error,
    pub events: Vec<Event>,
}

/// Sample times `j·interval` up to `t_end`, plus `t_end` itself.
pub fn sample_times(t0: f64, t_end: f64, interval: f64) -> Vec<f64> {
    let mut times = vec![t0];
    let mut j = 1u64;
    loop {
        let t = t0 + j as f64 * interval;
        if t >= t_end - 1e-12 * interval {
            break;
        }
        times.push(t);
        j += 1;
    }
    if t_end > t0 {
        times.push(t_end);
    }
    times
}

/// Integrates from `state.t` to `config.t_end`, calling `observe` at `state.t`
/// and at every sample time. Steps are shortened to land on sample times; with
/// a fixed `dt` each sample interval is split into equal steps no longer than `dt`.
pub fn integrate(
    state: FlowState,
    params: &ModelParams,
    config: &StepperConfig,
    cadence: Cadence,
    mut observe: impl FnMut(&FlowState) -> Result<()>,
) -> std::result::Result<Outcome, Aborted> {
    let fail = |error: Error, events: Vec<Event>| Aborted { error, events };
    let mut events = Vec::new();
    let errs = config.validate();
    if !errs.is_empty() {
        return Err(fail(Error::Config(errs.join("; ")), events));
    }
    if !(cadence.interval > 0.0) {
        return Err(fail(Error::Config("diagnostic interval must be > 0".into()), events));
    }
    let mut stepper = match Stepper::new(state.grid(), params, config.scheme) {
        Ok(s) => s,
        Err(e) => return Err(fail(e, events)),
    };
    let times = sample_times(state.t, config.t_end.max(state.t), cadence.interval);
    let mut state = state;
    let mut steps = 0usize;
    if let Err(e) = observe(&state) {
        return Err(fail(e, events));
    }
    events.push(Event::Sample { t: state.t, steps });
    for &target in &times[1..] {
        let start = state.t;
        let mut i = 0u64;
        while state.t < target {
            let (h, t_after) = match config.dt {
                TimeStep::Fixed(dt) => {
                    let m = ((target - start) / dt - 1e-9).ceil().max(1.0);
                    let h = (target - start) / m;
                    let t_after = if (i + 1) as f64 >= m { target } else { start + (i + 1) as f64 * h };
                    (h, t_after)
                }
                TimeStep::Auto => {
                    let remaining = target - state.t;
                    let h = cfl_dt(&state, config);
                    if h >= remaining {
                        (remaining, target)
                    } else {
                        (h, state.t + h)
                    }
                }
            };
            match stepper.step(&state, h) {
                Ok(mut next) => {
                    next.t = t_after;
                    state = next;
                    steps += 1;
                    i += 1;
                }
                Err(Error::BlowUp(mut b)) => {
                    b.steps = steps;
                    events.push(Event::BlowUp { t: b.t, steps });
                    return Err(fail(Error::BlowUp(b), events));
                }
                Err(e) => return Err(fail(e, events)),
            }
        }
        if let Err(e) = observe(&state) {
            return Err(fail(e, events));
        }
        events.push(Event::Sample { t: state.t, steps });
    }
    Ok(Outcome { state, events, steps })
}

/// One step of `scheme` from `state` (convenience wrapper around [`Stepper`]).
pub fn step(state: &FlowState, params: &ModelParams, scheme: Scheme, dt: f64) -> Result<FlowState> {
    Stepper::new(state.grid(), params, scheme)?.step(state, dt)
}
