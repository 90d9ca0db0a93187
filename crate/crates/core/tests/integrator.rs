mod common;

use common::random_state;
use num_complex::Complex64;
use oldroyd_core::diagnostics::{state_distance, DiagnosticParams, Recorder};
use oldroyd_core::initial::{make_initial_data, InitialData, Recipe};
use oldroyd_core::integrator::{cfl_dt, integrate, step, Cadence, Scheme, Stepper, StepperConfig, TimeStep};
use oldroyd_core::linear::linear_mode_solution;
use oldroyd_core::spectral::{divergence, forward_transform, leray_project, sobolev_norm, SobolevWeight};
use oldroyd_core::{FlowState, Grid, ModelParams, Toggles};

fn fixed(dt: f64, t_end: f64) -> StepperConfig {
    StepperConfig { dt: TimeStep::Fixed(dt), t_end, ..Default::default() }
}

fn run_to(state: FlowState, params: &ModelParams, dt: f64, t_end: f64) -> FlowState {
    integrate(state, params, &fixed(dt, t_end), Cadence { interval: t_end.max(1e-300) }, |_| Ok(())).unwrap().state
}

/// `u = (cos x₂, 0)`, `τ₁₂ = sin x₂` at unit amplitude.
fn single_mode(grid: &Grid) -> FlowState {
    let mut st = FlowState::zeros(grid);
    *st.u.component_mut(0) = forward_transform(grid, &grid.sample(|x| x[1].cos())).unwrap();
    *st.tau.get_mut(0, 1) = forward_transform(grid, &grid.sample(|x| x[1].sin())).unwrap();
    st.enforce_invariants();
    st
}

fn linear_params(eta: f64, beta: f64) -> ModelParams {
    ModelParams { eta, beta, nu: 0.0, a: 0.0, toggles: Toggles::linear(), ..Default::default() }
}

/// Max deviation of the `(û, (P∇·τ)^)` pair at `k = (0, 1)` from the closed form.
fn oracle_deviation(st: &FlowState, u0: Complex64, s0: Complex64, eta: f64, beta: f64) -> f64 {
    let k = [0, 1];
    let u = st.u.component(0).mode(&k).unwrap();
    let s = leray_project(&divergence(&st.tau)).component(0).mode(&k).unwrap();
    let (ue, se) = linear_mode_solution(u0, s0, 1.0, eta, beta, st.t).unwrap();
    (u - ue).norm().max((s - se).norm())
}

#[test]
fn eta_only_step_is_exact() {
    let g = Grid::new(2, 16).unwrap();
    let st = single_mode(&g);
    let toggles = Toggles { eta_dissipation: true, ..Toggles::all_off() };
    for (eta, beta, dt) in [(1.0, 1.0, 0.3), (0.7, 0.5, 2.0), (2.0, 0.75, 1e-3)] {
        let params = ModelParams { eta, beta, toggles, ..Default::default() };
        let next = step(&st, &params, Scheme::IfRk4, dt).unwrap();
        let factor = (-eta * 1f64.powf(2.0 * beta) * dt).exp();
        let got = next.tau.get(0, 1).mode(&[0, 1]).unwrap();
        let want = st.tau.get(0, 1).mode(&[0, 1]).unwrap() * factor;
        assert!((got - want).norm() < 1e-14, "eta={eta} beta={beta} dt={dt}");
        assert_eq!(next.u.component(0).coeffs(), st.u.component(0).coeffs());
    }
}

#[test]
fn coupling_only_run_matches_closed_form() {
    let g = Grid::new(2, 16).unwrap();
    let (eta, beta) = (1.0, 1.0);
    let params = linear_params(eta, beta);
    let st0 = single_mode(&g);
    let u0 = st0.u.component(0).mode(&[0, 1]).unwrap();
    let s0 = leray_project(&divergence(&st0.tau)).component(0).mode(&[0, 1]).unwrap();

    let mut worst: f64 = 0.0;
    let cfg = fixed(1e-3, 2.0);
    let out = integrate(st0.clone(), &params, &cfg, Cadence { interval: 0.1 }, |st| {
        worst = worst.max(oracle_deviation(st, u0, s0, eta, beta));
        Ok(())
    })
    .unwrap();
    assert!((out.state.t - 2.0).abs() < 1e-15);
    assert!(worst < 1e-10, "deviation {worst}");

    let err = |dt: f64| oracle_deviation(&run_to(st0.clone(), &params, dt, 2.0), u0, s0, eta, beta);
    let ratio = err(0.1) / err(0.05);
    assert!((ratio - 16.0).abs() < 3.0, "ratio {ratio}");
}

#[test]
fn zero_state_stays_zero() {
    let g = Grid::new(3, 8).unwrap();
    let params = ModelParams { nu: 0.1, a: 0.2, ..Default::default() };
    let st = run_to(FlowState::zeros(&g), &params, 0.01, 0.1);
    assert!(st.fields().all(|f| f.max_abs() == 0.0));
}

#[test]
fn cfl_examples() {
    let g = Grid::new(2, 64).unwrap();
    let cfg = StepperConfig::default();
    assert_eq!(cfl_dt(&FlowState::zeros(&g), &cfg), cfg.dt_cap);

    let mut st = FlowState::zeros(&g);
    *st.u.component_mut(0) = forward_transform(&g, &g.sample(|x| x[1].cos())).unwrap();
    let adv = StepperConfig { cfl_wave: 1.0, dt_cap: 1.0, ..cfg };
    let want = 0.4 * 2.0 * std::f64::consts::PI / 64.0;
    assert!((cfl_dt(&st, &adv) - want).abs() < 1e-15);
    let wave = StepperConfig { dt_cap: 1.0, ..cfg };
    assert!((cfl_dt(&st, &wave) - 0.4 * 2f64.sqrt() / 32.0).abs() < 1e-15);
    assert_eq!(cfl_dt(&st, &cfg), 1e-2);
}

#[test]
fn zero_horizon_returns_input_with_one_record() {
    let g = Grid::new(2, 16).unwrap();
    let st = random_state(&g, 5, 3.0, 1e-2);
    let params = ModelParams::default();
    let mut rec = Recorder::new(&params, &DiagnosticParams::default());
    let out =
        integrate(st.clone(), &params, &fixed(1e-3, 0.0), Cadence { interval: 0.1 }, |s| rec.observe(s).map(|_| ()))
            .unwrap();
    assert_eq!(out.steps, 0);
    assert_eq!(rec.records().len(), 1);
    for (a, b) in out.state.fields().zip(st.fields()) {
        assert_eq!(a.coeffs(), b.coeffs());
    }
}

#[test]
fn repeated_integrations_are_bit_identical() {
    let g = Grid::new(2, 16).unwrap();
    let params = ModelParams { nu: 1e-3, ..Default::default() };
    let cfg = StepperConfig { t_end: 0.5, ..Default::default() };
    let run = || {
        let mut rec = Recorder::new(&params, &DiagnosticParams::default());
        integrate(random_state(&g, 11, 4.0, 0.5), &params, &cfg, Cadence { interval: 0.05 }, |s| {
            rec.observe(s).map(|_| ())
        })
        .unwrap();
        rec.into_records()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.len(), 11);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(format!("{x:?}"), format!("{y:?}"));
    }
}

#[test]
fn nonlinear_self_convergence_is_fourth_order() {
    let g = Grid::new(2, 16).unwrap();
    let params = ModelParams { eta: 0.5, nu: 0.0, ..Default::default() };
    let st0 = random_state(&g, 21, 3.0, 2.0);
    let t_end = 0.5;
    let dts = [0.05, 0.025];
    let reference = run_to(st0.clone(), &params, dts[1] / 4.0, t_end);
    let errs: Vec<f64> =
        dts.iter().map(|&dt| state_distance(&run_to(st0.clone(), &params, dt, t_end), &reference).unwrap()).collect();
    let ratio = errs[0] / errs[1];
    assert!(errs[1] > 1e-13, "errors too small to measure: {errs:?}");
    assert!((12.0..=20.0).contains(&ratio), "ratio {ratio} errors {errs:?}");
}

#[test]
fn invariants_hold_after_every_step() {
    let g = Grid::new(3, 12).unwrap();
    let params = ModelParams { nu: 1e-2, a: 0.1, ..Default::default() };
    let mut stepper = Stepper::new(&g, &params, Scheme::IfRk4).unwrap();
    let mut st = random_state(&g, 3, 5.0, 1.0);
    for _ in 0..5 {
        st = stepper.step(&st, 0.01).unwrap();
        assert!(st.divergence_defect() < 1e-13);
        for f in st.fields() {
            assert!(f.hermitian_defect() < 1e-15);
            for (idx, c) in f.coeffs().iter().enumerate() {
                if !g.is_resolved(idx) {
                    assert_eq!(*c, Complex64::new(0.0, 0.0));
                }
            }
        }
    }
    assert!((st.t - 0.05).abs() < 1e-15);
}

#[test]
fn euler_scheme_is_first_order() {
    let g = Grid::new(2, 16).unwrap();
    let params = linear_params(1.0, 1.0);
    let st0 = single_mode(&g);
    let u0 = st0.u.component(0).mode(&[0, 1]).unwrap();
    let s0 = leray_project(&divergence(&st0.tau)).component(0).mode(&[0, 1]).unwrap();
    let err = |dt: f64| {
        let cfg = StepperConfig { scheme: Scheme::IfEuler, ..fixed(dt, 1.0) };
        let st = integrate(st0.clone(), &params, &cfg, Cadence { interval: 1.0 }, |_| Ok(())).unwrap().state;
        oracle_deviation(&st, u0, s0, 1.0, 1.0)
    };
    let ratio = err(0.01) / err(0.005);
    assert!((ratio - 2.0).abs() < 0.2, "ratio {ratio}");
}

/// Composite Simpson over equally spaced samples (even number of intervals).
fn simpson(h: f64, f: &[f64]) -> f64 {
    let n = f.len() - 1;
    assert!(n.is_multiple_of(2));
    let mut acc = f[0] + f[n];
    for (i, v) in f.iter().enumerate().take(n).skip(1) {
        acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    acc * h / 3.0
}

#[test]
fn discrete_energy_residual_converges_at_fourth_order() {
    let g = Grid::new(2, 16).unwrap();
    let params = ModelParams { eta: 0.5, nu: 1e-2, a: 0.1, ..Default::default() };
    let st0 = random_state(&g, 8, 3.0, 1.0);
    let t_end = 0.4;
    let residual = |dt: f64| {
        let mut rec = Recorder::new(&params, &DiagnosticParams::default());
        integrate(st0.clone(), &params, &fixed(dt, t_end), Cadence { interval: dt }, |s| rec.observe(s).map(|_| ()))
            .unwrap();
        let r = rec.records();
        let half_sq = |x: &oldroyd_core::diagnostics::DiagnosticsRecord| 0.5 * (x.u_l2 * x.u_l2 + x.tau_l2 * x.tau_l2);
        let integrand: Vec<f64> = r.iter().map(|x| x.l2_dissipation + x.q_work).collect();
        half_sq(r.last().unwrap()) - half_sq(&r[0]) + simpson(dt, &integrand)
    };
    let (r1, r2) = (residual(0.02), residual(0.01));
    let ratio = r1 / r2;
    assert!((ratio - 16.0).abs() < 4.0, "residuals {r1} {r2} ratio {ratio}");
    let scale = sobolev_norm(&st0.u, 0.0, SobolevWeight::Inhomogeneous).powi(2);
    assert!(r2.abs() < 1e-4 * scale);
}

#[test]
fn nonpositive_step_rejected() {
    let g = Grid::new(2, 16).unwrap();
    let spec = InitialData { recipe: Recipe::TaylorGreenPlusStress, ..Default::default() };
    let st = make_initial_data(&g, &spec, 2.01).unwrap();
    for dt in [0.0, -1e-3, f64::NAN] {
        assert!(step(&st, &ModelParams::default(), Scheme::IfRk4, dt).is_err());
    }
}
