//! Closed-form analysis of the linearized system.
//!
//! Each Fourier mode of the pair `(û, ŝ)`, with `ŝ` the mode of `P∇·τ`, obeys
//!
//! ```text
//! d/dt (û, ŝ) = [[0, 1], [−½k², −ηk^{2β}]] (û, ŝ)
//! ```
//!
//! so both components solve `λ² + ηk^{2β}λ + ½k² = 0`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Underdamped,
    Critical,
    Overdamped,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Underdamped => "underdamped",
            Regime::Critical => "critical",
            Regime::Overdamped => "overdamped",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeAnalysis {
    pub k_mag: f64,
    /// Root with the larger real part (positive imaginary part when complex).
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
    pub regime: Regime,
    /// `η²k^{4β} − 2k²`.
    pub discriminant: f64,
}

/// Relative discriminant size below which the Jordan form is used.
pub const CRITICAL_TOL: f64 = 1e-10;

fn damping(k_mag: f64, eta: f64, beta: f64) -> f64 {
    eta * k_mag.powf(2.0 * beta)
}

pub fn dispersion_roots(k_mag: f64, eta: f64, beta: f64) -> Result<ModeAnalysis> {
    if !(k_mag > 0.0) {
        return Err(Error::Domain(format!("wavenumber magnitude must be > 0, got {k_mag}")));
    }
    if !(eta > 0.0) {
        return Err(Error::Domain(format!("eta must be > 0, got {eta}")));
    }
    let b = damping(k_mag, eta, beta);
    let c = 0.5 * k_mag * k_mag;
    let disc = b * b - 4.0 * c;
    let (plus, minus, regime) = if disc.abs() < CRITICAL_TOL * b * b {
        let r = Complex64::new(-0.5 * b, 0.0);
        (r, r, Regime::Critical)
    } else if disc > 0.0 {
        // q has no cancellation; the other root follows from the product c.
        let q = -0.5 * (b + disc.sqrt());
        (Complex64::new(c / q, 0.0), Complex64::new(q, 0.0), Regime::Overdamped)
    } else {
        let im = 0.5 * (-disc).sqrt();
        (Complex64::new(-0.5 * b, im), Complex64::new(-0.5 * b, -im), Regime::Underdamped)
    };
    Ok(ModeAnalysis { k_mag, lambda_plus: plus, lambda_minus: minus, regime, discriminant: disc })
}

/// Entries of `exp(tA)` for `A = [[0, 1], [−c, −b]]`, written as
/// `e^{mt}(C·I + S·(A − mI))` with `m = −b/2`.
fn propagator(b: f64, c: f64, t: f64) -> [[f64; 2]; 2] {
    let m = -0.5 * b;
    let disc = b * b - 4.0 * c;
    // C = e^{mt} cosh(δt), S = e^{mt} sinh(δt)/δ with δ² = disc/4.
    let (cc, ss) = if disc.abs() < CRITICAL_TOL * b * b {
        let e = (m * t).exp();
        (e, e * t)
    } else if disc > 0.0 {
        let delta = 0.5 * disc.sqrt();
        let x = delta * t;
        if x > 20.0 {
            let ep = ((m + delta) * t).exp();
            let em = ((m - delta) * t).exp();
            (0.5 * (ep + em), 0.5 * (ep - em) / delta)
        } else {
            let e = (m * t).exp();
            (e * x.cosh(), e * x.sinh() / delta)
        }
    } else {
        let omega = 0.5 * (-disc).sqrt();
        let e = (m * t).exp();
        (e * (omega * t).cos(), e * (omega * t).sin() / omega)
    };
    // A − mI = [[b/2, 1], [−c, −b/2]]
    [[cc + ss * 0.5 * b, ss], [-ss * c, cc - ss * 0.5 * b]]
}

/// Exact solution at time `t` of the linear mode system from `(û₀, ŝ₀)`.
pub fn linear_mode_solution(
    u0: Complex64,
    s0: Complex64,
    k_mag: f64,
    eta: f64,
    beta: f64,
    t: f64,
) -> Result<(Complex64, Complex64)> {
    if !(k_mag > 0.0) {
        return Err(Error::Domain(format!("wavenumber magnitude must be > 0, got {k_mag}")));
    }
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("time must be >= 0, got {t}")));
    }
    let p = propagator(damping(k_mag, eta, beta), 0.5 * k_mag * k_mag, t);
    Ok((u0 * p[0][0] + s0 * p[0][1], u0 * p[1][0] + s0 * p[1][1]))
}

/// Slowest decay rate per integer wavenumber.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeEntry {
    pub k: f64,
    pub max_re_lambda: f64,
}

pub fn decay_envelope(eta: f64, beta: f64, k_max: usize) -> Result<Vec<EnvelopeEntry>> {
    (1..=k_max)
        .map(|k| {
            let m = dispersion_roots(k as f64, eta, beta)?;
            Ok(EnvelopeEntry { k: k as f64, max_re_lambda: m.lambda_plus.re.max(m.lambda_minus.re) })
        })
        .collect()
}

/// One row of the dispersion table.
#[derive(Debug, Clone, Serialize)]
pub struct DispersionRow {
    pub k: f64,
    pub re_lambda_plus: f64,
    pub im_lambda_plus: f64,
    pub re_lambda_minus: f64,
    pub im_lambda_minus: f64,
    pub regime: Regime,
}

pub fn dispersion_table(eta: f64, beta: f64, k_max: usize) -> Result<Vec<DispersionRow>> {
    (1..=k_max)
        .map(|k| {
            let m = dispersion_roots(k as f64, eta, beta)?;
            Ok(DispersionRow {
                k: k as f64,
                re_lambda_plus: m.lambda_plus.re,
                im_lambda_plus: m.lambda_plus.im,
                re_lambda_minus: m.lambda_minus.re,
                im_lambda_minus: m.lambda_minus.im,
                regime: m.regime,
            })
        })
        .collect()
}

/// Linear energy `|û|² + 2|ŝ|²/k²`, non-increasing along the linear flow.
pub fn linear_energy(u: Complex64, s: Complex64, k_mag: f64) -> f64 {
    u.norm_sqr() + 2.0 * s.norm_sqr() / (k_mag * k_mag)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn overdamped_roots() {
        let m = dispersion_roots(1.0, 2.0, 1.0).unwrap();
        let r = 2f64.sqrt() / 2.0;
        assert_eq!(m.regime, Regime::Overdamped);
        assert!((m.lambda_plus - c(-1.0 + r, 0.0)).norm() < 1e-14);
        assert!((m.lambda_minus - c(-1.0 - r, 0.0)).norm() < 1e-14);
        assert!((m.lambda_plus.re + 0.29289).abs() < 1e-5);
        assert!((m.lambda_minus.re + 1.70711).abs() < 1e-5);
    }

    #[test]
    fn underdamped_roots() {
        let m = dispersion_roots(1.0, 0.2, 0.5).unwrap();
        assert_eq!(m.regime, Regime::Underdamped);
        assert!((m.discriminant + 1.96).abs() < 1e-14);
        assert!((m.lambda_plus - c(-0.1, 0.7)).norm() < 1e-14);
        assert!((m.lambda_minus - c(-0.1, -0.7)).norm() < 1e-14);
    }

    #[test]
    fn critical_root_is_double() {
        // η²k^{4β} = 2k² at k = 1, β = 1, η = √2.
        let m = dispersion_roots(1.0, 2f64.sqrt(), 1.0).unwrap();
        assert_eq!(m.regime, Regime::Critical);
        assert_eq!(m.lambda_plus, m.lambda_minus);
    }

    #[test]
    fn nonpositive_wavenumber_rejected() {
        assert!(matches!(dispersion_roots(0.0, 1.0, 1.0), Err(Error::Domain(_))));
        assert!(linear_mode_solution(c(1.0, 0.0), c(0.0, 0.0), -1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn identity_at_time_zero_and_short_time_series() {
        let (u, s) = linear_mode_solution(c(0.3, 0.2), c(-0.1, 0.5), 2.0, 0.7, 0.75, 0.0).unwrap();
        assert!((u - c(0.3, 0.2)).norm() < 1e-16 && (s - c(-0.1, 0.5)).norm() < 1e-16);
        let k: f64 = 3.0;
        let t = 1e-6;
        let (u, s) = linear_mode_solution(c(1.0, 0.0), c(0.0, 0.0), k, 1.0, 1.0, t).unwrap();
        assert!((u.re - 1.0).abs() < 1e-10);
        assert!((s.re + 0.5 * k * k * t).abs() < 1e-10);
    }

    #[test]
    fn large_k_slow_root_tends_to_minus_half_over_eta() {
        let env = decay_envelope(1.0, 1.0, 64).unwrap();
        let slow = env.last().unwrap().max_re_lambda;
        assert!((slow + 0.5).abs() < 0.05 * 0.5, "{slow}");
        assert!(env.iter().all(|e| e.max_re_lambda < 0.0));
    }

    #[test]
    fn underdamped_band_frequency() {
        let (k, eta) = (4.0f64, 0.2);
        let m = dispersion_roots(k, eta, 0.5).unwrap();
        let expect = (0.5 * k * k - 0.25 * eta * eta * k * k).sqrt();
        assert!((m.lambda_plus.im.abs() - expect).abs() < 1e-13);
    }

    #[test]
    fn table_has_one_row_per_wavenumber() {
        let t = dispersion_table(0.5, 0.75, 10).unwrap();
        assert_eq!(t.len(), 10);
        assert_eq!(t[0].k, 1.0);
    }
}
