//! Transforms, differential and fractional multipliers, Leray projection,
//! dealiasing and discrete Sobolev inner products.
//!
//! Coefficients are Fourier-series coefficients (the forward transform divides
//! by `n^d`). Norms carry the `(2π)^d` measure so they approximate integrals
//! over the torus.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, SpectralField, TensorField, VectorField};
use crate::grid::{tree_sum, Grid};

/// Relative tolerance on the imaginary residue of an inverse transform.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Forward transform of real physical samples.
pub fn forward_transform(grid: &Grid, samples: &[f64]) -> Result<SpectralField> {
    if samples.len() != grid.len() {
        return Err(Error::Config(format!(
            "sample array has {} entries, grid {}^{} needs {}",
            samples.len(),
            grid.n(),
            grid.dim(),
            grid.len()
        )));
    }
    let mut data: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    grid.fft(&mut data, false);
    let norm = 1.0 / grid.len() as f64;
    data.iter_mut().for_each(|c| *c *= norm);
    SpectralField::from_coeffs(grid, data)
}

/// Inverse transform, checking that the coefficients describe a real field.
pub fn inverse_transform(field: &SpectralField) -> Result<Vec<f64>> {
    let mut data = field.coeffs().to_vec();
    field.grid().fft(&mut data, true);
    let scale = data.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    let imag = data.iter().fold(0.0f64, |m, c| m.max(c.im.abs()));
    if imag > HERMITIAN_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Consistency(format!(
            "coefficients are not Hermitian: imaginary residue {imag:e} against scale {scale:e}"
        )));
    }
    Ok(data.into_iter().map(|c| c.re).collect())
}

impl SpectralField {
    /// Inverse transform without the Hermitian check; the imaginary part is dropped.
    pub fn to_physical(&self) -> Vec<f64> {
        let mut data = self.coeffs().to_vec();
        self.grid().fft(&mut data, true);
        data.into_iter().map(|c| c.re).collect()
    }
}

/// `∂_axis f`, with the Nyquist index along `axis` zeroed.
pub fn partial(f: &SpectralField, axis: usize) -> SpectralField {
    let grid = f.grid();
    SpectralField::from_fn(grid, |idx| {
        if grid.is_nyquist(idx, axis) {
            Complex64::new(0.0, 0.0)
        } else {
            f.coeffs()[idx] * Complex64::new(0.0, grid.wavevector(idx)[axis])
        }
    })
}

pub fn gradient(f: &SpectralField) -> VectorField {
    VectorField::new((0..f.grid().dim()).map(|j| partial(f, j)).collect()).expect("gradient has one component per axis")
}

/// Spectral divergence of a vector (to a scalar) or of a tensor (row-wise, to a vector).
pub trait Divergence {
    type Output;
    fn divergence(&self) -> Self::Output;
}

impl Divergence for VectorField {
    type Output = SpectralField;

    fn divergence(&self) -> SpectralField {
        let mut out = SpectralField::zeros(self.grid());
        for (j, c) in self.components().iter().enumerate() {
            out.axpy(1.0, &partial(c, j));
        }
        out
    }
}

impl Divergence for TensorField {
    type Output = VectorField;

    fn divergence(&self) -> VectorField {
        let dim = self.dim();
        let rows = (0..dim)
            .map(|i| {
                let mut row = SpectralField::zeros(self.grid());
                for j in 0..dim {
                    row.axpy(1.0, &partial(self.get(i, j), j));
                }
                row
            })
            .collect();
        VectorField::new(rows).expect("row count equals dimension")
    }
}

pub fn divergence<T: Divergence>(x: &T) -> T::Output {
    x.divergence()
}

/// Multiplier `|k|^{2γ}` per mode, with `|0|^{2γ}` taken as 0 for `γ > 0` and 1 for `γ = 0`.
pub fn fractional_multiplier(grid: &Grid, gamma: f64) -> Result<Vec<f64>> {
    if !(gamma >= 0.0) {
        return Err(Error::Domain(format!("fractional exponent must be >= 0, got {gamma}")));
    }
    Ok((0..grid.len())
        .map(|idx| {
            if gamma == 0.0 {
                1.0
            } else {
                let k2 = grid.k_sq(idx);
                if k2 == 0.0 {
                    0.0
                } else {
                    k2.powf(gamma)
                }
            }
        })
        .collect())
}

/// `(-Δ)^γ f`.
pub fn fractional_laplacian(f: &SpectralField, gamma: f64) -> Result<SpectralField> {
    let m = fractional_multiplier(f.grid(), gamma)?;
    let mut out = f.clone();
    out.apply_multiplier(&m);
    Ok(out)
}

/// Leray projection `v̂ ↦ v̂ − k (k·v̂)/|k|²`; the mean mode is untouched.
pub fn leray_project(v: &VectorField) -> VectorField {
    let mut out = v.clone();
    leray_project_in_place(&mut out);
    out
}

pub fn leray_project_in_place(v: &mut VectorField) {
    let grid = v.grid().clone();
    let dim = grid.dim();
    for idx in 0..grid.len() {
        // Same symbol as `partial`, so the result is exactly divergence-free and Hermitian.
        let mut k = *grid.wavevector(idx);
        for (j, kj) in k.iter_mut().enumerate().take(dim) {
            if grid.is_nyquist(idx, j) {
                *kj = 0.0;
            }
        }
        let k2: f64 = k[..dim].iter().map(|x| x * x).sum();
        if k2 == 0.0 {
            continue;
        }
        let mut kv = Complex64::new(0.0, 0.0);
        for j in 0..dim {
            kv += v.component(j).coeffs()[idx] * k[j];
        }
        let kv = kv / k2;
        for j in 0..dim {
            v.component_mut(j).coeffs_mut()[idx] -= kv * k[j];
        }
    }
}

/// Zeroes every mode with some `|k_i| > n/3`.
pub fn dealias(f: &SpectralField) -> SpectralField {
    let mut out = f.clone();
    dealias_in_place(&mut out);
    out
}

pub fn dealias_in_place(f: &mut SpectralField) {
    let grid = f.grid().clone();
    for (idx, c) in f.coeffs_mut().iter_mut().enumerate() {
        if !grid.is_resolved(idx) {
            *c = Complex64::new(0.0, 0.0);
        }
    }
}

/// Weight family of the discrete Sobolev inner products.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SobolevWeight {
    /// `(1 + |k|²)^σ`
    Inhomogeneous,
    /// `|k|^{2σ}`, mean mode dropped.
    Homogeneous,
}

/// Per-mode weight `w(k)^σ`.
pub fn sobolev_weights(grid: &Grid, sigma: f64, weight: SobolevWeight) -> Vec<f64> {
    (0..grid.len())
        .map(|idx| {
            let k2 = grid.k_sq(idx);
            match weight {
                SobolevWeight::Inhomogeneous => (1.0 + k2).powf(sigma),
                SobolevWeight::Homogeneous if k2 == 0.0 => 0.0,
                SobolevWeight::Homogeneous => k2.powf(sigma),
            }
        })
        .collect()
}

/// `(2π)^d Σ_k w(k)^σ Re(f̂(k)·conj ĝ(k))`, summed componentwise.
pub fn sobolev_inner_product<F: Field>(f: &F, g: &F, sigma: f64, weight: SobolevWeight) -> Result<f64> {
    let w = sobolev_weights(f.grid(), sigma, weight);
    weighted_inner_product(f, g, &w)
}

/// Inner product with an arbitrary precomputed per-mode weight.
pub fn weighted_inner_product<F: Field>(f: &F, g: &F, w: &[f64]) -> Result<f64> {
    if f.grid() != g.grid() {
        return Err(Error::Config("inner product of fields on different grids".into()));
    }
    let grid = f.grid();
    let fc = f.weighted_components();
    let gc = g.weighted_components();
    if fc.len() != gc.len() {
        return Err(Error::Config("inner product of fields with different shapes".into()));
    }
    let measure = (2.0 * PI).powi(grid.dim() as i32);
    let sum = tree_sum(grid.len(), &|idx| {
        let wk = w[idx];
        if wk == 0.0 {
            return 0.0;
        }
        let mut acc = 0.0;
        for ((m, a), (_, b)) in fc.iter().zip(&gc) {
            let x = a.coeffs()[idx];
            let y = b.coeffs()[idx];
            acc += m * (x.re * y.re + x.im * y.im);
        }
        wk * acc
    });
    Ok(measure * sum)
}

pub fn sobolev_norm<F: Field>(f: &F, sigma: f64, weight: SobolevWeight) -> f64 {
    sobolev_inner_product(f, f, sigma, weight).expect("a field shares its own grid").max(0.0).sqrt()
}

/// `L²` norm by grid quadrature of physical samples (used to check Parseval).
pub fn quadrature_l2_norm(grid: &Grid, samples: &[f64]) -> f64 {
    (grid.cell_volume() * tree_sum(samples.len(), &|i| samples[i] * samples[i])).sqrt()
}
