//! Spectral field containers: scalar, vector and symmetric tensor.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Fourier-series coefficients of one real scalar on a periodic grid.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: &Grid) -> Self {
        Self { grid: grid.clone(), coeffs: vec![ZERO; grid.len()] }
    }

    pub fn from_coeffs(grid: &Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::Config(format!("expected {} coefficients, got {}", grid.len(), coeffs.len())));
        }
        Ok(Self { grid: grid.clone(), coeffs })
    }

    /// Builds a field from a per-mode function of the flat index.
    pub fn from_fn(grid: &Grid, f: impl Fn(usize) -> Complex64) -> Self {
        Self { grid: grid.clone(), coeffs: (0..grid.len()).map(f).collect() }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn mode(&self, k: &[i64]) -> Result<Complex64> {
        Ok(self.coeffs[self.grid.index_of(k)?])
    }

    /// Sets `f̂(k) = value` and `f̂(-k) = conj(value)`.
    pub fn set_mode(&mut self, k: &[i64], value: Complex64) -> Result<()> {
        let idx = self.grid.index_of(k)?;
        let mirror = self.grid.mirror(idx);
        if idx == mirror {
            self.coeffs[idx] = Complex64::new(value.re, 0.0);
        } else {
            self.coeffs[idx] = value;
            self.coeffs[mirror] = value.conj();
        }
        Ok(())
    }

    pub fn scale(&mut self, a: f64) {
        self.coeffs.iter_mut().for_each(|c| *c *= a);
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: f64, x: &SpectralField) {
        debug_assert_eq!(self.grid, x.grid);
        for (c, xc) in self.coeffs.iter_mut().zip(&x.coeffs) {
            *c += xc * a;
        }
    }

    /// Multiplies mode-wise by a real multiplier.
    pub fn apply_multiplier(&mut self, m: &[f64]) {
        for (c, &w) in self.coeffs.iter_mut().zip(m) {
            *c *= w;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Largest violation of `f̂(-k) = conj(f̂(k))`.
    pub fn hermitian_defect(&self) -> f64 {
        (0..self.coeffs.len())
            .map(|i| (self.coeffs[i] - self.coeffs[self.grid.mirror(i)].conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Replaces the field by its Hermitian part, `(f̂(k) + conj f̂(-k)) / 2`.
    pub fn symmetrize(&mut self) {
        let old = self.coeffs.clone();
        for (i, c) in self.coeffs.iter_mut().enumerate() {
            *c = (old[i] + old[self.grid.mirror(i)].conj()) * 0.5;
        }
    }
}

/// `d` scalar components sharing one grid.
#[derive(Clone, Debug)]
pub struct VectorField {
    components: Vec<SpectralField>,
}

impl VectorField {
    pub fn new(components: Vec<SpectralField>) -> Result<Self> {
        let grid = components
            .first()
            .map(|c| c.grid().clone())
            .ok_or_else(|| Error::Config("vector field needs components".into()))?;
        if components.len() != grid.dim() || components.iter().any(|c| *c.grid() != grid) {
            return Err(Error::Config("vector components must match the grid dimension and share one grid".into()));
        }
        Ok(Self { components })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self { components: (0..grid.dim()).map(|_| SpectralField::zeros(grid)).collect() }
    }

    pub fn grid(&self) -> &Grid {
        self.components[0].grid()
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, i: usize) -> &SpectralField {
        &self.components[i]
    }

    pub fn component_mut(&mut self, i: usize) -> &mut SpectralField {
        &mut self.components[i]
    }

    pub fn components(&self) -> &[SpectralField] {
        &self.components
    }

    pub fn components_mut(&mut self) -> &mut [SpectralField] {
        &mut self.components
    }

    pub fn map(&self, f: impl Fn(&SpectralField) -> SpectralField) -> Self {
        Self { components: self.components.iter().map(f).collect() }
    }
}

/// Symmetric `d×d` tensor. Only the upper triangle is stored, so
/// `get(i, j)` and `get(j, i)` are the same field.
#[derive(Clone, Debug)]
pub struct TensorField {
    upper: Vec<SpectralField>,
    dim: usize,
}

/// Storage slot of entry `(i, j)` in the packed upper triangle.
pub fn sym_index(dim: usize, i: usize, j: usize) -> usize {
    let (r, c) = if i <= j { (i, j) } else { (j, i) };
    r * dim - r * (r + 1) / 2 + c
}

/// Number of independent entries of a symmetric `dim×dim` tensor.
pub fn sym_len(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

impl TensorField {
    pub fn zeros(grid: &Grid) -> Self {
        let dim = grid.dim();
        Self { upper: (0..sym_len(dim)).map(|_| SpectralField::zeros(grid)).collect(), dim }
    }

    /// Builds a symmetric tensor by evaluating `f(i, j)` for `i <= j`.
    pub fn from_fn(grid: &Grid, mut f: impl FnMut(usize, usize) -> SpectralField) -> Self {
        let dim = grid.dim();
        let mut upper = Vec::with_capacity(sym_len(dim));
        for i in 0..dim {
            for j in i..dim {
                upper.push(f(i, j));
            }
        }
        Self { upper, dim }
    }

    /// Packs upper-triangle components given in storage order.
    pub fn from_upper(upper: Vec<SpectralField>) -> Result<Self> {
        let grid = upper
            .first()
            .map(|c| c.grid().clone())
            .ok_or_else(|| Error::Config("tensor field needs components".into()))?;
        let dim = grid.dim();
        if upper.len() != sym_len(dim) || upper.iter().any(|c| *c.grid() != grid) {
            return Err(Error::Config("tensor storage does not match grid".into()));
        }
        Ok(Self { upper, dim })
    }

    /// `φ·𝕀` for a scalar field `φ`.
    pub fn scalar_identity(phi: &SpectralField) -> Self {
        Self::from_fn(phi.grid(), |i, j| if i == j { phi.clone() } else { SpectralField::zeros(phi.grid()) })
    }

    pub fn grid(&self) -> &Grid {
        self.upper[0].grid()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &SpectralField {
        &self.upper[sym_index(self.dim, i, j)]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut SpectralField {
        &mut self.upper[sym_index(self.dim, i, j)]
    }

    /// Stored components in packed order `(0,0), (0,1), ..., (d-1,d-1)`.
    pub fn upper(&self) -> &[SpectralField] {
        &self.upper
    }

    pub fn upper_mut(&mut self) -> &mut [SpectralField] {
        &mut self.upper
    }

    pub fn map(&self, f: impl Fn(&SpectralField) -> SpectralField) -> Self {
        Self { upper: self.upper.iter().map(f).collect(), dim: self.dim }
    }
}

/// Full (not necessarily symmetric) `d×d` tensor, e.g. `∇u` or `W(u)`.
#[derive(Clone, Debug)]
pub struct MatrixField {
    entries: Vec<SpectralField>,
    dim: usize,
}

impl MatrixField {
    pub fn zeros(grid: &Grid) -> Self {
        let dim = grid.dim();
        Self { entries: (0..dim * dim).map(|_| SpectralField::zeros(grid)).collect(), dim }
    }

    pub fn from_fn(grid: &Grid, mut f: impl FnMut(usize, usize) -> SpectralField) -> Self {
        let dim = grid.dim();
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(f(i, j));
            }
        }
        Self { entries, dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &SpectralField {
        &self.entries[i * self.dim + j]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut SpectralField {
        &mut self.entries[i * self.dim + j]
    }
}

/// Common view used by the Sobolev inner products: each stored component
/// with its multiplicity in a full componentwise sum.
pub trait Field {
    fn grid(&self) -> &Grid;
    fn weighted_components(&self) -> Vec<(f64, &SpectralField)>;
}

impl Field for SpectralField {
    fn grid(&self) -> &Grid {
        &self.grid
    }
    fn weighted_components(&self) -> Vec<(f64, &SpectralField)> {
        vec![(1.0, self)]
    }
}

impl Field for VectorField {
    fn grid(&self) -> &Grid {
        VectorField::grid(self)
    }
    fn weighted_components(&self) -> Vec<(f64, &SpectralField)> {
        self.components.iter().map(|c| (1.0, c)).collect()
    }
}

impl Field for TensorField {
    fn grid(&self) -> &Grid {
        TensorField::grid(self)
    }
    fn weighted_components(&self) -> Vec<(f64, &SpectralField)> {
        let mut out = Vec::with_capacity(self.upper.len());
        for i in 0..self.dim {
            for j in i..self.dim {
                let mult = if i == j { 1.0 } else { 2.0 };
                out.push((mult, self.get(i, j)));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_indices_cover_upper_triangle() {
        for dim in 2..=3 {
            let mut seen = vec![false; sym_len(dim)];
            for i in 0..dim {
                for j in 0..dim {
                    assert_eq!(sym_index(dim, i, j), sym_index(dim, j, i));
                    seen[sym_index(dim, i, j)] = true;
                }
            }
            assert!(seen.into_iter().all(|s| s));
        }
        assert_eq!(sym_index(3, 1, 2), 4);
        assert_eq!(sym_index(3, 2, 2), 5);
    }

    #[test]
    fn set_mode_keeps_hermitian() {
        let g = Grid::new(2, 8).unwrap();
        let mut f = SpectralField::zeros(&g);
        f.set_mode(&[1, 2], Complex64::new(0.3, -0.7)).unwrap();
        assert_eq!(f.mode(&[-1, -2]).unwrap(), Complex64::new(0.3, 0.7));
        assert_eq!(f.hermitian_defect(), 0.0);
    }

    #[test]
    fn tensor_symmetric_by_storage() {
        let g = Grid::new(3, 8).unwrap();
        let mut t = TensorField::zeros(&g);
        t.get_mut(2, 0).set_mode(&[0, 1, 0], Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(t.get(0, 2).mode(&[0, 1, 0]).unwrap(), Complex64::new(1.0, 0.0));
    }
}
