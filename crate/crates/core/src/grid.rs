//! Periodic grid on the torus `[0, 2π)^d` and the FFT plumbing behind it.
//!
//! Arrays are stored row-major with the last axis fastest. Along each axis the
//! index `i` maps to the integer wavenumber `i` for `i <= n/2` and `i - n`
//! otherwise, so the Nyquist index carries `+n/2`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Maximum spatial dimension supported.
pub const MAX_DIM: usize = 3;

#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

struct GridInner {
    dim: usize,
    n: usize,
    len: usize,
    wavevector: Vec<[f64; MAX_DIM]>,
    k_sq: Vec<f64>,
    /// Bit `j` set when the index along axis `j` is the Nyquist index.
    nyquist: Vec<u8>,
    keep: Vec<bool>,
    mirror: Vec<usize>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Grid {
    /// Builds a `d`-dimensional grid with `n` points per axis.
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::Config(format!("dimension must be 2 or 3, got {dim}")));
        }
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::Config(format!("points per axis must be even and at least 8, got {n}")));
        }
        let len = n.pow(dim as u32);
        let half = n / 2;
        let cutoff = n as f64 / 3.0;
        let mut wavevector = Vec::with_capacity(len);
        let mut k_sq = Vec::with_capacity(len);
        let mut nyquist = Vec::with_capacity(len);
        let mut keep = Vec::with_capacity(len);
        let mut mirror = Vec::with_capacity(len);
        for idx in 0..len {
            let digits = split_index(idx, dim, n);
            let mut kv = [0.0; MAX_DIM];
            let mut flags = 0u8;
            let mut kept = true;
            let mut mirrored = 0usize;
            for axis in 0..dim {
                let i = digits[axis];
                let k = if i <= half { i as i64 } else { i as i64 - n as i64 };
                kv[axis] = k as f64;
                if i == half {
                    flags |= 1 << axis;
                }
                if (k.unsigned_abs() as f64) > cutoff {
                    kept = false;
                }
                mirrored = mirrored * n + (n - i) % n;
            }
            wavevector.push(kv);
            k_sq.push(kv.iter().map(|k| k * k).sum());
            nyquist.push(flags);
            keep.push(kept);
            mirror.push(mirrored);
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Self {
            inner: Arc::new(GridInner { dim, n, len, wavevector, k_sq, nyquist, keep, mirror, forward, inverse }),
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    /// Number of lattice points, `n^d`.
    pub fn len(&self) -> usize {
        self.inner.len
    }

    pub fn is_empty(&self) -> bool {
        self.inner.len == 0
    }

    /// Grid spacing `2π/n`.
    pub fn dx(&self) -> f64 {
        2.0 * PI / self.inner.n as f64
    }

    /// Integer wavevector of a flat spectral index (unused axes are 0).
    #[inline]
    pub fn wavevector(&self, idx: usize) -> &[f64; MAX_DIM] {
        &self.inner.wavevector[idx]
    }

    #[inline]
    pub fn k_sq(&self, idx: usize) -> f64 {
        self.inner.k_sq[idx]
    }

    #[inline]
    pub fn k_mag(&self, idx: usize) -> f64 {
        self.inner.k_sq[idx].sqrt()
    }

    /// True when the index along `axis` is the Nyquist index `n/2`.
    #[inline]
    pub fn is_nyquist(&self, idx: usize, axis: usize) -> bool {
        self.inner.nyquist[idx] & (1 << axis) != 0
    }

    /// True when the mode survives the 2/3 truncation (`|k_i| <= n/3` on every axis).
    #[inline]
    pub fn is_resolved(&self, idx: usize) -> bool {
        self.inner.keep[idx]
    }

    /// Flat index of the mode `-k`.
    #[inline]
    pub fn mirror(&self, idx: usize) -> usize {
        self.inner.mirror[idx]
    }

    /// Flat index of an integer wavevector; components are taken modulo `n`.
    pub fn index_of(&self, k: &[i64]) -> Result<usize> {
        if k.len() != self.dim() {
            return Err(Error::Config(format!(
                "wavevector has {} components, grid dimension is {}",
                k.len(),
                self.dim()
            )));
        }
        let n = self.n() as i64;
        Ok(k.iter().fold(0usize, |acc, &ki| acc * self.n() + ki.rem_euclid(n) as usize))
    }

    /// Physical coordinates of a flat grid index.
    pub fn position(&self, idx: usize) -> [f64; MAX_DIM] {
        let digits = split_index(idx, self.dim(), self.n());
        let mut x = [0.0; MAX_DIM];
        for axis in 0..self.dim() {
            x[axis] = digits[axis] as f64 * self.dx();
        }
        x
    }

    /// Samples a function of position on the grid.
    pub fn sample(&self, f: impl Fn(&[f64; MAX_DIM]) -> f64) -> Vec<f64> {
        (0..self.len()).map(|idx| f(&self.position(idx))).collect()
    }

    /// Quadrature weight of one grid cell, `(2π/n)^d`.
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.dim() as i32)
    }

    /// Unnormalized multidimensional FFT in place.
    pub(crate) fn fft(&self, data: &mut [Complex64], inverse: bool) {
        debug_assert_eq!(data.len(), self.len());
        let plan = if inverse { &self.inner.inverse } else { &self.inner.forward };
        let n = self.n();
        let dim = self.dim();
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        let mut lines = vec![Complex64::new(0.0, 0.0); data.len()];
        for axis in 0..dim {
            let stride = n.pow((dim - 1 - axis) as u32);
            if stride == 1 {
                plan.process_with_scratch(data, &mut scratch);
                continue;
            }
            let outer = data.len() / (n * stride);
            for o in 0..outer {
                for inner in 0..stride {
                    let line = (o * stride + inner) * n;
                    let base = o * n * stride + inner;
                    for i in 0..n {
                        lines[line + i] = data[base + i * stride];
                    }
                }
            }
            plan.process_with_scratch(&mut lines, &mut scratch);
            for o in 0..outer {
                for inner in 0..stride {
                    let line = (o * stride + inner) * n;
                    let base = o * n * stride + inner;
                    for i in 0..n {
                        data[base + i * stride] = lines[line + i];
                    }
                }
            }
        }
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.dim() == other.dim() && self.n() == other.n()
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("dim", &self.dim()).field("n", &self.n()).finish()
    }
}

fn split_index(mut idx: usize, dim: usize, n: usize) -> [usize; MAX_DIM] {
    let mut digits = [0usize; MAX_DIM];
    for axis in (0..dim).rev() {
        digits[axis] = idx % n;
        idx /= n;
    }
    digits
}

const LEAF: usize = 256;

/// Sums `term(0) + ... + term(len - 1)` with a fixed pairwise tree so that the
/// rounding pattern depends only on `len`.
pub fn tree_sum(len: usize, term: &impl Fn(usize) -> f64) -> f64 {
    fn go(lo: usize, hi: usize, term: &impl Fn(usize) -> f64) -> f64 {
        if hi - lo <= LEAF {
            let mut acc = 0.0;
            for i in lo..hi {
                acc += term(i);
            }
            acc
        } else {
            let mid = lo + (hi - lo) / 2;
            go(lo, mid, term) + go(mid, hi, term)
        }
    }
    go(0, len, term)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(Grid::new(1, 16).is_err());
        assert!(Grid::new(4, 16).is_err());
        assert!(Grid::new(2, 15).is_err());
        assert!(Grid::new(2, 6).is_err());
        assert!(Grid::new(3, 8).is_ok());
    }

    #[test]
    fn wavenumber_layout() {
        let g = Grid::new(2, 8).unwrap();
        let idx = g.index_of(&[-1, 4]).unwrap();
        assert_eq!(g.wavevector(idx)[..2], [-1.0, 4.0]);
        assert!(g.is_nyquist(idx, 1));
        assert!(!g.is_nyquist(idx, 0));
        let m = g.mirror(g.index_of(&[2, -3]).unwrap());
        assert_eq!(g.wavevector(m)[..2], [-2.0, 3.0]);
        assert_eq!(g.mirror(0), 0);
    }

    #[test]
    fn dealias_mask_n12() {
        let g = Grid::new(2, 12).unwrap();
        assert!(g.is_resolved(g.index_of(&[4, -4]).unwrap()));
        assert!(!g.is_resolved(g.index_of(&[5, 0]).unwrap()));
        assert!(!g.is_resolved(g.index_of(&[0, 6]).unwrap()));
    }

    #[test]
    fn tree_sum_matches_plain_sum_on_integers() {
        let s = tree_sum(10_000, &|i| i as f64);
        assert_eq!(s, (0..10_000).sum::<usize>() as f64);
    }
}
