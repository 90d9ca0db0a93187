mod common;

use common::{random_scalar, random_state};
use oldroyd_core::spectral::{
    dealias, divergence, forward_transform, fractional_laplacian, gradient, inverse_transform, leray_project,
    quadrature_l2_norm, sobolev_inner_product, sobolev_norm, SobolevWeight,
};
use oldroyd_core::{Grid, VectorField};
use proptest::prelude::*;

const INHOM: SobolevWeight = SobolevWeight::Inhomogeneous;

fn random_vector(g: &Grid, seed: u64) -> VectorField {
    VectorField::new((0..g.dim()).map(|i| random_scalar(g, seed * 31 + i as u64)).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn operations_preserve_hermitian_symmetry(seed in 0u64..10_000, dim in 2usize..=3) {
        let g = Grid::new(dim, 8).unwrap();
        let f = random_scalar(&g, seed);
        let v = random_vector(&g, seed + 1);
        let tol = 1e-15;
        for c in gradient(&f).components() { prop_assert!(c.hermitian_defect() < tol); }
        prop_assert!(divergence(&v).hermitian_defect() < tol);
        prop_assert!(fractional_laplacian(&f, 0.37).unwrap().hermitian_defect() < tol);
        for c in leray_project(&v).components() { prop_assert!(c.hermitian_defect() < tol); }
        prop_assert!(dealias(&f).hermitian_defect() < tol);
        prop_assert!(inverse_transform(&f).is_ok());
    }

    #[test]
    fn projector_is_idempotent_and_self_adjoint(seed in 0u64..10_000, dim in 2usize..=3) {
        let g = Grid::new(dim, 8).unwrap();
        let f = random_vector(&g, seed);
        let h = random_vector(&g, seed + 7);
        let pf = leray_project(&f);
        let ppf = leray_project(&pf);
        for (a, b) in pf.components().iter().zip(ppf.components()) {
            for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
                prop_assert!((x - y).norm() < 1e-15);
            }
        }
        let lhs = sobolev_inner_product(&pf, &h, 0.0, INHOM).unwrap();
        let rhs = sobolev_inner_product(&f, &leray_project(&h), 0.0, INHOM).unwrap();
        let scale = sobolev_norm(&f, 0.0, INHOM) * sobolev_norm(&h, 0.0, INHOM);
        prop_assert!((lhs - rhs).abs() < 1e-12 * scale);
        let div = divergence(&pf);
        prop_assert!(div.max_abs() < 1e-13 * f.components().iter().map(|c| c.max_abs()).fold(0.0, f64::max) * g.n() as f64);
    }

    /// For β ≥ ½: |(u, ∇·τ)_{H^{s−β}}| ≤ ‖u‖_{H^s}‖τ‖_{H^s}.
    #[test]
    fn cross_term_bound(seed in 0u64..10_000, beta in 0.5f64..=1.0, s in 2.0f64..3.0, band in 1.0f64..8.0) {
        let g = Grid::new(2, 24).unwrap();
        let st = random_state(&g, seed, band, 1.0);
        let cross = sobolev_inner_product(&st.u, &divergence(&st.tau), s - beta, INHOM).unwrap();
        let bound = sobolev_norm(&st.u, s, INHOM) * sobolev_norm(&st.tau, s, INHOM);
        prop_assert!(cross.abs() <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn dealias_is_idempotent(seed in 0u64..10_000) {
        let g = Grid::new(2, 12).unwrap();
        let f = dealias(&random_scalar(&g, seed));
        let again = dealias(&f);
        prop_assert_eq!(again.coeffs(), f.coeffs());
    }
}

#[test]
fn parseval_and_round_trip() {
    for dim in [2, 3] {
        for n in [16, 32] {
            let g = Grid::new(dim, n).unwrap();
            let f = random_scalar(&g, 99);
            let x = inverse_transform(&f).unwrap();
            let quad = quadrature_l2_norm(&g, &x);
            let spec = sobolev_norm(&f, 0.0, INHOM);
            assert!((quad - spec).abs() < 1e-12 * spec);
            let back = inverse_transform(&forward_transform(&g, &x).unwrap()).unwrap();
            let err = back.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let scale = x.iter().map(|a| a.abs()).fold(0.0, f64::max);
            assert!(err < 1e-14 * scale, "round trip error {err} at scale {scale}");
        }
    }
}

#[test]
fn homogeneous_norm_equals_norm_of_fractional_power() {
    let g = Grid::new(2, 16).unwrap();
    let f = random_scalar(&g, 4);
    for sigma in [0.5, 1.0, 1.7] {
        let direct = sobolev_norm(&f, sigma, SobolevWeight::Homogeneous);
        let via = sobolev_norm(&fractional_laplacian(&f, sigma / 2.0).unwrap(), 0.0, INHOM);
        assert!((direct - via).abs() < 1e-12 * direct);
    }
}
