//! Pseudo-spectral solver for the incompressible Oldroyd-B system with
//! fractional stress dissipation on the periodic torus `[0, 2π)^d`, `d = 2, 3`.
//!
//! The crate is organized bottom-up:
//!
//! - [`grid`], [`field`], [`spectral`]: Fourier representation, multipliers,
//!   Leray projection, dealiasing and Sobolev inner products.
//! - [`model`], [`initial`]: tendencies of the coupled velocity/stress system
//!   and initial-data recipes.
//! - [`integrator`]: integrating-factor Runge-Kutta stepping.
//! - [`linear`]: closed-form analysis of the linearized wave system.
//! - [`diagnostics`]: energy and Lyapunov functionals, identity residuals and
//!   boundedness monitors.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod diagnostics;
pub mod error;
pub mod field;
pub mod grid;
pub mod initial;
pub mod integrator;
pub mod linear;
pub mod model;
pub mod spectral;

pub use error::{BlowUp, Error, Result};
pub use field::{MatrixField, SpectralField, TensorField, VectorField};
pub use grid::Grid;
pub use model::{FlowState, ModelParams, Toggles};
