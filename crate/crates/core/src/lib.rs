//! Faedo-Galerkin approximation of the two-dimensional time-fractional
//! g-Navier-Stokes equations on the periodic unit square, with a-priori
//! energy certificates and a tracking-type optimal control problem.
//!
//! Modules, bottom up:
//!
//! * [`fracops`]: Riemann-Liouville integrals, L1 Caputo stencil,
//!   Mittag-Leffler series, fractional Gronwall bound.
//! * [`wdomain`]: weighted grid, weighted inner products, weighted
//!   divergence, weighted Leray projection, the smallness hypothesis on `g`.
//! * [`spectral`]: discrete g-Stokes eigenbasis, skew trilinear form, the
//!   Galerkin matrices.
//! * [`solver`]: L1/Picard time stepping of the Galerkin system, energy and
//!   stability certificates.
//! * [`control`]: control-to-state map, tracking objective, projected
//!   descent.
//!
//! Everything is generic over [`Scalar`] (`f32`/`f64`); the `*64` aliases
//! below name the `f64` instantiations used by the command-line front end.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod error;
pub mod fracops;
pub mod recipes;
pub mod reference;
pub mod scalar;
pub mod solver;
pub mod spectral;
pub mod wdomain;

mod csv;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type FractionalOrder64 = fracops::FractionalOrder<f64>;
pub type TimeGrid64 = fracops::TimeGrid<f64>;
pub type SampledFunction64 = fracops::SampledFunction<f64>;
pub type WeightedGrid64 = wdomain::WeightedGrid<f64>;
pub type VelocityField64 = wdomain::VelocityField<f64>;
pub type ScalarField64 = wdomain::ScalarField<f64>;
pub type GStokesBasis64 = spectral::GStokesBasis<f64>;
pub type GalerkinSystem64 = spectral::GalerkinSystem<f64>;
pub type SolverConfig64 = solver::SolverConfig<f64>;
pub type Trajectory64 = solver::Trajectory<f64>;
pub type EnergyCertificate64 = solver::EnergyCertificate<f64>;
pub type ControlProblem64 = control::ControlProblem<f64>;
pub type Control64 = control::Control<f64>;
