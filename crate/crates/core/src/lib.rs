//! Bayesian optimization for high-dimensional black-box minimization.
//!
//! The crate provides an ordinary-kriging Gaussian process ([`gp`]),
//! expected improvement and its subspace restriction ([`acquisition`]), a
//! real-coded genetic algorithm for maximizing acquisitions ([`ga`]) and four
//! outer loops ([`optimizers`]): full-space BO, adaptive dropout of
//! acquisition variables, fixed-size random dropout and coordinate-line BO.
//! [`objectives`] holds benchmark functions and an external-process
//! protocol, [`stats`] the Wilcoxon comparison used to rank algorithms.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common cases.

pub mod acquisition;
pub mod doe;
pub mod error;
pub mod ga;
pub mod gp;
pub mod linalg;
pub mod objectives;
pub mod optimizers;
pub mod rng;
mod scalar;
pub mod stats;
pub mod validation;

pub use error::{Error, Result};
pub use rng::RngState;
pub use scalar::Scalar;

pub type SearchBoxF64 = doe::SearchBox<f64>;
pub type SearchBoxF32 = doe::SearchBox<f32>;
pub type ArchiveF64 = gp::Archive<f64>;
pub type ArchiveF32 = gp::Archive<f32>;
pub type GpModelF64 = gp::GpModel<f64>;
pub type GpModelF32 = gp::GpModel<f32>;
pub type PredictionF64 = gp::Prediction<f64>;
pub type PredictionF32 = gp::Prediction<f32>;
pub type OptimizerConfigF64 = optimizers::OptimizerConfig<f64>;
pub type OptimizerConfigF32 = optimizers::OptimizerConfig<f32>;
pub type RunTraceF64 = optimizers::RunTrace<f64>;
pub type RunTraceF32 = optimizers::RunTrace<f32>;
pub type ObjectiveSpecF64 = objectives::ObjectiveSpec<f64>;
pub type ObjectiveSpecF32 = objectives::ObjectiveSpec<f32>;
