//! Simulation and verification of nonlinear Markov processes generated by
//! Lévy-Khintchine operators with Lipschitz coefficients.
//!
//! The numerical core is generic over the scalar type ([`Real`], implemented
//! for `f32` and `f64`); the aliases at the crate root fix it to `f64`, which
//! is what the shipped models and diagnostics use.

pub mod bench;
pub mod diagnostics;
pub mod error;
pub mod euler_scheme;
pub mod levy_core;
pub mod models;
pub mod numerics;
pub mod ot_metrics;
pub mod rng;
pub mod starshape;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

/// `f64` instantiations of the generic core.
pub type EmpiricalMeasure = ot_metrics::EmpiricalMeasure<f64>;
pub type PathEnsemble = euler_scheme::PathEnsemble<f64>;
pub type SchemeConfig = euler_scheme::SchemeConfig<f64>;
pub type LevyTriplet = levy_core::LevyTriplet<f64>;
pub type LevyCoupling = levy_core::LevyCoupling<f64>;
pub type RadialTail = levy_core::RadialTail<f64>;
pub type JumpMeasure = levy_core::JumpMeasure<f64>;
