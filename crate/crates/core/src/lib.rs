//! Bayesian forecasting with conditionally Poisson dynamic models, Bayes-factor
//! model monitoring, expected-utility decisions, and decision-flipping
//! data-poisoning attacks found by simulated annealing.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common cases. Scenario configs and the CLI use
//! `f64`.

// Validation uses `!(x > 0)` style checks on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attack;
pub mod decision;
pub mod dist;
pub mod error;
pub mod model;
pub mod monitor;
pub mod real;
pub mod rng;
pub mod scenario;

pub use error::{Error, Result};
pub use real::Real;

pub type ModelSpecF64 = model::ModelSpec<f64>;
pub type ModelSpecF32 = model::ModelSpec<f32>;
pub type FilterStateF64 = model::FilterState<f64>;
pub type FilterStateF32 = model::FilterState<f32>;
pub type MonitorConfigF64 = monitor::MonitorConfig<f64>;
pub type MonitorConfigF32 = monitor::MonitorConfig<f32>;
pub type MonitorTraceF64 = monitor::MonitorTrace<f64>;
pub type MonitorTraceF32 = monitor::MonitorTrace<f32>;
pub type ExpectedUtilityTableF64 = decision::ExpectedUtilityTable<f64>;
pub type ExpectedUtilityTableF32 = decision::ExpectedUtilityTable<f32>;
pub type SaConfigF64 = attack::SaConfig<f64>;
pub type SaConfigF32 = attack::SaConfig<f32>;
pub type AttackResultF64 = attack::AttackResult<f64>;
pub type AttackContextF64 = attack::AttackContext<f64>;
