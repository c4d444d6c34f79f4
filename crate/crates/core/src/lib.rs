//! Demand modeling and counterfactual forecasting for centralized school
//! choice.
//!
//! The pipeline goes: load (or synthesize) choice data, estimate a demand
//! model from families' submitted rankings, forecast the next applicant
//! pool, simulate the assignment mechanism under a choice-menu policy, and
//! evaluate the forecasts against realized outcomes.
//!
//! Modules map onto the pipeline stages:
//! - [`domain`]: students, programs, menus, distances, priorities.
//! - [`data`]: CSV loading/saving, capacity inference, synthetic data.
//! - [`features`] / [`design`]: feature extraction and estimation designs.
//! - [`naive`]: the rule-based ranking model.
//! - [`logit`]: rank-ordered multinomial logit (maximum likelihood).
//! - [`mixedlogit`]: random-coefficient logit fit by a Gibbs sampler.
//! - [`forecast`]: applicant-pool trend models and pool resampling.
//! - [`assignment`]: student-proposing deferred acceptance.
//! - [`simulation`]: the layered market simulator, metrics, and reports.

pub mod assignment;
pub mod data;
pub mod design;
pub mod domain;
pub mod error;
pub mod features;
pub mod forecast;
pub mod logit;
pub mod mixedlogit;
pub mod model;
pub mod naive;
pub mod seed;
pub mod simulation;

pub use error::Error;

/// Submitted rankings are truncated to this many choices everywhere in the
/// pipeline: estimation data, simulated preference draws, and loaders.
pub const MAX_RANKED_CHOICES: usize = 10;

pub type Result<T> = std::result::Result<T, Error>;
