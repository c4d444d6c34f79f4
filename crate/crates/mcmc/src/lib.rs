//! Generic MCMC building blocks used by the demand-estimation chains.
//!
//! The kernels here are deliberately small and composable: a caller owns the
//! chain loop, the tuning clock, and the random-number streams, and invokes
//! one kernel step at a time. All kernels draw exclusively from the `Rng`
//! handed to them, so a chain replayed with the same seed reproduces the
//! same trajectory bit for bit.
//!
//! Provided kernels:
//! - [`rwm_step`]: random-walk Metropolis with spherical Gaussian proposals.
//! - [`mwg_sweep`]: Metropolis-within-Gibbs over a block partition of the
//!   coordinates, one random-walk proposal per block per sweep.
//! - [`hmc_step`]: Hamiltonian Monte Carlo with a leapfrog integrator,
//!   identity mass matrix, and per-call step-size jitter.
//! - [`sample_inverse_wishart`]: inverse-Wishart draws via the Bartlett
//!   decomposition.
//!
//! Proposal scales adapt through [`Tuner`]s driven by a shared
//! [`TuningSchedule`]; tuning fires at epochs that grow exponentially and can
//! be frozen outright after burn-in so retained samples come from a fixed
//! kernel.

mod error;
pub mod diagnostics;
mod hmc;
mod mvn;
mod mwg;
mod rwm;
mod target;
mod tuning;
mod wishart;

pub use error::KernelError;
pub use hmc::{hmc_propose, hmc_step, HmcState};
pub use mvn::sample_mvn;
pub use mwg::{mwg_sweep, BlockKernel, BlockPartition, MwgState};
pub use rwm::{rwm_step, RwmState};
pub use target::{FnTarget, Target};
pub use tuning::{TuneEvent, Tuner, TuningSchedule};
pub use wishart::sample_inverse_wishart;

/// Outcome of one Metropolis-type step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    /// Whether the proposal was accepted.
    pub accepted: bool,
    /// True when the proposal was rejected because the target (or its
    /// gradient) evaluated to NaN. Treated as a rejection, never a panic.
    pub divergent: bool,
}

impl StepInfo {
    pub(crate) fn accepted() -> Self {
        StepInfo { accepted: true, divergent: false }
    }
    pub(crate) fn rejected() -> Self {
        StepInfo { accepted: false, divergent: false }
    }
    pub(crate) fn divergent() -> Self {
        StepInfo { accepted: false, divergent: true }
    }
}
