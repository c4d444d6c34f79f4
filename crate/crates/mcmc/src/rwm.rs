use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::target::Target;
use crate::tuning::{Tuner, TuningSchedule};
use crate::StepInfo;

/// State of one random-walk Metropolis chain.
///
/// `logp` caches the log-density at `x`; owners embedding the kernel in a
/// Gibbs sweep must set it to `None` whenever the conditional target changes
/// under the chain (i.e. other blocks moved).
#[derive(Debug, Clone)]
pub struct RwmState {
    pub x: Vec<f64>,
    /// Proposal standard deviation per coordinate.
    pub scale: f64,
    pub logp: Option<f64>,
    pub accepted: u64,
    pub proposed: u64,
    pub tuner: Tuner,
}

impl RwmState {
    pub fn new<R: Rng + ?Sized>(x: Vec<f64>, scale: f64, band: (f64, f64), interval: (f64, f64), rng: &mut R) -> Self {
        RwmState {
            x,
            scale,
            logp: None,
            accepted: 0,
            proposed: 0,
            tuner: Tuner::new(band, interval, rng),
        }
    }

    /// Standard configuration: acceptance band 0.4..0.6.
    pub fn with_defaults<R: Rng + ?Sized>(x: Vec<f64>, scale: f64, rng: &mut R) -> Self {
        Self::new(x, scale, (0.4, 0.6), (1000.0, 1500.0), rng)
    }

    pub fn maybe_tune<R: Rng + ?Sized>(&mut self, iter: u64, schedule: &TuningSchedule, rng: &mut R) -> bool {
        let RwmState { scale, accepted, proposed, tuner, .. } = self;
        tuner.maybe_tune(iter, schedule, scale, accepted, proposed, rng)
    }
}

/// One random-walk Metropolis step: propose `y = x + scale * z` with
/// `z ~ Normal(0, I)` and accept with probability `min(1, L(y)/L(x))`.
///
/// A NaN log-density at the proposal counts as a rejection (flagged
/// divergent), never an error.
pub fn rwm_step<T: Target + ?Sized, R: Rng + ?Sized>(state: &mut RwmState, target: &T, rng: &mut R) -> StepInfo {
    debug_assert_eq!(state.x.len(), target.dim());
    let logp_x = match state.logp {
        Some(v) => v,
        None => {
            let v = target.log_density(&state.x);
            state.logp = Some(v);
            v
        }
    };

    let y: Vec<f64> = state
        .x
        .iter()
        .map(|&xi| xi + state.scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
        .collect();
    let logp_y = target.log_density(&y);
    state.proposed += 1;

    let info = if logp_y.is_nan() {
        StepInfo::divergent()
    } else {
        // log(U) < logp_y - logp_x; handles logp_y = -inf (always reject)
        // and constant targets (always accept).
        let logu = rng.random::<f64>().ln();
        if logu < logp_y - logp_x {
            state.x = y;
            state.logp = Some(logp_y);
            state.accepted += 1;
            StepInfo::accepted()
        } else {
            StepInfo::rejected()
        }
    };
    info
}
