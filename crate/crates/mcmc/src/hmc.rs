use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::target::Target;
use crate::tuning::{Tuner, TuningSchedule};
use crate::StepInfo;

/// State of one Hamiltonian Monte Carlo chain (identity mass matrix).
#[derive(Debug, Clone)]
pub struct HmcState {
    pub x: Vec<f64>,
    /// Leapfrog step size epsilon; jittered uniformly in
    /// `(jitter.0 * eps, jitter.1 * eps)` before every step so the
    /// trajectory length never resonates with the target.
    pub step_size: f64,
    /// Number of leapfrog steps per proposal.
    pub n_leapfrog: u32,
    pub jitter: (f64, f64),
    pub logp: Option<f64>,
    pub accepted: u64,
    pub proposed: u64,
    pub tuner: Tuner,
}

impl HmcState {
    pub fn new<R: Rng + ?Sized>(
        x: Vec<f64>,
        step_size: f64,
        n_leapfrog: u32,
        interval: (f64, f64),
        rng: &mut R,
    ) -> Self {
        assert!(step_size > 0.0 && n_leapfrog >= 1);
        HmcState {
            x,
            step_size,
            n_leapfrog,
            jitter: (0.85, 1.15),
            logp: None,
            accepted: 0,
            proposed: 0,
            tuner: Tuner::new((0.5, 0.8), interval, rng),
        }
    }

    pub fn maybe_tune<R: Rng + ?Sized>(&mut self, iter: u64, schedule: &TuningSchedule, rng: &mut R) -> bool {
        let HmcState { step_size, accepted, proposed, tuner, .. } = self;
        tuner.maybe_tune(iter, schedule, step_size, accepted, proposed, rng)
    }
}

/// Leapfrog integration of the Hamiltonian flow for `log L` with momentum
/// `p0`: half momentum step, `n - 1` alternating full steps, a final full
/// position step and half momentum step. Returns `None` if any gradient
/// component is non-finite along the trajectory.
pub fn hmc_propose<T: Target + ?Sized>(
    x: &[f64],
    p0: &[f64],
    eps: f64,
    n_leapfrog: u32,
    target: &T,
) -> Option<(Vec<f64>, Vec<f64>)> {
    let mut y = x.to_vec();
    let mut p = p0.to_vec();

    let grad = |y: &[f64]| -> Option<Vec<f64>> {
        let g = target.grad_log_density(y).expect("HMC requires a gradient");
        if g.iter().all(|v| v.is_finite()) {
            Some(g)
        } else {
            None
        }
    };

    let mut g = grad(&y)?;
    for (pi, gi) in p.iter_mut().zip(&g) {
        *pi += 0.5 * eps * gi;
    }
    for step in 0..n_leapfrog {
        for (yi, pi) in y.iter_mut().zip(&p) {
            *yi += eps * pi;
        }
        g = grad(&y)?;
        let factor = if step + 1 == n_leapfrog { 0.5 } else { 1.0 };
        for (pi, gi) in p.iter_mut().zip(&g) {
            *pi += factor * eps * gi;
        }
    }
    Some((y, p))
}

/// One HMC step: draw `p0 ~ Normal(0, I)`, integrate the leapfrog
/// trajectory, and accept with probability
/// `min(1, L(y)/L(x) * exp((|p0|^2 - |p|^2) / 2))`.
pub fn hmc_step<T: Target + ?Sized, R: Rng + ?Sized>(state: &mut HmcState, target: &T, rng: &mut R) -> StepInfo {
    debug_assert_eq!(state.x.len(), target.dim());
    let logp_x = match state.logp {
        Some(v) => v,
        None => {
            let v = target.log_density(&state.x);
            state.logp = Some(v);
            v
        }
    };

    let p0: Vec<f64> = (0..state.x.len())
        .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
        .collect();
    let eps = state.step_size * rng.random_range(state.jitter.0..state.jitter.1);
    state.proposed += 1;

    let Some((y, p)) = hmc_propose(&state.x, &p0, eps, state.n_leapfrog, target) else {
        return StepInfo::divergent();
    };

    let logp_y = target.log_density(&y);
    if logp_y.is_nan() {
        return StepInfo::divergent();
    }
    let kinetic0: f64 = p0.iter().map(|v| v * v).sum::<f64>() / 2.0;
    let kinetic1: f64 = p.iter().map(|v| v * v).sum::<f64>() / 2.0;
    let log_ratio = logp_y - logp_x + kinetic0 - kinetic1;
    if rng.random::<f64>().ln() < log_ratio {
        state.x = y;
        state.logp = Some(logp_y);
        state.accepted += 1;
        StepInfo::accepted()
    } else {
        StepInfo::rejected()
    }
}
