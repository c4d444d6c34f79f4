//! Random-coefficient (mixed) logit fit by Gibbs sampling.
//!
//! Utilities are `u = alpha_tilde[school] + beta . F + gamma_i . G` with
//! `gamma_i ~ Normal(b, W)` iid across students and `W` block-diagonal
//! (arbitrary covariance within a block, independence across blocks). One
//! sweep of the sampler:
//!
//! 1. per-student random-walk Metropolis update of `gamma_i` against its
//!    ranking likelihood times the `Normal(b, W)` prior;
//! 2. `b ~ Normal(mean(gamma), W / n)`;
//! 3. per block `l`, `W_l ~ InverseWishart(k_l + n, k_l I + n C_l)` with
//!    `C_l` the block covariance of the `gamma_i` about `b`;
//! 4. one Hamiltonian Monte Carlo step on the school fixed effects;
//! 5. one Metropolis-within-Gibbs sweep over the fixed-coefficient
//!    subvectors.
//!
//! Proposal scales adapt on an exponentially thinning schedule that is
//! frozen at burn-in, so every retained draw comes from a fixed kernel.

use std::cell::RefCell;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use mcmc_kernels::{
    hmc_step, mwg_sweep, rwm_step, sample_inverse_wishart, sample_mvn, BlockPartition, HmcState, MwgState, RwmState,
    Target, TuningSchedule,
};

use crate::design::{Denominator, EstimationData, StudentDesign};
use crate::error::Error;
use crate::features::mixed_beta_blocks;
use crate::logit::{staged_loglik, staged_weights};
use crate::seed::substream;
use crate::Result;

/// Block-diagonal covariance of the random coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovBlocks {
    blocks: Vec<DMatrix<f64>>,
}

impl CovBlocks {
    pub fn new(blocks: Vec<DMatrix<f64>>) -> Result<Self> {
        for b in &blocks {
            if b.nrows() != b.ncols() || b.nrows() == 0 {
                return Err(Error::Config("covariance blocks must be square and non-empty".into()));
            }
        }
        Ok(CovBlocks { blocks })
    }

    /// Identity covariance with the given block sizes.
    pub fn identity(sizes: &[usize]) -> Self {
        CovBlocks { blocks: sizes.iter().map(|&k| DMatrix::identity(k, k)).collect() }
    }

    pub fn blocks(&self) -> &[DMatrix<f64>] {
        &self.blocks
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.nrows()).collect()
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.nrows()).sum()
    }

    /// Offsets of each block in the stacked coefficient vector.
    pub fn offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.blocks.len());
        let mut acc = 0;
        for b in &self.blocks {
            offsets.push(acc);
            acc += b.nrows();
        }
        offsets
    }

    pub fn full(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut full = DMatrix::zeros(d, d);
        for (offset, block) in self.offsets().into_iter().zip(&self.blocks) {
            let k = block.nrows();
            full.view_mut((offset, offset), (k, k)).copy_from(block);
        }
        full
    }

    /// True when every block admits a Cholesky factorization.
    pub fn is_spd(&self) -> bool {
        self.blocks.iter().all(|b| Cholesky::new(b.clone()).is_some())
    }

    fn inverse_blocks(&self) -> Result<Vec<DMatrix<f64>>> {
        self.blocks
            .iter()
            .map(|b| {
                Cholesky::new(b.clone())
                    .map(|c| c.inverse())
                    .ok_or_else(|| Error::Numerical("covariance block not positive definite".into()))
            })
            .collect()
    }

    /// `(x - b)' W^-1 (x - b)` given precomputed inverse blocks.
    fn quad_form(inv_blocks: &[DMatrix<f64>], offsets: &[usize], x: &[f64], center: &DVector<f64>) -> f64 {
        let mut q = 0.0;
        for (inv, &offset) in inv_blocks.iter().zip(offsets) {
            let k = inv.nrows();
            for i in 0..k {
                for j in 0..k {
                    q += (x[offset + i] - center[offset + i]) * inv[(i, j)] * (x[offset + j] - center[offset + j]);
                }
            }
        }
        q
    }

    /// Draw `gamma ~ Normal(center, W)`.
    pub fn sample_gamma<R: Rng + ?Sized>(&self, center: &DVector<f64>, rng: &mut R) -> Result<DVector<f64>> {
        let mut gamma = DVector::zeros(self.dim());
        for (offset, block) in self.offsets().into_iter().zip(&self.blocks) {
            let k = block.nrows();
            let mean = center.rows(offset, k).into_owned();
            let draw = sample_mvn(&mean, block, rng)?;
            gamma.rows_mut(offset, k).copy_from(&draw);
        }
        Ok(gamma)
    }
}

/// One parameter snapshot of the mixed logit model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedLogitParams {
    /// School fixed effects (last school normalized to zero, not stored).
    pub alpha: DVector<f64>,
    /// Fixed coefficients.
    pub beta: DVector<f64>,
    /// Mean of the random coefficients.
    pub b: DVector<f64>,
    /// Block-diagonal covariance of the random coefficients.
    pub w: CovBlocks,
}

impl MixedLogitParams {
    pub fn alpha_tilde(&self, school: usize) -> f64 {
        if school < self.alpha.len() {
            self.alpha[school]
        } else {
            0.0
        }
    }
}

/// Retained posterior draw.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PosteriorSample {
    pub iteration: u64,
    pub params: MixedLogitParams,
    /// Mean of the per-student coefficients at this iteration.
    pub gamma_mean: DVector<f64>,
}

/// Log-likelihood of one student's ranking conditional on the student's
/// instantiated random coefficients.
pub fn conditional_loglik_phi(
    alpha: &DVector<f64>,
    beta: &DVector<f64>,
    gamma: &[f64],
    sd: &StudentDesign,
    data: &EstimationData,
    denom: Denominator,
) -> f64 {
    let fe_dim = data.fe_dim();
    let utils: Vec<f64> = (0..sd.n_options)
        .map(|o| {
            let school = sd.school[o] as usize;
            let mut u = if school < fe_dim { alpha[school] } else { 0.0 };
            for (b, x) in beta.iter().zip(sd.fixed_row(o, data.n_fixed)) {
                u += b * x;
            }
            for (g, x) in gamma.iter().zip(sd.random_row(o, data.n_random)) {
                u += g * x;
            }
            u
        })
        .collect();
    staged_loglik(&utils, &sd.ranked, denom)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GibbsConfig {
    pub iterations: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub seed: u64,
    pub denominator: Denominator,
    /// Covariance block sizes over the random features.
    pub block_sizes: Vec<usize>,
    /// Fixed-coefficient subvectors updated jointly; defaults to the
    /// standard six-block structure when the design has the nine standard
    /// fixed features, else one block per coefficient.
    pub beta_blocks: Option<Vec<Vec<usize>>>,
    pub beta_scales: Option<Vec<f64>>,
    pub gamma_scale: f64,
    pub hmc_step_size: f64,
    pub hmc_leapfrog: u32,
    /// Reduction mode: pin every `gamma_i` at zero and skip steps 1-3, so
    /// the sweep targets the plain-logit posterior over (alpha, beta).
    pub freeze_random: bool,
}

impl GibbsConfig {
    /// Desk-scale defaults: 50k iterations, half burn-in, keep every 10th.
    pub fn desk_scale(seed: u64) -> Self {
        GibbsConfig {
            iterations: 50_000,
            burn_in: 25_000,
            thin: 10,
            seed,
            denominator: Denominator::Ranked,
            block_sizes: vec![1, 1, 3],
            beta_blocks: None,
            beta_scales: None,
            gamma_scale: 0.05,
            hmc_step_size: 0.015,
            hmc_leapfrog: 20,
            freeze_random: false,
        }
    }
}

/// Mutable chain state; owns the kernel states and named RNG substreams.
pub struct GibbsState {
    pub iter: u64,
    pub b: DVector<f64>,
    pub w: CovBlocks,
    alpha_kernel: Option<HmcState>,
    beta_kernel: MwgState,
    gamma_kernels: Vec<RwmState>,
    gamma_rngs: Vec<ChaCha12Rng>,
    main_rng: ChaCha12Rng,
    nan_streak: u64,
    pub last_loglik: f64,
    pub divergences: u64,
}

impl GibbsState {
    pub fn init(data: &EstimationData, config: &GibbsConfig) -> Result<GibbsState> {
        if config.iterations <= config.burn_in {
            return Err(Error::Config(format!(
                "iterations ({}) must exceed burn-in ({})",
                config.iterations, config.burn_in
            )));
        }
        if config.thin == 0 {
            return Err(Error::Config("thin must be at least 1".into()));
        }
        if !config.freeze_random {
            let total: usize = config.block_sizes.iter().sum();
            if total != data.n_random {
                return Err(Error::Config(format!(
                    "covariance block sizes sum to {total} but the design has {} random features",
                    data.n_random
                )));
            }
        }

        let k = data.n_random;
        let mut main_rng = substream(config.seed, "chain");
        let alpha_kernel = (data.fe_dim() > 0).then(|| {
            HmcState::new(
                vec![0.0; data.fe_dim()],
                config.hmc_step_size,
                config.hmc_leapfrog,
                (1000.0, 1000.0),
                &mut main_rng,
            )
        });

        let (beta_blocks, beta_scales) = match (&config.beta_blocks, &config.beta_scales) {
            (Some(blocks), Some(scales)) => (blocks.clone(), scales.clone()),
            (Some(blocks), None) => {
                let scales = vec![0.5; blocks.len()];
                (blocks.clone(), scales)
            }
            _ => {
                if data.n_fixed == 9 {
                    mixed_beta_blocks()
                } else {
                    ((0..data.n_fixed).map(|i| vec![i]).collect(), vec![0.5; data.n_fixed])
                }
            }
        };
        let partition = BlockPartition::new(beta_blocks, data.n_fixed)?;
        let beta_kernel = MwgState::new(
            vec![0.0; data.n_fixed],
            &partition,
            &beta_scales,
            (0.4, 0.6),
            (100.0, 150.0),
            &mut main_rng,
        )?;

        let mut gamma_kernels = Vec::with_capacity(data.n_students());
        let mut gamma_rngs = Vec::with_capacity(data.n_students());
        for i in 0..data.n_students() {
            let mut rng = substream(config.seed, &format!("gamma/{i}"));
            gamma_kernels.push(RwmState::new(vec![0.0; k], config.gamma_scale, (0.4, 0.6), (1000.0, 1500.0), &mut rng));
            gamma_rngs.push(rng);
        }

        Ok(GibbsState {
            iter: 0,
            b: DVector::zeros(k),
            w: CovBlocks::identity(&config.block_sizes),
            alpha_kernel,
            beta_kernel,
            gamma_kernels,
            gamma_rngs,
            main_rng,
            nan_streak: 0,
            last_loglik: f64::NEG_INFINITY,
            divergences: 0,
        })
    }

    pub fn alpha(&self) -> DVector<f64> {
        match &self.alpha_kernel {
            Some(kernel) => DVector::from_column_slice(&kernel.x),
            None => DVector::zeros(0),
        }
    }

    pub fn beta(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.beta_kernel.x)
    }

    pub fn gamma(&self, i: usize) -> &[f64] {
        &self.gamma_kernels[i].x
    }

    pub fn params(&self) -> MixedLogitParams {
        MixedLogitParams { alpha: self.alpha(), beta: self.beta(), b: self.b.clone(), w: self.w.clone() }
    }

    pub fn gamma_mean(&self) -> DVector<f64> {
        let k = self.b.len();
        let mut mean = DVector::zeros(k);
        if self.gamma_kernels.is_empty() || k == 0 {
            return mean;
        }
        for kernel in &self.gamma_kernels {
            for (m, &g) in mean.iter_mut().zip(&kernel.x) {
                *m += g;
            }
        }
        mean / self.gamma_kernels.len() as f64
    }

    pub fn acceptance_rates(&self) -> AcceptanceRates {
        let rate = |acc: u64, prop: u64| if prop == 0 { f64::NAN } else { acc as f64 / prop as f64 };
        AcceptanceRates {
            gamma: {
                let acc: u64 = self.gamma_kernels.iter().map(|k| k.accepted).sum();
                let prop: u64 = self.gamma_kernels.iter().map(|k| k.proposed).sum();
                rate(acc, prop)
            },
            alpha: self.alpha_kernel.as_ref().map(|k| rate(k.accepted, k.proposed)),
            beta: self.beta_kernel.blocks.iter().map(|b| rate(b.accepted, b.proposed)).collect(),
        }
    }
}

/// Acceptance rates since the counters were last reset by tuning.
#[derive(Debug, Clone)]
pub struct AcceptanceRates {
    pub gamma: f64,
    pub alpha: Option<f64>,
    pub beta: Vec<f64>,
}

/// Fixed-effect target: total conditional log-likelihood as a function of
/// alpha, with precomputed non-alpha utility parts per option.
struct AlphaTarget<'a> {
    data: &'a EstimationData,
    rest: &'a [Vec<f64>],
    denom: Denominator,
    scratch: RefCell<(Vec<f64>, Vec<f64>)>,
}

impl Target for AlphaTarget<'_> {
    fn dim(&self) -> usize {
        self.data.fe_dim()
    }

    fn log_density(&self, alpha: &[f64]) -> f64 {
        let fe_dim = self.data.fe_dim();
        let mut ll = 0.0;
        let (utils, _) = &mut *self.scratch.borrow_mut();
        for (sd, rest) in self.data.students.iter().zip(self.rest) {
            utils.clear();
            utils.extend((0..sd.n_options).map(|o| {
                let school = sd.school[o] as usize;
                rest[o] + if school < fe_dim { alpha[school] } else { 0.0 }
            }));
            ll += staged_loglik(utils, &sd.ranked, self.denom);
        }
        ll
    }

    fn grad_log_density(&self, alpha: &[f64]) -> Option<Vec<f64>> {
        let fe_dim = self.data.fe_dim();
        let mut grad = vec![0.0; fe_dim];
        let (utils, weights) = &mut *self.scratch.borrow_mut();
        for (sd, rest) in self.data.students.iter().zip(self.rest) {
            utils.clear();
            utils.extend((0..sd.n_options).map(|o| {
                let school = sd.school[o] as usize;
                rest[o] + if school < fe_dim { alpha[school] } else { 0.0 }
            }));
            weights.clear();
            weights.resize(sd.n_options, 0.0);
            staged_weights(utils, &sd.ranked, self.denom, weights);
            for (o, &w) in weights.iter().enumerate() {
                let school = sd.school[o] as usize;
                if school < fe_dim {
                    grad[school] += w;
                }
            }
        }
        Some(grad)
    }
}

/// Fixed-coefficient target: total conditional log-likelihood as a
/// function of beta, with the alpha and gamma parts precomputed.
struct BetaTarget<'a> {
    data: &'a EstimationData,
    rest: &'a [Vec<f64>],
    denom: Denominator,
    scratch: RefCell<Vec<f64>>,
}

impl Target for BetaTarget<'_> {
    fn dim(&self) -> usize {
        self.data.n_fixed
    }

    fn log_density(&self, beta: &[f64]) -> f64 {
        let n_fixed = self.data.n_fixed;
        let mut ll = 0.0;
        let utils = &mut *self.scratch.borrow_mut();
        for (sd, rest) in self.data.students.iter().zip(self.rest) {
            utils.clear();
            utils.extend((0..sd.n_options).map(|o| {
                let mut u = rest[o];
                for (b, x) in beta.iter().zip(sd.fixed_row(o, n_fixed)) {
                    u += b * x;
                }
                u
            }));
            ll += staged_loglik(utils, &sd.ranked, self.denom);
        }
        ll
    }
}

/// One full Gibbs sweep (steps 1-5) in place.
pub fn gibbs_iteration(
    state: &mut GibbsState,
    data: &EstimationData,
    config: &GibbsConfig,
    schedule: &TuningSchedule,
) -> Result<()> {
    state.iter += 1;
    let iter = state.iter;
    let alpha = state.alpha();
    let beta = state.beta();
    let fe_dim = data.fe_dim();
    let n = data.n_students();

    if !config.freeze_random && n > 0 {
        // Step 1: per-student random coefficients.
        let inv_blocks = state.w.inverse_blocks()?;
        let offsets = state.w.offsets();
        for i in 0..n {
            let sd = &data.students[i];
            let base: Vec<f64> = (0..sd.n_options)
                .map(|o| {
                    let school = sd.school[o] as usize;
                    let mut u = if school < fe_dim { alpha[school] } else { 0.0 };
                    for (bk, x) in beta.iter().zip(sd.fixed_row(o, data.n_fixed)) {
                        u += bk * x;
                    }
                    u
                })
                .collect();
            let b = &state.b;
            let target = mcmc_kernels::FnTarget::new(data.n_random, |gamma: &[f64]| {
                let utils: Vec<f64> = (0..sd.n_options)
                    .map(|o| {
                        let mut u = base[o];
                        for (g, x) in gamma.iter().zip(sd.random_row(o, data.n_random)) {
                            u += g * x;
                        }
                        u
                    })
                    .collect();
                staged_loglik(&utils, &sd.ranked, config.denominator)
                    - 0.5 * CovBlocks::quad_form(&inv_blocks, &offsets, gamma, b)
            });
            let kernel = &mut state.gamma_kernels[i];
            let rng = &mut state.gamma_rngs[i];
            kernel.logp = None; // conditional changed: alpha, beta, b, W all moved
            rwm_step(kernel, &target, rng);
            kernel.maybe_tune(iter, schedule, rng);
        }

        // Step 2: mean of the random coefficients.
        let gamma_mean = state.gamma_mean();
        let mut b_new = DVector::zeros(data.n_random);
        for (offset, block) in state.w.offsets().into_iter().zip(state.w.blocks()) {
            let k = block.nrows();
            let mean = gamma_mean.rows(offset, k).into_owned();
            let cov = block / n as f64;
            let draw = sample_mvn(&mean, &cov, &mut state.main_rng)?;
            b_new.rows_mut(offset, k).copy_from(&draw);
        }
        state.b = b_new;

        // Step 3: block covariances from an inverse-Wishart draw.
        let mut new_blocks = Vec::with_capacity(state.w.blocks().len());
        for (offset, block) in state.w.offsets().into_iter().zip(state.w.blocks()) {
            let k = block.nrows();
            let mut scatter = DMatrix::<f64>::zeros(k, k);
            for kernel in &state.gamma_kernels {
                for i in 0..k {
                    for j in 0..k {
                        scatter[(i, j)] += (kernel.x[offset + i] - state.b[offset + i])
                            * (kernel.x[offset + j] - state.b[offset + j]);
                    }
                }
            }
            // scatter = n * C_l; psi = k_l I + n C_l, nu = k_l + n.
            let psi = DMatrix::identity(k, k) * k as f64 + scatter;
            let nu = (k + n) as f64;
            new_blocks.push(sample_inverse_wishart(nu, &psi, &mut state.main_rng)?);
        }
        state.w = CovBlocks::new(new_blocks)?;
    }

    // Step 4: school fixed effects by one HMC step.
    if let Some(alpha_kernel) = state.alpha_kernel.as_mut() {
        let rest: Vec<Vec<f64>> = data
            .students
            .iter()
            .enumerate()
            .map(|(i, sd)| {
                let gamma = &state.gamma_kernels[i].x;
                (0..sd.n_options)
                    .map(|o| {
                        let mut u = 0.0;
                        for (bk, x) in beta.iter().zip(sd.fixed_row(o, data.n_fixed)) {
                            u += bk * x;
                        }
                        for (g, x) in gamma.iter().zip(sd.random_row(o, data.n_random)) {
                            u += g * x;
                        }
                        u
                    })
                    .collect()
            })
            .collect();
        let target = AlphaTarget {
            data,
            rest: &rest,
            denom: config.denominator,
            scratch: RefCell::new((Vec::new(), Vec::new())),
        };
        alpha_kernel.logp = None;
        let info = hmc_step(alpha_kernel, &target, &mut state.main_rng);
        if info.divergent {
            state.divergences += 1;
        }
        alpha_kernel.maybe_tune(iter, schedule, &mut state.main_rng);
    }

    // Step 5: fixed coefficients by one MWG sweep.
    let alpha = state.alpha();
    let rest: Vec<Vec<f64>> = data
        .students
        .iter()
        .enumerate()
        .map(|(i, sd)| {
            let gamma = &state.gamma_kernels[i].x;
            (0..sd.n_options)
                .map(|o| {
                    let school = sd.school[o] as usize;
                    let mut u = if school < fe_dim { alpha[school] } else { 0.0 };
                    for (g, x) in gamma.iter().zip(sd.random_row(o, data.n_random)) {
                        u += g * x;
                    }
                    u
                })
                .collect()
        })
        .collect();
    let target = BetaTarget { data, rest: &rest, denom: config.denominator, scratch: RefCell::new(Vec::new()) };
    state.beta_kernel.logp = None;
    mwg_sweep(&mut state.beta_kernel, &target, &mut state.main_rng);
    for block in &mut state.beta_kernel.blocks {
        block.maybe_tune(iter, schedule, &mut state.main_rng);
    }

    // The sweep leaves the full conditional log-likelihood behind; a long
    // NaN streak means the chain has diverged.
    state.last_loglik = state.beta_kernel.logp.unwrap_or(f64::NAN);
    if state.last_loglik.is_nan() {
        state.nan_streak += 1;
        if state.nan_streak >= 100 {
            return Err(Error::Divergence(state.nan_streak));
        }
    } else {
        state.nan_streak = 0;
    }
    Ok(())
}

/// Chain-level diagnostics.
#[derive(Debug, Clone)]
pub struct ChainDiagnostics {
    pub acceptance: AcceptanceRates,
    pub divergences: u64,
    pub retained: usize,
    /// Iterations of every tuning event that fired, across all kernels.
    pub tune_event_iters: Vec<u64>,
}

/// Per-iteration trace record for the `--trace` diagnostics stream.
#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub iteration: u64,
    pub block: String,
    pub acceptance: f64,
    pub scale: f64,
}

/// Run a full chain and return the retained, thinned draws.
pub fn run_chain(
    data: &EstimationData,
    config: &GibbsConfig,
    mut trace: Option<&mut dyn FnMut(TraceRow)>,
) -> Result<(Vec<PosteriorSample>, ChainDiagnostics)> {
    let mut state = GibbsState::init(data, config)?;
    let schedule = TuningSchedule::new(Some(config.burn_in));
    let mut samples = Vec::new();

    for t in 1..=config.iterations {
        gibbs_iteration(&mut state, data, config, &schedule)?;
        if let Some(sink) = trace.as_deref_mut() {
            let rates = state.acceptance_rates();
            if let Some(alpha_rate) = rates.alpha {
                let eps = state.alpha_kernel.as_ref().map(|k| k.step_size).unwrap_or(f64::NAN);
                sink(TraceRow { iteration: t, block: "alpha".into(), acceptance: alpha_rate, scale: eps });
            }
            for (k, rate) in rates.beta.iter().enumerate() {
                sink(TraceRow {
                    iteration: t,
                    block: format!("beta/{k}"),
                    acceptance: *rate,
                    scale: state.beta_kernel.blocks[k].scale,
                });
            }
            if !config.freeze_random {
                let mean_scale = state.gamma_kernels.iter().map(|k| k.scale).sum::<f64>()
                    / state.gamma_kernels.len().max(1) as f64;
                sink(TraceRow { iteration: t, block: "gamma".into(), acceptance: rates.gamma, scale: mean_scale });
            }
        }
        if t > config.burn_in && (t - config.burn_in) % config.thin == 0 {
            samples.push(PosteriorSample { iteration: t, params: state.params(), gamma_mean: state.gamma_mean() });
        }
    }

    let mut tune_event_iters: Vec<u64> = Vec::new();
    if let Some(kernel) = &state.alpha_kernel {
        tune_event_iters.extend(kernel.tuner.events.iter().map(|e| e.iter));
    }
    for block in &state.beta_kernel.blocks {
        tune_event_iters.extend(block.tuner.events.iter().map(|e| e.iter));
    }
    for kernel in &state.gamma_kernels {
        tune_event_iters.extend(kernel.tuner.events.iter().map(|e| e.iter));
    }
    tune_event_iters.sort_unstable();

    let diagnostics = ChainDiagnostics {
        acceptance: state.acceptance_rates(),
        divergences: state.divergences,
        retained: samples.len(),
        tune_event_iters,
    };
    Ok((samples, diagnostics))
}

/// One named posterior series per reported quantity: every fixed
/// coefficient, every random-coefficient mean, the sigma of each random
/// feature, and the within-block correlations.
pub fn summary_series(
    samples: &[PosteriorSample],
    fixed_names: &[String],
    random_names: &[String],
) -> Vec<(String, Vec<f64>)> {
    let mut series: Vec<(String, Vec<f64>)> = Vec::new();
    if samples.is_empty() {
        return series;
    }
    for (k, name) in fixed_names.iter().enumerate() {
        series.push((name.clone(), samples.iter().map(|s| s.params.beta[k]).collect()));
    }
    for (k, name) in random_names.iter().enumerate() {
        series.push((name.clone(), samples.iter().map(|s| s.params.b[k]).collect()));
    }
    let offsets = samples[0].params.w.offsets();
    let sizes = samples[0].params.w.sizes();
    for (l, (&offset, &k)) in offsets.iter().zip(&sizes).enumerate() {
        for i in 0..k {
            let name = format!("sigma({})", random_names[offset + i]);
            series.push((
                name,
                samples.iter().map(|s| s.params.w.blocks()[l][(i, i)].sqrt()).collect(),
            ));
        }
        for i in 0..k {
            for j in i + 1..k {
                let name = format!("rho({},{})", random_names[offset + i], random_names[offset + j]);
                series.push((
                    name,
                    samples
                        .iter()
                        .map(|s| {
                            let w = &s.params.w.blocks()[l];
                            w[(i, j)] / (w[(i, i)].sqrt() * w[(j, j)].sqrt())
                        })
                        .collect(),
                ));
            }
        }
    }
    series
}

/// Posterior mean and SD of one reported quantity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryRow {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
}

/// Posterior means and SDs for the full coefficient table (fixed
/// coefficients, random-coefficient means, sigmas, within-block
/// correlations).
pub fn summarize_posterior(
    samples: &[PosteriorSample],
    fixed_names: &[String],
    random_names: &[String],
) -> Vec<SummaryRow> {
    summary_series(samples, fixed_names, random_names)
        .into_iter()
        .map(|(name, values)| {
            let n = values.len().max(1) as f64;
            let mean = values.iter().sum::<f64>() / n;
            let sd = if values.len() < 2 {
                0.0
            } else {
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            };
            SummaryRow { name, mean, sd }
        })
        .collect()
}
