use mcmc_kernels::{
    diagnostics::ess, hmc_propose, hmc_step, mwg_sweep, rwm_step, sample_inverse_wishart, BlockPartition, FnTarget,
    HmcState, KernelError, MwgState, RwmState, Target, TuningSchedule,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Standard normal in `dim` dimensions with analytic gradient.
struct StdNormal {
    dim: usize,
}

impl Target for StdNormal {
    fn dim(&self) -> usize {
        self.dim
    }
    fn log_density(&self, x: &[f64]) -> f64 {
        -0.5 * x.iter().map(|v| v * v).sum::<f64>()
    }
    fn grad_log_density(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(x.iter().map(|v| -v).collect())
    }
}

/// AR(1)-correlated Gaussian via its tridiagonal precision matrix.
struct Ar1Gaussian {
    dim: usize,
    rho: f64,
}

impl Ar1Gaussian {
    fn precision_quadform(&self, x: &[f64]) -> f64 {
        let r = self.rho;
        let scale = 1.0 / (1.0 - r * r);
        let n = self.dim;
        let mut q = x[0] * x[0] + x[n - 1] * x[n - 1];
        for v in x.iter().take(n - 1).skip(1) {
            q += (1.0 + r * r) * v * v;
        }
        for t in 0..n - 1 {
            q -= 2.0 * r * x[t] * x[t + 1];
        }
        q * scale
    }
}

impl Target for Ar1Gaussian {
    fn dim(&self) -> usize {
        self.dim
    }
    fn log_density(&self, x: &[f64]) -> f64 {
        -0.5 * self.precision_quadform(x)
    }
    fn grad_log_density(&self, x: &[f64]) -> Option<Vec<f64>> {
        let r = self.rho;
        let scale = 1.0 / (1.0 - r * r);
        let n = self.dim;
        let mut g = vec![0.0; n];
        for t in 0..n {
            let diag = if t == 0 || t == n - 1 { 1.0 } else { 1.0 + r * r };
            let mut v = diag * x[t];
            if t > 0 {
                v -= r * x[t - 1];
            }
            if t + 1 < n {
                v -= r * x[t + 1];
            }
            g[t] = -scale * v;
        }
        Some(g)
    }
}

#[test]
fn rwm_constant_target_accepts_everything() {
    let target = FnTarget::new(3, |_x: &[f64]| 0.0);
    let mut r = rng(1);
    let mut state = RwmState::with_defaults(vec![0.0; 3], 0.7, &mut r);
    for _ in 0..2_000 {
        rwm_step(&mut state, &target, &mut r);
    }
    assert_eq!(state.accepted, state.proposed);
}

#[test]
fn rwm_standard_normal_moments() {
    let target = StdNormal { dim: 1 };
    let mut r = rng(2);
    let mut state = RwmState::with_defaults(vec![0.0], 2.4, &mut r);
    let n = 100_000usize;
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for _ in 0..n {
        rwm_step(&mut state, &target, &mut r);
        sum += state.x[0];
        sumsq += state.x[0] * state.x[0];
    }
    let mean = sum / n as f64;
    let var = sumsq / n as f64 - mean * mean;
    assert!(mean.abs() < 0.05, "mean {mean}");
    assert!((0.9..=1.1).contains(&var), "var {var}");
}

#[test]
fn rwm_rejects_impossible_regions_without_moving() {
    // Density is -inf everywhere except the starting point's tiny box, so
    // every proposal lands in an impossible region and must be rejected.
    let target = FnTarget::new(2, |x: &[f64]| {
        if x.iter().all(|v| v.abs() < 1e-12) {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    });
    let mut r = rng(3);
    let mut state = RwmState::with_defaults(vec![0.0, 0.0], 1.0, &mut r);
    for _ in 0..200 {
        rwm_step(&mut state, &target, &mut r);
    }
    assert_eq!(state.x, vec![0.0, 0.0]);
    assert_eq!(state.accepted, 0);
}

#[test]
fn rwm_treats_nan_as_rejection() {
    let target = FnTarget::new(1, |x: &[f64]| if x[0] == 0.0 { 0.0 } else { f64::NAN });
    let mut r = rng(4);
    let mut state = RwmState::with_defaults(vec![0.0], 1.0, &mut r);
    let mut divergent = 0;
    for _ in 0..100 {
        let info = rwm_step(&mut state, &target, &mut r);
        if info.divergent {
            divergent += 1;
        }
    }
    assert_eq!(state.x[0], 0.0);
    assert_eq!(divergent, 100);
}

#[test]
fn rwm_seed_replay_reproduces_trajectory() {
    let target = StdNormal { dim: 3 };
    let run = |seed: u64| {
        let mut r = rng(seed);
        let mut state = RwmState::with_defaults(vec![0.1, -0.2, 0.3], 1.0, &mut r);
        let mut traj = Vec::new();
        for _ in 0..500 {
            rwm_step(&mut state, &target, &mut r);
            traj.push(state.x.clone());
        }
        traj
    };
    assert_eq!(run(42), run(42));
    assert_ne!(run(42), run(43));
}

#[test]
fn hmc_small_step_acceptance_approaches_one() {
    // Quadratic target, eps -> 0 with eps * n_leapfrog held small: leapfrog
    // conserves the Hamiltonian almost exactly, so nearly every proposal is
    // accepted.
    let target = StdNormal { dim: 2 };
    let mut r = rng(5);
    let mut state = HmcState::new(vec![0.3, -0.4], 1e-4, 100, (1000.0, 1000.0), &mut r);
    let n = 2_000u64;
    for _ in 0..n {
        hmc_step(&mut state, &target, &mut r);
    }
    let rate = state.accepted as f64 / state.proposed as f64;
    assert!(rate >= 0.999, "acceptance {rate}");
}

#[test]
fn hmc_zero_momentum_zero_gradient_is_identity() {
    let target = FnTarget::with_grad(2, |_x: &[f64]| 0.0, |_x: &[f64]| vec![0.0, 0.0]);
    let x = vec![1.5, -2.5];
    let (y, p) = hmc_propose(&x, &[0.0, 0.0], 0.1, 20, &target).unwrap();
    assert_eq!(y, x);
    assert_eq!(p, vec![0.0, 0.0]);
    // Acceptance ratio is exp(0) = 1: the step is always accepted.
}

#[test]
fn hmc_recovers_gaussian_moments() {
    let target = StdNormal { dim: 2 };
    let mut r = rng(6);
    let mut state = HmcState::new(vec![0.0, 0.0], 0.5, 10, (1000.0, 1000.0), &mut r);
    let n = 20_000usize;
    let mut sum = [0.0f64; 2];
    let mut sumsq = [0.0f64; 2];
    for _ in 0..n {
        hmc_step(&mut state, &target, &mut r);
        for d in 0..2 {
            sum[d] += state.x[d];
            sumsq[d] += state.x[d] * state.x[d];
        }
    }
    for d in 0..2 {
        let mean = sum[d] / n as f64;
        let var = sumsq[d] / n as f64 - mean * mean;
        assert!(mean.abs() < 0.05, "mean[{d}] = {mean}");
        assert!((0.9..=1.1).contains(&var), "var[{d}] = {var}");
    }
}

#[test]
fn hmc_divergent_gradient_rejects_with_diagnostic() {
    let target = FnTarget::with_grad(1, |x: &[f64]| -0.5 * x[0] * x[0], |_x: &[f64]| vec![f64::NAN]);
    let mut r = rng(7);
    let mut state = HmcState::new(vec![0.5], 0.1, 5, (1000.0, 1000.0), &mut r);
    let info = hmc_step(&mut state, &target, &mut r);
    assert!(info.divergent && !info.accepted);
    assert_eq!(state.x, vec![0.5]);
}

#[test]
fn hmc_energy_error_scales_quadratically_in_step_size() {
    // Fixed total integration time eps * n; the leapfrog energy error on a
    // quadratic target shrinks as O(eps^2), i.e. slope 2 on a log-log plot.
    let target = StdNormal { dim: 2 };
    let mut r = rng(8);
    let total_time = 2.0;
    let mut log_eps = Vec::new();
    let mut log_err = Vec::new();
    for &eps in &[0.4f64, 0.2, 0.1, 0.05] {
        let n_leap = (total_time / eps).round() as u32;
        let mut acc = 0.0;
        let reps = 300;
        for _ in 0..reps {
            let x: Vec<f64> = (0..2).map(|_| r.sample::<f64, _>(rand_distr::StandardNormal)).collect();
            let p0: Vec<f64> = (0..2).map(|_| r.sample::<f64, _>(rand_distr::StandardNormal)).collect();
            let (y, p) = hmc_propose(&x, &p0, eps, n_leap, &target).unwrap();
            let h0 = -target.log_density(&x) + p0.iter().map(|v| v * v).sum::<f64>() / 2.0;
            let h1 = -target.log_density(&y) + p.iter().map(|v| v * v).sum::<f64>() / 2.0;
            acc += (h1 - h0).abs();
        }
        log_eps.push(eps.ln());
        log_err.push((acc / reps as f64).ln());
    }
    let n = log_eps.len() as f64;
    let mx = log_eps.iter().sum::<f64>() / n;
    let my = log_err.iter().sum::<f64>() / n;
    let sxy: f64 = log_eps.iter().zip(&log_err).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = log_eps.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    assert!((slope - 2.0).abs() <= 0.3, "slope {slope}");
}

#[test]
fn mwg_single_block_matches_plain_rwm() {
    let target = StdNormal { dim: 3 };
    let partition = BlockPartition::new(vec![vec![0, 1, 2]], 3).unwrap();

    let mut r1 = rng(9);
    let mut rwm = RwmState::new(vec![0.5, 0.5, 0.5], 0.8, (0.4, 0.6), (1000.0, 1500.0), &mut r1);
    let mut r2 = rng(9);
    let mut mwg = MwgState::new(vec![0.5, 0.5, 0.5], &partition, &[0.8], (0.4, 0.6), (1000.0, 1500.0), &mut r2).unwrap();

    for _ in 0..500 {
        rwm_step(&mut rwm, &target, &mut r1);
        mwg_sweep(&mut mwg, &target, &mut r2);
        assert_eq!(rwm.x, mwg.x);
    }
}

#[test]
fn mwg_two_scale_blocks_mix_where_single_scale_rwm_cannot() {
    // Independent Gaussians with standard deviations 1 and 100. Per-block
    // tuning finds a usable scale for each block; a single shared scale is
    // pinned near the small block and leaves the wide coordinate nearly
    // frozen relative to its scale.
    let target = FnTarget::new(2, |x: &[f64]| -0.5 * (x[0] * x[0] + x[1] * x[1] / 1e4));
    let schedule = TuningSchedule::new(Some(4000));

    let partition = BlockPartition::new(vec![vec![0], vec![1]], 2).unwrap();
    let mut r = rng(10);
    let mut mwg = MwgState::new(vec![0.0, 0.0], &partition, &[1.0, 1.0], (0.4, 0.6), (100.0, 150.0), &mut r).unwrap();
    for iter in 0..4000u64 {
        mwg_sweep(&mut mwg, &target, &mut r);
        for block in &mut mwg.blocks {
            block.maybe_tune(iter, &schedule, &mut r);
        }
    }
    for block in &mut mwg.blocks {
        block.accepted = 0;
        block.proposed = 0;
    }
    let mut mwg_wide = Vec::with_capacity(2000);
    for _ in 0..2000 {
        mwg_sweep(&mut mwg, &target, &mut r);
        mwg_wide.push(mwg.x[1]);
    }
    for (i, block) in mwg.blocks.iter().enumerate() {
        let rate = block.accepted as f64 / block.proposed as f64;
        assert!(rate >= 0.2, "block {i} acceptance {rate}");
    }

    // Single-scale RWM with the same step budget, tuned to the same band.
    let mut r = rng(11);
    let mut rwm = RwmState::with_defaults(vec![0.0, 0.0], 1.0, &mut r);
    rwm.tuner.base_interval = (100.0, 150.0);
    let mut rwm_wide = Vec::with_capacity(2000);
    for iter in 0..6000u64 {
        rwm_step(&mut rwm, &target, &mut r);
        rwm.maybe_tune(iter, &schedule, &mut r);
        if iter >= 4000 {
            rwm_wide.push(rwm.x[1]);
        }
    }
    assert!(rwm.scale < 10.0, "tuned shared scale {} should hug the narrow block", rwm.scale);

    let ess_mwg = ess(&mwg_wide);
    let ess_rwm = ess(&rwm_wide);
    assert!(
        ess_mwg > 4.0 * ess_rwm,
        "wide-coordinate ESS: mwg {ess_mwg:.1} vs rwm {ess_rwm:.1}"
    );
}

#[test]
fn mwg_rejects_bad_partitions() {
    assert!(matches!(
        BlockPartition::new(vec![vec![0, 1], vec![1]], 2),
        Err(KernelError::BadPartition(_))
    ));
    assert!(matches!(
        BlockPartition::new(vec![vec![0]], 2),
        Err(KernelError::BadPartition(_))
    ));
    assert!(matches!(
        BlockPartition::new(vec![vec![0, 2]], 2),
        Err(KernelError::BadPartition(_))
    ));
}

#[test]
fn hmc_beats_rwm_per_evaluation_in_high_correlated_dimension() {
    // 75-dimensional AR(1) Gaussian with rho = 0.9. Budget is matched in
    // density/gradient evaluations; HMC pays n_leapfrog + 1 gradient calls
    // per step.
    let target = Ar1Gaussian { dim: 75, rho: 0.9 };
    let schedule = TuningSchedule::new(Some(10_000));

    let mut r = rng(12);
    let mut rwm = RwmState::with_defaults(vec![0.0; 75], 0.2, &mut r);
    rwm.tuner.base_interval = (200.0, 300.0);
    let rwm_steps = 30_000u64;
    let mut rwm_chain = Vec::with_capacity(rwm_steps as usize);
    for iter in 0..rwm_steps {
        rwm_step(&mut rwm, &target, &mut r);
        rwm.maybe_tune(iter, &schedule, &mut r);
        rwm_chain.push(rwm.x[0]);
    }

    let mut r = rng(13);
    let n_leap = 20u32;
    let mut hmc = HmcState::new(vec![0.0; 75], 0.2, n_leap, (50.0, 60.0), &mut r);
    let hmc_steps = 1_500u64;
    let mut hmc_chain = Vec::with_capacity(hmc_steps as usize);
    for iter in 0..hmc_steps {
        hmc_step(&mut hmc, &target, &mut r);
        hmc.maybe_tune(iter, &schedule, &mut r);
        hmc_chain.push(hmc.x[0]);
    }

    let rwm_evals = rwm_steps as f64;
    let hmc_evals = hmc_steps as f64 * (n_leap as f64 + 1.0);
    let rwm_eff = ess(&rwm_chain) / rwm_evals;
    let hmc_eff = ess(&hmc_chain) / hmc_evals;
    assert!(
        hmc_eff > rwm_eff,
        "ESS per evaluation: hmc {hmc_eff:.5} vs rwm {rwm_eff:.5}"
    );
}

#[test]
fn inverse_wishart_univariate_mean() {
    // dim 1, nu = 5, psi = 3: mean is psi / (nu - 2) = 1.
    let mut r = rng(14);
    let psi = DMatrix::from_element(1, 1, 3.0);
    let n = 100_000;
    let mut acc = 0.0;
    for _ in 0..n {
        acc += sample_inverse_wishart(5.0, &psi, &mut r).unwrap()[(0, 0)];
    }
    let mean = acc / n as f64;
    assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
}

#[test]
fn inverse_wishart_trivariate_mean() {
    // dim 3, nu = 10, psi = I: mean is I / (10 - 3 - 1) = I / 6.
    let mut r = rng(15);
    let psi = DMatrix::<f64>::identity(3, 3);
    let n = 100_000;
    let mut acc = DMatrix::<f64>::zeros(3, 3);
    for _ in 0..n {
        acc += sample_inverse_wishart(10.0, &psi, &mut r).unwrap();
    }
    let mean = acc / n as f64;
    let expected = DMatrix::<f64>::identity(3, 3) / 6.0;
    for i in 0..3 {
        for j in 0..3 {
            assert!(
                (mean[(i, j)] - expected[(i, j)]).abs() < 0.01,
                "entry ({i},{j}) = {}",
                mean[(i, j)]
            );
        }
    }
}

#[test]
fn inverse_wishart_draws_are_spd() {
    let mut r = rng(16);
    // Random SPD scale: psi = B B^T + 0.5 I.
    let b = DMatrix::from_fn(4, 4, |_, _| r.random::<f64>() - 0.5);
    let psi = &b * b.transpose() + DMatrix::<f64>::identity(4, 4) * 0.5;
    for _ in 0..10_000 {
        let w = sample_inverse_wishart(8.0, &psi, &mut r).unwrap();
        assert!(nalgebra::Cholesky::new(w).is_some());
    }
}

#[test]
fn inverse_wishart_validates_inputs() {
    let mut r = rng(17);
    let psi = DMatrix::<f64>::identity(3, 3);
    assert!(matches!(
        sample_inverse_wishart(1.5, &psi, &mut r),
        Err(KernelError::BadDegreesOfFreedom { .. })
    ));
    let not_spd = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
    assert!(matches!(
        sample_inverse_wishart(5.0, &not_spd, &mut r),
        Err(KernelError::NotPositiveDefinite)
    ));
}

#[test]
fn metropolis_acceptance_rule_satisfies_detailed_balance_on_discrete_target() {
    // Three-state chain with symmetric uniform proposals and the same
    // min(1, L(y)/L(x)) rule the continuous kernels use; long-run
    // frequencies must match the target within 1% absolute.
    let probs = [0.2f64, 0.3, 0.5];
    let mut r = rng(18);
    let mut state = 0usize;
    let mut counts = [0u64; 3];
    let steps = 300_000;
    for _ in 0..steps {
        let other = [(state + 1) % 3, (state + 2) % 3];
        let proposal = other[r.random_range(0..2usize)];
        if r.random::<f64>() < (probs[proposal] / probs[state]).min(1.0) {
            state = proposal;
        }
        counts[state] += 1;
    }
    for (i, &p) in probs.iter().enumerate() {
        let freq = counts[i] as f64 / steps as f64;
        assert!((freq - p).abs() < 0.01, "state {i}: {freq} vs {p}");
    }
}

#[test]
fn no_tuning_fires_after_freeze() {
    let target = StdNormal { dim: 2 };
    let schedule = TuningSchedule::new(Some(1_000));
    let mut r = rng(19);
    let mut state = RwmState::new(vec![0.0, 0.0], 0.05, (0.4, 0.6), (50.0, 80.0), &mut r);
    for iter in 0..5_000u64 {
        rwm_step(&mut state, &target, &mut r);
        state.maybe_tune(iter, &schedule, &mut r);
    }
    assert!(!state.tuner.events.is_empty());
    assert!(state.tuner.events.iter().all(|e| e.iter < 1_000));
}

#[test]
fn tuning_interval_grows_with_schedule() {
    let schedule = TuningSchedule::default();
    assert_eq!(schedule.t_factor(0), 1.0);
    assert_eq!(schedule.t_factor(4_999), 1.0);
    assert!((schedule.t_factor(5_000) - 1.2).abs() < 1e-12);
    assert!((schedule.t_factor(25_000) - 1.2f64.powi(5)).abs() < 1e-12);
}
