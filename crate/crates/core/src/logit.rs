//! Rank-ordered multinomial logit: likelihood, analytic gradient, maximum
//! likelihood fitting with inverse-Hessian covariance, and closed-form
//! interpretation helpers.
//!
//! Utilities are `u = alpha_tilde[school] + beta . x` with iid standard
//! Gumbel taste shocks; a ranking's likelihood is the product over stages
//! of the softmax probability of the chosen option among the options still
//! in the stage's denominator (remaining ranked options by default, the
//! full remaining menu behind [`Denominator::FullMenu`]).

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::design::{Denominator, EstimationData, StudentDesign};
use crate::error::Error;
use crate::Result;

/// Coefficients of the plain logit model: `beta` over the fixed features
/// and one fixed effect per school except the last, which is normalized to
/// zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitParams {
    pub beta: DVector<f64>,
    pub alpha: DVector<f64>,
}

impl LogitParams {
    pub fn zeros(n_fixed: usize, fe_dim: usize) -> Self {
        LogitParams { beta: DVector::zeros(n_fixed), alpha: DVector::zeros(fe_dim) }
    }

    /// Fixed effect of school `s`, with the last school pinned at zero.
    pub fn alpha_tilde(&self, school: usize) -> f64 {
        if school < self.alpha.len() {
            self.alpha[school]
        } else {
            0.0
        }
    }

    pub fn flatten(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.beta.len() + self.alpha.len(),
            self.beta.iter().chain(self.alpha.iter()).copied(),
        )
    }

    pub fn unflatten(theta: &DVector<f64>, n_fixed: usize) -> Self {
        LogitParams {
            beta: DVector::from_iterator(n_fixed, theta.iter().take(n_fixed).copied()),
            alpha: DVector::from_iterator(theta.len() - n_fixed, theta.iter().skip(n_fixed).copied()),
        }
    }
}

/// A converged fit: point estimates, inverse-Hessian covariance, and
/// bookkeeping for downstream coefficient draws.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogitFit {
    pub params: LogitParams,
    pub feature_names: Vec<String>,
    pub school_ids: Vec<String>,
    /// Covariance of the stacked parameter vector `[beta; alpha]`.
    pub covariance: DMatrix<f64>,
    pub std_errors: DVector<f64>,
    pub log_likelihood: f64,
    pub n_students: usize,
    pub n_choices: usize,
    pub iterations: usize,
    pub denominator: Denominator,
}

impl LogitFit {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.feature_names.iter().position(|n| n == name).map(|i| self.params.beta[i])
    }
}

pub(crate) fn logaddexp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Log-likelihood of one student's ranking given per-option utilities.
pub(crate) fn staged_loglik(utils: &[f64], ranked: &[u32], denom: Denominator) -> f64 {
    match denom {
        Denominator::Ranked => {
            let mut ll = 0.0;
            let mut running = f64::NEG_INFINITY;
            for &y in ranked.iter().rev() {
                let u = utils[y as usize];
                running = logaddexp(running, u);
                ll += u - running;
            }
            ll
        }
        Denominator::FullMenu => {
            let mut ll = 0.0;
            let mut taken = vec![false; utils.len()];
            for &y in ranked {
                let mut denom_lse = f64::NEG_INFINITY;
                for (o, &u) in utils.iter().enumerate() {
                    if !taken[o] {
                        denom_lse = logaddexp(denom_lse, u);
                    }
                }
                ll += utils[y as usize] - denom_lse;
                taken[y as usize] = true;
            }
            ll
        }
    }
}

/// Accumulate d(loglik)/d(utility) for one student into `w` (one weight
/// per option): +1 on each chosen option, minus the stage choice
/// probabilities over the stage's denominator set.
pub(crate) fn staged_weights(utils: &[f64], ranked: &[u32], denom: Denominator, w: &mut [f64]) {
    match denom {
        Denominator::Ranked => {
            for c in 0..ranked.len() {
                let suffix = &ranked[c..];
                let max = suffix.iter().map(|&y| utils[y as usize]).fold(f64::NEG_INFINITY, f64::max);
                let z: f64 = suffix.iter().map(|&y| (utils[y as usize] - max).exp()).sum();
                w[ranked[c] as usize] += 1.0;
                for &y in suffix {
                    w[y as usize] -= (utils[y as usize] - max).exp() / z;
                }
            }
        }
        Denominator::FullMenu => {
            let mut taken = vec![false; utils.len()];
            for &chosen in ranked {
                let max = utils
                    .iter()
                    .enumerate()
                    .filter(|(o, _)| !taken[*o])
                    .map(|(_, &u)| u)
                    .fold(f64::NEG_INFINITY, f64::max);
                let z: f64 = utils
                    .iter()
                    .enumerate()
                    .filter(|(o, _)| !taken[*o])
                    .map(|(_, &u)| (u - max).exp())
                    .sum();
                w[chosen as usize] += 1.0;
                for (o, &u) in utils.iter().enumerate() {
                    if !taken[o] {
                        w[o] -= (u - max).exp() / z;
                    }
                }
                taken[chosen as usize] = true;
            }
        }
    }
}

/// Per-option utilities for one student design under plain-logit
/// parameters.
pub(crate) fn design_utilities(params: &LogitParams, sd: &StudentDesign, n_fixed: usize) -> Vec<f64> {
    (0..sd.n_options)
        .map(|o| {
            let x = sd.fixed_row(o, n_fixed);
            let mut u = params.alpha_tilde(sd.school[o] as usize);
            for (b, xi) in params.beta.iter().zip(x) {
                u += b * xi;
            }
            u
        })
        .collect()
}

/// Log-likelihood of the whole dataset (log-sum-exp stabilized, always
/// <= 0).
pub fn rank_loglik(params: &LogitParams, data: &EstimationData, denom: Denominator) -> Result<f64> {
    check_params(params, data)?;
    let mut ll = 0.0;
    for sd in &data.students {
        let utils = design_utilities(params, sd, data.n_fixed);
        ll += staged_loglik(&utils, &sd.ranked, denom);
    }
    if ll.is_nan() {
        return Err(Error::Numerical("log-likelihood is NaN".into()));
    }
    Ok(ll)
}

/// Analytic gradient of [`rank_loglik`] with respect to `[beta; alpha]`.
pub fn rank_loglik_grad(params: &LogitParams, data: &EstimationData, denom: Denominator) -> Result<DVector<f64>> {
    Ok(loglik_and_grad(params, data, denom)?.1)
}

fn check_params(params: &LogitParams, data: &EstimationData) -> Result<()> {
    if params.beta.len() != data.n_fixed || params.alpha.len() != data.fe_dim() {
        return Err(Error::Config(format!(
            "parameter dimensions ({}, {}) do not match design ({}, {})",
            params.beta.len(),
            params.alpha.len(),
            data.n_fixed,
            data.fe_dim()
        )));
    }
    if !params.beta.iter().chain(params.alpha.iter()).all(|v| v.is_finite()) {
        return Err(Error::Numerical("non-finite parameter value".into()));
    }
    Ok(())
}

pub fn loglik_and_grad(
    params: &LogitParams,
    data: &EstimationData,
    denom: Denominator,
) -> Result<(f64, DVector<f64>)> {
    check_params(params, data)?;
    let n_fixed = data.n_fixed;
    let fe_dim = data.fe_dim();
    let mut ll = 0.0;
    let mut grad = DVector::zeros(n_fixed + fe_dim);
    let mut weights = Vec::new();
    for sd in &data.students {
        let utils = design_utilities(params, sd, n_fixed);
        ll += staged_loglik(&utils, &sd.ranked, denom);
        weights.clear();
        weights.resize(sd.n_options, 0.0);
        staged_weights(&utils, &sd.ranked, denom, &mut weights);
        for (o, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (k, &x) in sd.fixed_row(o, n_fixed).iter().enumerate() {
                grad[k] += w * x;
            }
            let school = sd.school[o] as usize;
            if school < fe_dim {
                grad[n_fixed + school] += w;
            }
        }
    }
    if ll.is_nan() || grad.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite likelihood or gradient".into()));
    }
    Ok((ll, grad))
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub denominator: Denominator,
    pub max_iters: usize,
    /// Coefficients larger than this magnitude after convergence are
    /// reported as separation.
    pub separation_threshold: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { denominator: Denominator::Ranked, max_iters: 500, separation_threshold: 50.0 }
    }
}

/// Maximum likelihood fit by BFGS with an Armijo backtracking line search
/// and analytic gradients. The covariance matrix is the inverse of the
/// negated finite-difference Hessian (central differences of the analytic
/// gradient) at the optimum.
pub fn fit_mle(data: &EstimationData, options: &FitOptions) -> Result<LogitFit> {
    if !data.students.iter().any(|s| s.ranked.len() >= 2) {
        return Err(Error::Config("need at least one student ranking two or more options".into()));
    }
    let n = data.n_params();
    let denom = options.denominator;
    let eval = |theta: &DVector<f64>| -> Result<(f64, DVector<f64>)> {
        let params = LogitParams::unflatten(theta, data.n_fixed);
        loglik_and_grad(&params, data, denom)
    };

    let mut theta = DVector::zeros(n);
    let (mut ll, mut grad) = eval(&theta)?;
    let mut h_inv = DMatrix::<f64>::identity(n, n);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < options.max_iters {
        let grad_norm = grad.norm();
        if grad_norm < 1e-6 * (1.0 + ll.abs()) {
            converged = true;
            break;
        }
        iterations += 1;

        // Ascent direction on the log-likelihood.
        let mut direction = &h_inv * &grad;
        if direction.dot(&grad) <= 0.0 {
            h_inv = DMatrix::identity(n, n);
            direction = grad.clone();
        }

        let slope = grad.dot(&direction);
        let mut step = 1.0;
        let mut accepted = None;
        while step > 1e-14 {
            let candidate = &theta + &direction * step;
            match eval(&candidate) {
                Ok((ll_new, grad_new)) if ll_new.is_finite() && ll_new >= ll + 1e-4 * step * slope => {
                    accepted = Some((candidate, ll_new, grad_new));
                    break;
                }
                _ => step *= 0.5,
            }
        }
        let Some((theta_new, ll_new, grad_new)) = accepted else {
            // No progress possible along this direction.
            break;
        };

        let s = &theta_new - &theta;
        let y = &grad_new - &grad;
        // BFGS update on the inverse Hessian of -loglik; with gradients of
        // loglik the curvature condition flips sign.
        let sy = -s.dot(&y);
        if sy > 1e-10 * s.norm() * y.norm() {
            let rho = 1.0 / sy;
            let hy = &h_inv * (-&y);
            let yhy = (-&y).dot(&hy);
            let term1 = (&s * s.transpose()) * (rho * rho * yhy + rho);
            let term2 = (&hy * s.transpose() + &s * hy.transpose()) * rho;
            h_inv = h_inv + term1 - term2;
        }

        theta = theta_new;
        ll = ll_new;
        grad = grad_new;
    }

    if !converged {
        let grad_norm = grad.norm();
        if grad_norm >= 1e-6 * (1.0 + ll.abs()) {
            // Distinguish runaway coefficients from a stuck line search.
            if let Some((k, value)) = worst_coefficient(&theta, options.separation_threshold) {
                return Err(Error::Separation { name: param_name(data, k), value });
            }
            return Err(Error::NoConvergence { iters: iterations, grad_norm });
        }
    }
    if let Some((k, value)) = worst_coefficient(&theta, options.separation_threshold) {
        return Err(Error::Separation { name: param_name(data, k), value });
    }

    let hessian = fd_hessian(&eval, &theta)?;
    let neg_hessian = -&hessian;
    let covariance = match Cholesky::new(neg_hessian.clone()) {
        Some(chol) => chol.inverse(),
        None => {
            let min_eig = neg_hessian.symmetric_eigen().eigenvalues.min();
            return Err(Error::SingularHessian(min_eig));
        }
    };
    let std_errors = DVector::from_iterator(n, (0..n).map(|i| covariance[(i, i)].max(0.0).sqrt()));

    Ok(LogitFit {
        params: LogitParams::unflatten(&theta, data.n_fixed),
        feature_names: data.fixed_names.clone(),
        school_ids: data.school_ids.clone(),
        covariance,
        std_errors,
        log_likelihood: ll,
        n_students: data.n_students(),
        n_choices: data.n_choices(),
        iterations,
        denominator: denom,
    })
}

fn worst_coefficient(theta: &DVector<f64>, threshold: f64) -> Option<(usize, f64)> {
    theta
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > threshold)
        .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
        .map(|(k, &v)| (k, v))
}

fn param_name(data: &EstimationData, k: usize) -> String {
    if k < data.n_fixed {
        data.fixed_names[k].clone()
    } else {
        format!("fixed effect {}", data.school_ids[k - data.n_fixed])
    }
}

/// Central finite differences of the analytic gradient, symmetrized.
fn fd_hessian<F>(eval: &F, theta: &DVector<f64>) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Result<(f64, DVector<f64>)>,
{
    let n = theta.len();
    let mut h = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let step = 1e-5 * (1.0 + theta[i].abs());
        let mut up = theta.clone();
        up[i] += step;
        let mut down = theta.clone();
        down[i] -= step;
        let (_, g_up) = eval(&up)?;
        let (_, g_down) = eval(&down)?;
        let column = (g_up - g_down) / (2.0 * step);
        for j in 0..n {
            h[(j, i)] = column[j];
        }
    }
    Ok((&h + h.transpose()) * 0.5)
}

/// How many extra miles a family would travel for one unit of `feature`:
/// `-beta[feature] / beta[distance]`.
pub fn willingness_to_travel(fit: &LogitFit, feature: &str) -> Result<f64> {
    let beta_feature = fit
        .coefficient(feature)
        .ok_or_else(|| Error::Config(format!("no coefficient named {feature:?}")))?;
    let beta_distance = fit
        .coefficient("distance")
        .ok_or_else(|| Error::Config("no distance coefficient in this specification".into()))?;
    if beta_distance == 0.0 {
        return Err(Error::Numerical("zero distance coefficient".into()));
    }
    Ok(-beta_feature / beta_distance)
}
