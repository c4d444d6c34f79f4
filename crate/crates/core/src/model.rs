//! The demand-model abstraction the simulator runs against: anything that
//! can emit a ranking over a menu for a student.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gumbel};
use serde::{Deserialize, Serialize};

use mcmc_kernels::sample_mvn;

use crate::domain::{ChoiceMenu, ProgramTable, Student};
use crate::error::Error;
use crate::features::{feature_vectors, FeatureSpec};
use crate::logit::{LogitFit, LogitParams};
use crate::mixedlogit::{MixedLogitParams, PosteriorSample};
use crate::naive::rank_naive;
use crate::{Result, MAX_RANKED_CHOICES};

/// A fitted demand model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum DemandModel {
    /// The rule hierarchy; has no parameters.
    Naive,
    Logit { spec: FeatureSpec, fit: LogitFit },
    MixedLogit { samples: Vec<PosteriorSample> },
}

/// Parameters drawn for one simulated market (the coefficient-uncertainty
/// layer). The naive model has no coefficients and skips the draw.
#[derive(Debug, Clone)]
pub enum DrawnParams {
    Naive,
    Logit { spec: FeatureSpec, params: LogitParams },
    Mixed(MixedLogitParams),
}

impl DemandModel {
    pub fn name(&self) -> &'static str {
        match self {
            DemandModel::Naive => "naive",
            DemandModel::Logit { .. } => "logit",
            DemandModel::MixedLogit { .. } => "mlogit",
        }
    }

    /// Draw one set of coefficients: jointly normal around the point
    /// estimates for the logit model, a uniformly drawn retained posterior
    /// sample for the mixed logit.
    pub fn draw_params<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DrawnParams> {
        match self {
            DemandModel::Naive => Ok(DrawnParams::Naive),
            DemandModel::Logit { spec, fit } => {
                let theta = sample_mvn(&fit.params.flatten(), &fit.covariance, rng)?;
                Ok(DrawnParams::Logit { spec: *spec, params: LogitParams::unflatten(&theta, fit.params.beta.len()) })
            }
            DemandModel::MixedLogit { samples } => {
                if samples.is_empty() {
                    return Err(Error::Config("mixed logit model has no retained posterior samples".into()));
                }
                let pick = rng.random_range(0..samples.len());
                Ok(DrawnParams::Mixed(samples[pick].params.clone()))
            }
        }
    }

    /// Point-estimate parameters (no coefficient draw): used when the
    /// coefficient layer is held fixed.
    pub fn point_params(&self) -> Result<DrawnParams> {
        match self {
            DemandModel::Naive => Ok(DrawnParams::Naive),
            DemandModel::Logit { spec, fit } => Ok(DrawnParams::Logit { spec: *spec, params: fit.params.clone() }),
            DemandModel::MixedLogit { samples } => {
                let last = samples.last().ok_or_else(|| Error::Config("no posterior samples".into()))?;
                Ok(DrawnParams::Mixed(last.params.clone()))
            }
        }
    }
}

/// Simulate one student's submitted ranking (layer 3): Gumbel taste shocks
/// on top of the drawn parameters, sorted best-first and truncated to ten.
pub fn simulate_ranking<R: Rng + ?Sized>(
    drawn: &DrawnParams,
    student: &Student,
    menu: &ChoiceMenu,
    table: &ProgramTable,
    rng: &mut R,
) -> Result<Vec<usize>> {
    match drawn {
        DrawnParams::Naive => {
            let mut ranking = rank_naive(student, menu, table);
            ranking.truncate(MAX_RANKED_CHOICES);
            Ok(ranking)
        }
        DrawnParams::Logit { spec, params } => {
            let utilities = logit_menu_utilities(params, *spec, student, menu, table);
            Ok(gumbel_rank(&utilities, &menu.options, rng, MAX_RANKED_CHOICES))
        }
        DrawnParams::Mixed(params) => simulate_ranking_mixed(params, student, menu, table, rng),
    }
}

/// Mixed-logit preference draw: instantiate `gamma ~ Normal(b, W)` for the
/// student, add Gumbel shocks, sort, truncate to ten.
pub fn simulate_ranking_mixed<R: Rng + ?Sized>(
    params: &MixedLogitParams,
    student: &Student,
    menu: &ChoiceMenu,
    table: &ProgramTable,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let gamma = params.w.sample_gamma(&params.b, rng)?;
    let utilities: Vec<f64> = menu
        .options
        .iter()
        .zip(&menu.distances)
        .map(|(&p, &dist)| {
            let fv = feature_vectors(student, p, dist, table);
            let mut u = params.alpha_tilde(fv.school_index);
            for (b, x) in params.beta.iter().zip(&fv.fixed) {
                u += b * x;
            }
            for (g, x) in gamma.iter().zip(&fv.random) {
                u += g * x;
            }
            u
        })
        .collect();
    Ok(gumbel_rank(&utilities, &menu.options, rng, MAX_RANKED_CHOICES))
}

/// Plain-logit utilities over a menu.
pub fn logit_menu_utilities(
    params: &LogitParams,
    spec: FeatureSpec,
    student: &Student,
    menu: &ChoiceMenu,
    table: &ProgramTable,
) -> Vec<f64> {
    menu.options
        .iter()
        .zip(&menu.distances)
        .map(|(&p, &dist)| {
            let x = spec.assemble(student, p, dist, table);
            let mut u = params.alpha_tilde(table.school_of(p));
            for (b, xi) in params.beta.iter().zip(&x) {
                u += b * xi;
            }
            u
        })
        .collect()
}

/// Add iid standard Gumbel shocks to `utilities` and return the program
/// indices sorted by shocked utility, best first, truncated to `cap`.
pub fn gumbel_rank<R: Rng + ?Sized>(utilities: &[f64], options: &[usize], rng: &mut R, cap: usize) -> Vec<usize> {
    let gumbel = Gumbel::new(0.0, 1.0).expect("valid gumbel parameters");
    let mut shocked: Vec<(f64, usize)> = utilities
        .iter()
        .zip(options)
        .map(|(&u, &p)| (u + gumbel.sample(rng), p))
        .collect();
    shocked.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1)));
    shocked.into_iter().take(cap).map(|(_, p)| p).collect()
}

/// Draw from `Normal(mean, cov)` as a plain helper (re-exported shape used
/// by the forecasting layers).
pub fn mvn_draw<R: Rng + ?Sized>(mean: &DVector<f64>, cov: &DMatrix<f64>, rng: &mut R) -> Result<DVector<f64>> {
    Ok(sample_mvn(mean, cov, rng)?)
}
