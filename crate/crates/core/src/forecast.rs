//! Applicant-pool forecasting: per-cell trend regressions with a
//! significance filter, and pool resampling driven by a city-wide shock
//! times a neighborhood shock.
//!
//! The citywide total of new applicants and each (grade, neighborhood)
//! proportion and continuing ratio get an independent normal distribution:
//! a year regression's prediction and standard error when the slope clears
//! 95% significance, the sample mean and sample standard deviation
//! otherwise. Proportion draws are deliberately not renormalized to sum
//! to one.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::data::Dataset;
use crate::domain::{Grade, Student, N_NEIGHBORHOODS};
use crate::error::Error;
use crate::Result;

/// Forecast distribution for one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendCell {
    pub mean: f64,
    pub sd: f64,
    /// Whether the year trend cleared the significance filter.
    pub used_trend: bool,
    pub slope_p_value: Option<f64>,
    pub n_obs: usize,
}

impl TrendCell {
    fn degenerate(mean: f64, n_obs: usize) -> Self {
        TrendCell { mean, sd: 0.0, used_trend: false, slope_p_value: None, n_obs }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.sd == 0.0 {
            return self.mean;
        }
        Normal::new(self.mean, self.sd).expect("valid normal").sample(rng)
    }
}

/// Fit one series: regression prediction at `target_year` when the slope
/// is significant at 95% (two-sided t-test), otherwise the sample mean and
/// sample standard deviation. (The regression's prediction standard error
/// has one fewer degree of freedom than the sample standard deviation.)
pub fn fit_trend_or_mean(years: &[i32], values: &[f64], target_year: i32) -> Result<TrendCell> {
    let n = years.len();
    if n != values.len() {
        return Err(Error::Config("years and values must be the same length".into()));
    }
    if n < 3 {
        return Err(Error::Config(format!("need at least 3 observations, got {n}")));
    }
    let nf = n as f64;
    let xbar = years.iter().map(|&y| y as f64).sum::<f64>() / nf;
    let ybar = values.iter().sum::<f64>() / nf;
    let sxx: f64 = years.iter().map(|&y| (y as f64 - xbar).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Config("years must not all be equal".into()));
    }
    let sxy: f64 = years.iter().zip(values).map(|(&x, &y)| (x as f64 - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ss_res: f64 = years
        .iter()
        .zip(values)
        .map(|(&x, &y)| (y - intercept - slope * x as f64).powi(2))
        .sum();
    let s2 = ss_res / (nf - 2.0);

    let p_value = if s2 <= f64::EPSILON * ybar.abs().max(1.0) {
        // A perfect fit: any nonzero slope is infinitely significant.
        if slope.abs() > 0.0 {
            0.0
        } else {
            1.0
        }
    } else {
        let se_slope = (s2 / sxx).sqrt();
        let t = slope / se_slope;
        let dist = StudentsT::new(0.0, 1.0, nf - 2.0).expect("valid t distribution");
        2.0 * (1.0 - dist.cdf(t.abs()))
    };

    if p_value < 0.05 {
        let x_star = target_year as f64;
        let se_pred = (s2 * (1.0 / nf + (x_star - xbar).powi(2) / sxx)).sqrt();
        Ok(TrendCell {
            mean: intercept + slope * x_star,
            sd: se_pred,
            used_trend: true,
            slope_p_value: Some(p_value),
            n_obs: n,
        })
    } else {
        let var = values.iter().map(|v| (v - ybar).powi(2)).sum::<f64>() / (nf - 1.0);
        Ok(TrendCell { mean: ybar, sd: var.sqrt(), used_trend: false, slope_p_value: Some(p_value), n_obs: n })
    }
}

/// Mean-and-SD fit for short series (the continuing-ratio cells have one
/// observation per consecutive year pair, so a 3-year history yields only
/// two points; no trend test is possible there).
fn mean_cell(values: &[f64]) -> TrendCell {
    match values.len() {
        0 => TrendCell::degenerate(0.0, 0),
        1 => TrendCell::degenerate(values[0], 1),
        n => {
            let nf = n as f64;
            let mean = values.iter().sum::<f64>() / nf;
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
            TrendCell { mean, sd: var.sqrt(), used_trend: false, slope_p_value: None, n_obs: n }
        }
    }
}

/// Independent normal cells for the citywide total, the 28 proportion
/// cells, and the continuing ratios.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParticipationModel {
    pub target_year: i32,
    pub total_new: TrendCell,
    /// Per grade, one cell per neighborhood.
    pub proportions: BTreeMap<Grade, Vec<TrendCell>>,
    pub continuing_ratio: BTreeMap<Grade, Vec<TrendCell>>,
}

/// Grades whose cells are modeled; the citywide total still counts all
/// grades.
pub const FORECAST_GRADES: [Grade; 2] = [Grade::K1, Grade::K2];

/// Fit the participation model from consecutive years of choice data
/// (ascending year order, at least 3 years).
pub fn fit_participation(history: &[&Dataset], target_year: i32) -> Result<ParticipationModel> {
    if history.len() < 3 {
        return Err(Error::Config(format!("need at least 3 history years, got {}", history.len())));
    }
    for pair in history.windows(2) {
        if pair[1].year <= pair[0].year {
            return Err(Error::Config("history years must be strictly increasing".into()));
        }
    }

    let years: Vec<i32> = history.iter().map(|d| d.year).collect();
    let totals: Vec<f64> = history
        .iter()
        .map(|d| d.students.iter().filter(|s| s.continuing_program.is_none()).count() as f64)
        .collect();
    let total_new = fit_trend_or_mean(&years, &totals, target_year)?;

    let mut proportions = BTreeMap::new();
    for grade in FORECAST_GRADES {
        let mut cells = Vec::with_capacity(N_NEIGHBORHOODS);
        for nb in 0..N_NEIGHBORHOODS as u8 {
            let series: Vec<f64> = history
                .iter()
                .zip(&totals)
                .map(|(d, &total)| {
                    let count = d
                        .students
                        .iter()
                        .filter(|s| s.continuing_program.is_none() && s.grade == grade && s.neighborhood == nb)
                        .count() as f64;
                    if total > 0.0 {
                        count / total
                    } else {
                        0.0
                    }
                })
                .collect();
            cells.push(fit_trend_or_mean(&years, &series, target_year)?);
        }
        proportions.insert(grade, cells);
    }

    let mut continuing_ratio = BTreeMap::new();
    for grade in FORECAST_GRADES {
        let previous_grade = grade.previous().expect("K1/K2 have a previous grade");
        let mut cells = Vec::with_capacity(N_NEIGHBORHOODS);
        for nb in 0..N_NEIGHBORHOODS as u8 {
            let mut series = Vec::new();
            for pair in history.windows(2) {
                let potential = pair[0]
                    .students
                    .iter()
                    .zip(&pair[0].assigned)
                    .filter(|((s, a))| s.grade == previous_grade && s.neighborhood == nb && a.is_some())
                    .count() as f64;
                if potential == 0.0 {
                    continue;
                }
                let continuing = pair[1]
                    .students
                    .iter()
                    .filter(|s| s.grade == grade && s.neighborhood == nb && s.continuing_program.is_some())
                    .count() as f64;
                series.push(continuing / potential);
            }
            let cell = if series.len() >= 3 {
                // Enough pairs for the trend test.
                let pair_years: Vec<i32> = years[1..=series.len()].to_vec();
                fit_trend_or_mean(&pair_years, &series, target_year)?
            } else {
                mean_cell(&series)
            };
            cells.push(cell);
        }
        continuing_ratio.insert(grade, cells);
    }

    Ok(ParticipationModel { target_year, total_new, proportions, continuing_ratio })
}

/// Draw an applicant pool for the target year (the population layer).
///
/// The total and every cell draw are independent; per-cell counts are
/// `round(max(0, total * proportion))`; new applicants are resampled with
/// replacement from the base year's new applicants in the same cell;
/// potential continuers are included independently with the drawn ratio
/// clamped to [0, 1].
pub fn draw_applicant_pool<R: Rng + ?Sized>(
    model: &ParticipationModel,
    base: &Dataset,
    rng: &mut R,
) -> Result<Vec<Student>> {
    let total = model.total_new.sample(rng);
    let mut pool = Vec::new();
    let mut counter = 0usize;

    // Index the base year's new applicants by cell.
    let mut new_by_cell: BTreeMap<(Grade, u8), Vec<usize>> = BTreeMap::new();
    for (i, s) in base.students.iter().enumerate() {
        if s.continuing_program.is_none() {
            new_by_cell.entry((s.grade, s.neighborhood)).or_default().push(i);
        }
    }

    for (&grade, cells) in &model.proportions {
        for (nb, cell) in cells.iter().enumerate() {
            let proportion = cell.sample(rng);
            let count = (total * proportion).max(0.0).round() as usize;
            if count == 0 {
                continue;
            }
            match new_by_cell.get(&(grade, nb as u8)) {
                Some(candidates) if !candidates.is_empty() => {
                    for _ in 0..count {
                        let pick = candidates[rng.random_range(0..candidates.len())];
                        let mut student = base.students[pick].clone();
                        student.id = format!("pool-n{counter}");
                        counter += 1;
                        pool.push(student);
                    }
                }
                _ => {
                    log::warn!(
                        "no base-year new applicants in cell ({grade}, {nb}); drew {count}, filling zero"
                    );
                }
            }
        }
    }

    for (&grade, cells) in &model.continuing_ratio {
        let previous_grade = grade.previous().expect("forecast grades have a previous grade");
        let ratios: Vec<f64> = cells.iter().map(|cell| cell.sample(rng).clamp(0.0, 1.0)).collect();
        for (i, s) in base.students.iter().enumerate() {
            if s.grade != previous_grade {
                continue;
            }
            let Some(assigned) = base.assigned[i] else { continue };
            let ratio = ratios[s.neighborhood as usize];
            if rng.random::<f64>() < ratio {
                let mut student = s.clone();
                student.id = format!("pool-c{counter}");
                counter += 1;
                student.grade = grade;
                student.continuing_program = Some(base.programs.get(assigned).program_id.clone());
                pool.push(student);
            }
        }
    }

    Ok(pool)
}
