//! Estimation designs: the numeric view of a dataset that the likelihoods
//! and samplers consume.
//!
//! A design flattens each student's menu into per-option feature rows plus
//! the indices of the options the student actually ranked (best first,
//! truncated to ten). Both the plain-logit and the random-coefficient
//! likelihoods run off this structure; plain-logit designs simply carry no
//! random-feature columns.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::domain::{ChoiceMenu, DistanceModel};
use crate::error::Error;
use crate::features::{feature_vectors, FeatureSpec, MIXED_FIXED_FEATURE_NAMES, RANDOM_FEATURE_NAMES};
use crate::{Result, MAX_RANKED_CHOICES};

/// Which options enter the denominator of each ranking stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Denominator {
    /// Stage `c` sums over the student's remaining *ranked* options only
    /// (the default).
    #[default]
    Ranked,
    /// Stage `c` sums over every menu option not chosen at an earlier
    /// stage (the textbook exploded logit).
    FullMenu,
}

impl Denominator {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ranked" => Ok(Denominator::Ranked),
            "full_menu" => Ok(Denominator::FullMenu),
            other => Err(Error::Config(format!("unknown likelihood denominator {other:?}"))),
        }
    }
}

/// One student's design: menu options as feature rows plus the ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct StudentDesign {
    pub n_options: usize,
    /// School index per option (drives the fixed effect).
    pub school: Vec<u32>,
    /// Row-major `n_options x n_fixed`.
    pub fixed: Vec<f64>,
    /// Row-major `n_options x n_random` (empty when `n_random == 0`).
    pub random: Vec<f64>,
    /// Indices into the options, best first, `1..=10` entries.
    pub ranked: Vec<u32>,
}

impl StudentDesign {
    pub fn fixed_row(&self, option: usize, n_fixed: usize) -> &[f64] {
        &self.fixed[option * n_fixed..(option + 1) * n_fixed]
    }

    pub fn random_row(&self, option: usize, n_random: usize) -> &[f64] {
        &self.random[option * n_random..(option + 1) * n_random]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationData {
    pub n_schools: usize,
    pub n_fixed: usize,
    pub n_random: usize,
    pub fixed_names: Vec<String>,
    pub random_names: Vec<String>,
    /// School ids aligned with school indices; the last school's fixed
    /// effect is normalized to zero.
    pub school_ids: Vec<String>,
    pub students: Vec<StudentDesign>,
}

impl EstimationData {
    /// Dimension of the free fixed-effect vector.
    pub fn fe_dim(&self) -> usize {
        self.n_schools.saturating_sub(1)
    }

    /// Total parameter count of the plain logit model on this design.
    pub fn n_params(&self) -> usize {
        self.n_fixed + self.fe_dim()
    }

    pub fn n_students(&self) -> usize {
        self.students.len()
    }

    pub fn n_choices(&self) -> usize {
        self.students.iter().map(|s| s.ranked.len()).sum()
    }

    fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        for (i, s) in self.students.iter().enumerate() {
            if s.ranked.is_empty() {
                problems.push(format!("student design {i}: empty ranking"));
            }
            if s.ranked.len() > MAX_RANKED_CHOICES {
                problems.push(format!("student design {i}: {} ranked choices (max 10)", s.ranked.len()));
            }
            if s.ranked.iter().any(|&r| r as usize >= s.n_options) {
                problems.push(format!("student design {i}: ranked index out of range"));
            }
            if s.school.iter().any(|&sc| sc as usize >= self.n_schools) {
                problems.push(format!("student design {i}: school index out of range"));
            }
            let finite = s.fixed.iter().chain(s.random.iter()).all(|v| v.is_finite());
            if !finite {
                problems.push(format!("student design {i}: non-finite feature value"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::validation(problems))
        }
    }

    /// Plain-logit design: one flat fixed vector per option assembled from
    /// `spec`, no random columns.
    pub fn plain_logit(
        dataset: &Dataset,
        menus: &[ChoiceMenu],
        distances: &DistanceModel,
        spec: FeatureSpec,
    ) -> Result<EstimationData> {
        Self::build(dataset, menus, distances, |student, program, dist, table| {
            (spec.assemble(student, program, dist, table), Vec::new())
        })
        .map(|mut data| {
            data.fixed_names = spec.names();
            data.n_fixed = data.fixed_names.len();
            data
        })
        .and_then(|data| data.validate().map(|()| data))
    }

    /// Random-coefficient design: the 9 fixed columns and 5 random columns
    /// of the block-structured model.
    pub fn mixed_logit(dataset: &Dataset, menus: &[ChoiceMenu], distances: &DistanceModel) -> Result<EstimationData> {
        Self::build(dataset, menus, distances, |student, program, dist, table| {
            let fv = feature_vectors(student, program, dist, table);
            (fv.fixed.to_vec(), fv.random.to_vec())
        })
        .map(|mut data| {
            data.fixed_names = MIXED_FIXED_FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
            data.random_names = RANDOM_FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
            data.n_fixed = 9;
            data.n_random = 5;
            data
        })
        .and_then(|data| data.validate().map(|()| data))
    }

    fn build<F>(
        dataset: &Dataset,
        menus: &[ChoiceMenu],
        distances: &DistanceModel,
        extract: F,
    ) -> Result<EstimationData>
    where
        F: Fn(&crate::domain::Student, usize, f64, &crate::domain::ProgramTable) -> (Vec<f64>, Vec<f64>),
    {
        let table = &dataset.programs;
        let mut students = Vec::with_capacity(dataset.students.len());
        let mut n_fixed = 0;
        let mut n_random = 0;
        for (i, student) in dataset.students.iter().enumerate() {
            let menu = &menus[i];
            let mut fixed = Vec::new();
            let mut random = Vec::new();
            let mut school = Vec::with_capacity(menu.options.len());
            for (k, &p) in menu.options.iter().enumerate() {
                let dist = if menu.distances[k].is_finite() {
                    menu.distances[k]
                } else {
                    distances.distance(student, p, table)?
                };
                let (f, g) = extract(student, p, dist, table);
                n_fixed = f.len();
                n_random = g.len();
                fixed.extend(f);
                random.extend(g);
                school.push(table.school_of(p) as u32);
            }
            let ranked: Vec<u32> = dataset.rankings[i]
                .iter()
                .take(MAX_RANKED_CHOICES)
                .map(|&p| {
                    menu.options
                        .binary_search(&p)
                        .map(|pos| pos as u32)
                        .map_err(|_| {
                            Error::validation(vec![format!(
                                "student {}: ranked program {} not in menu",
                                student.id,
                                table.get(p).program_id
                            )])
                        })
                })
                .collect::<Result<_>>()?;
            students.push(StudentDesign { n_options: menu.options.len(), school, fixed, random, ranked });
        }
        Ok(EstimationData {
            n_schools: table.n_schools(),
            n_fixed,
            n_random,
            fixed_names: Vec::new(),
            random_names: Vec::new(),
            school_ids: table.school_ids().to_vec(),
            students,
        })
    }

    /// Assemble a design directly from raw parts (used by synthetic
    /// calibration harnesses).
    pub fn from_parts(
        n_schools: usize,
        fixed_names: Vec<String>,
        random_names: Vec<String>,
        school_ids: Vec<String>,
        students: Vec<StudentDesign>,
    ) -> Result<EstimationData> {
        let data = EstimationData {
            n_schools,
            n_fixed: fixed_names.len(),
            n_random: random_names.len(),
            fixed_names,
            random_names,
            school_ids,
            students,
        };
        data.validate()?;
        Ok(data)
    }
}
