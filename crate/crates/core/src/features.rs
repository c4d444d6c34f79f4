//! Feature extraction for the utility models.
//!
//! The random-coefficient split fixes five features that may carry
//! student-level random coefficients (ell match, walk zone, distance, mcas,
//! % white/asian) and nine fixed-coefficient features (continuing, sibling,
//! ell language match, and the demographic interaction terms). The plain
//! logit specifications flatten everything into a single fixed vector; the
//! school fixed effect is carried separately as a school index, with the
//! last school's effect normalized to zero.

use serde::{Deserialize, Serialize};

use crate::domain::{ProgramOption, ProgramTable, Race, Student, WALK_ZONE_MILES};

/// Features eligible for random coefficients, in this order.
pub const RANDOM_FEATURE_NAMES: [&str; 5] = ["ell match", "walk zone", "distance", "mcas", "% white/asian"];

/// Fixed-coefficient features of the random-coefficient model, in this
/// order.
pub const MIXED_FIXED_FEATURE_NAMES: [&str; 9] = [
    "continuing",
    "sibling",
    "ell language match",
    "distance*black/hispanic",
    "distance*income",
    "mcas*black",
    "mcas*income",
    "% white/asian*black/hispanic",
    "% white/asian*income",
];

/// Sizes of the covariance blocks of the random coefficients:
/// (ell match), (walk zone), (distance, mcas, % white/asian).
pub const RANDOM_BLOCK_SIZES: [usize; 3] = [1, 1, 3];

/// Subvectors of the fixed coefficients updated one block at a time by the
/// Gibbs sampler, as indices into [`MIXED_FIXED_FEATURE_NAMES`], with their
/// initial proposal scales.
pub fn mixed_beta_blocks() -> (Vec<Vec<usize>>, Vec<f64>) {
    (
        vec![vec![0], vec![1], vec![2], vec![3, 4], vec![5, 6], vec![7, 8]],
        vec![0.5, 0.5, 0.1, 0.1, 0.5, 0.5],
    )
}

/// Per-(student, program) feature vectors for the random-coefficient model.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVectors {
    /// Order per [`MIXED_FIXED_FEATURE_NAMES`].
    pub fixed: [f64; 9],
    /// Order per [`RANDOM_FEATURE_NAMES`].
    pub random: [f64; 5],
    /// Index into the school fixed-effect vector.
    pub school_index: usize,
}

fn ell_match(student: &Student, program: &ProgramOption) -> f64 {
    (student.is_ell && program.is_ell_program) as u8 as f64
}

fn ell_language_match(student: &Student, program: &ProgramOption) -> f64 {
    let matched = student.is_ell
        && program.is_ell_program
        && student.ell_language.is_some()
        && student.ell_language == program.ell_language;
    matched as u8 as f64
}

fn continuing(student: &Student, program: &ProgramOption) -> f64 {
    (student.continuing_program.as_deref() == Some(program.program_id.as_str())) as u8 as f64
}

fn sibling(student: &Student, program: &ProgramOption) -> f64 {
    student.sibling_schools.contains(&program.school_id) as u8 as f64
}

/// Extract both feature vectors for one student-program pair; `distance` is
/// the home-to-school miles for this pair.
pub fn feature_vectors(student: &Student, program_idx: usize, distance: f64, table: &ProgramTable) -> FeatureVectors {
    let program = table.get(program_idx);
    let bh = student.race.is_black_or_hispanic() as u8 as f64;
    let black = (student.race == Race::Black) as u8 as f64;
    let income = student.income_estimate;
    let walk = (distance <= WALK_ZONE_MILES) as u8 as f64;

    FeatureVectors {
        fixed: [
            continuing(student, program),
            sibling(student, program),
            ell_language_match(student, program),
            distance * bh,
            distance * income,
            program.mcas_share * black,
            program.mcas_share * income,
            program.pct_white_asian * bh,
            program.pct_white_asian * income,
        ],
        random: [ell_match(student, program), walk, distance, program.mcas_share, program.pct_white_asian],
        school_index: table.school_of(program_idx),
    }
}

/// Plain-logit feature specifications.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSpec {
    /// No demographics: ell match, walk zone, distance, continuing,
    /// sibling, ell language match.
    Simple,
    /// Simple plus income and every race dummy interacted with distance,
    /// mcas and % white/asian.
    Full,
    /// Simple plus the stable demographic interactions (the default).
    #[default]
    Reduced,
}

const SIMPLE_NAMES: [&str; 6] = ["ell match", "walk zone", "distance", "continuing", "sibling", "ell language match"];

impl FeatureSpec {
    pub fn parse(s: &str) -> crate::Result<FeatureSpec> {
        match s {
            "simple" => Ok(FeatureSpec::Simple),
            "full" => Ok(FeatureSpec::Full),
            "reduced" => Ok(FeatureSpec::Reduced),
            other => Err(crate::Error::Config(format!("unknown feature spec {other:?}"))),
        }
    }

    pub fn names(&self) -> Vec<String> {
        let mut names: Vec<String> = SIMPLE_NAMES.iter().map(|s| s.to_string()).collect();
        match self {
            FeatureSpec::Simple => {}
            FeatureSpec::Reduced => {
                names.extend(
                    [
                        "distance*black/hispanic",
                        "distance*income",
                        "mcas*black",
                        "mcas*income",
                        "% white/asian*black/hispanic",
                        "% white/asian*income",
                    ]
                    .map(String::from),
                );
            }
            FeatureSpec::Full => {
                for school_feature in ["distance", "mcas", "% white/asian"] {
                    names.push(format!("{school_feature}*income"));
                    for race in [Race::Black, Race::Asian, Race::Hispanic, Race::Other, Race::Unknown] {
                        names.push(format!("{school_feature}*{}", race.as_str()));
                    }
                }
            }
        }
        names
    }

    /// The flat fixed-feature vector for one student-program pair, ordered
    /// per [`FeatureSpec::names`].
    pub fn assemble(&self, student: &Student, program_idx: usize, distance: f64, table: &ProgramTable) -> Vec<f64> {
        let program = table.get(program_idx);
        let walk = (distance <= WALK_ZONE_MILES) as u8 as f64;
        let mut x = vec![
            ell_match(student, program),
            walk,
            distance,
            continuing(student, program),
            sibling(student, program),
            ell_language_match(student, program),
        ];
        match self {
            FeatureSpec::Simple => {}
            FeatureSpec::Reduced => {
                let bh = student.race.is_black_or_hispanic() as u8 as f64;
                let black = (student.race == Race::Black) as u8 as f64;
                let income = student.income_estimate;
                x.extend([
                    distance * bh,
                    distance * income,
                    program.mcas_share * black,
                    program.mcas_share * income,
                    program.pct_white_asian * bh,
                    program.pct_white_asian * income,
                ]);
            }
            FeatureSpec::Full => {
                for school_feature in [distance, program.mcas_share, program.pct_white_asian] {
                    x.push(school_feature * student.income_estimate);
                    for race in [Race::Black, Race::Asian, Race::Hispanic, Race::Other, Race::Unknown] {
                        x.push(school_feature * (student.race == race) as u8 as f64);
                    }
                }
            }
        }
        x
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            FeatureSpec::Simple => "simple",
            FeatureSpec::Full => "full",
            FeatureSpec::Reduced => "reduced",
        }
    }
}
