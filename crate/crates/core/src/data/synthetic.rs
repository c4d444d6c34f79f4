//! Calibrated synthetic populations: jittered-grid geography, students,
//! programs, and rankings drawn from a configured true demand model. Real
//! choice data is confidential, so every estimation and simulation harness
//! runs on data from here.
//!
//! All randomness flows from the config seeds through named substreams
//! (geography / population / preference / lottery), so any layer can be
//! held fixed while others vary and two runs with the same config are
//! byte-identical.

use std::collections::{BTreeMap, HashMap};

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::assignment::{deferred_acceptance, Market};
use crate::data::Dataset;
use crate::design::{EstimationData, StudentDesign};
use crate::domain::{
    build_menus, haversine_miles, DistanceModel, Grade, LatLon, MenuPolicy, ProgramOption, ProgramTable, PriorityRule,
    Race, Student, N_NEIGHBORHOODS,
};
use crate::error::Error;
use crate::features::FeatureSpec;
use crate::logit::LogitParams;
use crate::mixedlogit::MixedLogitParams;
use crate::model::{gumbel_rank, logit_menu_utilities, simulate_ranking_mixed, DrawnParams};
use crate::naive::rank_naive;
use crate::seed::substream;
use crate::{Result, MAX_RANKED_CHOICES};

const ELL_LANGUAGES: [&str; 4] = ["spanish", "mandarin", "capeverdean", "haitian"];
const GEOCODES_PER_NEIGHBORHOOD: u32 = 4;

/// The data-generating demand model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum TrueModel {
    Naive,
    Logit {
        spec: FeatureSpec,
        beta: Vec<f64>,
        /// School fixed effects (free entries; empty means all zero).
        alpha: Vec<f64>,
    },
    MixedLogit(MixedLogitParams),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub year: i32,
    pub n_k0: usize,
    pub n_k1: usize,
    pub n_k2: usize,
    pub n_schools: usize,
    pub programs_per_school: usize,
    pub truth: TrueModel,
    pub menu_policy: MenuPolicy,
    /// Drives population, preference, and lottery draws.
    pub seed: u64,
    /// Drives school and neighborhood placement; held fixed across years
    /// of one synthetic city.
    pub geography_seed: u64,
    pub frac_ell: f64,
    pub frac_continuing: f64,
    pub frac_sibling: f64,
    /// Explicit per-program seats; otherwise sized so total seats cover
    /// `target_fill` of the largest grade.
    pub seats_per_program: Option<u32>,
    pub target_fill: f64,
    /// Ranking length drawn uniformly from this range (inclusive), capped
    /// by menu size and ten; `None` ranks the whole menu (up to ten).
    pub ranking_length: Option<(usize, usize)>,
}

impl SyntheticConfig {
    pub fn new(seed: u64) -> Self {
        SyntheticConfig {
            year: 2010,
            n_k0: 150,
            n_k1: 400,
            n_k2: 600,
            n_schools: 15,
            programs_per_school: 2,
            truth: TrueModel::Logit { spec: FeatureSpec::Reduced, beta: default_reduced_beta(), alpha: Vec::new() },
            menu_policy: MenuPolicy::HomeBased(Default::default()),
            seed,
            geography_seed: seed ^ 0x9e37_79b9_7f4a_7c15,
            frac_ell: 0.35,
            frac_continuing: 0.3,
            frac_sibling: 0.2,
            seats_per_program: None,
            target_fill: 0.95,
            ranking_length: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_k0 + self.n_k1 + self.n_k2 == 0 {
            return Err(Error::Config("no students configured".into()));
        }
        if self.n_schools == 0 || self.programs_per_school == 0 {
            return Err(Error::Config("need at least one school and one program per school".into()));
        }
        if !(0.0..=1.0).contains(&self.frac_ell)
            || !(0.0..=1.0).contains(&self.frac_continuing)
            || !(0.0..=1.0).contains(&self.frac_sibling)
        {
            return Err(Error::Config("fractions must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// True coefficients used by default fixtures, on the scale of the reduced
/// specification (ell match, walk zone, distance, continuing, sibling, ell
/// language match, then the six interactions).
pub fn default_reduced_beta() -> Vec<f64> {
    vec![1.5, 0.5, -0.4, 4.0, 2.1, 0.6, 0.12, -0.26, -0.9, 0.4, -2.6, 2.0]
}

struct Geography {
    neighborhood_centers: Vec<LatLon>,
    geocode_centers: Vec<LatLon>,
    neighborhood_weights: Vec<f64>,
}

fn miles_to_lat(miles: f64) -> f64 {
    miles / 69.0
}

fn miles_to_lon(miles: f64, lat: f64) -> f64 {
    miles / (69.0 * lat.to_radians().cos())
}

fn build_geography(seed: u64) -> Geography {
    let mut rng = substream(seed, "geography");
    let base = LatLon { lat: 42.30, lon: -71.10 };
    let spacing = 2.2;

    // 14 neighborhoods on a 4x4 grid with two corners dropped.
    let mut cells: Vec<(usize, usize)> = Vec::new();
    for row in 0..4 {
        for col in 0..4 {
            if (row, col) != (0, 0) && (row, col) != (3, 3) {
                cells.push((row, col));
            }
        }
    }
    debug_assert_eq!(cells.len(), N_NEIGHBORHOODS);

    let neighborhood_centers: Vec<LatLon> = cells
        .iter()
        .map(|&(row, col)| {
            let jitter_lat = miles_to_lat(rng.random_range(-0.3..0.3));
            let jitter_lon = miles_to_lon(rng.random_range(-0.3..0.3), base.lat);
            LatLon {
                lat: base.lat + miles_to_lat(row as f64 * spacing) + jitter_lat,
                lon: base.lon + miles_to_lon(col as f64 * spacing, base.lat) + jitter_lon,
            }
        })
        .collect();

    let mut geocode_centers = Vec::with_capacity(N_NEIGHBORHOODS * GEOCODES_PER_NEIGHBORHOOD as usize);
    for center in &neighborhood_centers {
        for _ in 0..GEOCODES_PER_NEIGHBORHOOD {
            geocode_centers.push(LatLon {
                lat: center.lat + miles_to_lat(rng.random_range(-0.5..0.5)),
                lon: center.lon + miles_to_lon(rng.random_range(-0.5..0.5), center.lat),
            });
        }
    }

    let raw: Vec<f64> = (0..N_NEIGHBORHOODS).map(|_| 0.5 + rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    let neighborhood_weights = raw.into_iter().map(|w| w / total).collect();

    Geography { neighborhood_centers, geocode_centers, neighborhood_weights }
}

fn build_programs(config: &SyntheticConfig, geo: &Geography) -> Result<ProgramTable> {
    let mut rng = substream(config.geography_seed, "schools");
    let max_grade = config.n_k0.max(config.n_k1).max(config.n_k2);
    let n_programs = config.n_schools * config.programs_per_school;
    let seats = config
        .seats_per_program
        .unwrap_or_else(|| ((max_grade as f64 * config.target_fill / n_programs as f64).ceil() as u32).max(1));

    let mut programs = Vec::with_capacity(n_programs);
    for school in 0..config.n_schools {
        let anchor = geo.neighborhood_centers[school % N_NEIGHBORHOODS];
        let location = LatLon {
            lat: anchor.lat + miles_to_lat(rng.random_range(-0.8..0.8)),
            lon: anchor.lon + miles_to_lon(rng.random_range(-0.8..0.8), anchor.lat),
        };
        let tier = (school % 4 + 1) as u8;
        let mcas = (0.9 - 0.15 * (tier - 1) as f64 + rng.random_range(-0.08..0.08)).clamp(0.05, 0.95);
        let pct_white_asian: f64 = rng.random_range(0.05..0.75);
        for slot in 0..config.programs_per_school {
            let is_ell = slot > 0;
            programs.push(ProgramOption {
                program_id: format!("S{school:02}-P{slot}"),
                school_id: format!("S{school:02}"),
                tier,
                capacity: seats,
                is_ell_program: is_ell,
                ell_language: is_ell.then(|| ELL_LANGUAGES[(school + slot) % ELL_LANGUAGES.len()].to_string()),
                mcas_share: mcas,
                pct_white_asian,
                school_location: location,
            });
        }
    }

    // Degenerate geography guard: co-located schools break distance-driven
    // menus and substitution patterns.
    if config.n_schools >= 2 {
        let distinct = programs
            .iter()
            .any(|p| haversine_miles(p.school_location, programs[0].school_location) > 1e-9);
        if !distinct {
            return Err(Error::Config("degenerate geography: all schools co-located".into()));
        }
    }
    ProgramTable::new(programs)
}

fn sample_race<R: Rng + ?Sized>(rng: &mut R) -> Race {
    let u: f64 = rng.random();
    match u {
        _ if u < 0.26 => Race::Black,
        _ if u < 0.70 => Race::Hispanic,
        _ if u < 0.89 => Race::White,
        _ if u < 0.97 => Race::Asian,
        _ if u < 0.99 => Race::Other,
        _ => Race::Unknown,
    }
}

/// Generate one synthetic year: students, programs, menus, rankings from
/// the true model, lottery numbers, and a deferred-acceptance assignment
/// per grade (so capacities can be inferred downstream).
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<(Dataset, DistanceModel)> {
    config.validate()?;
    let geo = build_geography(config.geography_seed);
    let table = build_programs(config, &geo)?;

    // distances.csv carries the full geocode x school matrix; students live
    // at geocode centroids so the matrix agrees with the haversine
    // fallback.
    let mut matrix = HashMap::new();
    for (g, center) in geo.geocode_centers.iter().enumerate() {
        for school in table.school_ids() {
            let s = table.school_index(school).expect("school in table");
            let location = table.get(table.programs_of_school(s)[0]).school_location;
            matrix.insert((g as u32, school.clone()), haversine_miles(*center, location));
        }
    }
    let distances = DistanceModel::with_matrix(matrix, true);

    let mut pop_rng = substream(config.seed, "population");
    let income_dist = LogNormal::new(0.45f64.ln(), 0.35).expect("valid lognormal");
    let mut students = Vec::new();
    for (grade, count) in [(Grade::K0, config.n_k0), (Grade::K1, config.n_k1), (Grade::K2, config.n_k2)] {
        for i in 0..count {
            let u: f64 = pop_rng.random();
            let mut nb = 0usize;
            let mut acc = 0.0;
            for (k, w) in geo.neighborhood_weights.iter().enumerate() {
                acc += w;
                if u <= acc {
                    nb = k;
                    break;
                }
            }
            let geocode = nb as u32 * GEOCODES_PER_NEIGHBORHOOD + pop_rng.random_range(0..GEOCODES_PER_NEIGHBORHOOD);
            let home = geo.geocode_centers[geocode as usize];
            let is_ell = pop_rng.random::<f64>() < config.frac_ell;
            let ell_language =
                is_ell.then(|| ELL_LANGUAGES[pop_rng.random_range(0..ELL_LANGUAGES.len())].to_string());

            let continuing_program = if grade != Grade::K0 && pop_rng.random::<f64>() < config.frac_continuing {
                // Continue at one of the three nearest programs.
                let mut near: Vec<usize> = (0..table.len()).collect();
                near.sort_by(|&a, &b| {
                    let da = haversine_miles(home, table.get(a).school_location);
                    let db = haversine_miles(home, table.get(b).school_location);
                    da.partial_cmp(&db).unwrap().then(a.cmp(&b))
                });
                let pick = near[pop_rng.random_range(0..3.min(near.len()))];
                Some(table.get(pick).program_id.clone())
            } else {
                None
            };
            let sibling_schools = if pop_rng.random::<f64>() < config.frac_sibling {
                let mut near: Vec<usize> = (0..table.n_schools()).collect();
                near.sort_by(|&a, &b| {
                    let da = haversine_miles(home, table.get(table.programs_of_school(a)[0]).school_location);
                    let db = haversine_miles(home, table.get(table.programs_of_school(b)[0]).school_location);
                    da.partial_cmp(&db).unwrap().then(a.cmp(&b))
                });
                let pick = near[pop_rng.random_range(0..4.min(near.len()))];
                std::iter::once(table.school_ids()[pick].clone()).collect()
            } else {
                Default::default()
            };

            students.push(Student {
                id: format!("{grade}-{i:05}"),
                grade,
                neighborhood: nb as u8,
                geocode,
                home_location: home,
                race: sample_race(&mut pop_rng),
                income_estimate: income_dist.sample(&mut pop_rng),
                is_ell,
                ell_language,
                continuing_program,
                sibling_schools,
                lottery_number: 0.5, // placeholder; drawn below
            });
        }
    }

    let mut lottery_rng = substream(config.seed, "lottery");
    for student in &mut students {
        student.lottery_number = lottery_rng.random();
    }

    let menus = build_menus(&students, &table, &distances, &config.menu_policy)?;

    let mut pref_rng = substream(config.seed, "preference");
    let drawn = match &config.truth {
        TrueModel::Naive => DrawnParams::Naive,
        TrueModel::Logit { spec, beta, alpha } => {
            let fe_dim = table.n_schools().saturating_sub(1);
            if beta.len() != spec.names().len() {
                return Err(Error::Config(format!(
                    "true beta has {} entries but spec {:?} has {} features",
                    beta.len(),
                    spec.as_str(),
                    spec.names().len()
                )));
            }
            let alpha_vec = if alpha.is_empty() {
                DVector::zeros(fe_dim)
            } else if alpha.len() == fe_dim {
                DVector::from_column_slice(alpha)
            } else {
                return Err(Error::Config(format!("true alpha has {} entries, expected {fe_dim}", alpha.len())));
            };
            DrawnParams::Logit {
                spec: *spec,
                params: LogitParams { beta: DVector::from_column_slice(beta), alpha: alpha_vec },
            }
        }
        TrueModel::MixedLogit(params) => DrawnParams::Mixed(params.clone()),
    };

    let mut rankings = Vec::with_capacity(students.len());
    for (i, student) in students.iter().enumerate() {
        let full = match &drawn {
            DrawnParams::Naive => {
                let mut r = rank_naive(student, &menus[i], &table);
                r.truncate(MAX_RANKED_CHOICES);
                r
            }
            DrawnParams::Logit { spec, params } => {
                let utilities = logit_menu_utilities(params, *spec, student, &menus[i], &table);
                gumbel_rank(&utilities, &menus[i].options, &mut pref_rng, MAX_RANKED_CHOICES)
            }
            DrawnParams::Mixed(params) => simulate_ranking_mixed(params, student, &menus[i], &table, &mut pref_rng)?,
        };
        let m = match config.ranking_length {
            Some((lo, hi)) => pref_rng.random_range(lo..=hi).min(full.len()).max(1),
            None => full.len(),
        };
        rankings.push(full[..m].to_vec());
    }

    // Run the mechanism per grade so the dataset carries an observed
    // assignment (feeds capacity inference and continuing pools).
    let mut assigned: Vec<Option<usize>> = vec![None; students.len()];
    let capacity: Vec<u32> = table.programs().iter().map(|p| p.capacity).collect();
    for grade in Grade::ALL {
        let cohort: Vec<usize> = students
            .iter()
            .enumerate()
            .filter(|(_, s)| s.grade == grade)
            .map(|(i, _)| i)
            .collect();
        if cohort.is_empty() {
            continue;
        }
        let cohort_students: Vec<&Student> = cohort.iter().map(|&i| &students[i]).collect();
        let cohort_rankings: Vec<Vec<usize>> = cohort.iter().map(|&i| rankings[i].clone()).collect();
        let lotteries: Vec<f64> = cohort.iter().map(|&i| students[i].lottery_number).collect();
        let market = Market::from_domain(
            &cohort_students,
            &cohort_rankings,
            &lotteries,
            &capacity,
            &table,
            PriorityRule::Standard,
        );
        let matching = deferred_acceptance(&market)?;
        for (slot, &i) in cohort.iter().enumerate() {
            assigned[i] = matching.assigned[slot];
        }
    }

    let dataset = Dataset { year: config.year, students, programs: table, rankings, assigned };
    dataset.validate()?;
    Ok((dataset, distances))
}

/// A run of consecutive synthetic years sharing one geography, with the
/// applicant totals drifting upward and the neighborhood mix wobbling so
/// the participation model has real variation to fit.
pub fn generate_history(base: &SyntheticConfig, n_years: usize, growth: f64) -> Result<(Vec<Dataset>, DistanceModel)> {
    let mut datasets = Vec::with_capacity(n_years);
    let mut distances = None;
    for t in 0..n_years {
        let mut year_rng = substream(base.seed, &format!("history/{t}"));
        let wobble = |rng: &mut rand_chacha::ChaCha12Rng, n: usize| {
            let factor: f64 = growth.powi(t as i32) * (1.0 + rng.random_range(-0.05..0.05));
            ((n as f64) * factor).round() as usize
        };
        let mut config = base.clone();
        config.year = base.year + t as i32;
        config.seed = year_rng.random();
        config.n_k0 = wobble(&mut year_rng, base.n_k0);
        config.n_k1 = wobble(&mut year_rng, base.n_k1);
        config.n_k2 = wobble(&mut year_rng, base.n_k2);
        let (dataset, dist) = generate_synthetic(&config)?;
        datasets.push(dataset);
        distances.get_or_insert(dist);
    }
    Ok((datasets, distances.expect("at least one year")))
}

/// Configuration for a raw estimation-design harness (no domain geography;
/// iid feature draws), used to exercise the samplers under a fully
/// identified design with known truth.
#[derive(Debug, Clone)]
pub struct DesignConfig {
    pub n_students: usize,
    pub n_options: usize,
    pub m_ranked: usize,
    pub n_schools: usize,
    pub truth: MixedLogitParams,
    /// Bernoulli rates for the binary fixed features; continuous features
    /// fill the remaining columns as Normal(0, 1) draws.
    pub binary_fixed: usize,
    pub seed: u64,
}

/// Draw an estimation design directly from the mixed-logit generative
/// process: iid Normal(0,1) random-feature columns, a mix of indicator and
/// continuous fixed columns, per-student coefficients from Normal(b, W),
/// and rankings from Gumbel-shocked utilities.
pub fn generate_design(config: &DesignConfig) -> Result<EstimationData> {
    let truth = &config.truth;
    let n_fixed = truth.beta.len();
    let n_random = truth.b.len();
    let fe_dim = config.n_schools.saturating_sub(1);
    if truth.alpha.len() != fe_dim {
        return Err(Error::Config(format!("truth alpha has {} entries, expected {fe_dim}", truth.alpha.len())));
    }
    if config.m_ranked == 0 || config.m_ranked > config.n_options {
        return Err(Error::Config("m_ranked must be in 1..=n_options".into()));
    }

    let mut rng = substream(config.seed, "design");
    let mut students = Vec::with_capacity(config.n_students);
    for _ in 0..config.n_students {
        let mut school = Vec::with_capacity(config.n_options);
        let mut fixed = Vec::with_capacity(config.n_options * n_fixed);
        let mut random = Vec::with_capacity(config.n_options * n_random);
        for o in 0..config.n_options {
            school.push((o % config.n_schools) as u32);
            for k in 0..n_fixed {
                if k < config.binary_fixed {
                    fixed.push((rng.random::<f64>() < 0.3) as u8 as f64);
                } else {
                    fixed.push(rng.sample::<f64, _>(rand_distr::StandardNormal));
                }
            }
            for _ in 0..n_random {
                random.push(rng.sample::<f64, _>(rand_distr::StandardNormal));
            }
        }
        let gamma = truth.w.sample_gamma(&truth.b, &mut rng)?;
        let utilities: Vec<f64> = (0..config.n_options)
            .map(|o| {
                let mut u = truth.alpha_tilde(school[o] as usize);
                for (bk, x) in truth.beta.iter().zip(&fixed[o * n_fixed..(o + 1) * n_fixed]) {
                    u += bk * x;
                }
                for (g, x) in gamma.iter().zip(&random[o * n_random..(o + 1) * n_random]) {
                    u += g * x;
                }
                u
            })
            .collect();
        let options: Vec<usize> = (0..config.n_options).collect();
        let full = gumbel_rank(&utilities, &options, &mut rng, config.m_ranked);
        let ranked: Vec<u32> = full.into_iter().map(|o| o as u32).collect();
        students.push(StudentDesign { n_options: config.n_options, school, fixed, random, ranked });
    }

    EstimationData::from_parts(
        config.n_schools,
        (0..n_fixed).map(|k| format!("f{k}")).collect(),
        (0..n_random).map(|k| format!("g{k}")).collect(),
        (0..config.n_schools).map(|s| format!("S{s:02}")).collect(),
        students,
    )
}

/// Capacity tables per grade inferred from a synthetic dataset.
pub fn capacities_by_grade(dataset: &Dataset) -> BTreeMap<Grade, Vec<u32>> {
    Grade::ALL.iter().map(|&g| (g, dataset.inferred_capacities(Some(g)))).collect()
}
