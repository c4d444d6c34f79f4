//! Core entities shared by every stage: students, school programs, menus,
//! distances, and program-side priorities.
//!
//! All types are immutable after construction and safe to share across
//! concurrent simulation workers.

mod distance;
mod menu;
mod priority;

pub use distance::{haversine_miles, DistanceModel, EARTH_RADIUS_MILES, WALK_ZONE_MILES};
pub use menu::{build_menu, build_menus, ChoiceMenu, CustomPolicy, HomeBasedPolicy, MenuPolicy, ThreeZonePolicy};
pub use priority::{priority_of, Priority, PriorityRule};

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// Number of neighborhoods the city is partitioned into.
pub const N_NEIGHBORHOODS: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Grade {
    K0,
    K1,
    K2,
}

impl Grade {
    pub const ALL: [Grade; 3] = [Grade::K0, Grade::K1, Grade::K2];

    /// Grade a continuing student was in the year before, if any.
    pub fn previous(self) -> Option<Grade> {
        match self {
            Grade::K0 => None,
            Grade::K1 => Some(Grade::K0),
            Grade::K2 => Some(Grade::K1),
        }
    }

    pub fn parse(s: &str) -> Result<Grade> {
        match s {
            "K0" => Ok(Grade::K0),
            "K1" => Ok(Grade::K1),
            "K2" => Ok(Grade::K2),
            other => Err(Error::Config(format!("unknown grade {other:?}"))),
        }
    }
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Grade::K0 => write!(f, "K0"),
            Grade::K1 => write!(f, "K1"),
            Grade::K2 => write!(f, "K2"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Race {
    Black,
    Hispanic,
    White,
    Asian,
    Other,
    Unknown,
}

impl Race {
    pub const ALL: [Race; 6] = [Race::Black, Race::Hispanic, Race::White, Race::Asian, Race::Other, Race::Unknown];

    pub fn is_black_or_hispanic(self) -> bool {
        matches!(self, Race::Black | Race::Hispanic)
    }

    pub fn parse(s: &str) -> Result<Race> {
        match s {
            "black" => Ok(Race::Black),
            "hispanic" => Ok(Race::Hispanic),
            "white" => Ok(Race::White),
            "asian" => Ok(Race::Asian),
            "other" => Ok(Race::Other),
            "unknown" => Ok(Race::Unknown),
            other => Err(Error::Config(format!("unknown race {other:?}"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Race::Black => "black",
            Race::Hispanic => "hispanic",
            Race::White => "white",
            Race::Asian => "asian",
            Race::Other => "other",
            Race::Unknown => "unknown",
        }
    }
}

/// Latitude/longitude in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

/// One applicant.
///
/// `income_estimate` is in units of $100,000 so that interaction
/// coefficients keep interpretable magnitudes; `lottery_number` lies in
/// [0, 1] with lower numbers better.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Student {
    pub id: String,
    pub grade: Grade,
    /// Neighborhood index in `0..N_NEIGHBORHOODS`.
    pub neighborhood: u8,
    /// Geographic cell the student lives in; distance matrices are keyed by
    /// geocode.
    pub geocode: u32,
    pub home_location: LatLon,
    pub race: Race,
    pub income_estimate: f64,
    pub is_ell: bool,
    pub ell_language: Option<String>,
    /// Program at which the student has guaranteed (continuing) priority.
    pub continuing_program: Option<String>,
    /// Schools where a sibling is currently enrolled.
    pub sibling_schools: BTreeSet<String>,
    pub lottery_number: f64,
}

impl Student {
    /// Structural invariants; returns one message per violation.
    pub fn violations(&self, programs: &ProgramTable) -> Vec<String> {
        let mut problems = Vec::new();
        if !(0.0..=1.0).contains(&self.lottery_number) {
            problems.push(format!("student {}: lottery number {} outside [0, 1]", self.id, self.lottery_number));
        }
        if !(self.income_estimate >= 0.0) {
            problems.push(format!("student {}: negative income estimate {}", self.id, self.income_estimate));
        }
        if self.neighborhood as usize >= N_NEIGHBORHOODS {
            problems.push(format!("student {}: neighborhood {} out of range", self.id, self.neighborhood));
        }
        if let Some(cont) = &self.continuing_program {
            if programs.index_of(cont).is_none() {
                problems.push(format!("student {}: continuing program {cont:?} not in program table", self.id));
            }
        }
        problems
    }
}

/// A school program: the unit students rank and programs admit into.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramOption {
    pub program_id: String,
    pub school_id: String,
    /// Quality tier, 1 (best) through 4.
    pub tier: u8,
    /// Seats available to one entry grade.
    pub capacity: u32,
    pub is_ell_program: bool,
    pub ell_language: Option<String>,
    /// Share of the school's students scoring Advanced/Proficient on the
    /// state math test, in [0, 1].
    pub mcas_share: f64,
    /// Share of the school's students who are white or asian, in [0, 1].
    pub pct_white_asian: f64,
    pub school_location: LatLon,
}

impl ProgramOption {
    pub fn violations(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if !(1..=4).contains(&self.tier) {
            problems.push(format!("program {}: tier {} outside 1..4", self.program_id, self.tier));
        }
        if !(0.0..=1.0).contains(&self.mcas_share) {
            problems.push(format!("program {}: mcas share {} outside [0, 1]", self.program_id, self.mcas_share));
        }
        if !(0.0..=1.0).contains(&self.pct_white_asian) {
            problems.push(format!(
                "program {}: %white/asian {} outside [0, 1]",
                self.program_id, self.pct_white_asian
            ));
        }
        problems
    }
}

/// Indexed program table. Program order follows the input; schools are
/// sorted by id, and the *last* school in that order is the one whose fixed
/// effect is normalized to zero during estimation.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgramTable {
    programs: Vec<ProgramOption>,
    by_id: HashMap<String, usize>,
    schools: Vec<String>,
    school_of: Vec<usize>,
    programs_of_school: Vec<Vec<usize>>,
}

impl ProgramTable {
    pub fn new(programs: Vec<ProgramOption>) -> Result<Self> {
        let mut problems = Vec::new();
        let mut by_id = HashMap::with_capacity(programs.len());
        for (idx, p) in programs.iter().enumerate() {
            problems.extend(p.violations());
            if by_id.insert(p.program_id.clone(), idx).is_some() {
                problems.push(format!("duplicate program id {:?}", p.program_id));
            }
        }
        if !problems.is_empty() {
            return Err(Error::validation(problems));
        }

        let mut schools: Vec<String> = programs.iter().map(|p| p.school_id.clone()).collect();
        schools.sort();
        schools.dedup();
        let school_index: HashMap<&str, usize> =
            schools.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let school_of: Vec<usize> = programs.iter().map(|p| school_index[p.school_id.as_str()]).collect();
        let mut programs_of_school = vec![Vec::new(); schools.len()];
        for (idx, &s) in school_of.iter().enumerate() {
            programs_of_school[s].push(idx);
        }
        Ok(ProgramTable { programs, by_id, schools, school_of, programs_of_school })
    }

    pub fn len(&self) -> usize {
        self.programs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.programs.is_empty()
    }

    pub fn get(&self, idx: usize) -> &ProgramOption {
        &self.programs[idx]
    }

    pub fn programs(&self) -> &[ProgramOption] {
        &self.programs
    }

    pub fn index_of(&self, program_id: &str) -> Option<usize> {
        self.by_id.get(program_id).copied()
    }

    pub fn n_schools(&self) -> usize {
        self.schools.len()
    }

    pub fn school_ids(&self) -> &[String] {
        &self.schools
    }

    /// Index of the school containing program `idx`; school indices order
    /// the fixed-effect vector.
    pub fn school_of(&self, idx: usize) -> usize {
        self.school_of[idx]
    }

    pub fn school_index(&self, school_id: &str) -> Option<usize> {
        self.schools.binary_search_by(|s| s.as_str().cmp(school_id)).ok()
    }

    pub fn programs_of_school(&self, school: usize) -> &[usize] {
        &self.programs_of_school[school]
    }

    /// School tier = best (smallest) tier among its programs.
    pub fn school_tier(&self, school: usize) -> u8 {
        self.programs_of_school[school]
            .iter()
            .map(|&p| self.programs[p].tier)
            .min()
            .unwrap_or(4)
    }
}
