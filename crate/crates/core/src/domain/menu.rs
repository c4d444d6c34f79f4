use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::domain::{DistanceModel, ProgramTable, Student, WALK_ZONE_MILES};
use crate::error::Error;
use crate::Result;

/// Menu policy: which schools a student may rank programs at.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum MenuPolicy {
    HomeBased(HomeBasedPolicy),
    ThreeZone(ThreeZonePolicy),
    Custom(CustomPolicy),
}

/// Home-based menus: every school within a mile, plus the closest schools
/// by quality tier (by default the 2 closest Tier 1, the 4 closest Tier 1-2
/// and the 6 closest Tier 1-3), plus a configured list of option schools.
///
/// Ties in closeness are broken by school id.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HomeBasedPolicy {
    /// (max tier, how many closest schools of at most that tier), applied
    /// independently and unioned.
    pub closest_by_tier: Vec<(u8, usize)>,
    /// School ids always offered (the district's "option schools" list).
    pub option_schools: Vec<String>,
}

impl Default for HomeBasedPolicy {
    fn default() -> Self {
        HomeBasedPolicy { closest_by_tier: vec![(1, 2), (2, 4), (3, 6)], option_schools: Vec::new() }
    }
}

/// Legacy zone menus: any school in the student's zone, anything within the
/// walk zone, and a configured city-wide list.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThreeZonePolicy {
    /// Zone of each neighborhood, indexed by neighborhood id.
    pub zone_of_neighborhood: Vec<u8>,
    /// School id -> zone.
    pub zone_of_school: BTreeMap<String, u8>,
    pub citywide_schools: Vec<String>,
}

/// Config-driven menus: an explicit school list per neighborhood, with the
/// one-mile rule optionally layered on top. This is the hook for
/// district-specific exceptions that are out of the built-in geography.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CustomPolicy {
    pub schools_by_neighborhood: BTreeMap<u8, Vec<String>>,
    pub include_walk_zone: bool,
}

/// A student's personalized choice menu: the programs they may rank, in
/// program-table order, with home-to-school distances alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceMenu {
    /// Index into the student list this menu was built for.
    pub student: usize,
    /// Program indices, ascending.
    pub options: Vec<usize>,
    /// Miles to each option, parallel to `options`.
    pub distances: Vec<f64>,
}

impl ChoiceMenu {
    pub fn contains(&self, program_idx: usize) -> bool {
        self.options.binary_search(&program_idx).is_ok()
    }

    pub fn len(&self) -> usize {
        self.options.len()
    }

    pub fn is_empty(&self) -> bool {
        self.options.is_empty()
    }
}

fn resolve_school(table: &ProgramTable, school_id: &str) -> Result<usize> {
    table
        .school_index(school_id)
        .ok_or_else(|| Error::Config(format!("menu policy references unknown school {school_id:?}")))
}

/// `k` closest schools with tier at most `max_tier`, ties broken by school
/// id (i.e. by school index, since schools are sorted by id).
fn closest_by_tier(school_dist: &[f64], table: &ProgramTable, max_tier: u8, k: usize) -> Vec<usize> {
    let mut eligible: Vec<usize> = (0..table.n_schools()).filter(|&s| table.school_tier(s) <= max_tier).collect();
    eligible.sort_by(|&a, &b| school_dist[a].partial_cmp(&school_dist[b]).unwrap().then(a.cmp(&b)));
    eligible.truncate(k);
    eligible
}

/// Build one student's menu under `policy`.
///
/// Whatever the policy says, the menu always includes the student's
/// continuing school and any sibling schools. Returns an explicit error if
/// the menu would be empty.
pub fn build_menu(
    student_idx: usize,
    student: &Student,
    table: &ProgramTable,
    distances: &DistanceModel,
    policy: &MenuPolicy,
) -> Result<ChoiceMenu> {
    let n_schools = table.n_schools();
    let mut school_dist = vec![f64::INFINITY; n_schools];
    for s in 0..n_schools {
        school_dist[s] = distances.school_distance(student, s, table)?;
    }

    let mut selected: BTreeSet<usize> = BTreeSet::new();
    match policy {
        MenuPolicy::HomeBased(hb) => {
            for s in 0..n_schools {
                if school_dist[s] <= WALK_ZONE_MILES {
                    selected.insert(s);
                }
            }
            for &(max_tier, k) in &hb.closest_by_tier {
                selected.extend(closest_by_tier(&school_dist, table, max_tier, k));
            }
            for school_id in &hb.option_schools {
                selected.insert(resolve_school(table, school_id)?);
            }
        }
        MenuPolicy::ThreeZone(tz) => {
            let zone = *tz
                .zone_of_neighborhood
                .get(student.neighborhood as usize)
                .ok_or_else(|| Error::Config(format!("no zone for neighborhood {}", student.neighborhood)))?;
            for (school_id, &school_zone) in &tz.zone_of_school {
                if school_zone == zone {
                    selected.insert(resolve_school(table, school_id)?);
                }
            }
            for s in 0..n_schools {
                if school_dist[s] <= WALK_ZONE_MILES {
                    selected.insert(s);
                }
            }
            for school_id in &tz.citywide_schools {
                selected.insert(resolve_school(table, school_id)?);
            }
        }
        MenuPolicy::Custom(custom) => {
            if let Some(schools) = custom.schools_by_neighborhood.get(&student.neighborhood) {
                for school_id in schools {
                    selected.insert(resolve_school(table, school_id)?);
                }
            }
            if custom.include_walk_zone {
                for s in 0..n_schools {
                    if school_dist[s] <= WALK_ZONE_MILES {
                        selected.insert(s);
                    }
                }
            }
        }
    }

    if let Some(cont) = &student.continuing_program {
        if let Some(p) = table.index_of(cont) {
            selected.insert(table.school_of(p));
        }
    }
    for sibling in &student.sibling_schools {
        if let Some(s) = table.school_index(sibling) {
            selected.insert(s);
        }
    }

    let mut options: Vec<usize> = selected
        .iter()
        .flat_map(|&s| table.programs_of_school(s).iter().copied())
        .collect();
    options.sort_unstable();

    if options.is_empty() {
        return Err(Error::EmptyMenu(student.id.clone()));
    }
    let dists = options.iter().map(|&p| school_dist[table.school_of(p)]).collect();
    Ok(ChoiceMenu { student: student_idx, options, distances: dists })
}

/// Menus for a whole cohort.
pub fn build_menus(
    students: &[Student],
    table: &ProgramTable,
    distances: &DistanceModel,
    policy: &MenuPolicy,
) -> Result<Vec<ChoiceMenu>> {
    students
        .iter()
        .enumerate()
        .map(|(i, s)| build_menu(i, s, table, distances, policy))
        .collect()
}
