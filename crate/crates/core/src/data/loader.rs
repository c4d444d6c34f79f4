use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::domain::{DistanceModel, Grade, LatLon, ProgramOption, ProgramTable, Race, Student};
use crate::error::Error;
use crate::{Result, MAX_RANKED_CHOICES};

/// Current on-disk schema version, recorded in `meta.json`.
pub const SCHEMA_VERSION: u32 = 1;

/// File locations for one dataset. The conventional layout is one directory
/// holding `students.csv`, `programs.csv`, optional `distances.csv`, and
/// `meta.json`.
#[derive(Debug, Clone)]
pub struct DatasetPaths {
    pub students: PathBuf,
    pub programs: PathBuf,
    pub distances: Option<PathBuf>,
    pub meta: Option<PathBuf>,
}

impl DatasetPaths {
    pub fn dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        let distances = dir.join("distances.csv");
        let meta = dir.join("meta.json");
        DatasetPaths {
            students: dir.join("students.csv"),
            programs: dir.join("programs.csv"),
            distances: distances.exists().then_some(distances),
            meta: meta.exists().then_some(meta),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    schema_version: u32,
    year: i32,
}

#[derive(Debug, Serialize, Deserialize)]
struct ProgramRow {
    program_id: String,
    school_id: String,
    tier: u8,
    capacity: u32,
    is_ell_program: bool,
    ell_language: Option<String>,
    mcas_share: f64,
    pct_white_asian: f64,
    lat: f64,
    lon: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct StudentRow {
    id: String,
    grade: String,
    neighborhood: u8,
    geocode: u32,
    lat: f64,
    lon: f64,
    race: String,
    income_est: f64,
    is_ell: bool,
    ell_language: Option<String>,
    continuing_program: Option<String>,
    /// Pipe-separated school ids.
    sibling_schools: Option<String>,
    lottery: f64,
    /// Pipe-separated program ids, best first.
    ranking: String,
    assigned_program: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DistanceRow {
    geocode: u32,
    school_id: String,
    miles: f64,
}

/// Load and validate one dataset. Every violating row is reported; the load
/// fails if any row is bad. Rankings longer than ten are truncated with a
/// warning rather than rejected.
pub fn load_dataset(paths: &DatasetPaths, schema_version: u32) -> Result<(Dataset, DistanceModel)> {
    let year = match &paths.meta {
        Some(meta_path) => {
            let meta: Meta = serde_json::from_reader(std::fs::File::open(meta_path)?)?;
            if meta.schema_version != schema_version {
                return Err(Error::SchemaMismatch { expected: schema_version, found: meta.schema_version });
            }
            meta.year
        }
        None => 0,
    };

    let mut programs = Vec::new();
    for row in csv::Reader::from_path(&paths.programs)?.deserialize() {
        let row: ProgramRow = row?;
        programs.push(ProgramOption {
            program_id: row.program_id,
            school_id: row.school_id,
            tier: row.tier,
            capacity: row.capacity,
            is_ell_program: row.is_ell_program,
            ell_language: row.ell_language,
            mcas_share: row.mcas_share,
            pct_white_asian: row.pct_white_asian,
            school_location: LatLon { lat: row.lat, lon: row.lon },
        });
    }
    let table = ProgramTable::new(programs)?;

    let mut students = Vec::new();
    let mut rankings = Vec::new();
    let mut assigned = Vec::new();
    let mut problems = Vec::new();
    for (line, row) in csv::Reader::from_path(&paths.students)?.deserialize().enumerate() {
        let row: StudentRow = row?;
        let row_no = line + 2; // header is line 1

        let grade = match Grade::parse(&row.grade) {
            Ok(g) => g,
            Err(_) => {
                problems.push(format!("students.csv row {row_no}: bad grade {:?}", row.grade));
                Grade::K2
            }
        };
        let race = match Race::parse(&row.race) {
            Ok(r) => r,
            Err(_) => {
                problems.push(format!("students.csv row {row_no}: bad race {:?}", row.race));
                Race::Unknown
            }
        };
        let sibling_schools: BTreeSet<String> = row
            .sibling_schools
            .as_deref()
            .unwrap_or("")
            .split('|')
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect();
        for school in &sibling_schools {
            if table.school_index(school).is_none() {
                problems.push(format!("students.csv row {row_no}: unknown sibling school {school:?}"));
            }
        }

        let mut ranking = Vec::new();
        let raw: Vec<&str> = row.ranking.split('|').filter(|s| !s.is_empty()).collect();
        if raw.is_empty() {
            problems.push(format!("students.csv row {row_no}: empty ranking"));
        }
        if raw.len() > MAX_RANKED_CHOICES {
            log::warn!(
                "students.csv row {row_no}: {} ranked choices, truncating to {}",
                raw.len(),
                MAX_RANKED_CHOICES
            );
        }
        for pid in raw.into_iter().take(MAX_RANKED_CHOICES) {
            match table.index_of(pid) {
                Some(idx) => ranking.push(idx),
                None => problems.push(format!("students.csv row {row_no}: ranked unknown program {pid:?}")),
            }
        }
        let assignment = match row.assigned_program.as_deref() {
            None | Some("") => None,
            Some(pid) => match table.index_of(pid) {
                Some(idx) => Some(idx),
                None => {
                    problems.push(format!("students.csv row {row_no}: assigned unknown program {pid:?}"));
                    None
                }
            },
        };

        students.push(Student {
            id: row.id,
            grade,
            neighborhood: row.neighborhood,
            geocode: row.geocode,
            home_location: LatLon { lat: row.lat, lon: row.lon },
            race,
            income_estimate: row.income_est,
            is_ell: row.is_ell,
            ell_language: row.ell_language,
            continuing_program: row.continuing_program.filter(|s| !s.is_empty()),
            sibling_schools,
            lottery_number: row.lottery,
        });
        rankings.push(ranking);
        assigned.push(assignment);
    }
    if !problems.is_empty() {
        return Err(Error::validation(problems));
    }

    let mut matrix = HashMap::new();
    if let Some(dist_path) = &paths.distances {
        for row in csv::Reader::from_path(dist_path)?.deserialize() {
            let row: DistanceRow = row?;
            matrix.insert((row.geocode, row.school_id), row.miles);
        }
    }
    let distances = DistanceModel::with_matrix(matrix, true);

    let dataset = Dataset { year, students, programs: table, rankings, assigned };
    dataset.validate()?;
    Ok((dataset, distances))
}

/// Write a dataset (and distance matrix) to `dir` in the conventional
/// layout. Output is byte-deterministic: rows follow input order and the
/// distance matrix is sorted.
pub fn save_dataset(dataset: &Dataset, distances: &DistanceModel, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;

    let mut w = csv::Writer::from_path(dir.join("programs.csv"))?;
    for p in dataset.programs.programs() {
        w.serialize(ProgramRow {
            program_id: p.program_id.clone(),
            school_id: p.school_id.clone(),
            tier: p.tier,
            capacity: p.capacity,
            is_ell_program: p.is_ell_program,
            ell_language: p.ell_language.clone(),
            mcas_share: p.mcas_share,
            pct_white_asian: p.pct_white_asian,
            lat: p.school_location.lat,
            lon: p.school_location.lon,
        })?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("students.csv"))?;
    for (i, s) in dataset.students.iter().enumerate() {
        let ranking: Vec<&str> = dataset.rankings[i]
            .iter()
            .map(|&p| dataset.programs.get(p).program_id.as_str())
            .collect();
        let siblings: Vec<&str> = s.sibling_schools.iter().map(|s| s.as_str()).collect();
        w.serialize(StudentRow {
            id: s.id.clone(),
            grade: s.grade.to_string(),
            neighborhood: s.neighborhood,
            geocode: s.geocode,
            lat: s.home_location.lat,
            lon: s.home_location.lon,
            race: s.race.as_str().to_string(),
            income_est: s.income_estimate,
            is_ell: s.is_ell,
            ell_language: s.ell_language.clone(),
            continuing_program: s.continuing_program.clone(),
            sibling_schools: if siblings.is_empty() { None } else { Some(siblings.join("|")) },
            lottery: s.lottery_number,
            ranking: ranking.join("|"),
            assigned_program: dataset.assigned[i].map(|p| dataset.programs.get(p).program_id.clone()),
        })?;
    }
    w.flush()?;

    let mut entries: Vec<(&(u32, String), &f64)> = distances.matrix().iter().collect();
    entries.sort_by(|a, b| a.0.cmp(b.0));
    let mut w = csv::Writer::from_path(dir.join("distances.csv"))?;
    for ((geocode, school_id), &miles) in entries {
        w.serialize(DistanceRow { geocode: *geocode, school_id: school_id.clone(), miles })?;
    }
    w.flush()?;

    let meta = Meta { schema_version: SCHEMA_VERSION, year: dataset.year };
    serde_json::to_writer_pretty(std::fs::File::create(dir.join("meta.json"))?, &meta)?;
    Ok(())
}
