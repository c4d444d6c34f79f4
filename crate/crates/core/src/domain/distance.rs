use std::collections::HashMap;

use crate::domain::{ProgramTable, Student};
use crate::error::Error;
use crate::Result;

/// Walk-zone radius in miles: a student is in a school's walk zone when the
/// home-to-school distance is at most this.
pub const WALK_ZONE_MILES: f64 = 1.0;

pub const EARTH_RADIUS_MILES: f64 = 3958.7613;

/// Great-circle distance in miles between two lat/lon points (degrees).
pub fn haversine_miles(a: crate::domain::LatLon, b: crate::domain::LatLon) -> f64 {
    let lat1 = a.lat.to_radians();
    let lat2 = b.lat.to_radians();
    let dlat = (b.lat - a.lat).to_radians();
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_MILES * h.sqrt().asin()
}

/// Home-to-school distances.
///
/// A loaded matrix entry (keyed by student geocode and school id) always
/// takes precedence; otherwise the model falls back to great-circle miles
/// between the student's home and the school location, unless the fallback
/// is disabled, in which case the lookup is an error.
#[derive(Debug, Clone, Default)]
pub struct DistanceModel {
    matrix: HashMap<(u32, String), f64>,
    fallback: bool,
}

impl DistanceModel {
    /// Pure haversine model (no matrix).
    pub fn haversine() -> Self {
        DistanceModel { matrix: HashMap::new(), fallback: true }
    }

    pub fn with_matrix(matrix: HashMap<(u32, String), f64>, fallback: bool) -> Self {
        DistanceModel { matrix, fallback }
    }

    pub fn matrix(&self) -> &HashMap<(u32, String), f64> {
        &self.matrix
    }

    pub fn has_fallback(&self) -> bool {
        self.fallback
    }

    /// Miles from `student`'s home to the school of program `program_idx`.
    pub fn distance(&self, student: &Student, program_idx: usize, table: &ProgramTable) -> Result<f64> {
        let program = table.get(program_idx);
        if let Some(&miles) = self.matrix.get(&(student.geocode, program.school_id.clone())) {
            return Ok(miles);
        }
        if self.fallback {
            Ok(haversine_miles(student.home_location, program.school_location))
        } else {
            Err(Error::MissingDistance { geocode: student.geocode, school: program.school_id.clone() })
        }
    }

    /// Distance to a school = min over that school's programs (they share a
    /// location in practice, but the matrix is keyed by school anyway).
    pub fn school_distance(&self, student: &Student, school: usize, table: &ProgramTable) -> Result<f64> {
        let mut best = f64::INFINITY;
        for &p in table.programs_of_school(school) {
            best = best.min(self.distance(student, p, table)?);
        }
        Ok(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::LatLon;

    fn table() -> ProgramTable {
        ProgramTable::new(vec![crate::domain::ProgramOption {
            program_id: "P1".into(),
            school_id: "S1".into(),
            tier: 1,
            capacity: 10,
            is_ell_program: false,
            ell_language: None,
            mcas_share: 0.5,
            pct_white_asian: 0.5,
            school_location: LatLon { lat: 43.3, lon: -71.1 },
        }])
        .unwrap()
    }

    fn student_at(lat: f64, lon: f64) -> Student {
        Student {
            id: "a".into(),
            grade: crate::domain::Grade::K2,
            neighborhood: 0,
            geocode: 17,
            home_location: LatLon { lat, lon },
            race: crate::domain::Race::White,
            income_estimate: 0.5,
            is_ell: false,
            ell_language: None,
            continuing_program: None,
            sibling_schools: Default::default(),
            lottery_number: 0.5,
        }
    }

    #[test]
    fn identical_coordinates_are_zero_miles() {
        let d = haversine_miles(LatLon { lat: 42.3, lon: -71.1 }, LatLon { lat: 42.3, lon: -71.1 });
        assert_eq!(d, 0.0);
    }

    #[test]
    fn one_degree_of_latitude_is_about_69_miles() {
        let d = haversine_miles(LatLon { lat: 42.3, lon: -71.1 }, LatLon { lat: 43.3, lon: -71.1 });
        assert!((d - 69.0).abs() < 0.5, "got {d}");
    }

    #[test]
    fn matrix_entry_takes_precedence_over_coordinates() {
        let table = table();
        let mut matrix = HashMap::new();
        matrix.insert((17u32, "S1".to_string()), 1.37);
        let model = DistanceModel::with_matrix(matrix, true);
        // Student lives a degree of latitude away; matrix overrides.
        let d = model.distance(&student_at(42.3, -71.1), 0, &table).unwrap();
        assert_eq!(d, 1.37);
    }

    #[test]
    fn missing_entry_without_fallback_is_an_error() {
        let table = table();
        let model = DistanceModel::with_matrix(HashMap::new(), false);
        assert!(matches!(
            model.distance(&student_at(42.3, -71.1), 0, &table),
            Err(Error::MissingDistance { .. })
        ));
    }
}
