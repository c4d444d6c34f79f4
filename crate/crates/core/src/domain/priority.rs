use serde::{Deserialize, Serialize};

use crate::domain::{ProgramTable, Student};

/// Program-side standing of one applicant: priority level first (lower is
/// better), then the single lottery number breaks ties. With almost-surely
/// distinct lottery numbers this is a strict total order over applicants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Priority {
    pub level: u8,
    pub lottery: f64,
}

pub const LEVEL_CONTINUING: u8 = 0;
pub const LEVEL_SIBLING: u8 = 1;
pub const LEVEL_OTHER: u8 = 2;

/// Which priority structure programs apply.
///
/// The default deliberately has no walk-zone priority, matching the
/// mechanism in the year under study. The walk-zone variant exists as a
/// plug-in: it splits each program into a walk half (processed first, walk
/// residents ahead of others within each level) and an open half. The
/// district's exact seat-split processing order is not pinned down here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PriorityRule {
    #[default]
    Standard,
    WalkZoneSplit,
}

/// Priority of `student` at program `program_idx`: continuing beats
/// sibling beats everyone else.
pub fn priority_of(student: &Student, program_idx: usize, table: &ProgramTable) -> Priority {
    let program = table.get(program_idx);
    let level = if student.continuing_program.as_deref() == Some(program.program_id.as_str()) {
        LEVEL_CONTINUING
    } else if student.sibling_schools.contains(&program.school_id) {
        LEVEL_SIBLING
    } else {
        LEVEL_OTHER
    };
    Priority { level, lottery: student.lottery_number }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Grade, LatLon, ProgramOption, Race};
    use std::collections::BTreeSet;

    fn table() -> ProgramTable {
        ProgramTable::new(vec![ProgramOption {
            program_id: "P1".into(),
            school_id: "S1".into(),
            tier: 1,
            capacity: 5,
            is_ell_program: false,
            ell_language: None,
            mcas_share: 0.6,
            pct_white_asian: 0.4,
            school_location: LatLon { lat: 42.3, lon: -71.1 },
        }])
        .unwrap()
    }

    fn student(cont: Option<&str>, sibling: Option<&str>) -> Student {
        Student {
            id: "x".into(),
            grade: Grade::K2,
            neighborhood: 1,
            geocode: 0,
            home_location: LatLon { lat: 42.3, lon: -71.1 },
            race: Race::Hispanic,
            income_estimate: 0.4,
            is_ell: false,
            ell_language: None,
            continuing_program: cont.map(String::from),
            sibling_schools: sibling.map(String::from).into_iter().collect::<BTreeSet<_>>(),
            lottery_number: 0.42,
        }
    }

    #[test]
    fn continuing_beats_sibling_beats_other() {
        let t = table();
        assert_eq!(priority_of(&student(Some("P1"), None), 0, &t).level, LEVEL_CONTINUING);
        assert_eq!(priority_of(&student(None, Some("S1")), 0, &t).level, LEVEL_SIBLING);
        assert_eq!(priority_of(&student(None, None), 0, &t).level, LEVEL_OTHER);
        // Continuing at the program outranks having a sibling at the school.
        assert_eq!(priority_of(&student(Some("P1"), Some("S1")), 0, &t).level, LEVEL_CONTINUING);
    }
}
