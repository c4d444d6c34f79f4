//! Dataset container, CSV load/save, capacity inference, and synthetic
//! population generation.

mod loader;
mod synthetic;

pub use loader::{load_dataset, save_dataset, DatasetPaths, SCHEMA_VERSION};
pub use synthetic::{generate_history, generate_synthetic, SyntheticConfig, TrueModel};

use std::collections::BTreeMap;

use crate::domain::{Grade, ProgramTable, Student};
use crate::error::Error;
use crate::{Result, MAX_RANKED_CHOICES};

/// One year of choice data: students, their submitted rankings (as program
/// indices, best first, at most ten), and the observed assignment when the
/// data carries one.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub year: i32,
    pub students: Vec<Student>,
    pub programs: ProgramTable,
    /// Per student, ranked program indices into `programs`.
    pub rankings: Vec<Vec<usize>>,
    /// Per student, the program the student was assigned to, if any.
    pub assigned: Vec<Option<usize>>,
}

impl Dataset {
    /// Validate cross-record invariants. `truncated` rows were already cut
    /// to ten by the caller; everything else hard-fails with one message
    /// per bad row.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.rankings.len() != self.students.len() || self.assigned.len() != self.students.len() {
            problems.push("rankings/assignments not aligned with students".to_string());
        }
        for (i, student) in self.students.iter().enumerate() {
            problems.extend(student.violations(&self.programs));
            if let Some(ranking) = self.rankings.get(i) {
                if ranking.is_empty() {
                    problems.push(format!("student {}: empty ranking", student.id));
                }
                if ranking.len() > MAX_RANKED_CHOICES {
                    problems.push(format!("student {}: ranking longer than {}", student.id, MAX_RANKED_CHOICES));
                }
                let mut seen = std::collections::HashSet::new();
                for &p in ranking {
                    if p >= self.programs.len() {
                        problems.push(format!("student {}: ranked program index {p} out of range", student.id));
                    } else if !seen.insert(p) {
                        problems.push(format!(
                            "student {}: duplicate ranked program {}",
                            student.id,
                            self.programs.get(p).program_id
                        ));
                    }
                }
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::validation(problems))
        }
    }

    pub fn students_of_grade(&self, grade: Grade) -> impl Iterator<Item = usize> + '_ {
        self.students
            .iter()
            .enumerate()
            .filter(move |(_, s)| s.grade == grade)
            .map(|(i, _)| i)
    }

    /// Count of new (non-continuing) applicants per (grade, neighborhood).
    pub fn new_applicants_by_cell(&self) -> BTreeMap<(Grade, u8), usize> {
        let mut cells = BTreeMap::new();
        for s in &self.students {
            if s.continuing_program.is_none() {
                *cells.entry((s.grade, s.neighborhood)).or_insert(0) += 1;
            }
        }
        cells
    }

    /// Round-1 capacities inferred from this dataset's observed
    /// assignments, restricted to `grade` when given.
    pub fn inferred_capacities(&self, grade: Option<Grade>) -> Vec<u32> {
        let assigned = self
            .students
            .iter()
            .zip(&self.assigned)
            .filter(|(s, _)| grade.is_none_or(|g| s.grade == g))
            .map(|(_, a)| *a);
        infer_capacities(assigned, self.programs.len())
    }
}

/// Capacity table from an assignment record: seats at program `j` = number
/// of students assigned to `j`; unassigned students are ignored.
pub fn infer_capacities(assigned: impl IntoIterator<Item = Option<usize>>, n_programs: usize) -> Vec<u32> {
    let mut capacity = vec![0u32; n_programs];
    for slot in assigned.into_iter().flatten() {
        capacity[slot] += 1;
    }
    capacity
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infer_capacities_counts_assignments() {
        // Nobody assigned to program 0; 22 students assigned to program 1.
        let assigned = std::iter::repeat_n(Some(1usize), 22).chain([None, None]).map(|a| a);
        let capacity = infer_capacities(assigned, 3);
        assert_eq!(capacity, vec![0, 22, 0]);
    }
}
