//! Rule-based ranking model.
//!
//! Families rank every program in their menu by a lexicographic hierarchy:
//! current program first, then another program at the current school, then
//! schools where a sibling attends, then (for ELL students) ELL programs and
//! home-language ELL programs, then better-tier schools, then shorter
//! distance. Criteria that do not pertain to a student (continuing rows for
//! new applicants, ELL rows for non-ELL students) never fire for them.

use std::cmp::Ordering;

use crate::domain::{ChoiceMenu, ProgramTable, Student};

/// Sort key implementing the hierarchy. Lower compares first. The final
/// component breaks exact ties (including equal distances) by program index
/// so rankings are deterministic.
fn criteria(student: &Student, menu: &ChoiceMenu, slot: usize, table: &ProgramTable) -> (u8, u8, u8, u8, u8, u8, f64, usize) {
    let program_idx = menu.options[slot];
    let program = table.get(program_idx);
    let not = |b: bool| !b as u8;

    let is_present = student.continuing_program.as_deref() == Some(program.program_id.as_str());
    let current_school = student
        .continuing_program
        .as_ref()
        .and_then(|cont| table.index_of(cont))
        .map(|cont_idx| table.school_of(cont_idx));
    let same_school_other = !is_present && current_school == Some(table.school_of(program_idx));
    let sibling = student.sibling_schools.contains(&program.school_id);
    let ell_program = student.is_ell && program.is_ell_program;
    let ell_home_language = ell_program && student.ell_language.is_some() && student.ell_language == program.ell_language;
    // Tier 4 and anything beyond are equally worst.
    let tier = program.tier.min(4);

    (
        not(is_present),
        not(same_school_other),
        not(sibling),
        not(ell_program),
        not(ell_home_language),
        tier,
        menu.distances[slot],
        program_idx,
    )
}

/// Full strict ranking of the menu under the hierarchy (a permutation of
/// the menu, best first).
pub fn rank_naive(student: &Student, menu: &ChoiceMenu, table: &ProgramTable) -> Vec<usize> {
    let mut order: Vec<usize> = (0..menu.options.len()).collect();
    order.sort_by(|&a, &b| {
        let ka = criteria(student, menu, a, table);
        let kb = criteria(student, menu, b, table);
        ka.partial_cmp(&kb).unwrap_or(Ordering::Equal)
    });
    order.into_iter().map(|slot| menu.options[slot]).collect()
}
