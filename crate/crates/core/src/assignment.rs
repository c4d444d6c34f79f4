//! Student-proposing deferred acceptance with priority-then-lottery
//! tie-breaking.
//!
//! The market is index-based: the caller resolves students, rankings,
//! priorities, and capacities; this module runs the mechanism and exposes
//! the admission cutoffs that the access-to-quality metric reads off.

use std::cmp::Ordering;

use crate::domain::{priority_of, ChoiceMenu, ProgramTable, PriorityRule, Student, WALK_ZONE_MILES};
use crate::error::Error;
use crate::Result;

/// One applicant in a market: ranked programs (best first), the priority
/// level at each ranked program, and the lottery number.
#[derive(Debug, Clone)]
pub struct Applicant {
    pub ranking: Vec<usize>,
    pub levels: Vec<u8>,
    pub lottery: f64,
}

/// A matching market over `n_programs` programs.
#[derive(Debug, Clone)]
pub struct Market {
    pub n_programs: usize,
    pub capacity: Vec<u32>,
    pub applicants: Vec<Applicant>,
}

impl Market {
    /// Assemble a market from domain data. Programs a student ranked that
    /// fall outside their menu are the caller's responsibility; rankings
    /// here are taken as submitted.
    pub fn from_domain(
        students: &[&Student],
        rankings: &[Vec<usize>],
        lotteries: &[f64],
        capacity: &[u32],
        table: &ProgramTable,
        rule: PriorityRule,
    ) -> Market {
        let applicants = students
            .iter()
            .zip(rankings)
            .zip(lotteries)
            .map(|((student, ranking), &lottery)| {
                let levels = ranking.iter().map(|&p| priority_of(student, p, table).level).collect();
                Applicant { ranking: ranking.clone(), levels, lottery }
            })
            .collect();
        let mut market = Market { n_programs: table.len(), capacity: capacity.to_vec(), applicants };
        if rule == PriorityRule::WalkZoneSplit {
            market = split_walk_zone(market, students, table);
        }
        market
    }
}

/// Admission cutoff of one program after the mechanism has run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cutoff {
    /// Seats left over: anyone with any lottery number gets in.
    Undersubscribed,
    /// Filled: the weakest admitted applicant's standing.
    Filled { level: u8, lottery: f64 },
}

/// Outcome of one deferred-acceptance run.
#[derive(Debug, Clone)]
pub struct Matching {
    /// Per student: assigned program, if any.
    pub assigned: Vec<Option<usize>>,
    /// Per student: the round of the admission that stuck.
    pub round_admitted: Vec<Option<u32>>,
    /// Per program: admitted students.
    pub admitted: Vec<Vec<usize>>,
    /// Per program: the cutoff the last seat cleared at.
    pub cutoffs: Vec<Cutoff>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Standing {
    level: u8,
    lottery: f64,
    student: usize,
}

impl Standing {
    fn key(&self) -> (u8, f64) {
        (self.level, self.lottery)
    }
}

fn worse(a: &Standing, b: &Standing) -> Ordering {
    a.key().partial_cmp(&b.key()).unwrap_or(Ordering::Equal)
}

/// Student-proposing deferred acceptance.
///
/// Round 1: every student applies to their first choice; each program ranks
/// applicants by (priority level, lottery) and rejects those in excess of
/// capacity. Round r: students rejected in round r-1 apply to their next
/// ranked program, which reconsiders them together with its provisional
/// admits. Terminates when no student has a pending application. Two
/// applicants tied exactly on (level, lottery) at the same program are an
/// error: the program-side order must be strict.
pub fn deferred_acceptance(market: &Market) -> Result<Matching> {
    let n_students = market.applicants.len();
    let n_programs = market.n_programs;
    let mut next_choice = vec![0usize; n_students];
    let mut assigned: Vec<Option<usize>> = vec![None; n_students];
    let mut round_admitted: Vec<Option<u32>> = vec![None; n_students];
    let mut pools: Vec<Vec<Standing>> = vec![Vec::new(); n_programs];
    let mut active: Vec<usize> = (0..n_students).collect();
    let mut round = 0u32;

    while !active.is_empty() {
        round += 1;
        let mut touched: Vec<usize> = Vec::new();
        for &student in &active {
            let applicant = &market.applicants[student];
            if next_choice[student] >= applicant.ranking.len() {
                continue; // exhausted every ranked program
            }
            let choice = next_choice[student];
            let program = applicant.ranking[choice];
            pools[program].push(Standing { level: applicant.levels[choice], lottery: applicant.lottery, student });
            if !touched.contains(&program) {
                touched.push(program);
            }
            assigned[student] = Some(program);
            round_admitted[student] = Some(round);
        }

        let mut rejected: Vec<usize> = Vec::new();
        for &program in &touched {
            let pool = &mut pools[program];
            pool.sort_by(worse);
            for pair in pool.windows(2) {
                if pair[0].key() == pair[1].key() {
                    return Err(Error::DuplicateLottery {
                        program: format!("{program}"),
                        level: pair[0].level,
                        lottery: pair[0].lottery,
                    });
                }
            }
            while pool.len() > market.capacity[program] as usize {
                let out = pool.pop().expect("pool non-empty");
                assigned[out.student] = None;
                round_admitted[out.student] = None;
                rejected.push(out.student);
                next_choice[out.student] += 1;
            }
        }
        rejected.sort_unstable();
        rejected.dedup();
        active = rejected;
    }

    let mut admitted = vec![Vec::new(); n_programs];
    for (student, slot) in assigned.iter().enumerate() {
        if let Some(program) = slot {
            admitted[*program].push(student);
        }
    }
    let cutoffs = (0..n_programs)
        .map(|p| {
            if pools[p].len() < market.capacity[p] as usize {
                Cutoff::Undersubscribed
            } else if let Some(worst) = pools[p].last() {
                Cutoff::Filled { level: worst.level, lottery: worst.lottery }
            } else {
                // Zero capacity: nobody clears.
                Cutoff::Filled { level: 0, lottery: 0.0 }
            }
        })
        .collect();

    Ok(Matching { assigned, round_admitted, admitted, cutoffs })
}

/// Worst lottery number with which `student` could still be admitted to
/// some Tier 1 or 2 program in their menu, read off the recorded cutoffs
/// of a completed run (no re-equilibration): 1 for an undersubscribed
/// program or when the student's priority level beats the marginal
/// admit's; the marginal lottery number at the student's own level; 0 when
/// even that is out of reach or no Tier 1/2 program is in the menu.
pub fn access_to_quality(student: &Student, menu: &ChoiceMenu, matching: &Matching, table: &ProgramTable) -> f64 {
    let mut best: f64 = 0.0;
    for &p in &menu.options {
        if table.get(p).tier > 2 {
            continue;
        }
        let access = match matching.cutoffs[p] {
            Cutoff::Undersubscribed => 1.0,
            Cutoff::Filled { level, lottery } => {
                let own = priority_of(student, p, table).level;
                match own.cmp(&level) {
                    Ordering::Less => 1.0,
                    Ordering::Equal => lottery,
                    Ordering::Greater => 0.0,
                }
            }
        };
        best = best.max(access);
    }
    best
}

/// Walk-zone plug-in: split each program into a walk half (capacity
/// rounded up, walk-zone residents ahead of others within each priority
/// level) and an open half, with students applying to the walk half first.
/// The exact seat-split processing order used historically is not pinned
/// down; this is one simple variant.
fn split_walk_zone(market: Market, students: &[&Student], table: &ProgramTable) -> Market {
    let n = market.n_programs;
    let mut capacity = Vec::with_capacity(2 * n);
    for &c in &market.capacity {
        capacity.push(c.div_ceil(2)); // walk half of program p = p
        capacity.push(c / 2); // open half of program p = n + p
    }
    // Reindex: walk half of program p keeps index 2p, open half 2p + 1.
    let applicants = market
        .applicants
        .iter()
        .zip(students)
        .map(|(applicant, student)| {
            let mut ranking = Vec::with_capacity(applicant.ranking.len() * 2);
            let mut levels = Vec::with_capacity(applicant.ranking.len() * 2);
            for (&p, &level) in applicant.ranking.iter().zip(&applicant.levels) {
                let dist = crate::domain::haversine_miles(student.home_location, table.get(p).school_location);
                let in_walk = dist <= WALK_ZONE_MILES;
                ranking.push(2 * p);
                levels.push(2 * level + if in_walk { 0 } else { 1 });
                ranking.push(2 * p + 1);
                levels.push(2 * level);
            }
            Applicant { ranking, levels, lottery: applicant.lottery }
        })
        .collect();
    Market { n_programs: 2 * n, capacity, applicants }
}

/// Collapse a walk-zone-split matching back to original program indices.
pub fn merge_walk_zone_matching(matching: Matching, n_programs: usize) -> Matching {
    let assigned = matching.assigned.iter().map(|slot| slot.map(|p| p / 2)).collect();
    let mut admitted = vec![Vec::new(); n_programs];
    for (p, students) in matching.admitted.iter().enumerate() {
        admitted[p / 2].extend(students.iter().copied());
    }
    let cutoffs = (0..n_programs)
        .map(|p| {
            // The open half's cutoff is the binding one for outsiders.
            matching.cutoffs[2 * p + 1]
        })
        .collect();
    Matching { assigned, round_admitted: matching.round_admitted, admitted, cutoffs }
}
