//! The PQE search. Each X-clause of F₁ in turn becomes the primary target
//! and is proved redundant by a CDCL-like loop that learns clauses and
//! D-sequents, then removed. Y-only clauses left in F₁ form the answer.

mod engine;
mod learn;

use std::time::Duration;

use thiserror::Error;

use crate::dsequent::{DSequent, Rule};
use crate::formula::{ClauseDb, ClauseId, EcnfProblem, Lit, Var};

pub use engine::{Engine, Flow, TargetLevel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarOrder {
    StaticIndex,
    ActivityBased,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Store D-sequents whose target sits at stack depth ≤ k. 0 keeps
    /// only primary-target records; -1 stores nothing.
    pub learn_depth_k: i32,
    pub var_order: VarOrder,
    pub default_polarity: bool,
    /// Only used to jitter initial activities.
    pub seed: u64,
    /// Budget on backtracking events: conflicts plus D-sequent backtracks.
    pub max_conflicts: Option<u64>,
    pub max_time: Option<Duration>,
    /// When the target is satisfied by a literal implied through a chain
    /// of clauses, add the chain's resolvent and use it as the single
    /// structure-constraint clause.
    pub reduce_constraints: bool,
    /// Record every D-sequent built, with the formula size at the time.
    pub trace: bool,
}

impl Default for SolverConfig {
    fn default() -> SolverConfig {
        SolverConfig {
            learn_depth_k: 0,
            var_order: VarOrder::StaticIndex,
            default_polarity: false,
            seed: 0,
            max_conflicts: None,
            max_time: None,
            reduce_constraints: false,
            trace: false,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error("resource limit reached: {0}")]
    ResourceLimit(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BacktrackCondition {
    SatTrg,
    FalsifiedClause(ClauseId),
    ActiveDSequent(DSequent),
    BlockedTrg(Var),
    ConflictInBcpStar(ClauseId),
    /// The top level has no clause left to prove; its key is blocked.
    LevelExhausted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LrnOutcome {
    ConflictClause(ClauseId),
    DSequentOnly(DSequent),
    DSequentAndClause(DSequent, ClauseId),
    /// The empty clause was derived.
    EmptyClause,
    /// Learning would repeat an existing clause or cannot proceed; the
    /// SAT-based fallback takes over.
    Duplicate,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stats {
    pub primaries: u64,
    pub decisions: u64,
    pub conflicts: u64,
    pub backtracks: u64,
    pub ds_atomic1: u64,
    pub ds_atomic2: u64,
    pub ds_atomic3: u64,
    pub ds_join: u64,
    pub ds_other: u64,
    pub ds_reused: u64,
    pub ds_stored: u64,
    pub clauses_f1: u64,
    pub clauses_f2: u64,
    pub duplicates: u64,
    pub max_stack_depth: u64,
    pub wall_time_us: u64,
}

impl Stats {
    pub fn ds_generated(&self) -> u64 {
        self.ds_atomic1 + self.ds_atomic2 + self.ds_atomic3 + self.ds_join + self.ds_other
    }

    fn count(&mut self, r: Rule) {
        match r {
            Rule::Atomic1 | Rule::Atomic1YPrefix => self.ds_atomic1 += 1,
            Rule::Atomic2 => self.ds_atomic2 += 1,
            Rule::Atomic3 => self.ds_atomic3 += 1,
            Rule::Join => self.ds_join += 1,
            _ => self.ds_other += 1,
        }
    }

    /// Every counter except wall time, as `key=value` lines.
    pub fn counters_kv(&self) -> String {
        let rows: [(&str, u64); 16] = [
            ("primaries", self.primaries),
            ("decisions", self.decisions),
            ("conflicts", self.conflicts),
            ("backtracks", self.backtracks),
            ("ds_generated", self.ds_generated()),
            ("ds_atomic1", self.ds_atomic1),
            ("ds_atomic2", self.ds_atomic2),
            ("ds_atomic3", self.ds_atomic3),
            ("ds_join", self.ds_join),
            ("ds_other", self.ds_other),
            ("ds_reused", self.ds_reused),
            ("ds_stored", self.ds_stored),
            ("clauses_f1", self.clauses_f1),
            ("clauses_f2", self.clauses_f2),
            ("duplicates", self.duplicates),
            ("max_stack_depth", self.max_stack_depth),
        ];
        rows.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn to_kv(&self) -> String {
        format!("{}wall_time_us={}\n", self.counters_kv(), self.wall_time_us)
    }
}

/// A D-sequent as built, with enough to rebuild the formula it was built
/// against: clause ids below `db_len`, minus the first `removed_len`
/// removed primaries.
#[derive(Debug, Clone)]
pub struct Emission {
    pub ds: DSequent,
    pub db_len: usize,
    pub removed_len: usize,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub f1_star: Vec<Vec<Lit>>,
    pub stats: Stats,
    pub emissions: Vec<Emission>,
    pub db: ClauseDb,
    /// Primaries in removal order.
    pub removed: Vec<ClauseId>,
}

impl Solution {
    /// The clauses present when `e` was built.
    pub fn formula_at(&self, e: &Emission) -> Vec<(ClauseId, Vec<Lit>)> {
        let gone = &self.removed[..e.removed_len];
        (0..e.db_len)
            .filter(|id| !gone.contains(id))
            .map(|id| (id, self.db.lits(id).to_vec()))
            .collect()
    }

    pub fn trace_text(&self) -> String {
        self.emissions
            .iter()
            .map(|e| format!("{}\n", e.ds.trace_line()))
            .collect()
    }
}

pub fn solve_pqe(problem: &EcnfProblem, config: &SolverConfig) -> Result<Solution, SolveError> {
    Engine::new(problem.clone(), config.clone()).run()
}

/// The record to store for a D-sequent whose target is at `depth`, or
/// None when it should not be kept.
pub fn retention_filter(
    s: &DSequent,
    depth: usize,
    config: &SolverConfig,
    is_x_clause: impl Fn(ClauseId) -> bool,
) -> Option<DSequent> {
    let k = config.learn_depth_k;
    if k < 0 || depth as i64 > k as i64 {
        return None;
    }
    let mut check = s.clone();
    if k == 0 {
        check.constraint.clear();
    } else {
        check.constraint.retain(|&h| is_x_clause(h));
    }
    Some(check)
}

#[cfg(test)]
mod tests;
