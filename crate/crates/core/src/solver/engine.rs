use std::collections::VecDeque;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BacktrackCondition, Emission, SolveError, Solution, SolverConfig, Stats, VarOrder};
use crate::dsequent::{DSequent, DSequentStore};
use crate::formula::{resolvable_on, ClauseId, EcnfProblem, Lit, Reason, Trail, Var};

/// One level of the target stack. The bottom level holds the primary and
/// has no key variable. Above it, `key` is the clause being proved at the
/// level below and `key_var` the X variable its BCP* seed assigned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetLevel {
    pub key: ClauseId,
    pub key_var: Option<Var>,
    pub target: Option<ClauseId>,
    /// Partners of the key proved redundant at this level, soft-deleted.
    pub done: Vec<(ClauseId, DSequent)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Proved,
    Unsat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(super) enum Status {
    Satisfied,
    Falsified,
    Unit(Lit),
    Open,
}

pub struct Engine {
    pub(super) problem: EcnfProblem,
    pub(super) cfg: SolverConfig,
    pub(super) trail: Trail,
    pub(super) stack: Vec<TargetLevel>,
    pub(super) queue: VecDeque<(Lit, Reason)>,
    /// Target literal waiting for BCP*.
    pub(super) deferred: Option<Lit>,
    pub(super) scanned: usize,
    pub(super) rescan: bool,
    /// D-sequents used as reasons on the trail.
    pub(super) arena: Vec<DSequent>,
    pub(super) store: DSequentStore,
    pub(super) stats: Stats,
    pub(super) emissions: Vec<Emission>,
    pub(super) removed: Vec<ClauseId>,
    activity: Vec<f64>,
    bump: f64,
    start: Instant,
    pub(super) unsat: bool,
}

impl Engine {
    pub fn new(problem: EcnfProblem, cfg: SolverConfig) -> Engine {
        let n = problem.num_vars;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let activity = (0..=n).map(|_| rng.gen::<f64>() * 1e-6).collect();
        let unsat = problem
            .db
            .present_ids()
            .any(|id| problem.db.lits(id).is_empty());
        let store = DSequentStore::new(cfg.learn_depth_k);
        Engine {
            trail: Trail::new(n),
            problem,
            cfg,
            stack: Vec::new(),
            queue: VecDeque::new(),
            deferred: None,
            scanned: 0,
            rescan: true,
            arena: Vec::new(),
            store,
            stats: Stats::default(),
            emissions: Vec::new(),
            removed: Vec::new(),
            activity,
            bump: 1.0,
            start: Instant::now(),
            unsat,
        }
    }

    pub fn problem(&self) -> &EcnfProblem {
        &self.problem
    }

    pub fn trail(&self) -> &Trail {
        &self.trail
    }

    pub fn stack(&self) -> &[TargetLevel] {
        &self.stack
    }

    pub fn stats(&self) -> &Stats {
        &self.stats
    }

    pub fn stored(&self, target: ClauseId) -> Vec<DSequent> {
        self.store.for_target(target).iter().map(|s| s.full.clone()).collect()
    }

    pub fn target(&self) -> ClauseId {
        self.stack
            .last()
            .and_then(|l| l.target)
            .expect("target stack is empty")
    }

    /// Trail position of the top key variable.
    pub fn origin(&self) -> Option<usize> {
        self.stack
            .last()
            .and_then(|l| l.key_var)
            .and_then(|v| self.trail.position(v))
    }

    pub fn run(mut self) -> Result<Solution, SolveError> {
        self.start = Instant::now();
        while !self.unsat {
            let Some(p) = self.next_primary() else { break };
            self.stats.primaries += 1;
            match self.prove(p)? {
                Flow::Proved => {
                    self.drop_levels();
                    self.problem.db.remove(p);
                    self.removed.push(p);
                }
                _ => self.unsat = true,
            }
        }
        self.stats.wall_time_us = self.start.elapsed().as_micros() as u64;
        let db = &self.problem.db;
        // F₁ ∧ F₂ is unsatisfiable, so ⊥ is a solution whatever F₂ alone does.
        let f1_star = if self.unsat {
            vec![Vec::new()]
        } else {
            db.present_ids()
                .filter(|&id| db.get(id).origin.in_f1() && !self.problem.is_x_clause(db.lits(id)))
                .map(|id| db.lits(id).to_vec())
                .collect()
        };
        Ok(Solution {
            f1_star,
            stats: self.stats,
            emissions: self.emissions,
            db: self.problem.db,
            removed: self.removed,
        })
    }

    fn next_primary(&self) -> Option<ClauseId> {
        let db = &self.problem.db;
        db.present_ids()
            .find(|&id| db.get(id).origin.in_f1() && self.problem.is_x_clause(db.lits(id)))
    }

    /// Proves one primary redundant, or finds the formula unsatisfiable.
    fn prove(&mut self, primary: ClauseId) -> Result<Flow, SolveError> {
        self.begin(primary);
        loop {
            self.check_budget()?;
            let flow = match self.bcp() {
                None => {
                    if self.decide_next() {
                        continue;
                    }
                    self.handle_duplicate()
                }
                Some(c) => self.handle(c),
            };
            if flow != Flow::Continue {
                return Ok(flow);
            }
        }
    }

    fn check_budget(&self) -> Result<(), SolveError> {
        if let Some(m) = self.cfg.max_conflicts {
            if self.stats.backtracks > m {
                return Err(SolveError::ResourceLimit(format!("{m} conflicts")));
            }
        }
        if let Some(t) = self.cfg.max_time {
            if self.start.elapsed() > t {
                return Err(SolveError::ResourceLimit(format!("{} ms", t.as_millis())));
            }
        }
        Ok(())
    }

    /// Resets the search state for a new primary target.
    pub fn begin(&mut self, primary: ClauseId) {
        self.drop_levels();
        self.stack = vec![TargetLevel {
            key: primary,
            key_var: None,
            target: Some(primary),
            done: Vec::new(),
        }];
        self.trail = Trail::new(self.problem.num_vars);
        self.arena.clear();
        self.store = DSequentStore::new(self.cfg.learn_depth_k);
        self.reset_queue();
        self.scanned = 0;
    }

    fn reset_queue(&mut self) {
        self.queue.clear();
        self.deferred = None;
        self.rescan = true;
    }

    /// Pops every level above the bottom one, restoring done clauses.
    pub(super) fn drop_levels(&mut self) {
        while self.stack.len() > 1 {
            self.pop_restore();
        }
    }

    pub(super) fn pop_restore(&mut self) {
        if let Some(l) = self.stack.pop() {
            for (c, _) in l.done {
                self.problem.db.set_active(c, true);
            }
        }
    }

    pub(super) fn push_level(&mut self, key: ClauseId, v: Var) {
        self.stack.push(TargetLevel {
            key,
            key_var: Some(v),
            target: None,
            done: Vec::new(),
        });
        let d = self.stack.len() as u64 - 1;
        self.stats.max_stack_depth = self.stats.max_stack_depth.max(d);
    }

    /// Keeps the first `len` trail entries and pops levels whose key
    /// variable got unassigned.
    pub(super) fn truncate(&mut self, len: usize) {
        self.trail.truncate(len);
        self.reset_queue();
        while self.stack.len() > 1 {
            let kv = self.stack.last().unwrap().key_var.unwrap();
            if self.trail.value(kv).is_some() {
                break;
            }
            self.pop_restore();
        }
    }

    /// Trail length right after level `m` ends.
    pub(super) fn level_end(&self, m: u32) -> usize {
        self.trail.level_start(m + 1)
    }

    pub(super) fn emit(&mut self, s: &DSequent) {
        self.stats.count(s.rule);
        if self.cfg.trace {
            self.emissions.push(Emission {
                ds: s.clone(),
                db_len: self.problem.db.len(),
                removed_len: self.removed.len(),
            });
        }
    }

    pub(super) fn status(&self, id: ClauseId) -> Status {
        let mut free = None;
        let mut n = 0;
        for &l in self.problem.db.lits(id) {
            match self.trail.lit_value(l) {
                Some(true) => return Status::Satisfied,
                Some(false) => {}
                None => {
                    n += 1;
                    free = Some(l);
                }
            }
        }
        match n {
            0 => Status::Falsified,
            1 => Status::Unit(free.unwrap()),
            _ => Status::Open,
        }
    }

    pub(super) fn is_x(&self, v: Var) -> bool {
        self.problem.is_x(v)
    }

    /// Present clauses resolvable with `c` on `v`, by id.
    pub(super) fn partners(&self, c: ClauseId, v: Var) -> Vec<ClauseId> {
        let db = &self.problem.db;
        let Some(l) = db.get(c).lit_of(v) else { return Vec::new() };
        let mut out: Vec<ClauseId> = db
            .occurrences(!l)
            .iter()
            .copied()
            .filter(|&p| !db.is_removed(p) && resolvable_on(db.lits(c), db.lits(p), v))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Lowest-id active partner of the top key, skipping satisfied ones
    /// unless `with_satisfied`.
    pub(super) fn pick_target(&self, with_satisfied: bool) -> Option<ClauseId> {
        let top = self.stack.last()?;
        let kv = top.key_var?;
        self.partners(top.key, kv).into_iter().find(|&p| {
            self.problem.db.is_active(p) && (with_satisfied || self.status(p) != Status::Satisfied)
        })
    }

    fn enqueue(&mut self, l: Lit, r: Reason) {
        if !self.queue.iter().any(|&(q, _)| q == l) {
            self.queue.push_back((l, r));
        }
    }

    pub(super) fn enqueue_first(&mut self, l: Lit, r: Reason) {
        self.queue.push_front((l, r));
    }

    /// Looks at one active clause after an assignment.
    fn examine(&mut self, id: ClauseId) -> Option<BacktrackCondition> {
        if !self.problem.db.is_active(id) {
            return None;
        }
        match self.status(id) {
            Status::Falsified => Some(BacktrackCondition::FalsifiedClause(id)),
            Status::Unit(l) => {
                if id == self.target() {
                    if self.is_x(l.var()) && self.deferred.is_none() {
                        self.deferred = Some(l);
                    }
                } else {
                    self.enqueue(l, Reason::Clause(id));
                }
                None
            }
            _ => None,
        }
    }

    /// Checks stored D-sequents of the current target against the trail.
    fn check_stored(&mut self) -> Option<BacktrackCondition> {
        let t = self.target();
        let mut units = Vec::new();
        for st in self.store.for_target(t) {
            if !st.check.is_applicable(|id| self.problem.db.is_active(id)) {
                continue;
            }
            let mut missing = None;
            let mut blocked = false;
            for (v, b) in st.check.cond.iter() {
                match self.trail.value(v) {
                    Some(x) if x == b => {}
                    Some(_) => {
                        blocked = true;
                        break;
                    }
                    None if missing.is_none() => missing = Some(Lit::new(v, !b)),
                    None => {
                        blocked = true;
                        break;
                    }
                }
            }
            if blocked {
                continue;
            }
            match missing {
                None => return Some(BacktrackCondition::ActiveDSequent(st.full.clone())),
                Some(l) => units.push((l, st.full.clone())),
            }
        }
        for (l, s) in units {
            if !self.queue.iter().any(|&(q, _)| q == l) {
                self.arena.push(s);
                self.queue.push_back((l, Reason::DSequent(self.arena.len() - 1)));
            }
        }
        None
    }

    fn target_has(&self, l: Lit) -> bool {
        self.problem.db.get(self.target()).contains(l)
    }

    /// Propagation up to the next backtracking condition, or None when a
    /// decision is needed.
    pub fn bcp(&mut self) -> Option<BacktrackCondition> {
        loop {
            if self.rescan {
                self.rescan = false;
                self.scanned = self.trail.len();
                if self.status(self.target()) == Status::Satisfied {
                    return Some(BacktrackCondition::SatTrg);
                }
                for id in 0..self.problem.db.len() {
                    if let Some(c) = self.examine(id) {
                        return Some(c);
                    }
                }
                if let Some(c) = self.check_stored() {
                    return Some(c);
                }
                continue;
            }
            if self.scanned < self.trail.len() {
                let l = self.trail.entries()[self.scanned].lit();
                self.scanned += 1;
                if self.target_has(l) {
                    return Some(BacktrackCondition::SatTrg);
                }
                let occ = self.problem.db.occurrences(!l).to_vec();
                for id in occ {
                    if let Some(c) = self.examine(id) {
                        return Some(c);
                    }
                }
                if let Some(c) = self.check_stored() {
                    return Some(c);
                }
                continue;
            }
            if let Some((l, r)) = self.queue.pop_front() {
                match self.trail.lit_value(l) {
                    Some(true) => {}
                    Some(false) => {
                        return Some(match r {
                            Reason::Clause(id) => BacktrackCondition::FalsifiedClause(id),
                            Reason::DSequent(i) => BacktrackCondition::ActiveDSequent(self.arena[i].clone()),
                            Reason::Decision => unreachable!("decisions are never queued"),
                        })
                    }
                    None => self.trail.assign(l.var(), l.sat_value(), r),
                }
                continue;
            }
            if let Some(seed) = self.deferred.take() {
                if self.status(self.target()) == Status::Unit(seed) {
                    if let Some(c) = self.bcp_star(seed) {
                        return Some(c);
                    }
                }
                continue;
            }
            if let Some(v) = self.blocked_var() {
                return Some(BacktrackCondition::BlockedTrg(v));
            }
            return None;
        }
    }

    /// Assigns the target's last free literal and propagates with clauses
    /// only, opening a level for every unit partner of the current key.
    pub(super) fn bcp_star(&mut self, seed: Lit) -> Option<BacktrackCondition> {
        let t = self.target();
        let base = self.stack.len();
        self.push_level(t, seed.var());
        self.trail.assign(seed.var(), seed.sat_value(), Reason::Clause(t));
        let mut head = self.trail.len() - 1;
        while head < self.trail.len() {
            let l = self.trail.entries()[head].lit();
            head += 1;
            let occ = self.problem.db.occurrences(!l).to_vec();
            for id in occ {
                if !self.problem.db.is_active(id) {
                    continue;
                }
                match self.status(id) {
                    Status::Falsified => {
                        self.stack.truncate(base);
                        self.rescan = true;
                        return Some(BacktrackCondition::ConflictInBcpStar(id));
                    }
                    Status::Unit(u) => {
                        let top = self.stack.last().unwrap();
                        let (key, kv) = (top.key, top.key_var.unwrap());
                        let db = &self.problem.db;
                        if self.is_x(u.var()) && resolvable_on(db.lits(key), db.lits(id), kv) {
                            self.stack.last_mut().unwrap().target = Some(id);
                            self.push_level(id, u.var());
                        }
                        self.trail.assign(u.var(), u.sat_value(), Reason::Clause(id));
                    }
                    _ => {}
                }
            }
        }
        self.rescan = true;
        match self.pick_target(true) {
            Some(n) => {
                self.stack.last_mut().unwrap().target = Some(n);
                None
            }
            None => Some(BacktrackCondition::LevelExhausted),
        }
    }

    /// An unassigned X variable of the target on which every active
    /// partner is satisfied.
    fn blocked_var(&self) -> Option<Var> {
        let t = self.target();
        if self.status(t) == Status::Satisfied {
            return None;
        }
        self.problem.db.lits(t).iter().map(|l| l.var()).find(|&v| {
            self.is_x(v)
                && self.trail.value(v).is_none()
                && self.partners(t, v).into_iter().all(|p| {
                    !self.problem.db.is_active(p) || self.status(p) == Status::Satisfied
                })
        })
    }

    /// Free variables first, then quantified ones.
    fn pick_branch(&self) -> Option<Var> {
        let n = self.problem.num_vars;
        let free = |v: &Var| self.trail.value(*v).is_none();
        let mut best: Option<Var> = None;
        for pass_x in [false, true] {
            for v in (1..=n).map(Var).filter(free).filter(|&v| self.is_x(v) == pass_x) {
                best = match (self.cfg.var_order, best) {
                    (_, None) => Some(v),
                    (VarOrder::StaticIndex, b) => b,
                    (VarOrder::ActivityBased, Some(b)) => {
                        if self.activity[v.index()] > self.activity[b.index()] {
                            Some(v)
                        } else {
                            Some(b)
                        }
                    }
                };
            }
            if best.is_some() {
                return best;
            }
        }
        None
    }

    fn decide_next(&mut self) -> bool {
        match self.pick_branch() {
            Some(v) => {
                self.decide_lit(Lit::new(v, self.cfg.default_polarity));
                true
            }
            None => false,
        }
    }

    pub fn decide_lit(&mut self, l: Lit) {
        self.stats.decisions += 1;
        self.trail.decide(l.var(), l.sat_value());
    }

    pub(super) fn bump_clause(&mut self, lits: &[Lit]) {
        for l in lits {
            self.activity[l.var().index()] += self.bump;
        }
        self.bump /= 0.95;
        if self.bump > 1e100 {
            self.activity.iter_mut().for_each(|a| *a *= 1e-100);
            self.bump *= 1e-100;
        }
    }
}
