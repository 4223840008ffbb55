use std::collections::BTreeSet;

use super::engine::{Engine, Flow};
use super::{retention_filter, BacktrackCondition, LrnOutcome};
use crate::dsequent::{atomic_first_kind, atomic_second_kind, atomic_third_kind, constraint_falsified, join, DSequent, Rule};
use crate::formula::{canonicalize, resolve, Assignment, ClauseId, Lit, Origin, Reason, Var};
use crate::satcore::{sat_solve, SatResult};

/// Learning reached a state it cannot express as a D-sequent step; the
/// caller falls back to the SAT check on the free-variable prefix.
#[derive(Debug)]
pub(super) struct Stuck;

impl Engine {
    pub(super) fn handle(&mut self, c: BacktrackCondition) -> Flow {
        let out = self.lrn(&c);
        self.apply(out)
    }

    /// Builds a conflict clause or a D-sequent for the current target.
    pub fn lrn(&mut self, c: &BacktrackCondition) -> LrnOutcome {
        let s = match c {
            BacktrackCondition::FalsifiedClause(b) | BacktrackCondition::ConflictInBcpStar(b) => {
                return self.analyze(*b)
            }
            BacktrackCondition::SatTrg => self.sat_seed(),
            BacktrackCondition::ActiveDSequent(s) => {
                self.stats.ds_reused += 1;
                Ok(s.clone())
            }
            BacktrackCondition::BlockedTrg(v) => self.blocked_dsequent(self.target(), *v, false),
            BacktrackCondition::LevelExhausted => self.exhaust_key(),
        };
        match s.and_then(|s| self.reduce(s)) {
            Ok(s) => LrnOutcome::DSequentOnly(s),
            Err(Stuck) => LrnOutcome::Duplicate,
        }
    }

    /// Acts on a learning outcome: backtracks, marks targets done, or
    /// reports the end of the current primary.
    pub fn apply(&mut self, out: LrnOutcome) -> Flow {
        self.stats.backtracks += 1;
        match out {
            LrnOutcome::ConflictClause(id) => {
                self.assert_clause(id);
                Flow::Continue
            }
            LrnOutcome::DSequentOnly(s) | LrnOutcome::DSequentAndClause(s, _) => self.conclude(s),
            LrnOutcome::EmptyClause => Flow::Unsat,
            LrnOutcome::Duplicate => self.handle_duplicate(),
        }
    }

    pub fn store_dsequent(&mut self, check: DSequent, full: DSequent) -> bool {
        let added = self.store.insert(check, full);
        if added {
            self.stats.ds_stored += 1;
        }
        added
    }

    fn retain(&mut self, s: &DSequent, depth: usize) {
        let db = &self.problem.db;
        let check = retention_filter(s, depth, &self.cfg, |h| self.problem.is_x_clause(db.lits(h)));
        if let Some(check) = check {
            self.store_dsequent(check, s.clone());
        }
    }

    /// Fallback D-sequents are stored whatever the retention depth, so the
    /// search cannot return to the same free-variable subspace.
    fn keep_fallback(&mut self, s: &DSequent) {
        let mut check = s.clone();
        check.constraint.clear();
        self.store_dsequent(check, s.clone());
    }

    fn add_clause(&mut self, lits: Vec<Lit>, in_f1: bool) -> ClauseId {
        if in_f1 {
            self.stats.clauses_f1 += 1;
            self.problem.db.push(lits, Origin::DerivedF1)
        } else {
            self.stats.clauses_f2 += 1;
            self.problem.db.push(lits, Origin::DerivedF2)
        }
    }

    /// True if `lits` equals the target or a removed or done clause.
    fn repeats_inactive(&self, lits: &[Lit]) -> bool {
        let db = &self.problem.db;
        db.lits(self.target()) == lits
            || self.removed.iter().any(|&r| db.lits(r) == lits)
            || db.find(lits).is_some_and(|id| !db.is_active(id))
    }

    fn analyze(&mut self, b: ClauseId) -> LrnOutcome {
        let t = self.target();
        let mut c = self.problem.db.lits(b).to_vec();
        let mut in_f1 = self.problem.db.get(b).origin.in_f1();
        let mut used_target = b == t;
        let mut steps = 0;
        loop {
            let level = |l: &Lit| self.trail.level_of(l.var()).expect("conflict literal is assigned");
            let Some(m) = c.iter().map(level).max() else { break };
            let pick = c
                .iter()
                .filter(|l| level(l) == m)
                .map(|l| *self.trail.entry_of(l.var()).unwrap())
                .filter(|e| e.reason != Reason::Decision)
                .max_by_key(|e| self.trail.position(e.var));
            let Some(e) = pick else { break };
            match e.reason {
                Reason::Clause(r) => {
                    c = match resolve(&c, self.problem.db.lits(r), e.var) {
                        Ok(c) => c,
                        Err(_) => return LrnOutcome::Duplicate,
                    };
                    in_f1 |= self.problem.db.get(r).origin.in_f1();
                    used_target |= r == t;
                    steps += 1;
                }
                Reason::DSequent(_) => return self.ds_from_conflict(b, c, in_f1, used_target, steps),
                Reason::Decision => unreachable!(),
            }
        }
        self.stats.conflicts += 1;
        self.bump_clause(&c);
        if c.is_empty() {
            self.add_clause(c, in_f1);
            self.unsat = true;
            return LrnOutcome::EmptyClause;
        }
        if self.repeats_inactive(&c) {
            return LrnOutcome::Duplicate;
        }
        let id = match self.problem.db.find(&c) {
            Some(id) => id,
            None => self.add_clause(c, in_f1),
        };
        LrnOutcome::ConflictClause(id)
    }

    /// Conflict analysis met a literal implied by a D-sequent.
    fn ds_from_conflict(
        &mut self,
        b: ClauseId,
        c: Vec<Lit>,
        in_f1: bool,
        used_target: bool,
        steps: usize,
    ) -> LrnOutcome {
        let t = self.target();
        let (s, added) = if used_target {
            if steps == 0 || c.is_empty() || self.repeats_inactive(&c) {
                return LrnOutcome::Duplicate;
            }
            let id = match self.problem.db.find(&c) {
                Some(id) => id,
                None => self.add_clause(c, in_f1),
            };
            (constraint_falsified(t, self.problem.db.get(id)), Some(id))
        } else {
            (constraint_falsified(t, self.problem.db.get(b)), None)
        };
        self.emit(&s);
        match (self.reduce(s), added) {
            (Ok(s), Some(id)) => LrnOutcome::DSequentAndClause(s, id),
            (Ok(s), None) => LrnOutcome::DSequentOnly(s),
            (Err(Stuck), _) => LrnOutcome::Duplicate,
        }
    }

    /// First kind on the earliest literal satisfying the target.
    fn sat_seed(&mut self) -> Result<DSequent, Stuck> {
        let t = self.target();
        let db = &self.problem.db;
        let l = db
            .lits(t)
            .iter()
            .copied()
            .filter(|&l| self.trail.lit_value(l) == Some(true))
            .filter(|l| self.trail.entry_of(l.var()).unwrap().reason != Reason::Clause(t))
            .min_by_key(|l| self.trail.position(l.var()))
            .ok_or(Stuck)?;
        if self.cfg.reduce_constraints {
            if let Some(s) = self.chain_resolvent_seed(l) {
                return Ok(s);
            }
        }
        let db = &self.problem.db;
        let mut s = atomic_first_kind(db.get(t), l.var(), l.sat_value()).map_err(|_| Stuck)?;
        if self.stack.len() == 1
            && !self.is_x(l.var())
            && self.trail.entries().iter().all(|e| !self.problem.is_x(e.var))
        {
            s.rule = Rule::Atomic1YPrefix;
        }
        self.emit(&s);
        Ok(s)
    }

    /// Resolves the reason of satisfying literal `l` with the reasons of its
    /// post-origin antecedents at the highest level. Adds the resolvent C and
    /// returns `(¬(C∖l), {C}) → target` when at least one step was made.
    fn chain_resolvent_seed(&mut self, l: Lit) -> Option<DSequent> {
        let t = self.target();
        let origin = self.origin();
        let post = |p: usize| origin.map_or(true, |o| p > o);
        let e = *self.trail.entry_of(l.var())?;
        let Reason::Clause(r) = e.reason else { return None };
        if r == t || !post(self.trail.position(l.var())?) {
            return None;
        }
        let db = &self.problem.db;
        let mut c = db.lits(r).to_vec();
        let mut in_f1 = db.get(r).origin.in_f1();
        let mut steps = 0;
        loop {
            let db = &self.problem.db;
            let others: Vec<_> = c
                .iter()
                .filter(|&&m| m != l)
                .map(|m| *self.trail.entry_of(m.var()).unwrap())
                .filter(|e| post(self.trail.position(e.var).unwrap()))
                .collect();
            let Some(m) = others.iter().map(|e| e.level).max() else { break };
            let pick = others
                .iter()
                .filter(|e| e.level == m)
                .filter(|e| matches!(e.reason, Reason::Clause(r2) if r2 != t))
                .max_by_key(|e| self.trail.position(e.var));
            let Some(e) = pick else { break };
            let Reason::Clause(r2) = e.reason else { break };
            c = resolve(&c, db.lits(r2), e.var).ok()?;
            in_f1 |= db.get(r2).origin.in_f1();
            steps += 1;
        }
        if steps == 0 || self.repeats_inactive(&c) {
            return None;
        }
        let id = match self.problem.db.find(&c) {
            Some(id) => id,
            None => self.add_clause(c.clone(), in_f1),
        };
        let mut q = Assignment::new();
        for m in c.iter().filter(|&&m| m != l) {
            q.set(m.var(), !m.sat_value());
        }
        let db = &self.problem.db;
        let s = atomic_second_kind(db.get(t), db.get(id), &q, |v| self.problem.is_x(v)).ok()?;
        self.emit(&s);
        Some(s)
    }

    fn done_ds(&self, c: ClauseId) -> Option<DSequent> {
        self.stack
            .iter()
            .rev()
            .flat_map(|l| l.done.iter())
            .find(|(id, _)| *id == c)
            .map(|(_, s)| s.clone())
    }

    /// Third kind for clause `c` at `v`. With `strip`, `v` is the key
    /// variable about to be unassigned and is removed from partner
    /// conditionals.
    pub(super) fn blocked_dsequent(&mut self, c: ClauseId, v: Var, strip: bool) -> Result<DSequent, Stuck> {
        let mut parts = Vec::new();
        for p in self.partners(c, v) {
            let s = if self.problem.db.is_active(p) {
                let l = self
                    .problem
                    .db
                    .lits(p)
                    .iter()
                    .copied()
                    .filter(|&l| self.trail.lit_value(l) == Some(true))
                    .min_by_key(|l| self.trail.position(l.var()))
                    .ok_or(Stuck)?;
                let s = atomic_first_kind(self.problem.db.get(p), l.var(), l.sat_value()).map_err(|_| Stuck)?;
                self.emit(&s);
                s
            } else {
                self.done_ds(p).ok_or(Stuck)?
            };
            parts.push(s);
        }
        if strip {
            for s in parts.iter_mut() {
                if let Some(b) = s.cond.get(v) {
                    let f = atomic_first_kind(self.problem.db.get(s.target), v, !b).map_err(|_| Stuck)?;
                    self.emit(&f);
                    *s = join(s, &f, v).map_err(|_| Stuck)?;
                    self.emit(s);
                }
            }
        }
        let s = atomic_third_kind(self.problem.db.get(c), v, &parts).map_err(|_| Stuck)?;
        self.emit(&s);
        Ok(s)
    }

    /// Pops the top level once its key is blocked, returning the key's
    /// D-sequent for the level below.
    pub(super) fn exhaust_key(&mut self) -> Result<DSequent, Stuck> {
        let top = self.stack.last().ok_or(Stuck)?;
        let (key, w) = (top.key, top.key_var.ok_or(Stuck)?);
        let origin = self.origin().ok_or(Stuck)?;
        let s = self.blocked_dsequent(key, w, true)?;
        self.pop_restore();
        self.truncate(origin);
        Ok(s)
    }

    /// Joins away derived literals of the conditional at the highest
    /// level after the origin until only that level's decision is left.
    pub(super) fn reduce(&mut self, s: DSequent) -> Result<DSequent, Stuck> {
        let t = s.target;
        let origin = self.origin();
        let post = |p: usize| origin.map_or(true, |o| p > o);
        let mut s = s;
        loop {
            let mut top: Option<(u32, usize)> = None;
            let mut pick: Option<(u32, usize, Var, Reason)> = None;
            for (v, b) in s.cond.iter() {
                let e = *self.trail.entry_of(v).ok_or(Stuck)?;
                if e.value != b {
                    return Err(Stuck);
                }
                let p = self.trail.position(v).unwrap();
                if !post(p) {
                    continue;
                }
                if top.map_or(true, |(m, _)| e.level > m) {
                    top = Some((e.level, p));
                    pick = None;
                }
                if Some(e.level) == top.map(|(m, _)| m)
                    && e.reason != Reason::Decision
                    && pick.map_or(true, |(_, q, _, _)| p > q)
                {
                    pick = Some((e.level, p, v, e.reason));
                }
            }
            let Some((_, _, v, reason)) = pick else { return Ok(s) };
            let r = match reason {
                Reason::Clause(r) if r != t => {
                    let d = constraint_falsified(t, self.problem.db.get(r));
                    self.emit(&d);
                    d
                }
                Reason::DSequent(i) if self.arena[i].target == t => self.arena[i].clone(),
                _ => return Err(Stuck),
            };
            s = join(&s, &r, v).map_err(|_| Stuck)?;
            self.emit(&s);
        }
    }

    /// Reduces `s` and backtracks. A secondary target whose D-sequent
    /// depends only on assignments up to its origin is marked done.
    pub(super) fn conclude(&mut self, s: DSequent) -> Flow {
        let mut s = s;
        loop {
            s = match self.reduce(s) {
                Ok(s) => s,
                Err(Stuck) => return self.handle_duplicate(),
            };
            let depth = self.stack.len() - 1;
            let mut lits: Vec<(usize, Var, bool)> = s
                .cond
                .iter()
                .map(|(v, b)| (self.trail.position(v).unwrap(), v, b))
                .collect();
            lits.sort();
            if depth == 0 {
                if lits.is_empty() {
                    return Flow::Proved;
                }
                self.retain(&s, 0);
                return self.flip_latest(s, &lits, None);
            }
            let origin = self.origin().expect("secondary level has a key variable");
            if lits.last().map_or(false, |l| l.0 > origin) {
                self.retain(&s, depth);
                return self.flip_latest(s, &lits, Some(origin));
            }
            self.retain(&s, depth);
            self.truncate(origin + 1);
            let t = self.target();
            self.problem.db.set_active(t, false);
            self.stack.last_mut().unwrap().done.push((t, s));
            if let Some(n) = self.pick_target(false) {
                self.stack.last_mut().unwrap().target = Some(n);
                return Flow::Continue;
            }
            s = match self.exhaust_key() {
                Ok(k) => k,
                Err(Stuck) => return self.handle_duplicate(),
            };
        }
    }

    /// Backtracks to the level of the second-latest literal of `s` (to the
    /// latest one below a key variable) and assigns it the other way.
    fn flip_latest(&mut self, s: DSequent, lits: &[(usize, Var, bool)], origin: Option<usize>) -> Flow {
        let (_, v, b) = *lits.last().unwrap();
        let lv = self.trail.level_of(v).unwrap();
        let m2 = match lits.len() {
            1 => 0,
            n => self.trail.level_of(lits[n - 2].1).unwrap(),
        };
        if lv <= m2 {
            return self.handle_duplicate();
        }
        // Below a key variable the jump stops at `v` itself, so literals
        // flipped earlier for the same target keep their reasons.
        let keep = match origin {
            None => self.level_end(m2),
            Some(_) => self.trail.position(v).unwrap(),
        };
        self.truncate(keep);
        if self.trail.value(v).is_some() {
            return self.handle_duplicate();
        }
        self.arena.push(s);
        self.enqueue_first(Lit::new(v, !b), Reason::DSequent(self.arena.len() - 1));
        Flow::Continue
    }

    fn assert_clause(&mut self, id: ClauseId) {
        let lits = self.problem.db.lits(id).to_vec();
        let level = |l: &Lit| self.trail.level_of(l.var()).unwrap_or(0);
        let m = lits.iter().map(level).max().unwrap_or(0);
        let a = *lits
            .iter()
            .filter(|l| level(l) == m)
            .max_by_key(|l| self.trail.position(l.var()))
            .unwrap();
        let bl = lits.iter().filter(|&&l| l != a).map(level).max().unwrap_or(0);
        self.truncate(self.level_end(bl));
        self.enqueue_first(a, Reason::Clause(id));
    }

    /// Falls back to a SAT check of the formula under the free-variable
    /// prefix of the trail. An unsatisfiable prefix yields a new clause
    /// over free variables; a satisfiable one yields a D-sequent for the
    /// primary from a shrunk model.
    pub(super) fn handle_duplicate(&mut self) -> Flow {
        self.stats.duplicates += 1;
        let cut = match self.stack.get(1).and_then(|l| l.key_var) {
            Some(v) => self.trail.position(v).unwrap_or(self.trail.len()),
            None => self.trail.len(),
        };
        let keep = self.trail.entries()[..cut]
            .iter()
            .rposition(|e| !self.problem.is_x(e.var))
            .map_or(0, |i| i + 1);
        self.drop_levels();
        self.truncate(keep);
        let primary = self.target();
        let prefix: Vec<Lit> = self
            .trail
            .entries()
            .iter()
            .filter(|e| !self.problem.is_x(e.var))
            .map(|e| e.lit())
            .collect();
        let db = &self.problem.db;
        let all: Vec<Vec<Lit>> = db.active_ids().map(|id| db.lits(id).to_vec()).collect();
        match sat_solve(&all, &prefix) {
            SatResult::Unsat(core) => {
                let f2: Vec<Vec<Lit>> = db
                    .active_ids()
                    .filter(|&id| !db.get(id).origin.in_f1())
                    .map(|id| db.lits(id).to_vec())
                    .collect();
                let (core, in_f1) = match sat_solve(&f2, &prefix) {
                    SatResult::Unsat(c2) => (c2, false),
                    SatResult::Sat(_) => (core, true),
                };
                let b = canonicalize(core.iter().map(|&l| !l).collect()).expect("core is consistent");
                if b.is_empty() {
                    self.add_clause(b, in_f1);
                    self.unsat = true;
                    return Flow::Unsat;
                }
                let id = match db.find(&b) {
                    Some(id) if db.is_active(id) => id,
                    _ => self.add_clause(b, in_f1),
                };
                let s = constraint_falsified(primary, self.problem.db.get(id));
                self.emit(&s);
                self.keep_fallback(&s);
                self.conclude(s)
            }
            SatResult::Sat(model) => {
                let val = |v: Var| model.get(v).unwrap_or(false);
                let ys = self.problem.y_vars();
                let mut kept = vec![true; ys.len()];
                let covered = |kept: &[bool]| {
                    all.iter().all(|c| {
                        c.iter().any(|l| {
                            let v = l.var();
                            val(v) == l.sat_value()
                                && (self.problem.is_x(v) || ys.binary_search(&v).is_ok_and(|i| kept[i]))
                        })
                    })
                };
                for i in 0..ys.len() {
                    kept[i] = false;
                    if !covered(&kept) {
                        kept[i] = true;
                    }
                }
                let mut q = Assignment::new();
                for (i, &v) in ys.iter().enumerate() {
                    if kept[i] {
                        q.set(v, val(v));
                    }
                }
                for (v, b) in q.iter() {
                    if self.trail.value(v).is_none() {
                        self.decide_lit(Lit::new(v, b));
                    }
                }
                self.rescan = true;
                let s = DSequent::new(q, BTreeSet::new(), primary, Rule::Atomic1YPrefix);
                self.emit(&s);
                self.keep_fallback(&s);
                self.conclude(s)
            }
        }
    }
}
