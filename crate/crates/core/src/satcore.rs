//! Small CDCL solver: two watched literals, first-UIP learning, no
//! restarts, lowest-index decisions with value 0. Assumptions are decided
//! first and an UNSAT answer carries the subset of them used.

use thiserror::Error;

use crate::formula::{Assignment, Lit, Var};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    /// A total model over variables `1..=n`.
    Sat(Assignment),
    /// Assumption literals whose conjunction with the CNF is UNSAT.
    Unsat(Vec<Lit>),
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SatError {
    #[error("conflict budget of {0} exhausted")]
    ResourceLimit(u64),
}

pub fn sat_solve(cnf: &[Vec<Lit>], assumptions: &[Lit]) -> SatResult {
    sat_solve_budget(cnf, assumptions, None).expect("no budget set")
}

pub fn sat_solve_budget(
    cnf: &[Vec<Lit>],
    assumptions: &[Lit],
    max_conflicts: Option<u64>,
) -> Result<SatResult, SatError> {
    let n = cnf
        .iter()
        .flatten()
        .chain(assumptions)
        .map(|l| l.var().index())
        .max()
        .unwrap_or(0);
    let mut s = Cdcl::new(n);
    for c in cnf {
        if !s.add_clause(c) {
            return Ok(SatResult::Unsat(Vec::new()));
        }
    }
    s.solve(assumptions, max_conflicts)
}

struct Cdcl {
    n: usize,
    clauses: Vec<Vec<Lit>>,
    watches: Vec<Vec<usize>>,
    value: Vec<Option<bool>>,
    level: Vec<u32>,
    reason: Vec<Option<usize>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    seen: Vec<bool>,
}

impl Cdcl {
    fn new(n: usize) -> Cdcl {
        Cdcl {
            n,
            clauses: Vec::new(),
            watches: vec![Vec::new(); 2 * n + 2],
            value: vec![None; n + 1],
            level: vec![0; n + 1],
            reason: vec![None; n + 1],
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            seen: vec![false; n + 1],
        }
    }

    fn lit_value(&self, l: Lit) -> Option<bool> {
        self.value[l.var().index()].map(|b| b == l.sat_value())
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn enqueue(&mut self, l: Lit, reason: Option<usize>) {
        let v = l.var().index();
        self.value[v] = Some(l.sat_value());
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    /// Returns false if the formula is trivially UNSAT at level 0.
    fn add_clause(&mut self, c: &[Lit]) -> bool {
        let mut lits: Vec<Lit> = Vec::with_capacity(c.len());
        for &l in c {
            match self.lit_value(l) {
                Some(true) => return true,
                Some(false) => {}
                None => {
                    if lits.contains(&!l) {
                        return true;
                    }
                    if !lits.contains(&l) {
                        lits.push(l);
                    }
                }
            }
        }
        match lits.len() {
            0 => false,
            1 => {
                self.enqueue(lits[0], None);
                self.propagate().is_none()
            }
            _ => {
                self.attach(lits);
                true
            }
        }
    }

    fn attach(&mut self, lits: Vec<Lit>) -> usize {
        let ci = self.clauses.len();
        self.watches[lits[0].code()].push(ci);
        self.watches[lits[1].code()].push(ci);
        self.clauses.push(lits);
        ci
    }

    fn propagate(&mut self) -> Option<usize> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let fl = !p;
            let ws = std::mem::take(&mut self.watches[fl.code()]);
            let mut kept = Vec::with_capacity(ws.len());
            let mut conflict = None;
            let mut i = 0;
            while i < ws.len() {
                let ci = ws[i];
                i += 1;
                if self.clauses[ci][0] == fl {
                    self.clauses[ci].swap(0, 1);
                }
                let first = self.clauses[ci][0];
                if self.lit_value(first) == Some(true) {
                    kept.push(ci);
                    continue;
                }
                let len = self.clauses[ci].len();
                let mut moved = false;
                for k in 2..len {
                    let l = self.clauses[ci][k];
                    if self.lit_value(l) != Some(false) {
                        self.clauses[ci].swap(1, k);
                        self.watches[l.code()].push(ci);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                kept.push(ci);
                match self.lit_value(first) {
                    Some(false) => {
                        conflict = Some(ci);
                        kept.extend_from_slice(&ws[i..]);
                        break;
                    }
                    _ => self.enqueue(first, Some(ci)),
                }
            }
            self.watches[fl.code()] = kept;
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    fn cancel_until(&mut self, lvl: u32) {
        if self.decision_level() <= lvl {
            return;
        }
        let keep = self.trail_lim[lvl as usize];
        for l in self.trail.drain(keep..) {
            self.value[l.var().index()] = None;
        }
        self.trail_lim.truncate(lvl as usize);
        self.qhead = self.trail.len();
    }

    /// First-UIP analysis. Returns the learned clause with the asserting
    /// literal first and the backjump level.
    fn analyze(&mut self, confl: usize) -> (Vec<Lit>, u32) {
        let mut learnt = vec![Lit::new(Var(0), true)];
        let mut counter = 0;
        let mut p: Option<Lit> = None;
        let mut ci = confl;
        let mut idx = self.trail.len();
        loop {
            let lits = self.clauses[ci].clone();
            for &q in &lits {
                let v = q.var().index();
                if Some(q) == p {
                    continue;
                }
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    if self.level[v] >= self.decision_level() {
                        counter += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[self.trail[idx].var().index()] {
                    break;
                }
            }
            let pl = self.trail[idx];
            p = Some(pl);
            self.seen[pl.var().index()] = false;
            counter -= 1;
            if counter == 0 {
                break;
            }
            ci = self.reason[pl.var().index()].expect("implied literal has a reason");
        }
        learnt[0] = !p.unwrap();
        for l in &learnt[1..] {
            self.seen[l.var().index()] = false;
        }
        let bt = if learnt.len() == 1 {
            0
        } else {
            let (mi, _) = learnt
                .iter()
                .enumerate()
                .skip(1)
                .max_by_key(|(_, l)| self.level[l.var().index()])
                .unwrap();
            learnt.swap(1, mi);
            self.level[learnt[1].var().index()]
        };
        (learnt, bt)
    }

    fn analyze_final(&mut self, failed: Lit) -> Vec<Lit> {
        let mut core = vec![failed];
        if self.decision_level() == 0 {
            return core;
        }
        self.seen[failed.var().index()] = true;
        let base = self.trail_lim[0];
        for i in (base..self.trail.len()).rev() {
            let x = self.trail[i];
            let v = x.var().index();
            if !self.seen[v] {
                continue;
            }
            match self.reason[v] {
                None => {
                    if x != !failed {
                        core.push(x);
                    }
                }
                Some(ci) => {
                    for &l in &self.clauses[ci] {
                        if l.var().index() != v && self.level[l.var().index()] > 0 {
                            self.seen[l.var().index()] = true;
                        }
                    }
                }
            }
            self.seen[v] = false;
        }
        self.seen[failed.var().index()] = false;
        core.sort();
        core.dedup();
        core
    }

    fn solve(
        &mut self,
        assumptions: &[Lit],
        max_conflicts: Option<u64>,
    ) -> Result<SatResult, SatError> {
        let mut conflicts = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                conflicts += 1;
                if let Some(m) = max_conflicts {
                    if conflicts > m {
                        return Err(SatError::ResourceLimit(m));
                    }
                }
                if self.decision_level() == 0 {
                    return Ok(SatResult::Unsat(Vec::new()));
                }
                let (learnt, bt) = self.analyze(confl);
                self.cancel_until(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let first = learnt[0];
                    let ci = self.attach(learnt);
                    self.enqueue(first, Some(ci));
                }
                continue;
            }
            let dl = self.decision_level() as usize;
            if dl < assumptions.len() {
                let a = assumptions[dl];
                match self.lit_value(a) {
                    Some(true) => self.trail_lim.push(self.trail.len()),
                    Some(false) => return Ok(SatResult::Unsat(self.analyze_final(a))),
                    None => {
                        self.trail_lim.push(self.trail.len());
                        self.enqueue(a, None);
                    }
                }
                continue;
            }
            let next = (1..=self.n).find(|&v| self.value[v].is_none());
            match next {
                None => {
                    let mut model = Assignment::new();
                    for v in 1..=self.n {
                        model.set(Var(v as u32), self.value[v].unwrap());
                    }
                    return Ok(SatResult::Sat(model));
                }
                Some(v) => {
                    self.trail_lim.push(self.trail.len());
                    self.enqueue(Lit::new(Var(v as u32), false), None);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::lits_from_dimacs;

    fn cnf(cs: &[&[i32]]) -> Vec<Vec<Lit>> {
        cs.iter().map(|c| lits_from_dimacs(c).unwrap()).collect()
    }

    fn l(x: i32) -> Lit {
        Lit::from_dimacs(x)
    }

    #[test]
    fn contradiction_has_empty_core() {
        assert_eq!(sat_solve(&cnf(&[&[1], &[-1]]), &[]), SatResult::Unsat(vec![]));
    }

    #[test]
    fn assumption_forces_other_literal() {
        match sat_solve(&cnf(&[&[1, 2]]), &[l(-1)]) {
            SatResult::Sat(m) => {
                assert_eq!(m.get(Var(1)), Some(false));
                assert_eq!(m.get(Var(2)), Some(true));
            }
            r => panic!("{r:?}"),
        }
    }

    #[test]
    fn core_over_assumptions() {
        // a = 1, b = 2, x1 = 3
        let f = cnf(&[&[-1, 3], &[-2, -3]]);
        match sat_solve(&f, &[l(1), l(2)]) {
            SatResult::Unsat(core) => {
                assert!(core.iter().all(|c| [l(1), l(2)].contains(c)));
                let mut g = f.clone();
                for &c in &core {
                    g.push(vec![c]);
                }
                assert!(!sat_solve(&g, &[]).is_sat());
            }
            r => panic!("{r:?}"),
        }
    }

    #[test]
    fn empty_clause_is_unsat() {
        assert_eq!(sat_solve(&[vec![]], &[]), SatResult::Unsat(vec![]));
    }

    #[test]
    fn budget_is_enforced() {
        // Pigeonhole 3 into 2 needs conflicts.
        let v = |p: i32, h: i32| p * 2 + h + 1;
        let mut cs: Vec<Vec<i32>> = (0..3).map(|p| vec![v(p, 0), v(p, 1)]).collect();
        for h in 0..2 {
            for a in 0..3 {
                for b in a + 1..3 {
                    cs.push(vec![-v(a, h), -v(b, h)]);
                }
            }
        }
        let f: Vec<Vec<Lit>> = cs.iter().map(|c| lits_from_dimacs(c).unwrap()).collect();
        assert_eq!(sat_solve_budget(&f, &[], Some(0)), Err(SatError::ResourceLimit(0)));
        assert!(!sat_solve(&f, &[]).is_sat());
    }
}
