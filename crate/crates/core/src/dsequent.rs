//! D-sequents `(q, H) → C` and the operations that build new ones from old.
//! Records are immutable; every operation returns a fresh one.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::formula::{assignments_resolvable, Assignment, Clause, ClauseDb, ClauseId, Lit, Var};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DsError {
    #[error("assignment does not satisfy the clause")]
    NotSatisfying,
    #[error("cofactor of the constraint clause is not contained in the target cofactor")]
    NoImplication,
    #[error("target has no quantified variable left under the conditional")]
    TargetNotXClause,
    #[error("input D-sequents are not consistent")]
    InconsistentInputs,
    #[error("conditionals assign a variable both ways")]
    IncompatibleConditionals,
    #[error("D-sequents have different targets")]
    TargetMismatch,
    #[error("conditionals are not resolvable on the given variable")]
    NotResolvable,
    #[error("clause {0} is not in the structure constraint")]
    NotInConstraint(ClauseId),
    #[error("conditional is not contained in the new assignment")]
    NotSubsumingAssignment,
    #[error("no D-sequent available for clause {0}")]
    ChainBroken(ClauseId),
}

/// How a D-sequent was derived. Shown in traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    Atomic1,
    /// First kind over a whole assignment to free variables, used when
    /// the formula is unsatisfiable or satisfiable under it.
    Atomic1YPrefix,
    Atomic2,
    Atomic3,
    Join,
    Substitute,
    Strengthen,
    Relax,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::Atomic1 => "atomic1",
            Rule::Atomic1YPrefix => "atomic1-yprefix",
            Rule::Atomic2 => "atomic2",
            Rule::Atomic3 => "atomic3",
            Rule::Join => "join",
            Rule::Substitute => "substitute",
            Rule::Strengthen => "strengthen",
            Rule::Relax => "relax",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DSequent {
    pub cond: Assignment,
    pub constraint: BTreeSet<ClauseId>,
    pub target: ClauseId,
    pub rule: Rule,
}

impl DSequent {
    pub fn new(cond: Assignment, constraint: BTreeSet<ClauseId>, target: ClauseId, rule: Rule) -> DSequent {
        debug_assert!(!constraint.contains(&target));
        DSequent {
            cond,
            constraint,
            target,
            rule,
        }
    }

    /// Equality ignoring the derivation tag.
    pub fn same_as(&self, other: &DSequent) -> bool {
        self.target == other.target && self.cond == other.cond && self.constraint == other.constraint
    }

    pub fn trace_line(&self) -> String {
        let mut s = format!("DS {} Q", self.target);
        for l in self.cond.lits() {
            s.push_str(&format!(" {}", l.to_dimacs()));
        }
        s.push_str(" 0 H");
        for h in &self.constraint {
            s.push_str(&format!(" {h}"));
        }
        s.push_str(&format!(" 0 RULE {}", self.rule));
        s
    }

    /// H ∪ {C} are all live.
    pub fn is_applicable(&self, live: impl Fn(ClauseId) -> bool) -> bool {
        live(self.target) && self.constraint.iter().all(|&h| live(h))
    }

    pub fn is_active(&self, r: &Assignment, live: impl Fn(ClauseId) -> bool) -> bool {
        self.cond.is_subset_of(r) && self.is_applicable(live)
    }

    /// If all but one assignment of the conditional is in `r` and none
    /// clashes, the missing variable with the opposite value.
    pub fn unit_deactivating_assignment(&self, r: &Assignment) -> Option<(Var, bool)> {
        let mut missing = None;
        for (v, b) in self.cond.iter() {
            match r.get(v) {
                Some(x) if x == b => {}
                Some(_) => return None,
                None => {
                    if missing.is_some() {
                        return None;
                    }
                    missing = Some((v, !b));
                }
            }
        }
        missing
    }
}

pub fn atomic_first_kind(c: &Clause, v: Var, b: bool) -> Result<DSequent, DsError> {
    if !c.contains(Lit::new(v, b)) {
        return Err(DsError::NotSatisfying);
    }
    Ok(DSequent::new(
        Assignment::from_pairs(&[(v.0, b)]),
        BTreeSet::new(),
        c.id,
        Rule::Atomic1,
    ))
}

/// `(q, {B}) → C` where every literal of B|q is in C|q and C|q still has a
/// quantified variable.
pub fn atomic_second_kind(
    c: &Clause,
    b: &Clause,
    q: &Assignment,
    is_x: impl Fn(Var) -> bool,
) -> Result<DSequent, DsError> {
    let live = |l: &Lit| q.lit_value(*l).is_none();
    if !c.lits.iter().filter(|l| live(l)).any(|l| is_x(l.var())) || q.satisfies(&c.lits) {
        return Err(DsError::TargetNotXClause);
    }
    if q.satisfies(&b.lits) || !b.lits.iter().filter(|l| live(l)).all(|&l| c.contains(l)) {
        return Err(DsError::NoImplication);
    }
    Ok(DSequent::new(q.clone(), BTreeSet::from([b.id]), c.id, Rule::Atomic2))
}

/// `(¬B, {B}) → C`: under the negation of B the clause B is falsified, so
/// every member formula is unsatisfiable there and C is redundant.
pub fn constraint_falsified(target: ClauseId, b: &Clause) -> DSequent {
    let mut q = Assignment::new();
    for l in &b.lits {
        q.set(l.var(), !l.sat_value());
    }
    DSequent::new(q, BTreeSet::from([b.id]), target, Rule::Atomic2)
}

/// C blocked at `v` once every clause resolvable with it on `v` is
/// redundant. `partners` holds one D-sequent per such clause. A partner
/// constraint naming C itself is dropped, since C is in every member
/// formula of the result.
pub fn atomic_third_kind(c: &Clause, v: Var, partners: &[DSequent]) -> Result<DSequent, DsError> {
    if c.lit_of(v).is_none() {
        return Err(DsError::NotResolvable);
    }
    if partners.iter().any(|p| p.target == c.id) {
        return Err(DsError::InconsistentInputs);
    }
    let mut q = Assignment::new();
    for p in partners {
        q = q.union(&p.cond).ok_or(DsError::IncompatibleConditionals)?;
    }
    let trimmed: Vec<DSequent> = partners
        .iter()
        .map(|p| {
            let mut t = p.clone();
            t.constraint.remove(&c.id);
            t
        })
        .collect();
    if !matches!(check_consistency(&trimmed), Consistency::Consistent(_)) {
        return Err(DsError::InconsistentInputs);
    }
    let mut h = BTreeSet::new();
    for p in &trimmed {
        h.extend(p.constraint.iter().copied());
    }
    Ok(DSequent::new(q, h, c.id, Rule::Atomic3))
}

pub fn join(s1: &DSequent, s2: &DSequent, v: Var) -> Result<DSequent, DsError> {
    if s1.target != s2.target {
        return Err(DsError::TargetMismatch);
    }
    if assignments_resolvable(&s1.cond, &s2.cond) != Some(v) {
        return Err(DsError::NotResolvable);
    }
    let mut q = s1.cond.clone();
    for (u, b) in s2.cond.iter() {
        q.set(u, b);
    }
    q.unset(v);
    let h = s1.constraint.union(&s2.constraint).copied().collect();
    Ok(DSequent::new(q, h, s1.target, Rule::Join))
}

/// A D-sequent stays valid after adding clauses implied by the formula.
pub fn update_after_implication(s: &DSequent, _added: &BTreeSet<ClauseId>) -> DSequent {
    s.clone()
}

/// Replaces `s2.target` in `s1`'s constraint by `s2`'s constraint.
pub fn substitute(s1: &DSequent, s2: &DSequent) -> Result<DSequent, DsError> {
    if !s1.constraint.contains(&s2.target) {
        return Err(DsError::NotInConstraint(s2.target));
    }
    if s2.constraint.contains(&s1.target) || s1.target == s2.target {
        return Err(DsError::InconsistentInputs);
    }
    let q = s1.cond.union(&s2.cond).ok_or(DsError::IncompatibleConditionals)?;
    let mut h = s1.constraint.clone();
    h.remove(&s2.target);
    h.extend(s2.constraint.iter().copied());
    Ok(DSequent::new(q, h, s1.target, Rule::Substitute))
}

/// Moves to a smaller subspace `r` and drops constraint clauses it satisfies.
pub fn strengthen_by_satisfied(s: &DSequent, r: &Assignment, db: &ClauseDb) -> Result<DSequent, DsError> {
    if !s.cond.is_subset_of(r) {
        return Err(DsError::NotSubsumingAssignment);
    }
    let h = s
        .constraint
        .iter()
        .copied()
        .filter(|&id| !r.satisfies(db.lits(id)))
        .collect();
    Ok(DSequent::new(r.clone(), h, s.target, Rule::Strengthen))
}

const RELAX_STEP_LIMIT: usize = 10_000;

/// Removes `drop` from the constraint by substituting pool D-sequents for
/// every clause outside the original constraint, first match in pool order.
pub fn relax_order(s: &DSequent, drop: ClauseId, pool: &[DSequent]) -> Result<DSequent, DsError> {
    if !s.constraint.contains(&drop) {
        return Ok(s.clone());
    }
    let mut keep = s.constraint.clone();
    keep.remove(&drop);
    let mut cur = s.clone();
    for _ in 0..RELAX_STEP_LIMIT {
        let Some(&bad) = cur.constraint.iter().find(|h| !keep.contains(h)) else {
            cur.rule = Rule::Relax;
            return Ok(cur);
        };
        let p = pool
            .iter()
            .find(|p| p.target == bad)
            .ok_or(DsError::ChainBroken(bad))?;
        cur = substitute(&cur, p)?;
    }
    Err(DsError::ChainBroken(drop))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Consistency {
    /// Indices in an order of application.
    Consistent(Vec<usize>),
    /// Indices forming a cycle; a one-element cycle means a D-sequent
    /// needs its own target kept.
    Inconsistent(Vec<usize>),
    /// Two conditionals assign some variable both ways.
    Clash(usize, usize),
}

/// Edge i → j when the target of j is in the constraint of i: i must be
/// applied while j's target is still there.
pub fn check_consistency(set: &[DSequent]) -> Consistency {
    for i in 0..set.len() {
        for j in i + 1..set.len() {
            if !set[i].cond.is_compatible(&set[j].cond) {
                return Consistency::Clash(i, j);
            }
        }
    }
    let mut by_target: HashMap<ClauseId, Vec<usize>> = HashMap::new();
    for (i, s) in set.iter().enumerate() {
        by_target.entry(s.target).or_default().push(i);
    }
    let succ: Vec<Vec<usize>> = set
        .iter()
        .map(|s| {
            let mut v: Vec<usize> = s
                .constraint
                .iter()
                .filter_map(|h| by_target.get(h))
                .flatten()
                .copied()
                .collect();
            v.sort_unstable();
            v.dedup();
            v
        })
        .collect();
    // Depth-first search; colour 1 is on the stack, 2 is finished.
    let n = set.len();
    let mut colour = vec![0u8; n];
    let mut post = Vec::with_capacity(n);
    for root in 0..n {
        if colour[root] != 0 {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        colour[root] = 1;
        while let Some(&mut (u, ref mut k)) = stack.last_mut() {
            if *k < succ[u].len() {
                let w = succ[u][*k];
                *k += 1;
                match colour[w] {
                    0 => {
                        colour[w] = 1;
                        stack.push((w, 0));
                    }
                    1 => {
                        let from = stack.iter().position(|&(x, _)| x == w).unwrap();
                        return Consistency::Inconsistent(stack[from..].iter().map(|&(x, _)| x).collect());
                    }
                    _ => {}
                }
            } else {
                colour[u] = 2;
                post.push(u);
                stack.pop();
            }
        }
    }
    post.reverse();
    Consistency::Consistent(post)
}

/// A stored D-sequent. `check` has free-variable clauses stripped from the
/// constraint and is what applicability is tested on; `full` is the record
/// as derived, used when the stored D-sequent takes part in a join.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stored {
    pub check: DSequent,
    pub full: DSequent,
}

#[derive(Debug, Clone, Default)]
pub struct DSequentStore {
    by_target: HashMap<ClauseId, Vec<Stored>>,
    /// Learning depth; -1 disables storing.
    pub depth_k: i32,
    count: usize,
}

impl DSequentStore {
    pub fn new(depth_k: i32) -> DSequentStore {
        DSequentStore {
            depth_k,
            ..Default::default()
        }
    }

    /// Returns false when an identical record is already stored.
    pub fn insert(&mut self, check: DSequent, full: DSequent) -> bool {
        let list = self.by_target.entry(check.target).or_default();
        if list.iter().any(|s| s.check == check && s.full == full) {
            return false;
        }
        list.push(Stored { check, full });
        self.count += 1;
        true
    }

    pub fn for_target(&self, c: ClauseId) -> &[Stored] {
        self.by_target.get(&c).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }
}
