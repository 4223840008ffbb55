//! Variables, literals, clauses, the clause database, assignments and the
//! search trail.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormulaError {
    #[error("clause contains both polarities of variable {0}")]
    Tautology(u32),
    #[error("variable index 0 is not allowed")]
    ZeroVar,
    #[error("clauses are not resolvable on the given variable")]
    NotResolvable,
}

/// A propositional variable, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub u32);

impl Var {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A literal, packed as `var << 1 | negative`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: Var, positive: bool) -> Lit {
        Lit(var.0 << 1 | (!positive) as u32)
    }

    pub fn from_dimacs(x: i32) -> Lit {
        assert!(x != 0, "literal 0");
        Lit::new(Var(x.unsigned_abs()), x > 0)
    }

    pub fn to_dimacs(self) -> i32 {
        let v = self.var().0 as i32;
        if self.is_positive() {
            v
        } else {
            -v
        }
    }

    pub fn var(self) -> Var {
        Var(self.0 >> 1)
    }

    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    /// The value of the variable that makes this literal true.
    pub fn sat_value(self) -> bool {
        self.is_positive()
    }

    pub fn code(self) -> usize {
        self.0 as usize
    }

    pub fn negate(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        self.negate()
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

/// Sorts by variable and removes duplicates. Rejects tautologies.
pub fn canonicalize(mut lits: Vec<Lit>) -> Result<Vec<Lit>, FormulaError> {
    lits.sort();
    lits.dedup();
    for w in lits.windows(2) {
        if w[0].var() == w[1].var() {
            return Err(FormulaError::Tautology(w[0].var().0));
        }
    }
    if lits.iter().any(|l| l.var().0 == 0) {
        return Err(FormulaError::ZeroVar);
    }
    Ok(lits)
}

pub fn lits_from_dimacs(xs: &[i32]) -> Result<Vec<Lit>, FormulaError> {
    canonicalize(xs.iter().map(|&x| Lit::from_dimacs(x)).collect())
}

pub type ClauseId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Origin {
    F1Initial,
    F2Initial,
    DerivedF1,
    DerivedF2,
}

impl Origin {
    pub fn in_f1(self) -> bool {
        matches!(self, Origin::F1Initial | Origin::DerivedF1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub id: ClauseId,
    pub lits: Vec<Lit>,
    pub origin: Origin,
}

impl Clause {
    pub fn contains(&self, l: Lit) -> bool {
        self.lits.binary_search(&l).is_ok()
    }

    pub fn lit_of(&self, v: Var) -> Option<Lit> {
        self.lits.iter().copied().find(|l| l.var() == v)
    }
}

/// Clause store with stable ids. Removal is a flag; ids are never reused.
/// `active` is cleared both for temporary proofs of redundancy and for
/// permanent removal; `removed` marks only the latter.
#[derive(Debug, Clone, Default)]
pub struct ClauseDb {
    clauses: Vec<Clause>,
    active: Vec<bool>,
    removed: Vec<bool>,
    index: HashMap<Vec<Lit>, ClauseId>,
    occurs: Vec<Vec<ClauseId>>,
}

impl ClauseDb {
    pub fn new() -> ClauseDb {
        ClauseDb::default()
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    /// Inserts a canonical literal set. If an active clause with the same
    /// literals exists, its id is returned and nothing is added.
    pub fn insert(&mut self, lits: Vec<Lit>, origin: Origin) -> ClauseId {
        if let Some(id) = self.find(&lits) {
            if self.active[id] {
                return id;
            }
        }
        self.push(lits, origin)
    }

    /// Inserts unconditionally, even if an equal clause exists.
    pub fn push(&mut self, lits: Vec<Lit>, origin: Origin) -> ClauseId {
        let id = self.clauses.len();
        for l in &lits {
            if self.occurs.len() <= l.code() {
                self.occurs.resize(l.code() + 2, Vec::new());
            }
            self.occurs[l.code()].push(id);
        }
        self.index.entry(lits.clone()).or_insert(id);
        self.clauses.push(Clause { id, lits, origin });
        self.active.push(true);
        self.removed.push(false);
        id
    }

    /// The id of a non-removed clause with exactly these literals.
    pub fn find(&self, lits: &[Lit]) -> Option<ClauseId> {
        self.index.get(lits).copied()
    }

    pub fn get(&self, id: ClauseId) -> &Clause {
        &self.clauses[id]
    }

    pub fn lits(&self, id: ClauseId) -> &[Lit] {
        &self.clauses[id].lits
    }

    pub fn is_active(&self, id: ClauseId) -> bool {
        self.active[id]
    }

    pub fn is_removed(&self, id: ClauseId) -> bool {
        self.removed[id]
    }

    pub fn set_active(&mut self, id: ClauseId, on: bool) {
        debug_assert!(!self.removed[id] || !on);
        self.active[id] = on;
    }

    /// Permanent removal. The content stays readable.
    pub fn remove(&mut self, id: ClauseId) {
        self.active[id] = false;
        self.removed[id] = true;
        if self.index.get(&self.clauses[id].lits) == Some(&id) {
            self.index.remove(&self.clauses[id].lits);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Clause> {
        self.clauses.iter()
    }

    pub fn active_ids(&self) -> impl Iterator<Item = ClauseId> + '_ {
        (0..self.clauses.len()).filter(move |&i| self.active[i])
    }

    /// Clauses of the current formula: everything not permanently removed.
    pub fn present_ids(&self) -> impl Iterator<Item = ClauseId> + '_ {
        (0..self.clauses.len()).filter(move |&i| !self.removed[i])
    }

    /// Ids of all clauses, in any state, containing `l`.
    pub fn occurrences(&self, l: Lit) -> &[ClauseId] {
        self.occurs.get(l.code()).map(|v| v.as_slice()).unwrap_or(&[])
    }
}

/// Partial assignment. Ordered by variable so that printing and hashing
/// are deterministic.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment {
    values: BTreeMap<Var, bool>,
}

impl Assignment {
    pub fn new() -> Assignment {
        Assignment::default()
    }

    pub fn from_pairs(pairs: &[(u32, bool)]) -> Assignment {
        let mut a = Assignment::new();
        for &(v, b) in pairs {
            a.set(Var(v), b);
        }
        a
    }

    /// Assignment made of the values that satisfy each literal.
    pub fn from_lits(lits: &[Lit]) -> Assignment {
        let mut a = Assignment::new();
        for l in lits {
            a.set(l.var(), l.sat_value());
        }
        a
    }

    pub fn set(&mut self, v: Var, b: bool) {
        self.values.insert(v, b);
    }

    pub fn unset(&mut self, v: Var) {
        self.values.remove(&v);
    }

    pub fn get(&self, v: Var) -> Option<bool> {
        self.values.get(&v).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Var, bool)> + '_ {
        self.values.iter().map(|(&v, &b)| (v, b))
    }

    /// Each assignment as the literal it makes true.
    pub fn lits(&self) -> Vec<Lit> {
        self.iter().map(|(v, b)| Lit::new(v, b)).collect()
    }

    pub fn lit_value(&self, l: Lit) -> Option<bool> {
        self.get(l.var()).map(|b| b == l.sat_value())
    }

    pub fn is_subset_of(&self, other: &Assignment) -> bool {
        self.iter().all(|(v, b)| other.get(v) == Some(b))
    }

    pub fn is_compatible(&self, other: &Assignment) -> bool {
        self.iter().all(|(v, b)| other.get(v).map_or(true, |c| c == b))
    }

    /// Union of two compatible assignments; None if they clash.
    pub fn union(&self, other: &Assignment) -> Option<Assignment> {
        if !self.is_compatible(other) {
            return None;
        }
        let mut r = self.clone();
        for (v, b) in other.iter() {
            r.set(v, b);
        }
        Some(r)
    }

    pub fn satisfies(&self, lits: &[Lit]) -> bool {
        lits.iter().any(|&l| self.lit_value(l) == Some(true))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cofactor {
    Satisfied,
    Clause(Vec<Lit>),
}

pub fn cofactor_clause(lits: &[Lit], q: &Assignment) -> Cofactor {
    let mut rest = Vec::new();
    for &l in lits {
        match q.lit_value(l) {
            Some(true) => return Cofactor::Satisfied,
            Some(false) => {}
            None => rest.push(l),
        }
    }
    Cofactor::Clause(rest)
}

/// Variables on which the two literal sets have opposite literals.
pub fn clashing_vars(c1: &[Lit], c2: &[Lit]) -> Vec<Var> {
    c1.iter()
        .filter(|&&l| c2.contains(&!l))
        .map(|l| l.var())
        .collect()
}

pub fn resolvable_on(c1: &[Lit], c2: &[Lit], v: Var) -> bool {
    let clash = clashing_vars(c1, c2);
    clash.len() == 1 && clash[0] == v
}

pub fn resolve(c1: &[Lit], c2: &[Lit], v: Var) -> Result<Vec<Lit>, FormulaError> {
    if !resolvable_on(c1, c2, v) {
        return Err(FormulaError::NotResolvable);
    }
    let lits = c1
        .iter()
        .chain(c2.iter())
        .copied()
        .filter(|l| l.var() != v)
        .collect();
    canonicalize(lits)
}

/// True iff every active clause resolvable with `c` on `v` is satisfied
/// by `q`. Inactive clauses count as already proved redundant.
pub fn is_blocked(db: &ClauseDb, c: &[Lit], v: Var, q: &Assignment) -> bool {
    let Some(l) = c.iter().copied().find(|l| l.var() == v) else {
        return true;
    };
    db.occurrences(!l)
        .iter()
        .filter(|&&id| db.is_active(id))
        .filter(|&&id| resolvable_on(c, db.lits(id), v))
        .all(|&id| q.satisfies(db.lits(id)))
}

/// The single variable assigned opposite values, if exactly one exists.
pub fn assignments_resolvable(q1: &Assignment, q2: &Assignment) -> Option<Var> {
    let mut clash = q1.iter().filter(|&(v, b)| q2.get(v) == Some(!b));
    let first = clash.next()?;
    if clash.next().is_some() {
        return None;
    }
    Some(first.0)
}

/// An ∃X[F₁ ∧ F₂] instance. Variables not in X are free (Y).
#[derive(Debug, Clone, Default)]
pub struct EcnfProblem {
    pub num_vars: u32,
    is_x: Vec<bool>,
    pub db: ClauseDb,
    pub f1: Vec<ClauseId>,
    pub f2: Vec<ClauseId>,
}

impl EcnfProblem {
    pub fn new(num_vars: u32, x_vars: &[Var]) -> EcnfProblem {
        let mut is_x = vec![false; num_vars as usize + 1];
        for v in x_vars {
            is_x[v.index()] = true;
        }
        EcnfProblem {
            num_vars,
            is_x,
            ..Default::default()
        }
    }

    /// Builds a problem from DIMACS-style literal lists. Panics on
    /// tautologies; meant for tests and generators.
    pub fn from_dimacs(num_vars: u32, x: &[u32], f1: &[&[i32]], f2: &[&[i32]]) -> EcnfProblem {
        let xs: Vec<Var> = x.iter().map(|&v| Var(v)).collect();
        let mut p = EcnfProblem::new(num_vars, &xs);
        for c in f1 {
            p.add_f1(lits_from_dimacs(c).expect("tautology"));
        }
        for c in f2 {
            p.add_f2(lits_from_dimacs(c).expect("tautology"));
        }
        p
    }

    pub fn add_f1(&mut self, lits: Vec<Lit>) -> ClauseId {
        let id = self.db.push(lits, Origin::F1Initial);
        self.f1.push(id);
        id
    }

    pub fn add_f2(&mut self, lits: Vec<Lit>) -> ClauseId {
        let id = self.db.push(lits, Origin::F2Initial);
        self.f2.push(id);
        id
    }

    pub fn is_x(&self, v: Var) -> bool {
        self.is_x.get(v.index()).copied().unwrap_or(false)
    }

    pub fn x_vars(&self) -> Vec<Var> {
        (1..=self.num_vars).map(Var).filter(|&v| self.is_x(v)).collect()
    }

    pub fn y_vars(&self) -> Vec<Var> {
        (1..=self.num_vars).map(Var).filter(|&v| !self.is_x(v)).collect()
    }

    pub fn is_x_clause(&self, lits: &[Lit]) -> bool {
        lits.iter().any(|l| self.is_x(l.var()))
    }

    pub fn f1_lits(&self) -> Vec<Vec<Lit>> {
        self.f1.iter().map(|&id| self.db.lits(id).to_vec()).collect()
    }

    pub fn f2_lits(&self) -> Vec<Vec<Lit>> {
        self.f2.iter().map(|&id| self.db.lits(id).to_vec()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reason {
    Decision,
    Clause(ClauseId),
    /// Index into the solver's D-sequent arena.
    DSequent(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrailEntry {
    pub var: Var,
    pub value: bool,
    pub level: u32,
    pub reason: Reason,
}

impl TrailEntry {
    pub fn lit(&self) -> Lit {
        Lit::new(self.var, self.value)
    }
}

/// Assignment stack with decision levels. Level 0 has no decision.
#[derive(Debug, Clone, Default)]
pub struct Trail {
    entries: Vec<TrailEntry>,
    value: Vec<Option<bool>>,
    pos: Vec<usize>,
    level: u32,
}

impl Trail {
    pub fn new(num_vars: u32) -> Trail {
        Trail {
            entries: Vec::new(),
            value: vec![None; num_vars as usize + 1],
            pos: vec![usize::MAX; num_vars as usize + 1],
            level: 0,
        }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[TrailEntry] {
        &self.entries
    }

    pub fn entry_of(&self, v: Var) -> Option<&TrailEntry> {
        self.value[v.index()].map(|_| &self.entries[self.pos[v.index()]])
    }

    pub fn value(&self, v: Var) -> Option<bool> {
        self.value[v.index()]
    }

    pub fn lit_value(&self, l: Lit) -> Option<bool> {
        self.value(l.var()).map(|b| b == l.sat_value())
    }

    pub fn position(&self, v: Var) -> Option<usize> {
        self.value[v.index()].map(|_| self.pos[v.index()])
    }

    pub fn level_of(&self, v: Var) -> Option<u32> {
        self.entry_of(v).map(|e| e.level)
    }

    pub fn decide(&mut self, v: Var, b: bool) {
        self.level += 1;
        self.push(v, b, Reason::Decision);
    }

    pub fn assign(&mut self, v: Var, b: bool, reason: Reason) {
        debug_assert!(reason != Reason::Decision);
        self.push(v, b, reason);
    }

    fn push(&mut self, v: Var, b: bool, reason: Reason) {
        debug_assert!(self.value[v.index()].is_none());
        self.value[v.index()] = Some(b);
        self.pos[v.index()] = self.entries.len();
        self.entries.push(TrailEntry {
            var: v,
            value: b,
            level: self.level,
            reason,
        });
    }

    /// Keeps the first `len` entries.
    pub fn truncate(&mut self, len: usize) {
        while self.entries.len() > len {
            let e = self.entries.pop().unwrap();
            self.value[e.var.index()] = None;
        }
        self.level = self.entries.last().map_or(0, |e| e.level);
    }

    /// Undoes every level above `level`.
    pub fn backtrack_to_level(&mut self, level: u32) {
        let keep = self
            .entries
            .iter()
            .position(|e| e.level > level)
            .unwrap_or(self.entries.len());
        self.truncate(keep);
    }

    /// Trail index of the first entry of `level`.
    pub fn level_start(&self, level: u32) -> usize {
        self.entries
            .iter()
            .position(|e| e.level >= level)
            .unwrap_or(self.entries.len())
    }

    pub fn to_assignment(&self) -> Assignment {
        let mut a = Assignment::new();
        for e in &self.entries {
            a.set(e.var, e.value);
        }
        a
    }
}
