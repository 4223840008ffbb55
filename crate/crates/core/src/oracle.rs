//! Exhaustive semantic checks at desk scale. Everything here works by
//! enumerating assignments over bitmasks and never calls into the solver.

use thiserror::Error;

use crate::formula::{Assignment, ClauseId, Lit, Var};

pub const MAX_VARS_PER_SIDE: usize = 24;
pub const MAX_FREE_MEMBERS: usize = 12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("instance too large for enumeration: {0}")]
    TooLarge(String),
}

/// The X/Y split used by every check. Variables `1..=num_vars` not in X
/// are free.
#[derive(Debug, Clone)]
pub struct Scope {
    pub num_vars: u32,
    is_x: Vec<bool>,
    slot: Vec<usize>,
    pub x_vars: Vec<Var>,
    pub y_vars: Vec<Var>,
}

impl Scope {
    pub fn new(num_vars: u32, x: &[Var]) -> Result<Scope, OracleError> {
        let mut is_x = vec![false; num_vars as usize + 1];
        for v in x {
            is_x[v.index()] = true;
        }
        let mut slot = vec![0; num_vars as usize + 1];
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for i in 1..=num_vars {
            let v = Var(i);
            if is_x[i as usize] {
                slot[i as usize] = xs.len();
                xs.push(v);
            } else {
                slot[i as usize] = ys.len();
                ys.push(v);
            }
        }
        if xs.len() > MAX_VARS_PER_SIDE || ys.len() > MAX_VARS_PER_SIDE {
            return Err(OracleError::TooLarge(format!(
                "|X| = {}, |Y| = {}",
                xs.len(),
                ys.len()
            )));
        }
        Ok(Scope {
            num_vars,
            is_x,
            slot,
            x_vars: xs,
            y_vars: ys,
        })
    }

    fn pack(&self, c: &[Lit]) -> Packed {
        let mut p = Packed::default();
        for l in c {
            let bit = 1u64 << self.slot[l.var().index()];
            match (self.is_x[l.var().index()], l.is_positive()) {
                (true, true) => p.xpos |= bit,
                (true, false) => p.xneg |= bit,
                (false, true) => p.ypos |= bit,
                (false, false) => p.yneg |= bit,
            }
        }
        p
    }

    /// Masks of the assignment split into (y mask, y value, x mask, x value).
    fn split(&self, q: &Assignment) -> (u64, u64, u64, u64) {
        let (mut ym, mut yv, mut xm, mut xv) = (0, 0, 0, 0);
        for (v, b) in q.iter() {
            let bit = 1u64 << self.slot[v.index()];
            if self.is_x[v.index()] {
                xm |= bit;
                if b {
                    xv |= bit;
                }
            } else {
                ym |= bit;
                if b {
                    yv |= bit;
                }
            }
        }
        (ym, yv, xm, xv)
    }

    fn y_rows(&self) -> u64 {
        1u64 << self.y_vars.len()
    }

    /// Row of a full Y assignment as an `Assignment`.
    pub fn y_row(&self, row: u64) -> Assignment {
        let mut a = Assignment::new();
        for (i, &v) in self.y_vars.iter().enumerate() {
            a.set(v, row >> i & 1 == 1);
        }
        a
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Packed {
    ypos: u64,
    yneg: u64,
    xpos: u64,
    xneg: u64,
}

impl Packed {
    fn sat_by_y(&self, y: u64) -> bool {
        y & self.ypos != 0 || !y & self.yneg != 0
    }

    fn sat_by_x(&self, x: u64) -> bool {
        x & self.xpos != 0 || !x & self.xneg != 0
    }
}

/// ∃x consistent with (xm, xv) satisfying every clause under `y`.
fn exists_x(scope: &Scope, cls: &[Packed], y: u64, xm: u64, xv: u64) -> bool {
    let rest: Vec<Packed> = cls.iter().filter(|c| !c.sat_by_y(y)).copied().collect();
    // A clause with no X literal left, restricted to fixed X values.
    for c in &rest {
        let free = (c.xpos | c.xneg) & !xm;
        if free == 0 && !c.sat_by_x(xv) {
            return false;
        }
    }
    let nx = scope.x_vars.len();
    let free_bits: Vec<u32> = (0..nx as u32).filter(|&i| xm >> i & 1 == 0).collect();
    let total = 1u64 << free_bits.len();
    for k in 0..total {
        let mut x = xv;
        for (j, &b) in free_bits.iter().enumerate() {
            if k >> j & 1 == 1 {
                x |= 1 << b;
            }
        }
        if rest.iter().all(|c| c.sat_by_x(x)) {
            return true;
        }
    }
    false
}

/// Truth table of ∃X[F] over the free variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthTableQe {
    pub y_vars: Vec<Var>,
    rows: Vec<bool>,
}

impl TruthTableQe {
    pub fn row(&self, y: u64) -> bool {
        self.rows[y as usize]
    }

    pub fn rows(&self) -> &[bool] {
        &self.rows
    }

    /// Value at a Y assignment; panics if it does not assign every Y var.
    pub fn eval(&self, a: &Assignment) -> bool {
        let mut row = 0u64;
        for (i, v) in self.y_vars.iter().enumerate() {
            if a.get(*v).expect("row assigns every free var") {
                row |= 1 << i;
            }
        }
        self.row(row)
    }
}

pub fn enumerate_qe(scope: &Scope, f: &[Vec<Lit>]) -> TruthTableQe {
    let cls: Vec<Packed> = f.iter().map(|c| scope.pack(c)).collect();
    let rows = (0..scope.y_rows())
        .map(|y| exists_x(scope, &cls, y, 0, 0))
        .collect();
    TruthTableQe {
        y_vars: scope.y_vars.clone(),
        rows,
    }
}

/// True iff for every Y row: (F₁* ∧ ∃X F₂) ⟺ ∃X (F₁ ∧ F₂).
pub fn verify_pqe_solution(
    scope: &Scope,
    f1: &[Vec<Lit>],
    f2: &[Vec<Lit>],
    f1_star: &[Vec<Lit>],
) -> bool {
    if f1_star.iter().flatten().any(|l| scope.is_x[l.var().index()]) {
        return false;
    }
    let both: Vec<Vec<Lit>> = f1.iter().chain(f2).cloned().collect();
    let lhs2 = enumerate_qe(scope, f2);
    let rhs = enumerate_qe(scope, &both);
    let star: Vec<Packed> = f1_star.iter().map(|c| scope.pack(c)).collect();
    (0..scope.y_rows()).all(|y| {
        let s = star.iter().all(|c| c.sat_by_y(y));
        (s && lhs2.row(y)) == rhs.row(y)
    })
}

/// ∃X[F|q] ≡ ∃X[(F \ {c})|q] over the free variables left by q.
/// `c` indexes into `f`.
pub fn check_redundant_in_subspace(scope: &Scope, f: &[Vec<Lit>], c: usize, q: &Assignment) -> bool {
    let with: Vec<Packed> = f.iter().map(|cl| scope.pack(cl)).collect();
    let without: Vec<Packed> = with
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != c)
        .map(|(_, p)| *p)
        .collect();
    let (ym, yv, xm, xv) = scope.split(q);
    (0..scope.y_rows())
        .filter(|y| y & ym == yv)
        .all(|y| exists_x(scope, &with, y, xm, xv) == exists_x(scope, &without, y, xm, xv))
}

fn qe_under(scope: &Scope, cls: &[Packed], q: &Assignment) -> Vec<bool> {
    let (ym, yv, xm, xv) = scope.split(q);
    (0..scope.y_rows())
        .filter(|y| y & ym == yv)
        .map(|y| exists_x(scope, cls, y, xm, xv))
        .collect()
}

/// A D-sequent given by parts: conditional, structure constraint, target.
/// `formula` lists the clauses of the current F with their ids.
pub struct DSeqParts<'a> {
    pub conditional: &'a Assignment,
    pub constraint: &'a [ClauseId],
    pub target: ClauseId,
}

/// Checks the D-sequent over its member formulas W, H ∪ {C} ⊆ W ⊆ F.
/// A member counts only when ∃X[W|q] is equivalent to ∃X[F|q], as in
/// the definition of a D-sequent.
pub fn verify_dsequent(
    scope: &Scope,
    formula: &[(ClauseId, Vec<Lit>)],
    s: &DSeqParts<'_>,
) -> Result<bool, OracleError> {
    verify_members(scope, formula, s, false)
}

/// Same as `verify_dsequent` but demands redundancy in every member W,
/// equivalent to F under q or not.
pub fn verify_dsequent_strict(
    scope: &Scope,
    formula: &[(ClauseId, Vec<Lit>)],
    s: &DSeqParts<'_>,
) -> Result<bool, OracleError> {
    verify_members(scope, formula, s, true)
}

fn verify_members(
    scope: &Scope,
    formula: &[(ClauseId, Vec<Lit>)],
    s: &DSeqParts<'_>,
    strict: bool,
) -> Result<bool, OracleError> {
    let Some(ti) = formula.iter().position(|(id, _)| *id == s.target) else {
        return Ok(false);
    };
    if s.constraint.contains(&s.target) {
        return Ok(false);
    }
    for h in s.constraint {
        if !formula.iter().any(|(id, _)| id == h) {
            return Ok(false);
        }
    }
    let fixed: Vec<usize> = (0..formula.len())
        .filter(|&i| i == ti || s.constraint.contains(&formula[i].0))
        .collect();
    let optional: Vec<usize> = (0..formula.len()).filter(|i| !fixed.contains(i)).collect();
    if optional.len() > MAX_FREE_MEMBERS {
        return Err(OracleError::TooLarge(format!(
            "{} optional member clauses",
            optional.len()
        )));
    }
    let packed: Vec<Packed> = formula.iter().map(|(_, c)| scope.pack(c)).collect();
    let full = qe_under(scope, &packed, s.conditional);
    for mask in 0u32..(1 << optional.len()) {
        let mut w: Vec<usize> = fixed.clone();
        for (j, &i) in optional.iter().enumerate() {
            if mask >> j & 1 == 1 {
                w.push(i);
            }
        }
        let with: Vec<Packed> = w.iter().map(|&i| packed[i]).collect();
        let tw = qe_under(scope, &with, s.conditional);
        if !strict && tw != full {
            continue;
        }
        let without: Vec<Packed> = w.iter().filter(|&&i| i != ti).map(|&i| packed[i]).collect();
        if qe_under(scope, &without, s.conditional) != tw {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A full assignment falsifying `c` while satisfying the rest of F.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryPoint {
    pub point: Assignment,
    /// True iff F is UNSAT under the point's Y part, which is the same as
    /// some implied Y-clause being falsified by the point.
    pub removable: bool,
}

pub fn find_boundary_points(scope: &Scope, f: &[Vec<Lit>], c: usize) -> Vec<BoundaryPoint> {
    let packed: Vec<Packed> = f.iter().map(|cl| scope.pack(cl)).collect();
    let nx = scope.x_vars.len();
    let mut out = Vec::new();
    for y in 0..scope.y_rows() {
        let mut sat_cache = None;
        for x in 0..(1u64 << nx) {
            let holds = |p: &Packed| p.sat_by_y(y) || p.sat_by_x(x);
            if holds(&packed[c]) {
                continue;
            }
            if !packed.iter().enumerate().all(|(i, p)| i == c || holds(p)) {
                continue;
            }
            let removable =
                !*sat_cache.get_or_insert_with(|| exists_x(scope, &packed, y, 0, 0));
            let mut point = scope.y_row(y);
            for (i, &v) in scope.x_vars.iter().enumerate() {
                point.set(v, x >> i & 1 == 1);
            }
            out.push(BoundaryPoint { point, removable });
        }
    }
    out
}

/// No removable boundary point means `c` is redundant in ∃X[F].
pub fn redundancy_certified(points: &[BoundaryPoint]) -> bool {
    points.iter().all(|p| !p.removable)
}

/// Extensions `r ⊇ q` among `samples` where redundancy at q does not carry
/// over. Empty when redundancy fails at q itself.
pub fn monotonicity_violations(
    scope: &Scope,
    f: &[Vec<Lit>],
    c: usize,
    q: &Assignment,
    samples: &[Assignment],
) -> Vec<Assignment> {
    if !check_redundant_in_subspace(scope, f, c, q) {
        return Vec::new();
    }
    samples
        .iter()
        .filter(|r| q.is_subset_of(r))
        .filter(|r| !check_redundant_in_subspace(scope, f, c, r))
        .cloned()
        .collect()
}
