//! Step-by-step runs of the engine on small hand-built formulas, checking
//! the backtracking condition, the learned D-sequent and the target stack.
//! Each scenario panics on a mismatch.

use std::collections::BTreeSet;

use pqe::dsequent::{DSequent, Rule};
use pqe::formula::{Assignment, ClauseId, EcnfProblem, Lit, Var};
use pqe::solver::{solve_pqe, BacktrackCondition, Engine, Flow, LrnOutcome, SolverConfig};

fn lit(x: i32) -> Lit {
    Lit::from_dimacs(x)
}

fn q(pairs: &[(u32, bool)]) -> Assignment {
    Assignment::from_pairs(pairs)
}

fn h(ids: &[ClauseId]) -> BTreeSet<ClauseId> {
    ids.iter().copied().collect()
}

fn engine(p: EcnfProblem) -> Engine {
    Engine::new(p, SolverConfig::default())
}

fn expect_ds(out: LrnOutcome) -> DSequent {
    match out {
        LrnOutcome::DSequentOnly(s) => s,
        o => panic!("expected a D-sequent, got {o:?}"),
    }
}

pub fn satisfied_target_drops_derived_literal() {
    // y = 1, x1 = 2, x2 = 3. Target x1 ∨ x2, side clause y ∨ x1.
    let p = EcnfProblem::from_dimacs(3, &[2, 3], &[&[2, 3]], &[&[1, 2]]);
    let mut e = engine(p);
    e.begin(0);
    e.decide_lit(lit(-1));
    let c = e.bcp().unwrap();
    assert_eq!(c, BacktrackCondition::SatTrg);
    let s = expect_ds(e.lrn(&c));
    assert_eq!(s.target, 0);
    assert_eq!(s.cond, q(&[(1, false)]));
    assert_eq!(s.constraint, h(&[1]));
}

pub fn blocked_target_gives_third_kind_then_join() {
    // y = 1, x1 = 2, x2 = 3, x3 = 4, x4 = 5.
    // Target x2 ∨ x3; its only partner on x2 is x1 ∨ ¬x2.
    let p = EcnfProblem::from_dimacs(
        5,
        &[2, 3, 4, 5],
        &[&[3, 4]],
        &[&[1, 2], &[2, -3], &[-4, 5]],
    );
    let mut e = engine(p);
    e.begin(0);
    e.decide_lit(lit(-1));
    let c = e.bcp().unwrap();
    assert_eq!(c, BacktrackCondition::BlockedTrg(Var(3)));
    let s = expect_ds(e.lrn(&c));
    assert_eq!(s.cond, q(&[(1, false)]));
    assert_eq!(s.constraint, h(&[1]));
}

/// y = 1, x1 = 2, x2 = 3, x3 = 4, x4 = 5, x5 = 6.
/// c0 = y ∨ ¬x1 ∨ x2, c1 = ¬x1 ∨ x3, c2 = ¬x2 ∨ ¬x3, c3 = ¬x1 ∨ x4 ∨ x5.
fn chain_problem() -> EcnfProblem {
    EcnfProblem::from_dimacs(
        6,
        &[2, 3, 4, 5, 6],
        &[&[-3, -4], &[-2, 5, 6]],
        &[&[1, -2, 3], &[-2, 4]],
    )
}

pub fn conflict_through_stored_dsequent_yields_dsequent() {
    // Ids: f1 first, so c2 = 0, c3 = 1, c0 = 2, c1 = 3. Target c3.
    let mut e = engine(chain_problem());
    e.begin(1);
    let prior = DSequent::new(q(&[(1, false), (2, false)]), h(&[]), 1, Rule::Atomic1);
    e.store_dsequent(prior.clone(), prior);
    e.decide_lit(lit(-1));
    let c = e.bcp().unwrap();
    assert_eq!(c, BacktrackCondition::FalsifiedClause(0));
    let s = expect_ds(e.lrn(&c));
    assert_eq!(s.target, 1);
    assert_eq!(s.cond, q(&[(1, false)]));
    assert_eq!(s.constraint, h(&[0, 2, 3]));
}

pub fn falsified_target_yields_dsequent_and_clause() {
    let mut e = engine(chain_problem());
    e.begin(0);
    let prior = DSequent::new(q(&[(1, false), (2, false)]), h(&[]), 0, Rule::Atomic1);
    e.store_dsequent(prior.clone(), prior);
    e.decide_lit(lit(-1));
    let c = e.bcp().unwrap();
    assert_eq!(c, BacktrackCondition::FalsifiedClause(0));
    match e.lrn(&c) {
        LrnOutcome::DSequentAndClause(s, id) => {
            assert_eq!(e.problem().db.lits(id), &[lit(1), lit(-2)]);
            assert_eq!(s.cond, q(&[(1, false)]));
            assert_eq!(s.constraint, h(&[id]));
            assert_eq!(s.target, 0);
        }
        o => panic!("{o:?}"),
    }
}

pub fn active_dsequent_is_reduced() {
    // y = 1, x1 = 2, x2 = 3, x3 = 4, x4 = 5. Target x3 ∨ x4 (id 0).
    let p = EcnfProblem::from_dimacs(5, &[2, 3, 4, 5], &[&[4, 5]], &[&[1, 2], &[1, 3]]);
    let mut e = engine(p);
    e.begin(0);
    let prior = DSequent::new(q(&[(2, true), (3, true)]), h(&[]), 0, Rule::Atomic1);
    e.store_dsequent(prior.clone(), prior.clone());
    e.decide_lit(lit(-1));
    let c = e.bcp().unwrap();
    assert_eq!(c, BacktrackCondition::ActiveDSequent(prior));
    let s = expect_ds(e.lrn(&c));
    assert_eq!(s.cond, q(&[(1, false)]));
    assert_eq!(s.constraint, h(&[1, 2]));
}

/// y = 1, x1 = 2, x2 = 3, x3 = 4, x4 = 5.
/// c0 = y ∨ x1, c1 = ¬x1 ∨ x2, c2 = ¬x2 ∨ x3 ∨ x4, c3 = ¬y ∨ ¬x3, c4 = x3 ∨ ¬x4.
fn stack_problem() -> EcnfProblem {
    EcnfProblem::from_dimacs(
        5,
        &[2, 3, 4, 5],
        &[&[1, 2]],
        &[&[-2, 3], &[-3, 4, 5], &[-1, -4], &[4, -5]],
    )
}

pub fn bcp_star_builds_target_levels() {
    let mut e = engine(stack_problem());
    e.begin(0);
    e.decide_lit(lit(-1));
    let c = e.bcp().unwrap();
    assert_eq!(c, BacktrackCondition::BlockedTrg(Var(4)));
    let shape: Vec<(ClauseId, Option<Var>, Option<ClauseId>)> =
        e.stack().iter().map(|l| (l.key, l.key_var, l.target)).collect();
    assert_eq!(
        shape,
        vec![
            (0, None, Some(0)),
            (0, Some(Var(2)), Some(1)),
            (1, Some(Var(3)), Some(2)),
        ]
    );
    let lits: Vec<Lit> = e.trail().entries().iter().map(|t| t.lit()).collect();
    assert_eq!(lits, vec![lit(-1), lit(2), lit(3)]);
}

pub fn exhausted_levels_unwind_to_primary() {
    let mut e = engine(stack_problem());
    e.begin(0);
    e.decide_lit(lit(-1));
    let c = e.bcp().unwrap();
    let s = expect_ds(e.lrn(&c));
    assert_eq!((s.target, s.cond.clone(), s.constraint.clone()), (2, q(&[(1, false)]), h(&[])));
    assert_eq!(e.apply(LrnOutcome::DSequentOnly(s)), Flow::Continue);
    // Both secondary levels are gone and y = 0 is undone.
    assert_eq!(e.stack().len(), 1);
    assert!(e.trail().is_empty());
    let stored = e.stored(0);
    assert_eq!(stored.len(), 1);
    assert_eq!(stored[0].cond, q(&[(1, false)]));
    assert!(e.problem().db.is_active(1) && e.problem().db.is_active(2));
    // The flipped assignment y = 1 comes next and satisfies the primary.
    assert_eq!(e.bcp(), Some(BacktrackCondition::SatTrg));
    assert_eq!(e.trail().entries()[0].lit(), lit(1));
}

pub fn stack_problem_end_to_end() {
    let sol = solve_pqe(&stack_problem(), &SolverConfig::default()).unwrap();
    assert!(sol.f1_star.is_empty());
    assert_eq!(sol.removed, vec![0]);
}

pub fn chain_resolvent_shrinks_structure_constraint() {
    // y = 1, x1..x4 = 2..5. Chain y ∨ x1, ¬x1 ∨ x2, ¬x2 ∨ x3; target x3 ∨ x4.
    let p = EcnfProblem::from_dimacs(5, &[2, 3, 4, 5], &[&[4, 5]], &[&[1, 2], &[-2, 3], &[-3, 4]]);
    let mut plain = engine(p.clone());
    plain.begin(0);
    plain.decide_lit(lit(-1));
    let c = plain.bcp().unwrap();
    let s = expect_ds(plain.lrn(&c));
    assert_eq!((s.cond, s.constraint), (q(&[(1, false)]), h(&[1, 2, 3])));

    let cfg = SolverConfig {
        reduce_constraints: true,
        ..SolverConfig::default()
    };
    let mut e = Engine::new(p, cfg);
    e.begin(0);
    e.decide_lit(lit(-1));
    let c = e.bcp().unwrap();
    let s = expect_ds(e.lrn(&c));
    assert_eq!(s.cond, q(&[(1, false)]));
    assert_eq!(s.constraint.len(), 1);
    let id = *s.constraint.iter().next().unwrap();
    assert_eq!(e.problem().db.lits(id), &[lit(1), lit(4)]);
    assert_eq!(e.stats().clauses_f2, 1);
}

pub const ALL: &[(&str, fn())] = &[
    ("satisfied_target_drops_derived_literal", satisfied_target_drops_derived_literal),
    ("blocked_target_gives_third_kind_then_join", blocked_target_gives_third_kind_then_join),
    ("conflict_through_stored_dsequent_yields_dsequent", conflict_through_stored_dsequent_yields_dsequent),
    ("falsified_target_yields_dsequent_and_clause", falsified_target_yields_dsequent_and_clause),
    ("active_dsequent_is_reduced", active_dsequent_is_reduced),
    ("bcp_star_builds_target_levels", bcp_star_builds_target_levels),
    ("exhausted_levels_unwind_to_primary", exhausted_levels_unwind_to_primary),
    ("stack_problem_end_to_end", stack_problem_end_to_end),
    ("chain_resolvent_shrinks_structure_constraint", chain_resolvent_shrinks_structure_constraint),
];
