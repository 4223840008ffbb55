use super::*;
use crate::formula::{lits_from_dimacs, Var};
use crate::oracle::{verify_dsequent, verify_pqe_solution, DSeqParts, Scope};
use proptest::prelude::*;

fn small() -> EcnfProblem {
    // x1 = 1, x2 = 2, y = 3
    EcnfProblem::from_dimacs(3, &[1, 2], &[&[-1, 2]], &[&[3, 1], &[3, -2]])
}

fn check(p: &EcnfProblem, cfg: &SolverConfig) -> Solution {
    let sol = solve_pqe(p, cfg).expect("no budget set");
    let scope = Scope::new(p.num_vars, &p.x_vars()).unwrap();
    assert!(
        verify_pqe_solution(&scope, &p.f1_lits(), &p.f2_lits(), &sol.f1_star),
        "wrong F1* {:?} for {:?}",
        sol.f1_star,
        p.db
    );
    sol
}

#[test]
fn small_instance_gives_unit_clause() {
    let sol = check(&small(), &SolverConfig::default());
    assert_eq!(sol.f1_star, vec![lits_from_dimacs(&[3]).unwrap()]);
    assert_eq!(sol.removed, vec![0]);
}

#[test]
fn emitted_dsequents_hold_on_small_instance() {
    let cfg = SolverConfig {
        trace: true,
        ..SolverConfig::default()
    };
    let p = small();
    let sol = check(&p, &cfg);
    assert!(!sol.emissions.is_empty());
    let scope = Scope::new(p.num_vars, &p.x_vars()).unwrap();
    for e in &sol.emissions {
        let f = sol.formula_at(e);
        let h: Vec<_> = e.ds.constraint.iter().copied().collect();
        let parts = DSeqParts {
            conditional: &e.ds.cond,
            constraint: &h,
            target: e.ds.target,
        };
        assert!(verify_dsequent(&scope, &f, &parts).unwrap(), "{}", e.ds.trace_line());
    }
}

/// Two single-literal D-sequents for one secondary target used to undo
/// each other's flip and cycle.
#[test]
fn secondary_flips_do_not_cycle() {
    let p = EcnfProblem::from_dimacs(
        11,
        &[6, 7, 8, 9, 10, 11],
        &[&[-8, 9, -11]],
        &[
            &[1, -6], &[2, -6], &[-1, -2, 6], &[4, -7], &[5, -7], &[-4, -5, 7],
            &[-3, 8], &[-7, 8], &[3, 7, -8], &[2, -9], &[5, -9], &[-2, -5, 9],
            &[-1, 10], &[-6, 10], &[1, 6, -10], &[1, -11], &[10, -11], &[-1, -10, 11],
        ],
    );
    for k in [-1, 0, 1] {
        let cfg = SolverConfig {
            learn_depth_k: k,
            max_conflicts: Some(1000),
            ..SolverConfig::default()
        };
        check(&p, &cfg);
    }
}

#[test]
fn retention_filter_by_depth() {
    let ds = DSequent::new(
        crate::formula::Assignment::from_pairs(&[(1, true)]),
        [4, 5].into_iter().collect(),
        2,
        Rule::Atomic2,
    );
    let is_x = |h: ClauseId| h == 4;
    let k0 = SolverConfig::default();
    assert!(retention_filter(&ds, 0, &k0, is_x).unwrap().constraint.is_empty());
    assert_eq!(retention_filter(&ds, 1, &k0, is_x), None);
    let k2 = SolverConfig {
        learn_depth_k: 2,
        ..SolverConfig::default()
    };
    let kept = retention_filter(&ds, 2, &k2, is_x).unwrap();
    assert_eq!(kept.constraint.into_iter().collect::<Vec<_>>(), vec![4]);
    let off = SolverConfig {
        learn_depth_k: -1,
        ..SolverConfig::default()
    };
    assert_eq!(retention_filter(&ds, 0, &off, is_x), None);
}

fn arb_problem() -> impl Strategy<Value = EcnfProblem> {
    (3u32..=6).prop_flat_map(|n| {
        let lit = (1..=n as i32, any::<bool>()).prop_map(|(v, s)| if s { v } else { -v });
        let clause = prop::collection::vec(lit, 1..=3);
        (
            Just(n),
            prop::collection::vec(any::<bool>(), n as usize),
            prop::collection::vec(clause.clone(), 1..=4),
            prop::collection::vec(clause, 0..=6),
        )
            .prop_map(|(n, xs, f1, f2)| {
                let mut x: Vec<Var> = (1..=n).filter(|&v| xs[v as usize - 1]).map(Var).collect();
                if x.is_empty() {
                    x.push(Var(1));
                }
                let mut p = EcnfProblem::new(n, &x);
                for c in f1 {
                    if let Ok(l) = lits_from_dimacs(&c) {
                        p.add_f1(l);
                    }
                }
                for c in f2 {
                    if let Ok(l) = lits_from_dimacs(&c) {
                        p.add_f2(l);
                    }
                }
                p
            })
    })
}

fn configs() -> Vec<SolverConfig> {
    let mut out = Vec::new();
    for k in [-1, 0, 1, 3] {
        for order in [VarOrder::StaticIndex, VarOrder::ActivityBased] {
            for pol in [false, true] {
                out.push(SolverConfig {
                    reduce_constraints: pol,
                    learn_depth_k: k,
                    var_order: order,
                    default_polarity: pol,
                    max_conflicts: Some(20_000),
                    trace: true,
                    ..SolverConfig::default()
                });
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn solutions_match_brute_force(p in arb_problem()) {
        for cfg in configs() {
            let sol = solve_pqe(&p, &cfg).expect("budget large enough");
            let scope = Scope::new(p.num_vars, &p.x_vars()).unwrap();
            prop_assert!(verify_pqe_solution(&scope, &p.f1_lits(), &p.f2_lits(), &sol.f1_star),
                "k={} {:?} pol={} F1*={:?}", cfg.learn_depth_k, cfg.var_order, cfg.default_polarity, sol.f1_star);
        }
    }

    #[test]
    fn every_emitted_dsequent_is_valid(p in arb_problem()) {
        let cfg = SolverConfig { trace: true, learn_depth_k: 1, ..SolverConfig::default() };
        let sol = solve_pqe(&p, &cfg).unwrap();
        let scope = Scope::new(p.num_vars, &p.x_vars()).unwrap();
        for e in &sol.emissions {
            let f = sol.formula_at(e);
            let h: Vec<_> = e.ds.constraint.iter().copied().collect();
            let parts = DSeqParts { conditional: &e.ds.cond, constraint: &h, target: e.ds.target };
            match verify_dsequent(&scope, &f, &parts) {
                Ok(ok) => prop_assert!(ok, "{}", e.ds.trace_line()),
                Err(_) => {}
            }
        }
    }
}
