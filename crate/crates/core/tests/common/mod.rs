//! Randomized closure checks for the D-sequent rules. Parents are drawn at
//! random and kept only when the oracle accepts them; the rule's result
//! must then pass the oracle too.

#![allow(dead_code)]

pub mod worked;

use std::collections::BTreeSet;

use pqe::dsequent::{join, relax_order, strengthen_by_satisfied, substitute, DSequent, Rule};
use pqe::formula::{Assignment, ClauseId, EcnfProblem, Lit, Var};
use pqe::harness::random_problem;
use pqe::oracle::{verify_dsequent, DSeqParts, Scope};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalcRule {
    Join,
    Substitute,
    Strengthen,
    Relax,
}

pub struct Closure {
    pub applications: usize,
    pub failures: Vec<String>,
}

struct Ctx {
    p: EcnfProblem,
    scope: Scope,
    formula: Vec<(ClauseId, Vec<Lit>)>,
}

impl Ctx {
    fn new(seed: u64) -> Ctx {
        let p = random_problem(seed, 3, 2, 2, 4);
        let scope = Scope::new(p.num_vars, &p.x_vars()).unwrap();
        let formula = p.db.present_ids().map(|id| (id, p.db.lits(id).to_vec())).collect();
        Ctx { p, scope, formula }
    }

    fn ids(&self) -> Vec<ClauseId> {
        self.formula.iter().map(|(id, _)| *id).collect()
    }

    fn valid(&self, s: &DSequent) -> bool {
        let h: Vec<ClauseId> = s.constraint.iter().copied().collect();
        let parts = DSeqParts {
            conditional: &s.cond,
            constraint: &h,
            target: s.target,
        };
        verify_dsequent(&self.scope, &self.formula, &parts).unwrap()
    }

    /// `s` with its conditional widened to `q`. Redundancy need not carry
    /// over to a smaller subspace once X variables get assigned, so parents
    /// are required to hold in the subspace of the result.
    fn holds_at(&self, s: &DSequent, q: &Assignment) -> bool {
        self.valid(&DSequent::new(q.clone(), s.constraint.clone(), s.target, s.rule))
    }

    fn random_cond(&self, rng: &mut ChaCha8Rng, base: &Assignment, extra: std::ops::RangeInclusive<usize>) -> Assignment {
        let extra = rng.gen_range(extra);
        let mut q = base.clone();
        let mut vars: Vec<u32> = (1..=self.p.num_vars).filter(|&v| base.get(Var(v)).is_none()).collect();
        vars.shuffle(rng);
        for &v in vars.iter().take(extra) {
            q.set(Var(v), rng.gen());
        }
        q
    }

    /// A valid D-sequent for `target` under `q` whose constraint contains
    /// `must` and avoids `avoid`, or None after a few tries.
    fn find(
        &self,
        rng: &mut ChaCha8Rng,
        q: &Assignment,
        target: ClauseId,
        must: &[ClauseId],
        avoid: &[ClauseId],
    ) -> Option<DSequent> {
        let pool: Vec<ClauseId> = self
            .ids()
            .into_iter()
            .filter(|&c| c != target && !avoid.contains(&c))
            .collect();
        if must.iter().any(|m| !pool.contains(m)) {
            return None;
        }
        for t in 0..8 {
            let mut h: BTreeSet<ClauseId> = must.iter().copied().collect();
            for &c in &pool {
                if t == 0 || rng.gen_bool(0.5) {
                    h.insert(c);
                }
            }
            let s = DSequent::new(q.clone(), h, target, Rule::Atomic1);
            if self.valid(&s) {
                return Some(s);
            }
        }
        None
    }
}

fn attempt(rule: CalcRule, ctx: &Ctx, rng: &mut ChaCha8Rng) -> Option<(String, DSequent)> {
    let ids = ctx.ids();
    let target = *ids.choose(rng)?;
    match rule {
        CalcRule::Join => {
            let v = Var(rng.gen_range(1..=ctx.p.num_vars));
            let mut base = Assignment::new();
            base.set(v, false);
            let q1 = ctx.random_cond(rng, &base, 0..=2);
            let mut r = q1.clone();
            r.unset(v);
            r.set(v, true);
            let mut q2 = ctx.random_cond(rng, &r, 0..=1);
            for (u, _) in q1.iter() {
                if u != v && rng.gen_bool(0.5) {
                    q2.unset(u);
                }
            }
            let s1 = ctx.find(rng, &q1, target, &[], &[])?;
            let s2 = ctx.find(rng, &q2, target, &[], &[])?;
            let out = join(&s1, &s2, v).ok()?;
            let side = |b: bool| {
                let mut q = out.cond.clone();
                q.set(v, b);
                q
            };
            if !ctx.holds_at(&s1, &side(false)) || !ctx.holds_at(&s2, &side(true)) {
                return None;
            }
            Some((format!("join {s1:?} {s2:?}"), out))
        }
        CalcRule::Substitute => {
            let other = *ids.iter().filter(|&&c| c != target).collect::<Vec<_>>().choose(rng)?;
            let q1 = ctx.random_cond(rng, &Assignment::new(), 0..=2);
            let s1 = ctx.find(rng, &q1, target, &[*other], &[])?;
            let q2 = ctx.random_cond(rng, &q1, 0..=1);
            let q2 = Assignment::from_lits(
                &q2.lits().into_iter().filter(|_| rng.gen_bool(0.7)).collect::<Vec<_>>(),
            );
            let s2 = ctx.find(rng, &q2, *other, &[], &[target])?;
            let out = substitute(&s1, &s2).ok()?;
            if !ctx.holds_at(&s1, &out.cond) || !ctx.holds_at(&s2, &out.cond) {
                return None;
            }
            Some((format!("substitute {s1:?} {s2:?}"), out))
        }
        CalcRule::Strengthen => {
            let q = ctx.random_cond(rng, &Assignment::new(), 0..=2);
            let s = ctx.find(rng, &q, target, &[], &[])?;
            let r = ctx.random_cond(rng, &q, 1..=2);
            let out = strengthen_by_satisfied(&s, &r, &ctx.p.db).ok()?;
            if !ctx.holds_at(&s, &r) {
                return None;
            }
            Some((format!("strengthen {s:?} {r:?}"), out))
        }
        CalcRule::Relax => {
            let drop = *ids.iter().filter(|&&c| c != target).collect::<Vec<_>>().choose(rng)?;
            let q = ctx.random_cond(rng, &Assignment::new(), 0..=2);
            let s = ctx.find(rng, &q, target, &[*drop], &[])?;
            let outside: Vec<ClauseId> = ids
                .iter()
                .copied()
                .filter(|c| !s.constraint.contains(c) || *c == target)
                .collect();
            let p = ctx.find(rng, &q, *drop, &[], &outside)?;
            let out = relax_order(&s, *drop, &[p.clone()]).ok()?;
            if !ctx.holds_at(&s, &out.cond) || !ctx.holds_at(&p, &out.cond) {
                return None;
            }
            Some((format!("relax {s:?} drop {drop} via {p:?}"), out))
        }
    }
}

/// Runs until `n` rule applications on valid parents have been checked.
pub fn closure_run(rule: CalcRule, n: usize, seed: u64) -> Closure {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut res = Closure {
        applications: 0,
        failures: Vec::new(),
    };
    let mut inst = 0u64;
    while res.applications < n && inst < 200 * n as u64 {
        let ctx = Ctx::new(seed.wrapping_mul(1_000_003).wrapping_add(inst));
        inst += 1;
        for _ in 0..4 {
            if res.applications == n {
                break;
            }
            if let Some((what, out)) = attempt(rule, &ctx, &mut rng) {
                res.applications += 1;
                if !ctx.valid(&out) {
                    res.failures.push(format!("{what} -> {out:?}"));
                }
            }
        }
    }
    res
}
