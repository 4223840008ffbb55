//! The two SAT-based ways of computing G(X) for a circuit instance.

use crate::formula::{canonicalize, Assignment, Lit, Var};
use crate::satcore::{sat_solve, SatResult};

use super::PqeInstance;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaselineRun {
    pub g: Vec<Vec<Lit>>,
    /// False when the clause budget ran out first.
    pub complete: bool,
}

impl BaselineRun {
    pub fn shortest(&self) -> Option<usize> {
        self.g.iter().map(|c| c.len()).min()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Method2Outcome {
    Done(BaselineRun),
    /// Some input extends to both z⃗ and another output.
    Inapplicable,
}

fn base(inst: &PqeInstance) -> Vec<Vec<Lit>> {
    let mut cnf = inst.problem.f2_lits();
    cnf.extend(inst.output_units());
    cnf
}

fn input_lits(inputs: &[Var], m: &Assignment) -> Vec<Lit> {
    inputs
        .iter()
        .filter_map(|&v| m.get(v).map(|b| Lit::new(v, b)))
        .collect()
}

fn blocking(lits: &[Lit]) -> Vec<Lit> {
    canonicalize(lits.iter().map(|&l| !l).collect()).expect("consistent cube")
}

/// Repeatedly finds a solution of G ∧ F ∧ U_z, drops input literals while
/// the partial assignment still satisfies every clause, and blocks the
/// remaining input cube.
pub fn method1_blocking(inst: &PqeInstance, clause_budget: usize) -> BaselineRun {
    let inputs = inst.inputs();
    let cnf = base(inst);
    let mut g: Vec<Vec<Lit>> = Vec::new();
    loop {
        if g.len() >= clause_budget {
            return BaselineRun { g, complete: false };
        }
        let all: Vec<Vec<Lit>> = cnf.iter().chain(&g).cloned().collect();
        let m = match sat_solve(&all, &[]) {
            SatResult::Unsat(_) => return BaselineRun { g, complete: true },
            SatResult::Sat(m) => m,
        };
        let mut partial = m.clone();
        for l in input_lits(&inputs, &m) {
            partial.unset(l.var());
            if !all.iter().all(|c| partial.satisfies(c)) {
                partial.set(l.var(), l.is_positive());
            }
        }
        g.push(blocking(&input_lits(&inputs, &partial)));
    }
}

/// Like method 1, but the cube comes from the assumption core of
/// U_x ∧ F ∧ G ∧ C_z. A satisfiable R means the circuit is not
/// deterministic and the method gives up.
pub fn method2_corelift(inst: &PqeInstance, clause_budget: usize) -> Method2Outcome {
    let inputs = inst.inputs();
    let cnf = base(inst);
    let mut r = inst.problem.f2_lits();
    r.extend(inst.problem.f1_lits());
    let mut g: Vec<Vec<Lit>> = Vec::new();
    loop {
        if g.len() >= clause_budget {
            return Method2Outcome::Done(BaselineRun { g, complete: false });
        }
        let all: Vec<Vec<Lit>> = cnf.iter().chain(&g).cloned().collect();
        let m = match sat_solve(&all, &[]) {
            SatResult::Unsat(_) => return Method2Outcome::Done(BaselineRun { g, complete: true }),
            SatResult::Sat(m) => m,
        };
        let rg: Vec<Vec<Lit>> = r.iter().chain(&g).cloned().collect();
        match sat_solve(&rg, &input_lits(&inputs, &m)) {
            SatResult::Sat(_) => return Method2Outcome::Inapplicable,
            SatResult::Unsat(core) => g.push(blocking(&core)),
        }
    }
}

/// For each input vector (bit i of the index is input i), whether it
/// falsifies some clause of `g`.
pub fn blocked_inputs(inputs: &[Var], g: &[Vec<Lit>]) -> Vec<bool> {
    (0..1u64 << inputs.len())
        .map(|m| {
            let mut a = Assignment::new();
            for (i, &v) in inputs.iter().enumerate() {
                a.set(v, m >> i & 1 == 1);
            }
            g.iter().any(|c| c.iter().all(|&l| a.lit_value(l) == Some(false)))
        })
        .collect()
}
