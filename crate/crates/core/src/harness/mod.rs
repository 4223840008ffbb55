//! Benchmark generation and the SAT-based baselines.

mod baseline;
mod circuit;

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::formula::{canonicalize, Assignment, EcnfProblem, Lit, Var};

pub use baseline::{blocked_inputs, method1_blocking, method2_corelift, BaselineRun, Method2Outcome};
pub use circuit::{gen_circuit, Circuit, Gate, GateOp};

pub const DEFAULT_CLAUSE_BUDGET: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HarnessError {
    #[error("bad manifest line: {0}")]
    Manifest(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceMeta {
    pub seed: u64,
    /// Output values, in `Circuit::outputs` order. Empty for SAT-reduction
    /// instances.
    pub z: Vec<bool>,
    pub deterministic: bool,
}

#[derive(Debug, Clone)]
pub struct PqeInstance {
    pub problem: EcnfProblem,
    pub meta: InstanceMeta,
}

impl PqeInstance {
    /// Unit clauses fixing the outputs to z⃗: the negation of C_z.
    pub fn output_units(&self) -> Vec<Vec<Lit>> {
        self.problem.f1_lits()[0].iter().map(|&l| vec![!l]).collect()
    }

    /// The free variables, which are the circuit inputs.
    pub fn inputs(&self) -> Vec<Var> {
        self.problem.y_vars()
    }
}

/// F₁ = {C_z}, F₂ = the Tseitin clauses. Gate variables are quantified and
/// the inputs stay free.
pub fn circuit_to_pqe(c: &Circuit, z: &[bool], seed: u64) -> PqeInstance {
    assert_eq!(z.len(), c.outputs.len());
    let gates: Vec<Var> = c.gates.iter().map(|g| g.out).collect();
    let mut p = EcnfProblem::new(c.num_vars(), &gates);
    let cz = c.outputs.iter().zip(z).map(|(&v, &b)| Lit::new(v, !b)).collect();
    p.add_f1(canonicalize(cz).expect("distinct outputs"));
    for cl in c.tseitin() {
        p.add_f2(canonicalize(cl).expect("gate inputs are distinct"));
    }
    PqeInstance {
        problem: p,
        meta: InstanceMeta {
            seed,
            z: z.to_vec(),
            deterministic: true,
        },
    }
}

/// A circuit and an output vector it can actually produce: the outputs of a
/// pseudorandom input.
pub fn gen_circuit_instance(seed: u64, n_inputs: u32, n_gates: u32) -> (Circuit, PqeInstance) {
    let c = gen_circuit(seed, n_inputs, n_gates);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let x: Vec<bool> = (0..n_inputs).map(|_| rng.gen()).collect();
    let z = c.eval(&x);
    let inst = circuit_to_pqe(&c, &z, seed);
    (c, inst)
}

/// Removes ⌊fraction·|F₂|⌋ clauses of F₂ chosen by `seed`.
pub fn drop_clauses(inst: &PqeInstance, fraction: f64, seed: u64) -> PqeInstance {
    assert!((0.0..1.0).contains(&fraction));
    let f2 = inst.problem.f2_lits();
    let k = (fraction * f2.len() as f64).floor() as usize;
    if k == 0 {
        return inst.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gone: Vec<usize> = sample(&mut rng, f2.len(), k).into_vec();
    let mut p = EcnfProblem::new(inst.problem.num_vars, &inst.problem.x_vars());
    for c in inst.problem.f1_lits() {
        p.add_f1(c);
    }
    for (i, c) in f2.into_iter().enumerate() {
        if !gone.contains(&i) {
            p.add_f2(c);
        }
    }
    PqeInstance {
        problem: p,
        meta: InstanceMeta {
            deterministic: false,
            ..inst.meta.clone()
        },
    }
}

/// Every variable quantified; clauses satisfied by `x` go to F₁, the rest to
/// F₂. F₁* comes out as ⊥ exactly when `cnf` is unsatisfiable.
pub fn sat_reduction_instance(num_vars: u32, cnf: &[Vec<Lit>], x: &Assignment) -> PqeInstance {
    let all: Vec<Var> = (1..=num_vars).map(Var).collect();
    let mut p = EcnfProblem::new(num_vars, &all);
    for c in cnf {
        if x.satisfies(c) {
            p.add_f1(c.clone());
        } else {
            p.add_f2(c.clone());
        }
    }
    PqeInstance {
        problem: p,
        meta: InstanceMeta {
            seed: 0,
            z: Vec::new(),
            deterministic: true,
        },
    }
}

/// Uniform random k-CNF over distinct variables per clause.
pub fn random_kcnf(seed: u64, num_vars: u32, n_clauses: usize, k: usize) -> Vec<Vec<Lit>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_clauses)
        .map(|_| {
            let mut c: Vec<Lit> = sample(&mut rng, num_vars as usize, k)
                .into_iter()
                .map(|i| Lit::new(Var(i as u32 + 1), rng.gen()))
                .collect();
            c.sort();
            c
        })
        .collect()
}

/// A random ECNF instance: X is `1..=nx`, Y follows. Clauses have one to
/// three distinct literals over all variables.
pub fn random_problem(seed: u64, nx: u32, ny: u32, n_f1: usize, n_f2: usize) -> EcnfProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = nx + ny;
    let x: Vec<Var> = (1..=nx).map(Var).collect();
    let mut p = EcnfProblem::new(n, &x);
    for i in 0..n_f1 + n_f2 {
        let w = rng.gen_range(1..=3.min(n as usize));
        let c: Vec<Lit> = sample(&mut rng, n as usize, w)
            .into_iter()
            .map(|v| Lit::new(Var(v as u32 + 1), rng.gen()))
            .collect();
        let c = canonicalize(c).expect("distinct variables");
        if i < n_f1 {
            p.add_f1(c);
        } else {
            p.add_f2(c);
        }
    }
    p
}

pub fn random_assignment(seed: u64, num_vars: u32) -> Assignment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = Assignment::new();
    for v in 1..=num_vars {
        a.set(Var(v), rng.gen());
    }
    a
}

/// One manifest line: `id seed inputs gates det|nondet file`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub id: String,
    pub seed: u64,
    pub inputs: u32,
    pub gates: u32,
    pub deterministic: bool,
    pub file: String,
}

impl fmt::Display for ManifestEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let det = if self.deterministic { "det" } else { "nondet" };
        write!(f, "{} {} {} {} {} {}", self.id, self.seed, self.inputs, self.gates, det, self.file)
    }
}

impl FromStr for ManifestEntry {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<ManifestEntry, HarnessError> {
        let bad = || HarnessError::Manifest(s.to_string());
        let t: Vec<&str> = s.split_whitespace().collect();
        if t.len() != 6 {
            return Err(bad());
        }
        let deterministic = match t[4] {
            "det" => true,
            "nondet" => false,
            _ => return Err(bad()),
        };
        Ok(ManifestEntry {
            id: t[0].to_string(),
            seed: t[1].parse().map_err(|_| bad())?,
            inputs: t[2].parse().map_err(|_| bad())?,
            gates: t[3].parse().map_err(|_| bad())?,
            deterministic,
            file: t[5].to_string(),
        })
    }
}
