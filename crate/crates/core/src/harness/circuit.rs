//! Random combinational circuits, simulation and Tseitin encoding.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::formula::{Lit, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateOp {
    And,
    Or,
    Not,
    Xor,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gate {
    pub out: Var,
    pub op: GateOp,
    pub ins: Vec<Var>,
}

/// Inputs are variables `1..=n`, gate outputs follow in gate order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    pub inputs: Vec<Var>,
    pub gates: Vec<Gate>,
    pub outputs: Vec<Var>,
}

impl Circuit {
    pub fn num_vars(&self) -> u32 {
        (self.inputs.len() + self.gates.len()) as u32
    }

    /// Values of every variable, indexed by `Var::index`.
    pub fn simulate(&self, x: &[bool]) -> Vec<bool> {
        let mut val = vec![false; self.num_vars() as usize + 1];
        for (v, &b) in self.inputs.iter().zip(x) {
            val[v.index()] = b;
        }
        for g in &self.gates {
            let mut ins = g.ins.iter().map(|v| val[v.index()]);
            val[g.out.index()] = match g.op {
                GateOp::And => ins.all(|b| b),
                GateOp::Or => ins.any(|b| b),
                GateOp::Not => !ins.next().unwrap(),
                GateOp::Xor => ins.fold(false, |a, b| a ^ b),
            };
        }
        val
    }

    pub fn eval(&self, x: &[bool]) -> Vec<bool> {
        let val = self.simulate(x);
        self.outputs.iter().map(|v| val[v.index()]).collect()
    }

    pub fn tseitin(&self) -> Vec<Vec<Lit>> {
        let mut out = Vec::new();
        for g in &self.gates {
            let o = Lit::new(g.out, true);
            let ins: Vec<Lit> = g.ins.iter().map(|&v| Lit::new(v, true)).collect();
            match g.op {
                GateOp::And => {
                    for &a in &ins {
                        out.push(vec![!o, a]);
                    }
                    let mut c: Vec<Lit> = ins.iter().map(|&a| !a).collect();
                    c.push(o);
                    out.push(c);
                }
                GateOp::Or => {
                    for &a in &ins {
                        out.push(vec![o, !a]);
                    }
                    let mut c = ins.clone();
                    c.push(!o);
                    out.push(c);
                }
                GateOp::Not => {
                    out.push(vec![o, ins[0]]);
                    out.push(vec![!o, !ins[0]]);
                }
                GateOp::Xor => {
                    let (a, b) = (ins[0], ins[1]);
                    out.push(vec![!o, a, b]);
                    out.push(vec![!o, !a, !b]);
                    out.push(vec![o, !a, b]);
                    out.push(vec![o, a, !b]);
                }
            }
        }
        out
    }
}

/// Gates draw their fan-in from earlier signals, preferring inputs not yet
/// used. Outputs are the gates nobody reads. The last gate takes any input
/// still unused, so every input feeds some gate.
pub fn gen_circuit(seed: u64, n_inputs: u32, n_gates: u32) -> Circuit {
    assert!(n_inputs >= 1 && n_gates >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs: Vec<Var> = (1..=n_inputs).map(Var).collect();
    let mut unused: Vec<Var> = inputs.clone();
    unused.shuffle(&mut rng);
    let mut read = vec![false; (n_inputs + n_gates) as usize + 1];
    let mut gates = Vec::new();
    for i in 0..n_gates {
        let out = Var(n_inputs + 1 + i);
        let signals = n_inputs + i;
        let op = if signals == 1 {
            GateOp::Not
        } else {
            [GateOp::And, GateOp::Or, GateOp::Not, GateOp::Xor][rng.gen_range(0..4)]
        };
        let arity = match op {
            GateOp::Not => 1,
            _ => 2,
        };
        let mut ins: Vec<Var> = Vec::new();
        while ins.len() < arity {
            let v = match unused.pop() {
                Some(v) => v,
                None => Var(rng.gen_range(1..=signals)),
            };
            if !ins.contains(&v) {
                ins.push(v);
            }
        }
        if i + 1 == n_gates && !unused.is_empty() {
            let op = if op == GateOp::Or { GateOp::Or } else { GateOp::And };
            ins.append(&mut unused);
            ins.sort();
            ins.dedup();
            gates.push(Gate { out, op, ins });
        } else {
            gates.push(Gate { out, op, ins });
        }
        for v in &gates.last().unwrap().ins {
            read[v.index()] = true;
        }
    }
    let outputs = gates.iter().map(|g| g.out).filter(|v| !read[v.index()]).collect();
    Circuit {
        inputs,
        gates,
        outputs,
    }
}
