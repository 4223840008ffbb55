//! Partial quantifier elimination for ∃X[F₁ ∧ F₂] in CNF, driven by
//! D-sequents, with an exhaustive checker and benchmark generators.

pub mod cli;
pub mod dsequent;
pub mod formula;
pub mod harness;
pub mod io;
pub mod oracle;
pub mod satcore;
pub mod solver;
