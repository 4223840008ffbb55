//! Text formats. Instances:
//!
//! ```text
//! p pqe <max_var> <n_f1> <n_f2>
//! e <x-var>* 0
//! <n_f1 clause lines of F1>
//! <n_f2 clause lines of F2>
//! ```
//!
//! Solutions: `s pqe <n>` followed by n clause lines. Lines starting with
//! `c` are comments anywhere.

use thiserror::Error;

use crate::formula::{canonicalize, EcnfProblem, FormulaError, Lit, Var};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IoError {
    #[error("line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("line {line}: {kind}")]
    Semantic { line: usize, kind: SemanticError },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SemanticError {
    #[error("variable {0} quantified twice")]
    DuplicateQuantifier(u32),
    #[error("variable {0} exceeds the declared maximum {1}")]
    VarOutOfRange(u32, u32),
    #[error("clause contains both polarities of variable {0}")]
    Tautology(u32),
    #[error("expected {expected} clauses, found {found}")]
    ClauseCount { expected: usize, found: usize },
}

struct Line<'a> {
    no: usize,
    toks: Vec<(usize, &'a str)>,
}

fn content_lines(text: &str) -> Vec<Line<'_>> {
    text.lines()
        .enumerate()
        .filter_map(|(i, l)| {
            let t = l.trim_start();
            if t.is_empty() || t.starts_with('c') {
                return None;
            }
            let mut toks = Vec::new();
            let mut start = None;
            for (j, ch) in l.char_indices().chain(std::iter::once((l.len(), ' '))) {
                match (ch.is_whitespace(), start) {
                    (false, None) => start = Some(j),
                    (true, Some(s)) => {
                        toks.push((s + 1, &l[s..j]));
                        start = None;
                    }
                    _ => {}
                }
            }
            Some(Line { no: i + 1, toks })
        })
        .collect()
}

fn syntax(line: usize, col: usize, msg: impl Into<String>) -> IoError {
    IoError::Syntax {
        line,
        col,
        msg: msg.into(),
    }
}

fn number<T: std::str::FromStr>(line: &Line<'_>, k: usize, what: &str) -> Result<T, IoError> {
    let end_col = line.toks.last().map_or(1, |(c, t)| c + t.len());
    let &(col, tok) = line
        .toks
        .get(k)
        .ok_or_else(|| syntax(line.no, end_col, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| syntax(line.no, col, format!("expected {what}, found `{tok}`")))
}

/// Parses `lit* 0` with the terminator last on the line.
fn clause(line: &Line<'_>, from: usize, max_var: u32) -> Result<Vec<Lit>, IoError> {
    let mut lits = Vec::new();
    let mut closed = false;
    for k in from..line.toks.len() {
        let col = line.toks[k].0;
        if closed {
            return Err(syntax(line.no, col, "text after terminating 0"));
        }
        let x: i64 = number(line, k, "literal")?;
        if x == 0 {
            closed = true;
            continue;
        }
        let v = x.unsigned_abs();
        if v > max_var as u64 {
            return Err(IoError::Semantic {
                line: line.no,
                kind: SemanticError::VarOutOfRange(v.min(u32::MAX as u64) as u32, max_var),
            });
        }
        lits.push(Lit::from_dimacs(x as i32));
    }
    if !closed {
        let end = line.toks.last().map_or(1, |(c, t)| c + t.len());
        return Err(syntax(line.no, end, "missing terminating 0"));
    }
    canonicalize(lits).map_err(|e| match e {
        FormulaError::Tautology(v) => IoError::Semantic {
            line: line.no,
            kind: SemanticError::Tautology(v),
        },
        _ => syntax(line.no, 1, e.to_string()),
    })
}

fn expect_word(line: &Line<'_>, k: usize, word: &str) -> Result<(), IoError> {
    match line.toks.get(k) {
        Some(&(_, t)) if t == word => Ok(()),
        Some(&(c, t)) => Err(syntax(line.no, c, format!("expected `{word}`, found `{t}`"))),
        None => Err(syntax(line.no, 1, format!("expected `{word}`"))),
    }
}

pub fn parse_pqe(text: &str) -> Result<EcnfProblem, IoError> {
    let lines = content_lines(text);
    let last_no = text.lines().count().max(1);
    let header = lines.first().ok_or_else(|| syntax(1, 1, "missing header"))?;
    expect_word(header, 0, "p")?;
    expect_word(header, 1, "pqe")?;
    let max_var: u32 = number(header, 2, "variable count")?;
    let n1: usize = number(header, 3, "F1 clause count")?;
    let n2: usize = number(header, 4, "F2 clause count")?;
    if let Some(&(c, _)) = header.toks.get(5) {
        return Err(syntax(header.no, c, "unexpected token in header"));
    }
    let quant = lines
        .get(1)
        .ok_or_else(|| syntax(last_no, 1, "missing quantifier line"))?;
    expect_word(quant, 0, "e")?;
    let x_lits = clause(quant, 1, max_var).map_err(|e| match e {
        IoError::Semantic {
            kind: SemanticError::Tautology(v),
            line,
        } => IoError::Semantic {
            line,
            kind: SemanticError::DuplicateQuantifier(v),
        },
        e => e,
    })?;
    let mut x: Vec<Var> = Vec::new();
    for (k, l) in x_lits.iter().enumerate() {
        if !l.is_positive() {
            return Err(syntax(quant.no, quant.toks[k + 1].0, "negative variable in quantifier line"));
        }
        x.push(l.var());
    }
    // canonicalize dedups silently; catch repeats here.
    let listed = quant.toks.len() - 2;
    if listed != x.len() {
        let mut seen = std::collections::HashSet::new();
        for &(_, t) in &quant.toks[1..quant.toks.len() - 1] {
            let v: i64 = t.parse().unwrap_or(0);
            if !seen.insert(v.unsigned_abs()) {
                return Err(IoError::Semantic {
                    line: quant.no,
                    kind: SemanticError::DuplicateQuantifier(v.unsigned_abs() as u32),
                });
            }
        }
    }
    let body = &lines[2..];
    if body.len() != n1 + n2 {
        return Err(IoError::Semantic {
            line: body.last().map_or(quant.no, |l| l.no),
            kind: SemanticError::ClauseCount {
                expected: n1 + n2,
                found: body.len(),
            },
        });
    }
    let mut p = EcnfProblem::new(max_var, &x);
    for (i, line) in body.iter().enumerate() {
        let c = clause(line, 0, max_var)?;
        if i < n1 {
            p.add_f1(c);
        } else {
            p.add_f2(c);
        }
    }
    Ok(p)
}

fn clause_line(c: &[Lit]) -> String {
    let mut s = String::new();
    for l in c {
        s.push_str(&l.to_dimacs().to_string());
        s.push(' ');
    }
    s.push_str("0\n");
    s
}

pub fn write_pqe(p: &EcnfProblem) -> String {
    let mut s = format!("p pqe {} {} {}\ne", p.num_vars, p.f1.len(), p.f2.len());
    for v in p.x_vars() {
        s.push_str(&format!(" {}", v.0));
    }
    s.push_str(" 0\n");
    for c in p.f1_lits().iter().chain(p.f2_lits().iter()) {
        s.push_str(&clause_line(c));
    }
    s
}

pub fn write_solution(f1_star: &[Vec<Lit>]) -> String {
    let mut s = format!("s pqe {}\n", f1_star.len());
    for c in f1_star {
        s.push_str(&clause_line(c));
    }
    s
}

pub fn parse_solution(text: &str) -> Result<Vec<Vec<Lit>>, IoError> {
    let lines = content_lines(text);
    let header = lines.first().ok_or_else(|| syntax(1, 1, "missing header"))?;
    expect_word(header, 0, "s")?;
    expect_word(header, 1, "pqe")?;
    let n: usize = number(header, 2, "clause count")?;
    let body = &lines[1..];
    if body.len() != n {
        return Err(IoError::Semantic {
            line: body.last().map_or(header.no, |l| l.no),
            kind: SemanticError::ClauseCount {
                expected: n,
                found: body.len(),
            },
        });
    }
    body.iter().map(|l| clause(l, 0, u32::MAX >> 2)).collect()
}
