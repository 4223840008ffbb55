//! Command-line front end. `run` returns the process exit code:
//! 0 success, 1 verification failure, 2 usage or parse error,
//! 3 resource limit.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand, ValueEnum};

use crate::formula::EcnfProblem;
use crate::harness::{
    drop_clauses, gen_circuit_instance, method1_blocking, method2_corelift, random_assignment,
    random_kcnf, random_problem, sat_reduction_instance, InstanceMeta, ManifestEntry, Method2Outcome, PqeInstance,
    DEFAULT_CLAUSE_BUDGET,
};
use crate::io::{parse_pqe, parse_solution, write_pqe, write_solution};
use crate::oracle::{verify_pqe_solution, Scope};
use crate::solver::{solve_pqe, SolveError, SolverConfig, VarOrder};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_LIMIT: i32 = 3;

pub const GOLDEN: &str = include_str!("../tests/data/golden.pqe");

#[derive(Parser, Debug)]
#[command(name = "pqe", version, about = "Partial quantifier elimination with D-sequents")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Solve a PQE instance and print F₁*.
    Solve(SolveArgs),
    /// Check a solution against an instance by enumeration.
    Verify { file: PathBuf, solution: PathBuf },
    /// Generate a benchmark instance.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Run PQE and the SAT-based baselines on a circuit instance.
    Compare {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "pqe,m1,m2")]
        methods: Vec<Method>,
        #[arg(long, default_value_t = DEFAULT_CLAUSE_BUDGET)]
        budget: usize,
    },
    /// Golden instance plus a small randomized oracle check.
    Selftest,
}

#[derive(clap::Args, Debug)]
struct SolveArgs {
    file: PathBuf,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    learn_k: i32,
    /// Same as --learn-k -1.
    #[arg(long)]
    no_learn: bool,
    #[arg(long, value_enum, default_value_t = Order::Static)]
    order: Order,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    max_conflicts: Option<u64>,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    max_time: Option<f64>,
    #[arg(long)]
    reduce_constraints: bool,
    /// Print statistics to stderr; `--stats=kv` for key=value lines.
    #[arg(long, value_enum, num_args = 0..=1, require_equals = true, default_missing_value = "text")]
    stats: Option<StatsFormat>,
    /// Print every D-sequent built to stderr.
    #[arg(long)]
    trace: bool,
}

#[derive(Subcommand, Debug)]
enum GenKind {
    /// Circuit instance: F₁ = {C_z}, F₂ = Tseitin clauses.
    Circuit {
        #[arg(long)]
        inputs: u32,
        #[arg(long)]
        gates: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fraction of F₂ to drop, making the circuit nondeterministic.
        #[arg(long)]
        drop: Option<f64>,
        #[arg(short = 'o')]
        out: PathBuf,
    },
    /// SAT as PQE: random 3-CNF split by a random assignment.
    Satred {
        #[arg(long, default_value_t = 8)]
        vars: u32,
        #[arg(long, default_value_t = 34)]
        clauses: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short = 'o')]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Order {
    Static,
    Activity,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StatsFormat {
    Text,
    Kv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Pqe,
    M1,
    M2,
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

/// Runs one invocation. `argv[0]` is the program name.
pub fn run(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    let mut io = Io { out, err };
    let r = match cli.cmd {
        Cmd::Solve(a) => solve(&a, &mut io),
        Cmd::Verify { file, solution } => verify(&file, &solution, &mut io),
        Cmd::Gen { kind } => gen(kind, &mut io),
        Cmd::Compare { file, methods, budget } => compare(&file, &methods, budget, &mut io),
        Cmd::Selftest => selftest(&mut io),
    };
    match r {
        Ok(code) => code,
        Err((code, msg)) => {
            let _ = writeln!(io.err, "error: {msg}");
            code
        }
    }
}

type CmdResult = Result<i32, (i32, String)>;

fn usage(msg: impl ToString) -> (i32, String) {
    (EXIT_USAGE, msg.to_string())
}

fn read(path: &Path) -> Result<String, (i32, String)> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<EcnfProblem, (i32, String)> {
    parse_pqe(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), (i32, String)> {
    fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn solve(a: &SolveArgs, io: &mut Io<'_>) -> CmdResult {
    let p = load(&a.file)?;
    let cfg = SolverConfig {
        learn_depth_k: if a.no_learn { -1 } else { a.learn_k },
        var_order: match a.order {
            Order::Static => VarOrder::StaticIndex,
            Order::Activity => VarOrder::ActivityBased,
        },
        seed: a.seed,
        max_conflicts: a.max_conflicts,
        max_time: a.max_time.map(Duration::from_secs_f64),
        reduce_constraints: a.reduce_constraints,
        trace: a.trace,
        ..SolverConfig::default()
    };
    let sol = match solve_pqe(&p, &cfg) {
        Ok(s) => s,
        Err(SolveError::ResourceLimit(m)) => return Err((EXIT_LIMIT, m)),
    };
    let _ = io.out.write_all(write_solution(&sol.f1_star).as_bytes());
    if a.trace {
        let _ = io.err.write_all(sol.trace_text().as_bytes());
    }
    match a.stats {
        Some(StatsFormat::Kv) => {
            let _ = io.err.write_all(sol.stats.to_kv().as_bytes());
        }
        Some(StatsFormat::Text) => {
            for line in sol.stats.to_kv().lines() {
                let (k, v) = line.split_once('=').unwrap();
                let _ = writeln!(io.err, "c {k:<16} {v}");
            }
        }
        None => {}
    }
    Ok(EXIT_OK)
}

fn verify(file: &Path, solution: &Path, io: &mut Io<'_>) -> CmdResult {
    let p = load(file)?;
    let star = parse_solution(&read(solution)?).map_err(|e| usage(format!("{}: {e}", solution.display())))?;
    let scope = Scope::new(p.num_vars, &p.x_vars()).map_err(usage)?;
    if verify_pqe_solution(&scope, &p.f1_lits(), &p.f2_lits(), &star) {
        let _ = writeln!(io.out, "VALID");
        Ok(EXIT_OK)
    } else {
        let _ = writeln!(io.out, "INVALID");
        Ok(EXIT_INVALID)
    }
}

fn gen(kind: GenKind, io: &mut Io<'_>) -> CmdResult {
    match kind {
        GenKind::Circuit {
            inputs,
            gates,
            seed,
            drop,
            out,
        } => {
            if inputs == 0 || gates == 0 {
                return Err(usage("--inputs and --gates must be at least 1"));
            }
            let (_, mut inst) = gen_circuit_instance(seed, inputs, gates);
            if let Some(f) = drop {
                if !(0.0..1.0).contains(&f) {
                    return Err(usage("--drop must be in [0, 1)"));
                }
                inst = drop_clauses(&inst, f, seed);
            }
            write_file(&out, &write_pqe(&inst.problem))?;
            let entry = ManifestEntry {
                id: format!("c{seed}"),
                seed,
                inputs,
                gates,
                deterministic: inst.meta.deterministic,
                file: out.display().to_string(),
            };
            let _ = writeln!(io.out, "{entry}");
        }
        GenKind::Satred {
            vars,
            clauses,
            seed,
            out,
        } => {
            if vars < 3 {
                return Err(usage("--vars must be at least 3"));
            }
            let cnf = random_kcnf(seed, vars, clauses, 3);
            let inst = sat_reduction_instance(vars, &cnf, &random_assignment(seed ^ 1, vars));
            write_file(&out, &write_pqe(&inst.problem))?;
        }
    }
    Ok(EXIT_OK)
}

fn compare(file: &Path, methods: &[Method], budget: usize, io: &mut Io<'_>) -> CmdResult {
    let p = load(file)?;
    if p.f1.len() != 1 {
        return Err(usage("compare needs a circuit instance with a single F1 clause"));
    }
    let inst = PqeInstance {
        problem: p,
        meta: InstanceMeta {
            seed: 0,
            z: Vec::new(),
            deterministic: true,
        },
    };
    let _ = writeln!(io.out, "{:<8} {:>9} {:>8} {:>10}", "method", "shortest", "clauses", "time_ms");
    for &m in methods {
        let t = Instant::now();
        let row = match m {
            Method::Pqe => {
                let cfg = SolverConfig::default();
                match solve_pqe(&inst.problem, &cfg) {
                    Ok(s) => Some(s.f1_star),
                    Err(SolveError::ResourceLimit(msg)) => return Err((EXIT_LIMIT, msg)),
                }
            }
            Method::M1 => Some(method1_blocking(&inst, budget).g),
            Method::M2 => match method2_corelift(&inst, budget) {
                Method2Outcome::Done(r) => Some(r.g),
                Method2Outcome::Inapplicable => None,
            },
        };
        let ms = t.elapsed().as_secs_f64() * 1e3;
        let name = format!("{m:?}").to_lowercase();
        match row {
            Some(g) => {
                let shortest = g.iter().map(|c| c.len()).min().map_or("-".into(), |n| n.to_string());
                let _ = writeln!(io.out, "{name:<8} {shortest:>9} {:>8} {ms:>10.2}", g.len());
            }
            None => {
                let _ = writeln!(io.out, "{name:<8} {:>9} {:>8} {ms:>10.2}", "inapplicable", "-");
            }
        }
    }
    Ok(EXIT_OK)
}

fn selftest(io: &mut Io<'_>) -> CmdResult {
    let mut ok = true;
    let p = parse_pqe(GOLDEN).expect("golden file parses");
    let sol = solve_pqe(&p, &SolverConfig::default()).expect("no budget");
    let scope = Scope::new(p.num_vars, &p.x_vars()).expect("tiny");
    let golden = verify_pqe_solution(&scope, &p.f1_lits(), &p.f2_lits(), &sol.f1_star);
    let _ = writeln!(io.out, "{} golden instance", if golden { "PASS" } else { "FAIL" });
    ok &= golden;
    let mut bad = 0;
    for seed in 0..40 {
        let p = random_problem(seed, 6, 4, 3, 8);
        let s = solve_pqe(&p, &SolverConfig::default()).expect("no budget");
        let scope = Scope::new(p.num_vars, &p.x_vars()).expect("small");
        if !verify_pqe_solution(&scope, &p.f1_lits(), &p.f2_lits(), &s.f1_star) {
            bad += 1;
        }
    }
    let _ = writeln!(io.out, "{} random smoke ({bad} of 40 wrong)", if bad == 0 { "PASS" } else { "FAIL" });
    ok &= bad == 0;
    Ok(if ok { EXIT_OK } else { EXIT_INVALID })
}
