use std::path::PathBuf;

use pqe::cli::{run, EXIT_INVALID, EXIT_LIMIT, EXIT_OK, EXIT_USAGE};

fn data(name: &str) -> String {
    format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pqe-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn call(args: &[&str]) -> (i32, String, String) {
    let mut argv = vec!["pqe".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(&argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn golden_solve_then_verify() {
    let (code, out, _) = call(&["solve", &data("golden.pqe")]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out, "s pqe 1\n3 0\n");
    let sol = scratch("golden.sol");
    std::fs::write(&sol, &out).unwrap();
    let (code, out, _) = call(&["verify", &data("golden.pqe"), sol.to_str().unwrap()]);
    assert_eq!((code, out.as_str()), (EXIT_OK, "VALID\n"));
}

#[test]
fn corrupted_solution_fails_verify() {
    let sol = scratch("bad.sol");
    std::fs::write(&sol, "s pqe 1\n-3 0\n").unwrap();
    let (code, out, _) = call(&["verify", &data("golden.pqe"), sol.to_str().unwrap()]);
    assert_eq!((code, out.as_str()), (EXIT_INVALID, "INVALID\n"));
}

#[test]
fn usage_and_parse_errors() {
    assert_eq!(call(&["solve"]).0, EXIT_USAGE);
    assert_eq!(call(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(call(&["solve", "/nonexistent/x.pqe"]).0, EXIT_USAGE);
    let bad = scratch("taut.pqe");
    std::fs::write(&bad, "p pqe 2 1 0\ne 1 0\n1 -1 0\n").unwrap();
    let (code, _, err) = call(&["solve", bad.to_str().unwrap()]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("error"));
    assert_eq!(call(&["--help"]).0, EXIT_OK);
}

#[test]
fn conflict_budget_maps_to_exit_three() {
    let f = scratch("budget.pqe");
    assert_eq!(call(&["gen", "circuit", "--inputs", "6", "--gates", "14", "--seed", "3", "-o", f.to_str().unwrap()]).0, EXIT_OK);
    let (code, out, err) = call(&["solve", f.to_str().unwrap(), "--max-conflicts", "0"]);
    assert_eq!(code, EXIT_LIMIT, "{out}{err}");
}

#[test]
fn solve_is_repeatable_and_no_learn_is_k_minus_one() {
    let f = scratch("rep.pqe");
    call(&["gen", "circuit", "--inputs", "5", "--gates", "10", "--seed", "8", "-o", f.to_str().unwrap()]);
    let f = f.to_str().unwrap();
    let a = call(&["solve", f, "--seed", "4", "--order", "activity"]);
    let b = call(&["solve", f, "--seed", "4", "--order", "activity"]);
    assert_eq!(a.1, b.1);
    let strip = |s: &str| s.lines().filter(|l| !l.starts_with("wall_time_us")).collect::<Vec<_>>().join("\n");
    let c = call(&["solve", f, "--no-learn", "--stats=kv"]);
    let d = call(&["solve", f, "--learn-k", "-1", "--stats=kv"]);
    assert_eq!(c.1, d.1);
    assert_eq!(strip(&c.2), strip(&d.2));
    assert!(c.2.contains("ds_generated="));
}

#[test]
fn gen_writes_manifest_line() {
    let f = scratch("m.pqe");
    let (code, out, _) = call(&["gen", "circuit", "--inputs", "4", "--gates", "6", "--seed", "2", "-o", f.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let fields: Vec<&str> = out.split_whitespace().collect();
    assert_eq!(&fields[..5], &["c2", "2", "4", "6", "det"]);
    let s = scratch("s.pqe");
    assert_eq!(call(&["gen", "satred", "--seed", "5", "-o", s.to_str().unwrap()]).0, EXIT_OK);
    assert_eq!(call(&["solve", s.to_str().unwrap()]).0, EXIT_OK);
}

#[test]
fn compare_reports_inapplicable_on_nondeterministic_instance() {
    // x1 feeds g2 = ¬x1 with only one of the two NOT clauses kept, so
    // x1 = 1 can give either output.
    let f = scratch("nondet.pqe");
    std::fs::write(&f, "p pqe 2 1 1\ne 2 0\n-2 0\n1 2 0\n").unwrap();
    let (code, out, _) = call(&["compare", f.to_str().unwrap(), "--methods", "pqe,m1,m2"]);
    assert_eq!(code, EXIT_OK);
    let m2 = out.lines().find(|l| l.starts_with("m2")).unwrap();
    assert!(m2.contains("inapplicable"), "{out}");
    assert!(out.lines().any(|l| l.starts_with("pqe")));
}

#[test]
fn selftest_passes() {
    let (code, out, _) = call(&["selftest"]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(out.lines().all(|l| l.starts_with("PASS")));
}
