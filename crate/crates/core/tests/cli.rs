//! End-to-end checks of the command-line interface: exit codes, file
//! round-trips, and the benchmark outputs.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_voisolve"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

#[test]
fn generate_solve_roundtrip_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let sat = dir.path().join("sat.csp");
    let out = run(&[
        "generate", "rb", "--vars", "8", "--values", "4", "--constraints", "10",
        "--nogoods", "5", "--seed", "3", "-o", sat.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{out:?}");
    assert!(sat.exists());

    let solved = run(&["solve", sat.to_str().unwrap(), "--heuristic", "vsc"]);
    assert_eq!(code(&solved), 0);
    let stdout = String::from_utf8(solved.stdout).unwrap();
    assert!(stdout.starts_with("SAT"));
    // assignment lines: `var value`
    assert!(stdout.lines().count() > 8);

    // unsatisfiable: X != Y over singletons
    let unsat = dir.path().join("unsat.csp");
    std::fs::write(&unsat, "csp 2\ndom 0 0\ndom 1 0\ncon 0 1 forbid 1 0 0\n").unwrap();
    let out = run(&["solve", unsat.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("UNSAT"));
}

#[test]
fn usage_and_parse_error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("x.csp");
    std::fs::write(&f, "csp 1\ndom 0 0\n").unwrap();

    assert_eq!(code(&run(&["solve", f.to_str().unwrap(), "--heuristic", "bogus"])), 64);
    assert_eq!(code(&run(&["frobnicate"])), 64);
    assert_eq!(code(&run(&["generate", "rb", "--vars", "3", "--seed", "1", "-o", "/tmp/x"])), 64);

    let bad = dir.path().join("bad.csp");
    std::fs::write(&bad, "this is not an instance\n").unwrap();
    assert_eq!(code(&run(&["solve", bad.to_str().unwrap()])), 65);

    assert_eq!(code(&run(&["solve", dir.path().join("missing.csp").to_str().unwrap()])), 66);
}

#[test]
fn deterministic_generation_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csp");
    let b = dir.path().join("b.csp");
    for f in [&a, &b] {
        let out = run(&[
            "generate", "sudoku", "--tile-rows", "2", "--tile-cols", "2", "--holes", "6",
            "--seed", "11", "-o", f.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn preset_generation() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("preset.csp");
    let out = run(&["generate", "rb", "--preset", "rb30", "--seed", "1", "-o", f.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&f).unwrap();
    assert!(text.starts_with("csp 30\n"));
    // 280 constraints with 220 nogoods each
    assert_eq!(text.lines().filter(|l| l.starts_with("con ")).count(), 280);
    assert!(text.lines().any(|l| l.starts_with("con ") && l.contains(" forbid 220 ")));
}

fn write_small_set(dir: &Path) -> Vec<String> {
    (1..=2u64)
        .map(|seed| {
            let f = dir.join(format!("i{seed}.csp"));
            let out = run(&[
                "generate", "rb", "--vars", "10", "--values", "5", "--constraints", "18",
                "--nogoods", "11", "--seed", &seed.to_string(), "-o", f.to_str().unwrap(),
            ]);
            assert_eq!(code(&out), 0);
            f.to_str().unwrap().to_string()
        })
        .collect()
}

#[test]
fn bench_writes_csv_and_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let files = write_small_set(dir.path());
    let csv_path = dir.path().join("out.csv");
    let jsonl_path = dir.path().join("out.jsonl");
    let mut args = vec!["bench"];
    args.extend(files.iter().map(|s| s.as_str()));
    args.extend(["--heuristics", "sc,vsc", "--repeat", "2", "--csv", csv_path.to_str().unwrap(), "--jsonl", jsonl_path.to_str().unwrap()]);
    let out = run(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.contains("sc") && table.contains("vsc"));

    let csv_text = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv_text.starts_with("instance,heuristic,gamma,seed,search_time,heuristic_time,backtracks,nodes,constraint_checks,sc_estimations,solved,timed_out"));
    assert_eq!(csv_text.lines().count(), 1 + 2 * 2 * 2);

    let jsonl = std::fs::read_to_string(&jsonl_path).unwrap();
    assert_eq!(jsonl.lines().count(), 8);
    for line in jsonl.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v.get("instance").is_some() && v.get("sc_estimations").is_some());
    }
}

#[test]
fn sweep_emits_normalized_rows() {
    let dir = tempfile::tempdir().unwrap();
    let files = write_small_set(dir.path());
    let csv_path = dir.path().join("sweep.csv");
    let mut args = vec!["sweep"];
    args.extend(files.iter().map(|s| s.as_str()));
    args.extend(["--gammas", "0,1e6", "--csv", csv_path.to_str().unwrap()]);
    let out = run(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("heuristic,gamma,mean_search_time,norm_search_time"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3); // sc baseline + two gammas
    // gamma=0 row reproduces the baseline estimation counts exactly
    let cols: Vec<&str> = rows[1].split(',').collect();
    let norm_est: f64 = cols[7].parse().unwrap();
    assert_eq!(norm_est, 1.0);
    // huge gamma estimates nothing
    let cols: Vec<&str> = rows[2].split(',').collect();
    let mean_est: f64 = cols[6].parse().unwrap();
    assert_eq!(mean_est, 0.0);
}
