use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bqpcut::io::format::parse_native;
use bqpcut::io::parse_maxcut;
use bqpcut::model::brute_force_solve;
use bqpcut::par::Exec;
use bqpcut::solver::brute_force_maxcut;

const ONE_DIM: &str = "1 1\nc 1 2\nA 1 1 1\nb 1 1\n";
const PARITY: &str = "1 1\nc 1 2\nA 1 1 2\nb 1 1\n";

fn bqpcut(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bqpcut"))
        .args(args)
        .env("BQPCUT_WORKERS", "2")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let one = write(dir.path(), "one.txt", ONE_DIM);
    let bad = write(dir.path(), "bad.txt", PARITY);

    let o = bqpcut(&["solve", s(&one)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("objective  2"), "{}", stdout(&o));

    for mode in ["las", "cli", "gw", "auto"] {
        assert_eq!(bqpcut(&["solve", s(&one), "--mode", mode]).status.code(), Some(0), "{mode}");
        assert_eq!(bqpcut(&["solve", s(&bad), "--mode", mode]).status.code(), Some(2), "{mode}");
    }

    let o = bqpcut(&["solve", s(&bad), "--least-violation"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("LeastViolated"));
    assert!(stdout(&o).contains("residual   1"));
}

#[test]
fn usage_and_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let one = write(dir.path(), "one.txt", ONE_DIM);
    let broken = write(dir.path(), "broken.txt", "2 1\nF 1 2 1\nA 1 3 1\n");
    assert_eq!(bqpcut(&["solve", s(&one), "--mode", "fast"]).status.code(), Some(64));
    assert_eq!(bqpcut(&["solve", s(&one), "--epsilon", "-1"]).status.code(), Some(64));
    assert_eq!(bqpcut(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(bqpcut(&["solve", "/nonexistent/p.txt"]).status.code(), Some(65));
    let o = bqpcut(&["solve", s(&broken)]);
    assert_eq!(o.status.code(), Some(65));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
    assert_eq!(bqpcut(&["--help"]).status.code(), Some(0));
}

#[test]
fn json_outcome_and_crosscheck() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.txt");
    let g = bqpcut(&[
        "generate", "rgi", "--family", "one", "--n", "12", "--m", "2", "--a=-3:3", "--f=-7:7", "--seed", "5", "--out",
        s(&p),
    ]);
    assert_eq!(g.status.code(), Some(0));
    let o = bqpcut(&["solve", s(&p), "--crosscheck", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let truth = brute_force_solve(
        &parse_native(&std::fs::read_to_string(&p).unwrap()).unwrap().to_plus_minus_one(),
        Exec::Sequential,
    )
    .unwrap();
    assert_eq!(v["solution"]["objective"].as_f64(), truth.objective);
    assert!(v["timeline"]["events"].as_array().unwrap().iter().any(|e| e == "cross-check passed"));
}

#[test]
fn time_limit_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.txt");
    bqpcut(&["generate", "cbqp", "--n", "22", "--k", "7", "--seed", "1", "--out", s(&p)]);
    let o = bqpcut(&["solve", s(&p), "--time-limit", "0"]);
    assert!(matches!(o.status.code(), Some(0 | 3)), "{:?}: {}", o.status, stdout(&o));
}

#[test]
fn generators() {
    let o = bqpcut(&["generate", "kcluster", "--n", "10", "--percent", "50", "--k", "3", "--seed", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let p = parse_native(&stdout(&o)).unwrap();
    assert_eq!((p.n(), p.m()), (10, 1));
    let again = bqpcut(&["generate", "kcluster", "--n", "10", "--percent", "50", "--k", "3", "--seed", "4"]);
    assert_eq!(o.stdout, again.stdout);

    let o = bqpcut(&["generate", "cbqp", "--n", "8", "--k", "2", "--range", "5"]);
    assert_eq!(parse_native(&stdout(&o)).unwrap().n(), 8);

    let bad = bqpcut(&["generate", "rgi", "--family", "one", "--n", "5", "--m", "1", "--a=0:4", "--f=-1:1"]);
    assert_eq!(bad.status.code(), Some(64));
    let unchecked = bqpcut(&[
        "generate", "rgi", "--family", "one", "--n", "5", "--m", "1", "--a=0:4", "--f=-1:1", "--unchecked",
    ]);
    assert_eq!(unchecked.status.code(), Some(0));
}

#[test]
fn transform_round_trips_through_maxcut() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.txt");
    let g = dir.path().join("g.txt");
    bqpcut(&[
        "generate", "rgi", "--family", "two", "--n", "10", "--m", "1", "--a=0:3", "--f=-5:5", "--b-v", "10", "--seed", "3",
        "--out", s(&p),
    ]);
    let o = bqpcut(&["transform", s(&p), "--out", s(&g), "--scale-int"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("rho"));

    let (graph, scale) = parse_maxcut(&std::fs::read_to_string(&g).unwrap()).unwrap();
    assert_eq!(graph.n_vertices(), 11);
    let (z, cut) = brute_force_maxcut(&graph, Exec::Sequential).unwrap();
    let truth = brute_force_solve(
        &parse_native(&std::fs::read_to_string(&p).unwrap()).unwrap().to_plus_minus_one(),
        Exec::Sequential,
    )
    .unwrap();
    // With ρ and σ from the projected bound, the penalized optimum is f* on
    // feasible instances.
    if let Some(f) = truth.objective {
        assert!((graph.constant - z - f).abs() < 1e-6, "{} − {z} vs {f} (scale {scale})", graph.constant);
        assert!(cut.xbar.len() == 11);
    }
}

#[test]
fn bounds_report() {
    let dir = tempfile::tempdir().unwrap();
    let one = write(dir.path(), "one.txt", ONE_DIM);
    let o = bqpcut(&["bounds", s(&one)]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    for label in ["ℓ̂", "û", "ℓ̃", "ũ", "u_Δ", "total"] {
        assert!(out.contains(label), "missing {label} in\n{out}");
    }
}

#[test]
fn bench_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "one.txt", ONE_DIM);
    let suite = write(
        dir.path(),
        "suite.json",
        r#"{"name": "t", "modes": ["gw", "las"], "instances": [
            {"id": "one", "file": "one.txt"},
            {"id": "cb", "cbqp": {"n": 8, "k": 3, "range": 10, "seed": 1}}]}"#,
    );
    let out = dir.path().join("out");
    let o = bqpcut(&["--sequential", "bench", s(&suite), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["records.csv", "timings.csv", "profile_gw.csv", "profile_las.csv", "sigma_ratios.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let records = std::fs::read_to_string(out.join("records.csv")).unwrap();
    assert_eq!(records.lines().count(), 5);
}
