use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use colorcount::generators::{graph, Family};
use colorcount::{ColorLists, Instance, Oracle};
use colorcount_workbench::formats::{load_instance, write_graph};
use colorcount_workbench::report::SCHEMA;
use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_colorcount");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("bad JSON ({e}): {}", stdout(o)))
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn family_file(dir: &TempDir, name: &str, f: Family) -> PathBuf {
    write(dir, name, &write_graph(&graph(&f).unwrap()))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn validate(report: &Value) {
    let schema: Value = serde_json::from_str(SCHEMA).unwrap();
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    let errors: Vec<String> = validator.iter_errors(report).map(|e| format!("{e} at {}", e.instance_path)).collect();
    assert!(errors.is_empty(), "report violates schema: {errors:?}\n{report:#}");
}

#[test]
fn count_k4_rational_is_24() {
    let dir = TempDir::new().unwrap();
    let k4 = family_file(&dir, "k4.txt", Family::CompleteK4);
    let o = run(&["count", s(&k4), "--depth", "10", "--backend", "rational", "--json"]);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    validate(&r);
    assert_eq!(r["result"]["count"], "24");
    assert_eq!(r["result"]["factors"].as_array().unwrap().len(), 4);
    assert_eq!(r["command"], "count");
    assert_eq!(r["report_version"], 1);
}

#[test]
fn count_c5_is_240() {
    let dir = TempDir::new().unwrap();
    let c5 = family_file(&dir, "c5.txt", Family::Cycle(5));
    let o = run(&["count", s(&c5), "--depth", "10", "--json"]);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    validate(&r);
    // (k-1)^n + (-1)^n (k-1) with k = 4, n = 5.
    let z = r["result"]["count"].as_f64().unwrap();
    assert!((z - 240.0).abs() < 1e-9 * 240.0, "{z}");
}

#[test]
fn count_petersen_rational_matches_oracle() {
    let dir = TempDir::new().unwrap();
    let p = family_file(&dir, "petersen.txt", Family::Petersen);
    let truth = Oracle::default()
        .count(&Instance::new(graph(&Family::Petersen).unwrap(), ColorLists::full(10)).unwrap())
        .unwrap();
    let o = run(&["count", s(&p), "--depth", "12", "--backend", "rational"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().next().unwrap(), format!("count: {truth}"));

    let o = run(&["exact", s(&p)]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), format!("count: {truth}"));
    // Golden value, also the chromatic polynomial of the Petersen graph at 4.
    assert_eq!(truth.to_string(), "12960");
}

#[test]
fn default_depth_warns() {
    let dir = TempDir::new().unwrap();
    let k4 = family_file(&dir, "k4.txt", Family::CompleteK4);
    let o = run(&["count", s(&k4)]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("depth 8"));
    assert!(stdout(&o).contains("depth: 8"));
}

#[test]
fn epsilon_mode_respects_max_depth() {
    let dir = TempDir::new().unwrap();
    let k4 = family_file(&dir, "k4.txt", Family::CompleteK4);
    let o = run(&["count", s(&k4), "--epsilon", "0.1"]);
    assert_eq!(code(&o), 1, "the proven schedule is far deeper than 64");
    assert!(String::from_utf8_lossy(&o.stderr).contains("--max-depth"));
    let o = run(&["count", s(&k4), "--depth", "3", "--epsilon", "0.1"]);
    assert_eq!(code(&o), 1, "depth and epsilon are exclusive");
    let o = run(&["count", s(&k4), "--epsilon", "0"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn marginal_examples() {
    let dir = TempDir::new().unwrap();
    let edge = write(&dir, "edge.txt", "2 1\n0 1\n");
    let o = run(&["marginal", s(&edge), "--vertex", "0", "--color", "1", "--depth", "5", "--json"]);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    validate(&r);
    assert_eq!(r["result"]["marginal_f64"], 0.25);
    assert_eq!(r["result"]["boundary_class"]["kind"], "Interior");

    let tri = write(&dir, "tri.txt", "3 3\n0 1\n1 2\n0 2\n");
    let lists = write(&dir, "tri.json", r#"{"1": [2, 3, 4], "2": [2, 3, 4]}"#);
    let o = run(&[
        "marginal", s(&tri), "--lists", s(&lists), "--vertex", "0", "--color", "1", "--depth", "4", "--backend",
        "rational", "--json",
    ]);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    validate(&r);
    assert_eq!(r["result"]["marginal"], "1/2");
    assert_eq!(r["result"]["boundary_class"]["kind"], "HalfCase3");

    let lists = write(&dir, "edge.json", r#"{"0": [2, 3, 4]}"#);
    let o = run(&["marginal", s(&edge), "--lists", s(&lists), "--vertex", "0", "--color", "1", "--depth", "3"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("marginal: 0\n"), "{out}");
    assert!(out.contains("class: Zero"), "{out}");
}

#[test]
fn marginal_usage_errors() {
    let dir = TempDir::new().unwrap();
    let edge = write(&dir, "edge.txt", "2 1\n0 1\n");
    assert_eq!(code(&run(&["marginal", s(&edge), "--vertex", "0", "--color", "5", "--depth", "2"])), 1);
    assert_eq!(code(&run(&["marginal", s(&edge), "--vertex", "9", "--color", "1", "--depth", "2"])), 1);
}

#[test]
fn exact_examples() {
    let dir = TempDir::new().unwrap();
    let k4 = family_file(&dir, "k4.txt", Family::CompleteK4);
    let o = run(&["exact", s(&k4), "--json"]);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    validate(&r);
    assert_eq!(r["result"]["count"], "24");

    let edge = write(&dir, "edge.txt", "p edge 2 1\ne 1 2\n");
    assert_eq!(stdout(&run(&["exact", s(&edge)])).trim(), "count: 12");
    let o = run(&["exact", s(&edge), "--marginal", "0", "1", "--json"]);
    let r = json(&o);
    validate(&r);
    assert_eq!(r["result"]["marginal"], "1/4");

    assert_eq!(code(&run(&["exact", s(&k4), "--cap", "3"])), 4);
}

#[test]
fn verify_decay_single_cases() {
    let o = run(&["verify-decay", "--case", "resolve3+", "--resolution", "0.005", "--json"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let r = json(&o);
    validate(&r);
    let reports = r["result"]["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 1);
    assert_eq!(reports[0]["threshold"], "963/1000");
    assert!(reports[0]["max_found"].as_f64().unwrap() <= 0.963);

    let o = run(&["verify-decay", "--case", "jensen", "--resolution", "0.005", "--json"]);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    let names: Vec<(&str, &str)> = r["result"]["reports"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| (x["name"].as_str().unwrap(), x["threshold"].as_str().unwrap()))
        .collect();
    assert!(names.contains(&("jensen/kappa1", "10195/10000")), "{names:?}");
    assert!(names.contains(&("jensen/kappa2", "10181/10000")), "{names:?}");
}

#[test]
fn verify_decay_negative_control_and_errors() {
    let o = run(&["verify-decay", "--case", "resolve3+", "--override-threshold", "resolve3+=0.90"]);
    assert_eq!(code(&o), 5);
    let out = stdout(&o);
    assert!(out.contains("FAIL") && out.contains("f1="), "{out}");
    assert_eq!(code(&run(&["verify-decay", "--case", "nonsense"])), 1);
    assert_eq!(code(&run(&["verify-decay", "--case", "resolve3+", "--resolution", "0"])), 1);
    assert_eq!(code(&run(&["verify-decay", "--override-threshold", "no-equals-sign"])), 1);
}

#[test]
fn gen_examples_and_round_trip() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("k4.txt");
    assert_eq!(code(&run(&["gen", "--family", "k4", "--out", s(&out)])), 0);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("p edge 4 6\n"));
    assert_eq!(load_instance(&text, None).unwrap().base_graph().num_edges(), 6);

    let out = dir.path().join("c5.txt");
    assert_eq!(code(&run(&["gen", "--family", "cycle", "--n", "5", "--out", s(&out)])), 0);
    assert!(std::fs::read_to_string(&out).unwrap().starts_with("p edge 5 5\n"));

    let (a, b) = (dir.path().join("a.txt"), dir.path().join("b.txt"));
    for p in [&a, &b] {
        assert_eq!(code(&run(&["gen", "--family", "cubic", "--n", "10", "--seed", "7", "--out", s(p)])), 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    assert_eq!(code(&run(&["gen", "--family", "cycle", "--out", s(&a)])), 1, "--n is required");
}

#[test]
fn gen_random_lists_round_trip() {
    let dir = TempDir::new().unwrap();
    let (g, l) = (dir.path().join("g.txt"), dir.path().join("l.json"));
    let args = [
        "gen", "--family", "subcubic", "--n", "9", "--p", "0.6", "--seed", "3", "--list-policy", "random", "--out",
        s(&g), "--lists-out", s(&l),
    ];
    assert_eq!(code(&run(&args)), 0);
    let gt = std::fs::read_to_string(&g).unwrap();
    let lt = std::fs::read_to_string(&l).unwrap();
    let inst = load_instance(&gt, Some(&lt)).unwrap();
    assert!(inst.is_valid());
    let expected = colorcount::generators::generate(&colorcount::generators::CorpusSpec {
        family: Family::RandomSubcubic { n: 9, p: 0.6, seed: 3 },
        lists: colorcount::generators::ListPolicy::RandomValid { seed: 3 },
    })
    .unwrap();
    assert_eq!(inst.base_graph(), expected.base_graph());
    assert_eq!(inst.lists(), expected.lists());

    // The generated files drive the other commands.
    let o = run(&["exact", s(&g), "--lists", s(&l)]);
    assert_eq!(code(&o), 0);
    let truth = Oracle::default().count(&expected).unwrap();
    assert_eq!(stdout(&o).trim(), format!("count: {truth}"));
    let o = run(&["count", s(&g), "--lists", s(&l), "--depth", "11", "--backend", "rational"]);
    assert_eq!(stdout(&o).lines().next().unwrap(), format!("count: {truth}"));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.txt");
    assert_eq!(code(&run(&["count", s(&missing), "--depth", "2"])), 1);
    let garbage = write(&dir, "bad.txt", "p edge 2 1\ne 1 x\n");
    assert_eq!(code(&run(&["count", s(&garbage), "--depth", "2"])), 1);
    let bad_lists = write(&dir, "bad.json", r#"{"0": [7]}"#);
    let edge = write(&dir, "edge.txt", "2 1\n0 1\n");
    assert_eq!(code(&run(&["count", s(&edge), "--lists", s(&bad_lists), "--depth", "2"])), 1);
    assert_eq!(code(&run(&["count", s(&edge), "--bogus"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);

    let self_loop = write(&dir, "loop.txt", "2 1\n0 0\n");
    assert_eq!(code(&run(&["count", s(&self_loop), "--depth", "2"])), 2);
    let star4 = write(&dir, "star4.txt", "5 4\n0 1\n0 2\n0 3\n0 4\n");
    assert_eq!(code(&run(&["count", s(&star4), "--depth", "2"])), 2);
    let p3 = write(&dir, "p3.txt", "3 2\n0 1\n1 2\n");
    let short = write(&dir, "short.json", r#"{"1": [1, 2]}"#);
    assert_eq!(code(&run(&["count", s(&p3), "--lists", s(&short), "--depth", "2"])), 2);

    // Forced colors 1 and 2 on both neighbours empty the middle list.
    let forced = write(&dir, "forced.json", r#"{"0": [1], "1": [1, 2], "2": [2]}"#);
    let o = run(&["count", s(&p3), "--lists", s(&forced), "--depth", "2", "--json"]);
    assert_eq!(code(&o), 3);
    let r = json(&o);
    validate(&r);
    assert_eq!(r["result"]["count"], 0.0);
    assert_eq!(r["result"]["unsatisfiable"], true);
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = TempDir::new().unwrap();
    let g = family_file(&dir, "cubic.txt", Family::RandomCubic { n: 16, seed: 5 });
    let a = run(&["--threads", "1", "count", s(&g), "--depth", "5"]);
    let b = run(&["count", s(&g), "--depth", "5", "--threads", "3"]);
    assert_eq!(code(&a), 0);
    assert_eq!(stdout(&a), stdout(&b));
}
