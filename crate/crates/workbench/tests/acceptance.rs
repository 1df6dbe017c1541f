//! End-to-end acceptance suite. Prints one `PASS`/`FAIL` line per criterion
//! and exits non-zero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use colorcount::counter::{approx_count, as_integer, CountConfig, DepthPolicy};
use colorcount::decay::one_level_contraction;
use colorcount::generators::{enumerate_small, generate, random_reachable, CorpusSpec, Family, ListPolicy};
use colorcount::oracle::Oracle;
use colorcount::{
    classify_boundary, estimate_marginals, Backend, BoundaryKind, Color, ColorSet, EstimatorConfig, Instance,
    Probability, Vertex,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_colorcount");
const DEPTHS: [u32; 5] = [0, 1, 2, 5, 8];

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Outcome);

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn rational_marginals(inst: &Instance, v: Vertex, depth: u32) -> [BigRational; 4] {
    estimate_marginals(inst, v, &EstimatorConfig::new(depth).rational())
        .expect("reachable triple")
        .map(|p| p.as_rational().expect("rational backend").clone())
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn full_depth_exactness() -> Outcome {
    let oracle = Oracle::default();
    let mut checked = 0;
    for inst in enumerate_small(7) {
        let depth = inst.num_vertices() as u32 + 2;
        for v in inst.vertices() {
            let est = rational_marginals(&inst, v, depth);
            let truth = oracle.marginals(&inst, v).map_err(|e| e.to_string())?;
            ensure(est == truth, || format!("{inst:?} v={v}: {est:?} != {truth:?}"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} marginal vectors equal the oracle at D = n+2"))
}

fn sum_to_one() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..1000u64 {
        let (inst, v) = random_reachable(10, seed);
        for depth in DEPTHS {
            let exact = rational_marginals(&inst, v, depth);
            ensure(exact.iter().sum::<BigRational>() == BigRational::one(), || {
                format!("seed {seed} D={depth}: rational sum {}", exact.iter().sum::<BigRational>())
            })?;
            let float = estimate_marginals(&inst, v, &EstimatorConfig::new(depth)).unwrap();
            let err = (float.iter().map(Probability::to_f64).sum::<f64>() - 1.0).abs();
            worst = worst.max(err);
            ensure(err <= 1e-12, || format!("seed {seed} D={depth}: float error {err:e}"))?;
        }
    }
    Ok(format!("1000 instances x D in {DEPTHS:?}: rational sums exact, float error <= {worst:e}"))
}

fn bounds_suite() -> Outcome {
    let mut triples = 0;
    for seed in 0..1000u64 {
        let (inst, v) = random_reachable(10, seed);
        let depth = DEPTHS[(seed % 5) as usize];
        let p = rational_marginals(&inst, v, depth);
        let deg = inst.degree(v);
        let nbr_lists = inst.neighbors(v).fold(ColorSet::EMPTY, |acc, u| acc.union(inst.list(u)));
        for c in Color::ALL {
            let x = &p[c.index()];
            let at = || format!("seed {seed} D={depth} v={v} i={c:?} P={x}");
            ensure(*x >= BigRational::zero() && *x <= q(1, 2), || format!("{}: outside [0,1/2]", at()))?;
            if inst.list(v).contains(c) {
                let lower = if deg == 2 { q(1, 13) } else { q(1, 6) };
                ensure(*x >= lower, || format!("{}: below {lower}", at()))?;
            }
            if nbr_lists.contains(c) {
                ensure(deg != 2 || *x <= q(12, 25), || format!("{}: above 12/25", at()))?;
                ensure(deg != 1 || *x <= q(6, 13), || format!("{}: above 6/13", at()))?;
            }
            if depth >= 2 {
                ensure(*x == q(1, 2) || *x <= q(13, 27), || format!("{}: in (13/27, 1/2)", at()))?;
                let class = classify_boundary(&inst, v, c).map_err(|e| e.to_string())?.kind;
                ensure(x.is_zero() == (class == BoundaryKind::Zero), || format!("{}: class {class:?}", at()))?;
                ensure((*x == q(1, 2)) == class.is_half(), || format!("{}: class {class:?}", at()))?;
            }
            triples += 1;
        }
    }
    Ok(format!("{triples} triples, zero violations"))
}

fn consistency_dichotomy() -> Outcome {
    let oracle = Oracle::default();
    let interior = |x: &BigRational| *x >= q(1, 13) && *x <= q(13, 27);
    let mut triples = 0;
    for seed in 0..1000u64 {
        let (inst, v) = random_reachable(10, seed);
        let depth = 2 + (seed % 7) as u32;
        let p = rational_marginals(&inst, v, depth);
        let truth = oracle.marginals(&inst, v).map_err(|e| e.to_string())?;
        for c in 0..4 {
            let at = || format!("seed {seed} D={depth} v={v} i={}: P={} truth={}", c + 1, p[c], truth[c]);
            ensure(p[c].is_zero() == truth[c].is_zero(), at)?;
            ensure((p[c] == q(1, 2)) == (truth[c] == q(1, 2)), at)?;
            ensure(interior(&p[c]) == interior(&truth[c]), at)?;
            triples += 1;
        }
    }
    Ok(format!("{triples} triples at D in 2..=8, zero violations"))
}

fn one_level_contraction_suite() -> Outcome {
    let oracle = Oracle::default();
    let (mut samples, mut worst) = (0, 0.0f64);
    let mut seed = 0u64;
    while samples < 500 {
        let (inst, v) = random_reachable(10, seed);
        let depth = 3 + (seed % 4) as u32;
        seed += 1;
        let Some(found) = one_level_contraction(&inst, v, depth, &oracle).map_err(|e| e.to_string())? else {
            continue;
        };
        for s in found.into_iter().filter(|s| s.root_gap.is_some()) {
            ensure(s.contracts(1e-9), || format!("seed {} D={depth}: {s:?}", seed - 1))?;
            if s.child_gap > 1e-9 {
                worst = worst.max(s.root_gap.unwrap() / s.child_gap);
            }
            samples += 1;
        }
    }
    Ok(format!("{samples} interior triples from {seed} instances, worst observed ratio {worst:.4} <= 0.9996"))
}

fn counting_accuracy() -> Outcome {
    let oracle = Oracle::default();
    let mut corpus: Vec<Instance> = enumerate_small(8).into_iter().filter(|i| i.base_graph().is_connected()).collect();
    let small = corpus.len();
    for seed in 0..50u64 {
        let spec = CorpusSpec {
            family: Family::RandomSubcubic { n: 4 + (seed % 9) as usize, p: 0.6, seed },
            lists: ListPolicy::RandomValid { seed },
        };
        corpus.push(generate(&spec).map_err(|e| e.to_string())?);
    }
    let float = CountConfig::new(DepthPolicy::fixed(8));
    let mut worst = 0.0f64;
    for inst in &corpus {
        let truth = oracle.count(inst).map_err(|e| e.to_string())?;
        let est = approx_count(inst, &float).map_err(|e| e.to_string())?.estimate.to_f64();
        let t = num_traits::ToPrimitive::to_f64(&truth).unwrap();
        let rel = if t == 0.0 { est.abs() } else { (est - t).abs() / t };
        worst = worst.max(rel);
        ensure(rel <= 1e-2, || format!("{inst:?}: float D8 {est} vs {truth}"))?;

        let exact = CountConfig::new(DepthPolicy::fixed(inst.num_vertices() as u32 + 2)).with_backend(Backend::Rational);
        let r = approx_count(inst, &exact).map_err(|e| e.to_string())?;
        ensure(as_integer(&r.estimate) == Some(BigInt::from(truth.clone())), || {
            format!("{inst:?}: rational {} vs {truth}", r.estimate)
        })?;
    }
    Ok(format!(
        "{small} connected graphs (n <= 8) + 50 random subcubic: float D8 worst rel. error {worst:.1e}, rational D=n+2 exact"
    ))
}

fn cli_json(args: &[&str]) -> Result<(i32, Value), String> {
    let out = Command::new(BIN).args(args).output().map_err(|e| e.to_string())?;
    let code = out.status.code().unwrap_or(-1);
    let v = serde_json::from_slice(&out.stdout)
        .map_err(|e| format!("exit {code}, bad JSON ({e}): {}", String::from_utf8_lossy(&out.stderr)))?;
    Ok((code, v))
}

fn decay_verification() -> Outcome {
    let (code, v) = cli_json(&["verify-decay", "--case", "all", "--resolution", "0.005", "--json"])?;
    let reports = v["result"]["reports"].as_array().ok_or("no reports")?;
    let failed: Vec<&str> =
        reports.iter().filter(|r| r["pass"] != true).map(|r| r["name"].as_str().unwrap_or("?")).collect();
    ensure(code == 0 && failed.is_empty(), || format!("exit {code}, failed: {failed:?}"))?;
    let threshold = |name: &str| {
        reports.iter().find(|r| r["name"] == name).and_then(|r| r["threshold"].as_str()).unwrap_or("missing")
    };
    let expected = [
        ("deg1-l4", "3/4"),
        ("deg1-l3-fixed", "11/13"),
        ("jensen/kappa1", "10195/10000"),
        ("jensen/kappa2", "10181/10000"),
        ("jensen_mod/kappa1", "1009/1000"),
        ("jensen_mod/kappa2", "1009/1000"),
        ("resolve3+", "963/1000"),
        ("resolve2+1-/f1_sixth", "9138/10000"),
        ("resolve2+1-/f1_quarter", "9163/10000"),
        ("resolve2+1-/f1_thirteenth", "9102/10000"),
        ("resolve2+1-d1", "9231/10000"),
        ("meanvalue", "9996/10000"),
    ];
    for (name, t) in expected {
        ensure(threshold(name) == t, || format!("{name}: threshold {} instead of {t}", threshold(name)))?;
    }
    let mean = reports.iter().find(|r| r["name"] == "meanvalue").ok_or("no aggregate")?;
    Ok(format!(
        "{} checks pass at h = 0.005; aggregate max {:.6} <= 9996/10000 ({:.0} s)",
        reports.len(),
        mean["max_found"].as_f64().unwrap_or(f64::NAN),
        v["elapsed_seconds"].as_f64().unwrap_or(f64::NAN)
    ))
}

/// Median wall time of `f`, repeating until at least `budget` has elapsed.
fn timed(budget: Duration, mut f: impl FnMut()) -> f64 {
    let mut runs = Vec::new();
    let start = Instant::now();
    while runs.len() < 3 || start.elapsed() < budget {
        let t = Instant::now();
        f();
        runs.push(t.elapsed().as_secs_f64());
    }
    runs.sort_by(f64::total_cmp);
    runs[runs.len() / 2]
}

fn performance() -> Outcome {
    let cubic = |n, seed| generate(&CorpusSpec::full(Family::RandomCubic { n, seed })).map_err(|e| e.to_string());
    let big = cubic(100, 1)?;
    let cfg = CountConfig::new(DepthPolicy::fixed(6)).with_memo(true).with_parallel(false);
    let start = Instant::now();
    approx_count(&big, &cfg).map_err(|e| e.to_string())?;
    let t100 = start.elapsed().as_secs_f64();
    ensure(t100 < 60.0, || format!("random_cubic(100) at D=6 took {t100:.1} s"))?;

    let small = cubic(20, 1)?;
    let times: Vec<f64> = [2, 4, 6]
        .into_iter()
        .map(|d| {
            let cfg = CountConfig::new(DepthPolicy::fixed(d)).with_memo(false).with_parallel(false);
            timed(Duration::from_millis(200), || {
                approx_count(&small, &cfg).unwrap();
            })
        })
        .collect();
    let ratios = [times[1] / times[0], times[2] / times[1]];
    ensure(ratios.iter().all(|&r| r <= 144.0), || format!("growth per +2 depth {ratios:?} exceeds 12^2"))?;
    Ok(format!(
        "cubic(100) D=6 memo serial {t100:.2} s; n=20 no memo D=2,4,6: {:.2e}/{:.2e}/{:.2e} s, growth {:.0}x, {:.0}x (<= 144x)",
        times[0], times[1], times[2], ratios[0], ratios[1]
    ))
}

fn negative_controls() -> Outcome {
    let (code, v) = cli_json(&["verify-decay", "--case", "resolve3+", "--override-threshold", "resolve3+=0.90", "--json"])?;
    let r = &v["result"]["reports"][0];
    ensure(code == 5 && r["pass"] == false, || format!("corrupted threshold: exit {code}, report {r}"))?;
    let argmax = r["argmax"].as_array().map_or(0, Vec::len);
    ensure(argmax > 0, || "corrupted threshold: no argmax reported".into())?;

    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).map(|_| p).map_err(|e| e.to_string())
    };
    let g = write("p3.txt", "3 2\n0 1\n1 2\n")?;
    let l = write("forced.json", r#"{"0": [1], "1": [1, 2], "2": [2]}"#)?;
    let path = |p: &Path| p.to_str().unwrap().to_string();
    let (code, v) = cli_json(&["count", &path(&g), "--lists", &path(&l), "--depth", "4", "--json"])?;
    let count = v["result"]["count"].as_f64();
    ensure(code == 3 && count == Some(0.0), || format!("unsatisfiable: exit {code}, count {count:?}"))?;
    Ok(format!("corrupted resolve3+ threshold fails at {} with argmax; emptied list gives count 0, exit 3", r["max_found"]))
}

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "full-depth exactness", full_depth_exactness),
        (2, "sum-to-one", sum_to_one),
        (3, "bounds", bounds_suite),
        (4, "consistency dichotomy", consistency_dichotomy),
        (5, "one-level contraction", one_level_contraction_suite),
        (6, "counting accuracy", counting_accuracy),
        (7, "contraction-rate verification", decay_verification),
        (8, "performance", performance),
        (9, "negative controls", negative_controls),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failures = 0;
    for (n, name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str()) || n.to_string() == *f) {
            continue;
        }
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS criterion {n} ({name}): {msg} [{secs:.1} s]"),
            Err(msg) => {
                failures += 1;
                println!("FAIL criterion {n} ({name}): {msg} [{secs:.1} s]");
            }
        }
    }
    if failures > 0 {
        std::process::exit(1);
    }
}
