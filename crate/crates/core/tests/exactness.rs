//! The estimator and counter against the brute-force oracle.

use colorcount::counter::{approx_count, as_integer, eliminate, CountConfig, CountError, DepthPolicy};
use colorcount::generators::{enumerate_small, generate, petersen, CorpusSpec, Family, ListPolicy};
use colorcount::oracle::Oracle;
use colorcount::{estimate_marginals, Backend, Color, EstimatorConfig, Instance, Probability};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

fn assert_full_depth_exact(inst: &Instance) {
    let depth = inst.num_vertices() as u32 + 2;
    let cfg = EstimatorConfig::new(depth).rational();
    for v in inst.vertices() {
        let est = estimate_marginals(inst, v, &cfg).unwrap();
        let truth = Oracle::default().marginals(inst, v).unwrap();
        for c in Color::ALL {
            assert_eq!(
                est[c.index()],
                Probability::Rational(truth[c.index()].clone()),
                "{inst:?} v={v} c={c}"
            );
        }
    }
}

#[test]
fn full_depth_matches_oracle_on_small_graphs() {
    for inst in enumerate_small(6) {
        assert_full_depth_exact(&inst);
    }
}

#[test]
fn full_depth_matches_oracle_with_random_lists() {
    for seed in 0..150u64 {
        let spec = CorpusSpec {
            family: Family::RandomSubcubic { n: 1 + (seed % 8) as usize, p: 0.45, seed },
            lists: ListPolicy::RandomValid { seed: seed + 1000 },
        };
        assert_full_depth_exact(&generate(&spec).unwrap());
    }
}

#[test]
fn telescoping_with_exact_marginals_is_exact() {
    let oracle = Oracle::default();
    for seed in 0..60u64 {
        let spec = CorpusSpec {
            family: Family::RandomSubcubic { n: 2 + (seed % 11) as usize, p: 0.4, seed },
            lists: ListPolicy::RandomValid { seed: !seed },
        };
        let inst = generate(&spec).unwrap();
        let (_, z) = eliminate(&inst, |g, v| Ok(oracle.marginals(g, v).expect("valid instances are satisfiable")))
            .unwrap();
        let truth = oracle.count(&inst).unwrap();
        assert_eq!(z, BigRational::from_integer(BigInt::from(truth)));
    }
}

/// Perturbs every exact factor by a relative amount within `ε' = ε/(2n)`
/// and checks the count stays within `(1 ± ε)`.
#[test]
fn per_step_error_composes() {
    let oracle = Oracle::default();
    for seed in 0..40u64 {
        let n = 3 + (seed % 10) as usize;
        let spec = CorpusSpec {
            family: Family::RandomSubcubic { n, p: 0.5, seed },
            lists: ListPolicy::RandomValid { seed },
        };
        let inst = generate(&spec).unwrap();
        let truth = oracle.count(&inst).unwrap().to_f64().unwrap();
        let eps = 0.1;
        let step = eps / (2.0 * n as f64);
        for sign in [-1.0, 1.0] {
            let (_, z) = eliminate(&inst, |g, v| -> Result<[f64; 4], CountError> {
                let m = oracle.marginals(g, v).unwrap();
                // (1 − ε')p̂ ≤ p ≤ (1 + ε')p̂ with p̂ = p/(1 ± ε')
                Ok(m.map(|x| x.to_f64().unwrap() / (1.0 + sign * step)))
            })
            .unwrap();
            assert!((1.0 - eps) * z <= truth && truth <= (1.0 + eps) * z, "seed {seed}: {z} vs {truth}");
        }
    }
}

#[test]
fn counts_of_named_graphs() {
    let exact = |depth| CountConfig::new(DepthPolicy::fixed(depth)).with_backend(Backend::Rational);
    let k4 = generate(&CorpusSpec::full(Family::CompleteK4)).unwrap();
    assert_eq!(as_integer(&approx_count(&k4, &exact(10)).unwrap().estimate), Some(24.into()));
    let c5 = generate(&CorpusSpec::full(Family::Cycle(5))).unwrap();
    assert_eq!(as_integer(&approx_count(&c5, &exact(10)).unwrap().estimate), Some(240.into()));

    let p = petersen();
    let truth = Oracle::default().count(&p).unwrap();
    let r = approx_count(&p, &exact(12)).unwrap();
    assert_eq!(as_integer(&r.estimate), Some(BigInt::from(truth.clone())));

    let r = approx_count(&p, &CountConfig::new(DepthPolicy::fixed(6))).unwrap();
    let t = truth.to_f64().unwrap();
    assert!((r.estimate.to_f64() - t).abs() <= 0.01 * t, "{} vs {t}", r.estimate);
    let product: f64 = r.factors.iter().map(|f| 1.0 / f.marginal.to_f64()).product();
    assert!((product - r.estimate.to_f64()).abs() <= 1e-9 * t);
    assert!(r.factors.iter().all(|f| f.marginal.to_f64() > 0.0 && f.marginal.to_f64() <= 1.0));
}

#[test]
fn rational_and_float_agree() {
    for seed in 0..40u64 {
        let spec = CorpusSpec {
            family: Family::RandomSubcubic { n: 9, p: 0.5, seed },
            lists: ListPolicy::RandomValid { seed },
        };
        let inst = generate(&spec).unwrap();
        let f = approx_count(&inst, &CountConfig::new(DepthPolicy::fixed(4))).unwrap();
        let q = approx_count(&inst, &CountConfig::new(DepthPolicy::fixed(4)).with_backend(Backend::Rational)).unwrap();
        let (a, b) = (f.estimate.to_f64(), q.estimate.to_f64());
        assert!((a - b).abs() <= 1e-9 * b, "{a} vs {b}");
        assert!(BigRational::one() <= BigRational::from_float(b).unwrap());
    }
}
