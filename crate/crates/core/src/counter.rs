//! Counting by self-reduction: eliminate vertices one at a time, fixing
//! each to its most likely color, and multiply the reciprocals of the
//! estimated marginals.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::decay::LAMBDA;
use crate::estimator::{EstimateError, Estimator};
use crate::instance::{Color, ColorSet, Instance, InstanceError, Vertex};
use crate::scalar::{Backend, Probability, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CountError {
    #[error("invalid instance: {0}")]
    Invalid(InstanceError),
    #[error("bad depth policy: {0}")]
    Policy(String),
    #[error("color {color} is not in L({vertex})")]
    Contract { vertex: Vertex, color: Color },
    #[error("instance has no proper coloring")]
    Unsatisfiable,
    #[error(transparent)]
    Estimate(EstimateError),
}

impl From<EstimateError> for CountError {
    fn from(e: EstimateError) -> Self {
        match e {
            EstimateError::Unsatisfiable { .. } => CountError::Unsatisfiable,
            EstimateError::Instance(e) => CountError::Invalid(e),
            other => CountError::Estimate(other),
        }
    }
}

/// How deep to run the marginal estimator at every elimination step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DepthPolicy {
    FixedDepth { depth: u32 },
    /// Depth from the decay bound `C·λ^{t−3} ≤ ε'/25` with `ε' = ε/(2n)`.
    /// `C` is not determined by the analysis; 1 is the customary default.
    TargetEpsilon { epsilon: f64, constant: f64 },
}

impl DepthPolicy {
    pub fn fixed(depth: u32) -> Self {
        DepthPolicy::FixedDepth { depth }
    }

    pub fn target(epsilon: f64, constant: f64) -> Self {
        DepthPolicy::TargetEpsilon { epsilon, constant }
    }

    pub fn validate(&self) -> Result<(), CountError> {
        match *self {
            DepthPolicy::FixedDepth { .. } => Ok(()),
            DepthPolicy::TargetEpsilon { epsilon, constant } => {
                if !(epsilon > 0.0 && epsilon < 1.0) {
                    Err(CountError::Policy(format!("epsilon {epsilon} not in (0, 1)")))
                } else if !(constant > 0.0 && constant.is_finite()) {
                    Err(CountError::Policy(format!("constant {constant} must be positive")))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// Per-step error budget `ε/(2n)`.
pub fn step_epsilon(epsilon: f64, n: usize) -> f64 {
    epsilon / (2.0 * n.max(1) as f64)
}

/// Depth used by `policy` on an `n`-vertex instance. For a target error
/// this is the smallest `t ≥ 3` with `C·λ^{t−3} ≤ ε'/25`; with
/// `λ = 0.9996` it is in the tens of thousands even for loose targets.
/// Saturates at `u32::MAX`.
pub fn depth_for_epsilon(policy: &DepthPolicy, n: usize) -> u32 {
    match *policy {
        DepthPolicy::FixedDepth { depth } => depth,
        DepthPolicy::TargetEpsilon { epsilon, constant } => {
            let goal = step_epsilon(epsilon, n) / 25.0;
            let lambda = LAMBDA.value();
            let ok = |t: u64| constant * lambda.powf((t as f64) - 3.0) <= goal * (1.0 + 1e-12);
            let closed = 3.0 + (constant / goal).ln() / -lambda.ln();
            if !closed.is_finite() || closed >= u32::MAX as f64 {
                return u32::MAX;
            }
            let mut t = closed.ceil().max(3.0) as u64;
            // The closed form can be off by one either way in floating point.
            while t > 3 && ok(t - 1) {
                t -= 1;
            }
            while !ok(t) {
                t += 1;
            }
            t.min(u32::MAX as u64) as u32
        }
    }
}

/// Removes `v` after coloring it `c`: `c` leaves every neighbor's list.
pub fn fix_vertex(inst: &Instance, v: Vertex, c: Color) -> Result<Instance, CountError> {
    if !inst.contains(v) {
        inst.remove_vertex(v).map_err(CountError::Invalid)?;
    }
    if !inst.list(v).contains(c) {
        return Err(CountError::Contract { vertex: v, color: c });
    }
    let nbrs = inst.neighbor_vec(v);
    Ok(inst.with_color_removed(&nbrs, c).without(v))
}

/// The color of largest estimate within `list`, smallest color on ties.
pub fn choose_pivot_color<T: Scalar>(estimates: &[T; 4], list: ColorSet) -> Result<Color, CountError> {
    let mut best: Option<Color> = None;
    for c in list.iter() {
        let p = &estimates[c.index()];
        if *p > T::zero() && best.is_none_or(|b| *p > estimates[b.index()]) {
            best = Some(c);
        }
    }
    best.ok_or(CountError::Unsatisfiable)
}

/// Whether propagating singleton lists empties some list. A `true` answer
/// proves the instance has no proper coloring.
pub fn forced_colors_conflict(inst: &Instance) -> bool {
    let mut lists: Vec<ColorSet> = (0..inst.capacity())
        .map(|v| if inst.contains(v) { inst.list(v) } else { ColorSet::EMPTY })
        .collect();
    let mut done = vec![false; lists.len()];
    loop {
        let mut changed = false;
        for v in inst.vertices() {
            if lists[v].is_empty() {
                return true;
            }
            if done[v] || lists[v].len() != 1 {
                continue;
            }
            done[v] = true;
            changed = true;
            let c = lists[v].iter().next().expect("singleton");
            for w in inst.neighbors(v) {
                lists[w] = lists[w].without(c);
                if lists[w].is_empty() {
                    return true;
                }
            }
        }
        if !changed {
            return false;
        }
    }
}

/// An approximate (or, in exact mode, exact) number of colorings.
#[derive(Clone, Debug, PartialEq)]
pub enum CountValue {
    Float(f64),
    Rational(BigRational),
}

impl CountValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            CountValue::Float(x) => *x,
            CountValue::Rational(r) => ToPrimitive::to_f64(r).unwrap_or(f64::INFINITY),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            CountValue::Float(x) => *x == 0.0,
            CountValue::Rational(r) => r.is_zero(),
        }
    }
}

impl fmt::Display for CountValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CountValue::Float(x) => write!(f, "{x}"),
            CountValue::Rational(r) => write!(f, "{r}"),
        }
    }
}

impl Serialize for CountValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            CountValue::Float(x) => s.serialize_f64(*x),
            CountValue::Rational(r) => s.serialize_str(&r.to_string()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Factor {
    pub vertex: Vertex,
    pub color: Color,
    pub marginal: Probability,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountResult {
    pub estimate: CountValue,
    pub factors: Vec<Factor>,
    pub depth_used: u32,
    pub epsilon_claimed: Option<f64>,
    /// Set when a forced-color conflict or a vanishing marginal proved
    /// that there is no coloring; `estimate` is then 0.
    pub unsatisfiable: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CountConfig {
    pub policy: DepthPolicy,
    pub backend: Backend,
    pub memoize: bool,
    pub parallel: bool,
}

impl CountConfig {
    pub fn new(policy: DepthPolicy) -> Self {
        CountConfig {
            policy,
            backend: Backend::Float,
            memoize: true,
            parallel: true,
        }
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }

    pub fn with_memo(mut self, memoize: bool) -> Self {
        self.memoize = memoize;
        self
    }

    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }
}

/// One elimination step as seen by [`eliminate`].
pub struct Step<T> {
    pub vertex: Vertex,
    pub color: Color,
    pub marginal: T,
}

/// Runs the self-reduction with an arbitrary marginal source (the estimator,
/// the exact oracle, or a perturbed oracle in tests). Vertices are
/// eliminated in ascending id order. Returns the steps and `Π 1/p`.
pub fn eliminate<T, F>(inst: &Instance, mut marginals: F) -> Result<(Vec<Step<T>>, T), CountError>
where
    T: Scalar,
    F: FnMut(&Instance, Vertex) -> Result<[T; 4], CountError>,
{
    let mut cur = inst.clone();
    let mut steps = Vec::with_capacity(inst.num_vertices());
    let mut product = T::one();
    let order: Vec<Vertex> = inst.vertices().collect();
    for v in order {
        debug_assert!(cur.list(v).len() > cur.degree(v));
        let p = marginals(&cur, v)?;
        let c = choose_pivot_color(&p, cur.list(v))?;
        let m = p[c.index()].clone();
        product = product / m.clone();
        cur = fix_vertex(&cur, v, c)?;
        steps.push(Step { vertex: v, color: c, marginal: m });
    }
    Ok((steps, product))
}

fn unsatisfiable(depth: u32, epsilon: Option<f64>, backend: Backend) -> CountResult {
    CountResult {
        estimate: match backend {
            Backend::Float => CountValue::Float(0.0),
            Backend::Rational => CountValue::Rational(BigRational::zero()),
        },
        factors: Vec::new(),
        depth_used: depth,
        epsilon_claimed: epsilon,
        unsatisfiable: true,
    }
}

/// Estimates the number of proper list-colorings.
pub fn approx_count(inst: &Instance, cfg: &CountConfig) -> Result<CountResult, CountError> {
    cfg.policy.validate()?;
    let depth = depth_for_epsilon(&cfg.policy, inst.num_vertices());
    let epsilon = match cfg.policy {
        DepthPolicy::TargetEpsilon { epsilon, .. } => Some(epsilon),
        DepthPolicy::FixedDepth { .. } => None,
    };
    if forced_colors_conflict(inst) {
        return Ok(unsatisfiable(depth, epsilon, cfg.backend));
    }
    inst.validate().map_err(CountError::Invalid)?;
    let outcome = match cfg.backend {
        Backend::Float => run::<f64>(inst, depth, cfg, CountValue::Float),
        Backend::Rational => run::<BigRational>(inst, depth, cfg, CountValue::Rational),
    };
    match outcome {
        Ok((factors, estimate)) => Ok(CountResult {
            estimate,
            factors,
            depth_used: depth,
            epsilon_claimed: epsilon,
            unsatisfiable: false,
        }),
        Err(CountError::Unsatisfiable) => Ok(unsatisfiable(depth, epsilon, cfg.backend)),
        Err(e) => Err(e),
    }
}

fn run<T: Scalar>(
    inst: &Instance,
    depth: u32,
    cfg: &CountConfig,
    wrap: impl Fn(T) -> CountValue,
) -> Result<(Vec<Factor>, CountValue), CountError> {
    let est = Estimator::<T>::new(cfg.memoize, cfg.parallel);
    let (steps, product) = eliminate(inst, |g, v| Ok(est.marginals(g, v, depth)?))?;
    let factors = steps
        .into_iter()
        .map(|s| Factor {
            vertex: s.vertex,
            color: s.color,
            marginal: s.marginal.into_probability(),
        })
        .collect();
    Ok((factors, wrap(product)))
}

/// `Π 1/p` over recorded factors, recomputed from the factor list.
pub fn product_of_reciprocals(factors: &[Factor]) -> CountValue {
    if factors.iter().all(|f| matches!(f.marginal, Probability::Rational(_))) && !factors.is_empty() {
        let mut acc = BigRational::one();
        for f in factors {
            acc /= f.marginal.as_rational().expect("rational").clone();
        }
        CountValue::Rational(acc)
    } else {
        CountValue::Float(factors.iter().map(|f| 1.0 / f.marginal.to_f64()).product())
    }
}

/// Exact integer value of a rational count, if it is one.
pub fn as_integer(value: &CountValue) -> Option<BigInt> {
    match value {
        CountValue::Rational(r) if r.is_integer() => Some(r.to_integer()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{ColorLists, Graph};

    fn c(x: u8) -> Color {
        Color::new(x).unwrap()
    }

    fn set(colors: &[u8]) -> ColorSet {
        colors.iter().map(|&x| c(x)).collect()
    }

    fn full(n: usize, edges: &[(usize, usize)]) -> Instance {
        Instance::with_full_lists(Graph::from_edges(n, edges.iter().copied()).unwrap())
    }

    const K4: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

    #[test]
    fn fix_vertex_examples() {
        let e = fix_vertex(&full(2, &[(0, 1)]), 1, c(1)).unwrap();
        assert_eq!(e.num_vertices(), 1);
        assert_eq!(e.list(0), set(&[2, 3, 4]));
        assert_eq!(e.degree(0), 0);

        let t = fix_vertex(&full(4, &K4), 0, c(1)).unwrap();
        assert_eq!(t.num_edges(), 3);
        for v in 1..4 {
            assert_eq!(t.list(v), set(&[2, 3, 4]));
        }
        assert!(t.is_valid());

        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let narrow = Instance::new(g, ColorLists::new(vec![set(&[2, 3]), ColorSet::FULL])).unwrap();
        assert_eq!(
            fix_vertex(&narrow, 0, c(1)).unwrap_err(),
            CountError::Contract { vertex: 0, color: c(1) }
        );
    }

    #[test]
    fn pivot_examples() {
        let all = ColorSet::FULL;
        assert_eq!(choose_pivot_color(&[0.5, 0.3, 0.2, 0.0], all).unwrap(), c(1));
        assert_eq!(choose_pivot_color(&[0.25; 4], all).unwrap(), c(1));
        assert_eq!(choose_pivot_color(&[0.2, 0.4, 0.4, 0.0], all).unwrap(), c(2));
        assert_eq!(choose_pivot_color(&[0.0; 4], all).unwrap_err(), CountError::Unsatisfiable);
        // colors outside the list are ignored
        assert_eq!(choose_pivot_color(&[0.9, 0.1, 0.0, 0.0], set(&[2, 3])).unwrap(), c(2));
    }

    #[test]
    fn depth_examples() {
        let l = LAMBDA.value();
        // ε'/25 = λ³ with C = 1 and n = 1: ε = 2·25·λ³ is not < 1, so go
        // through the helper with an explicit n instead.
        let n = 100usize;
        let eps = 25.0 * l.powi(3) * 2.0 * n as f64;
        let p = DepthPolicy::TargetEpsilon { epsilon: eps, constant: 1.0 };
        assert_eq!(depth_for_epsilon(&p, n), 6);

        let p = DepthPolicy::target(0.5, 1.0);
        let closed = (3.0 + (25.0 * 2.0 * 10.0 / 0.5f64).ln() / -l.ln()).ceil() as u32;
        assert_eq!(depth_for_epsilon(&p, 10), closed);
        assert!(closed > 10_000);

        let mut last = u32::MAX;
        for k in 1..50 {
            let t = depth_for_epsilon(&DepthPolicy::target(k as f64 / 50.0, 1.0), 10);
            assert!(t <= last);
            last = t;
        }
        assert_eq!(depth_for_epsilon(&DepthPolicy::fixed(7), 10), 7);
        // huge C: still at least 3, tiny C: clamped to 3
        assert_eq!(depth_for_epsilon(&DepthPolicy::target(0.5, 1e-30), 10), 3);
    }

    #[test]
    fn policy_validation() {
        assert!(DepthPolicy::target(0.0, 1.0).validate().is_err());
        assert!(DepthPolicy::target(1.0, 1.0).validate().is_err());
        assert!(DepthPolicy::target(0.5, 0.0).validate().is_err());
        assert!(DepthPolicy::target(0.5, 2.0).validate().is_ok());
    }

    #[test]
    fn small_counts_exact() {
        let cfg = CountConfig::new(DepthPolicy::fixed(10)).with_backend(Backend::Rational);
        let r = approx_count(&full(4, &K4), &cfg).unwrap();
        assert_eq!(as_integer(&r.estimate), Some(24.into()));
        assert_eq!(product_of_reciprocals(&r.factors), r.estimate);
        let c5 = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)];
        let r = approx_count(&full(5, &c5), &cfg).unwrap();
        assert_eq!(as_integer(&r.estimate), Some(240.into()));
        for f in &r.factors {
            let p = f.marginal.to_f64();
            assert!(p > 0.0 && p <= 1.0);
        }
    }

    #[test]
    fn float_count_close() {
        let c5 = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)];
        let r = approx_count(&full(5, &c5), &CountConfig::new(DepthPolicy::fixed(10))).unwrap();
        assert!((r.estimate.to_f64() - 240.0).abs() < 1e-9 * 240.0);
    }

    #[test]
    fn forced_conflict_gives_zero() {
        // 0 and 1 both forced to color 1 by their lists, adjacent.
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let lists = ColorLists::new(vec![set(&[1]), set(&[1]), ColorSet::FULL]);
        let inst = Instance::new(g, lists).unwrap();
        assert!(forced_colors_conflict(&inst));
        let r = approx_count(&inst, &CountConfig::new(DepthPolicy::fixed(4))).unwrap();
        assert!(r.unsatisfiable);
        assert!(r.estimate.is_zero());
    }

    #[test]
    fn invalid_instance_rejected() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let lists = ColorLists::new(vec![set(&[2]), ColorSet::FULL]);
        let inst = Instance::new(g, lists).unwrap();
        assert!(matches!(
            approx_count(&inst, &CountConfig::new(DepthPolicy::fixed(4))),
            Err(CountError::Invalid(_))
        ));
    }
}
