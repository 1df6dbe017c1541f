//! Depth-bounded recursive estimation of `Pr[c(v) = i]`.
//!
//! None of the sub-queries issued at a node depend on the queried color `i`
//! (they depend on the colors of the children instead), so the estimator
//! evaluates all four colors of a vertex at once. One node of the
//! computation tree is a [`LocalStep`]: a list of child queries plus the
//! rule combining their marginals. The same steps drive the recursion and
//! the one-level contraction checks in the test-suite.

use std::cell::RefCell;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};

use dashmap::DashMap;
use rayon::prelude::*;
use rustc_hash::FxBuildHasher;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{Color, ColorSet, Instance, InstanceError, Vertex};
use crate::scalar::{Backend, Probability, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EstimateError {
    #[error("sub-instance at vertex {vertex} admits no proper coloring")]
    Unsatisfiable { vertex: Vertex },
    #[error("precondition violated: {0}")]
    Contract(String),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub depth: u32,
    pub backend: Backend,
    pub memoize: bool,
    pub parallel: bool,
}

impl EstimatorConfig {
    pub fn new(depth: u32) -> Self {
        EstimatorConfig {
            depth,
            backend: Backend::Float,
            memoize: true,
            parallel: true,
        }
    }

    pub fn rational(mut self) -> Self {
        self.backend = Backend::Rational;
        self
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

/// A child marginal referenced by a combination rule: either a value known
/// to be zero (the color is not in the child's list) or color `color` of
/// query `query`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Operand {
    Zero,
    Child { query: usize, color: Color },
}

impl Operand {
    fn eval<T: Scalar>(self, values: &[[T; 4]]) -> T {
        match self {
            Operand::Zero => T::zero(),
            Operand::Child { query, color } => values[query][color.index()].clone(),
        }
    }
}

/// One recursive call issued by a step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChildQuery {
    pub instance: Instance,
    pub vertex: Vertex,
    pub depth: u32,
}

/// First-neighbor expansion of a degree-2 node: `x[k][w]` is the estimate
/// for `u_{k+1}` taking color `w` in `G_{v,v1}` under `L'_{k+1,w}`.
#[derive(Clone, Debug)]
pub struct InnerExpansion {
    pub list_v1: ColorSet,
    pub x: Vec<[Operand; 4]>,
}

#[derive(Clone, Debug)]
pub enum Rule {
    /// Degree-1 closed forms; `x[c]` is the neighbor's marginal for `c`.
    Degree1 { list: ColorSet, x: [Operand; 4] },
    /// `(1 - f_i) Π_m (1 - factors[m][i])`, normalized over `L(v)`.
    /// Degree 2 has the inner expansion and one factor (`y`); degree 3 has
    /// no inner expansion and three factors.
    Product {
        list: ColorSet,
        inner: Option<InnerExpansion>,
        factors: Vec<[Operand; 4]>,
    },
}

#[derive(Clone, Debug)]
pub struct LocalStep {
    pub vertex: Vertex,
    pub degree: usize,
    pub queries: Vec<ChildQuery>,
    pub rule: Rule,
}

/// What a node of the computation tree does.
#[derive(Clone, Debug)]
pub enum Expansion {
    /// Leaf: uniform over the list (depth exhausted or isolated vertex).
    Uniform(ColorSet),
    Step(LocalStep),
}

impl LocalStep {
    /// Every operand that refers to a child, in rule order.
    pub fn operands(&self) -> Vec<(usize, Color)> {
        let mut out = Vec::new();
        let mut push = |ops: &[Operand; 4]| {
            for op in ops {
                if let Operand::Child { query, color } = *op {
                    if !out.contains(&(query, color)) {
                        out.push((query, color));
                    }
                }
            }
        };
        match &self.rule {
            Rule::Degree1 { x, .. } => push(x),
            Rule::Product { inner, factors, .. } => {
                if let Some(inner) = inner {
                    inner.x.iter().for_each(&mut push);
                }
                factors.iter().for_each(&mut push);
            }
        }
        out
    }

    /// The normalized first-neighbor weights `f_j` of a degree-2 step
    /// (zero outside `L(v1)`); `None` for other steps.
    pub fn inner_weights<T: Scalar>(
        &self,
        values: &[[T; 4]],
    ) -> Option<Result<[T; 4], EstimateError>> {
        match &self.rule {
            Rule::Product {
                inner: Some(inner), ..
            } => Some(self.f_values(inner, values)),
            _ => None,
        }
    }

    fn f_values<T: Scalar>(
        &self,
        inner: &InnerExpansion,
        values: &[[T; 4]],
    ) -> Result<[T; 4], EstimateError> {
        let mut f: [T; 4] = std::array::from_fn(|_| T::zero());
        if inner.list_v1.is_empty() {
            return Ok(f);
        }
        if inner.x.is_empty() {
            let u = T::ratio(1, inner.list_v1.len() as u64);
            for w in inner.list_v1.iter() {
                f[w.index()] = u.clone();
            }
            return Ok(f);
        }
        let mut total = T::zero();
        for w in inner.list_v1.iter() {
            let mut prod = T::one();
            for xk in &inner.x {
                prod = prod * (T::one() - xk[w.index()].eval(values));
            }
            total = total + prod.clone();
            f[w.index()] = prod;
        }
        if total.is_zero() {
            return Err(EstimateError::Unsatisfiable { vertex: self.vertex });
        }
        for w in inner.list_v1.iter() {
            f[w.index()] = f[w.index()].clone() / total.clone();
        }
        Ok(f)
    }

    /// Combines child marginals (indexed like `queries`) into the marginals
    /// of `vertex` for all four colors.
    pub fn combine<T: Scalar>(&self, values: &[[T; 4]]) -> Result<[T; 4], EstimateError> {
        debug_assert_eq!(values.len(), self.queries.len());
        let mut out: [T; 4] = std::array::from_fn(|_| T::zero());
        match &self.rule {
            Rule::Degree1 { list, x } => {
                let val = |c: Color| x[c.index()].eval(values);
                match list.len() {
                    2 => {
                        let mut it = list.iter();
                        let (a, b) = (it.next().unwrap(), it.next().unwrap());
                        let (xa, xb) = (val(a), val(b));
                        let den = T::ratio(2, 1) - xa.clone() - xb.clone();
                        if den.is_zero() {
                            return Err(EstimateError::Unsatisfiable { vertex: self.vertex });
                        }
                        out[a.index()] = (T::one() - xa) / den.clone();
                        out[b.index()] = (T::one() - xb) / den;
                    }
                    3 => {
                        let absent = list.complement().iter().next().unwrap();
                        let den = T::ratio(2, 1) + val(absent);
                        for c in list.iter() {
                            out[c.index()] = (T::one() - val(c)) / den.clone();
                        }
                    }
                    4 => {
                        let three = T::ratio(3, 1);
                        for c in list.iter() {
                            out[c.index()] = (T::one() - val(c)) / three.clone();
                        }
                    }
                    n => unreachable!("degree-1 step built with list size {n}"),
                }
            }
            Rule::Product {
                list,
                inner,
                factors,
            } => {
                let f = match inner {
                    Some(inner) => Some(self.f_values(inner, values)?),
                    None => None,
                };
                let mut total = T::zero();
                for j in list.iter() {
                    let mut w = match &f {
                        Some(f) => T::one() - f[j.index()].clone(),
                        None => T::one(),
                    };
                    for fac in factors {
                        w = w * (T::one() - fac[j.index()].eval(values));
                    }
                    total = total + w.clone();
                    out[j.index()] = w;
                }
                if total.is_zero() {
                    return Err(EstimateError::Unsatisfiable { vertex: self.vertex });
                }
                for j in list.iter() {
                    out[j.index()] = out[j.index()].clone() / total.clone();
                }
            }
        }
        Ok(out)
    }
}

fn uniform<T: Scalar>(list: ColorSet) -> [T; 4] {
    let mut out: [T; 4] = std::array::from_fn(|_| T::zero());
    if !list.is_empty() {
        let u = T::ratio(1, list.len() as u64);
        for c in list.iter() {
            out[c.index()] = u.clone();
        }
    }
    out
}

#[derive(Default)]
struct QueryBuilder {
    queries: Vec<ChildQuery>,
}

impl QueryBuilder {
    /// Operand for color `c` of `vertex` in `instance`, deduplicating
    /// identical sub-instances and skipping colors absent from the list.
    fn operand(&mut self, instance: &Instance, vertex: Vertex, depth: u32, c: Color) -> Operand {
        if !instance.list(vertex).contains(c) {
            return Operand::Zero;
        }
        let query = match self
            .queries
            .iter()
            .position(|q| q.vertex == vertex && q.depth == depth && q.instance == *instance)
        {
            Some(k) => k,
            None => {
                self.queries.push(ChildQuery {
                    instance: instance.clone(),
                    vertex,
                    depth,
                });
                self.queries.len() - 1
            }
        };
        Operand::Child { query, color: c }
    }
}

/// Default neighbor order for a degree-2 vertex: higher degree first, then
/// lower id.
fn degree2_order(inst: &Instance, v: Vertex) -> (Vertex, Vertex) {
    let n = inst.neighbor_vec(v);
    let (a, b) = (n[0], n[1]);
    if inst.degree(b) > inst.degree(a) {
        (b, a)
    } else {
        (a, b)
    }
}

/// Expands node `(inst, v)` at `depth` into a leaf or a local step.
pub fn expand(inst: &Instance, v: Vertex, depth: u32) -> Result<Expansion, EstimateError> {
    if !inst.contains(v) {
        return Err(if v >= inst.capacity() {
            InstanceError::VertexOutOfRange {
                vertex: v,
                n: inst.capacity(),
            }
        } else {
            InstanceError::VertexRemoved(v)
        }
        .into());
    }
    let list = inst.list(v);
    let degree = inst.degree(v);
    if list.is_empty() || depth == 0 || degree == 0 {
        return Ok(Expansion::Uniform(list));
    }
    build_step(inst, v, depth, None).map(Expansion::Step)
}

fn build_step(
    inst: &Instance,
    v: Vertex,
    depth: u32,
    order2: Option<(Vertex, Vertex)>,
) -> Result<LocalStep, EstimateError> {
    let list = inst.list(v);
    let nbrs = inst.neighbor_vec(v);
    let child_depth = depth.saturating_sub(1);
    let gv = inst.without(v);
    let mut qb = QueryBuilder::default();
    let rule = match nbrs.len() {
        1 => {
            if !(2..=4).contains(&list.len()) {
                return Err(EstimateError::Contract(format!(
                    "degree-1 vertex {v} needs 2 to 4 colors, has {}",
                    list.len()
                )));
            }
            let v1 = nbrs[0];
            let x = Color::ALL.map(|c| qb.operand(&gv, v1, child_depth, c));
            Rule::Degree1 { list, x }
        }
        2 => {
            let (v1, v2) = order2.unwrap_or_else(|| degree2_order(inst, v));
            let list_v1 = inst.list(v1);
            let us = gv.neighbor_vec(v1);
            let gvv1 = gv.without(v1);
            let mut x = Vec::with_capacity(us.len());
            for k in 0..us.len() {
                let mut row = [Operand::Zero; 4];
                if k == 0 {
                    for w in list_v1.iter() {
                        row[w.index()] = qb.operand(&gvv1, us[0], child_depth, w);
                    }
                } else {
                    for w in list_v1.iter() {
                        if !gvv1.list(us[k]).contains(w) {
                            continue;
                        }
                        let sub = gvv1.with_color_removed(&us[..k], w);
                        row[w.index()] = qb.operand(&sub, us[k], child_depth, w);
                    }
                }
                x.push(row);
            }
            let mut y = [Operand::Zero; 4];
            for j in list.iter() {
                if !gv.list(v2).contains(j) {
                    continue;
                }
                let sub = gv.with_color_removed(&[v1], j);
                y[j.index()] = qb.operand(&sub, v2, child_depth, j);
            }
            Rule::Product {
                list,
                inner: Some(InnerExpansion { list_v1, x }),
                factors: vec![y],
            }
        }
        3 => {
            if list.len() != 4 {
                return Err(EstimateError::Contract(format!(
                    "degree-3 vertex {v} needs the full palette, has {} colors",
                    list.len()
                )));
            }
            // Depth is passed through unchanged here; this only happens at
            // the root, since every other node has degree at most 2.
            let mut factors = Vec::with_capacity(3);
            for k in 0..3 {
                let mut row = [Operand::Zero; 4];
                for j in list.iter() {
                    if !gv.list(nbrs[k]).contains(j) {
                        continue;
                    }
                    let sub = gv.with_color_removed(&nbrs[..k], j);
                    row[j.index()] = qb.operand(&sub, nbrs[k], depth, j);
                }
                factors.push(row);
            }
            Rule::Product {
                list,
                inner: None,
                factors,
            }
        }
        d => unreachable!("graph invariant violated: degree {d}"),
    };
    Ok(LocalStep {
        vertex: v,
        degree: nbrs.len(),
        queries: qb.queries,
        rule,
    })
}

// Below this depth a node is cheap enough that caching and task spawning
// cost more than they save.
const MEMO_MIN_DEPTH: u32 = 2;
const PARALLEL_MIN_DEPTH: u32 = 3;
const DEFAULT_MEMO_WORDS: usize = 1 << 25;

#[derive(Hash, PartialEq, Eq)]
struct MemoKey {
    graph: u64,
    vertex: u32,
    depth: u32,
    // (id << 4 | list bits) of every present vertex within the dependency
    // radius, ascending.
    ball: Box<[u32]>,
}

thread_local! {
    static SCRATCH: RefCell<(Vec<u32>, u32)> = const { RefCell::new((Vec::new(), 0)) };
}

/// Everything the value at `(inst, v, depth)` can depend on: present
/// vertices within distance `2·depth` (plus one for a degree-3 target,
/// whose children keep the depth) and their lists. A degree-2 step looks
/// two hops out per unit of depth.
fn memo_key(inst: &Instance, v: Vertex, depth: u32) -> MemoKey {
    let radius = 2 * depth + u32::from(inst.degree(v) == 3);
    SCRATCH.with(|cell| {
        let (stamps, gen) = &mut *cell.borrow_mut();
        if stamps.len() < inst.capacity() {
            stamps.resize(inst.capacity(), 0);
        }
        *gen = gen.wrapping_add(1);
        if *gen == 0 {
            stamps.iter_mut().for_each(|s| *s = 0);
            *gen = 1;
        }
        let g = *gen;
        let mut frontier = vec![v];
        let mut ball = vec![v];
        stamps[v] = g;
        for _ in 0..radius {
            let mut next = Vec::new();
            for &u in &frontier {
                for w in inst.neighbors(u) {
                    if stamps[w] != g {
                        stamps[w] = g;
                        next.push(w);
                        ball.push(w);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        ball.sort_unstable();
        MemoKey {
            graph: inst.base_graph().id(),
            vertex: v as u32,
            depth,
            ball: ball
                .into_iter()
                .map(|u| ((u as u32) << 4) | u32::from(inst.state_byte(u) & 0xF))
                .collect(),
        }
    })
}

struct Memo<T> {
    map: DashMap<MemoKey, [T; 4], FxBuildHasher>,
    words: AtomicUsize,
    budget: usize,
}

impl<T: Scalar> Memo<T> {
    fn get(&self, key: &MemoKey) -> Option<[T; 4]> {
        self.map.get(key).map(|e| e.value().clone())
    }

    fn insert(&self, key: MemoKey, value: [T; 4]) {
        let size = key.ball.len() + 4;
        if self.words.fetch_add(size, Ordering::Relaxed) + size > self.budget {
            // Values are pure, so dropping them only costs recomputation.
            self.map.clear();
            self.words.store(size, Ordering::Relaxed);
        }
        self.map.entry(key).or_insert(value);
    }
}

/// Marginal estimator with an optional cache shared across calls. Reusing
/// one estimator across the elimination steps of a count lets the steps
/// share every sub-instance the previous fixes did not touch.
pub struct Estimator<T: Scalar> {
    memo: Option<Memo<T>>,
    parallel: bool,
}

impl<T: Scalar> Estimator<T> {
    pub fn new(memoize: bool, parallel: bool) -> Self {
        Estimator {
            memo: memoize.then(|| Memo {
                map: DashMap::with_hasher(FxBuildHasher),
                words: AtomicUsize::new(0),
                budget: DEFAULT_MEMO_WORDS,
            }),
            parallel,
        }
    }

    pub fn from_config(cfg: &EstimatorConfig) -> Self {
        Estimator::new(cfg.memoize, cfg.parallel)
    }

    /// `P(G, L, v, i, depth)` for `i = 1..=4`.
    pub fn marginals(&self, inst: &Instance, v: Vertex, depth: u32) -> Result<[T; 4], EstimateError> {
        let expansion = expand(inst, v, depth)?;
        self.eval_expansion(depth, expansion)
    }

    /// Evaluates a step's children with this estimator and combines them.
    pub fn eval_step(&self, step: &LocalStep, depth: u32) -> Result<[T; 4], EstimateError> {
        let values = self.eval_children(step, depth)?;
        step.combine(&values)
    }

    /// Child marginals of a step, indexed like `step.queries`.
    pub fn eval_children(&self, step: &LocalStep, depth: u32) -> Result<Vec<[T; 4]>, EstimateError> {
        let eval = |q: &ChildQuery| self.eval(&q.instance, q.vertex, q.depth);
        if self.parallel && depth >= PARALLEL_MIN_DEPTH {
            step.queries.par_iter().map(eval).collect()
        } else {
            step.queries.iter().map(eval).collect()
        }
    }

    fn eval(&self, inst: &Instance, v: Vertex, depth: u32) -> Result<[T; 4], EstimateError> {
        let expansion = expand(inst, v, depth)?;
        if let Expansion::Uniform(list) = expansion {
            return Ok(uniform(list));
        }
        match &self.memo {
            Some(memo) if depth >= MEMO_MIN_DEPTH => {
                let key = memo_key(inst, v, depth);
                if let Some(hit) = memo.get(&key) {
                    return Ok(hit);
                }
                let value = self.eval_expansion(depth, expansion)?;
                memo.insert(key, value.clone());
                Ok(value)
            }
            _ => self.eval_expansion(depth, expansion),
        }
    }

    fn eval_expansion(&self, depth: u32, expansion: Expansion) -> Result<[T; 4], EstimateError> {
        match expansion {
            Expansion::Uniform(list) => Ok(uniform(list)),
            Expansion::Step(step) => self.eval_step(&step, depth),
        }
    }

    /// Number of cached entries (0 without memoization).
    pub fn cache_len(&self) -> usize {
        self.memo.as_ref().map_or(0, |m| m.map.len())
    }
}

fn run<T: Scalar>(
    cfg: &EstimatorConfig,
    f: impl FnOnce(&Estimator<T>) -> Result<[T; 4], EstimateError>,
) -> Result<[Probability; 4], EstimateError> {
    let est = Estimator::<T>::from_config(cfg);
    Ok(f(&est)?.map(T::into_probability))
}

fn dispatch(
    cfg: &EstimatorConfig,
    float: impl FnOnce(&Estimator<f64>) -> Result<[f64; 4], EstimateError>,
    exact: impl FnOnce(&Estimator<num_rational::BigRational>) -> Result<[num_rational::BigRational; 4], EstimateError>,
) -> Result<[Probability; 4], EstimateError> {
    match cfg.backend {
        Backend::Float => run(cfg, float),
        Backend::Rational => run(cfg, exact),
    }
}

/// `P(G, L, v, i, D)` with `D = cfg.depth`.
pub fn estimate_marginal(
    inst: &Instance,
    v: Vertex,
    i: Color,
    cfg: &EstimatorConfig,
) -> Result<Probability, EstimateError> {
    let mut all = estimate_marginals(inst, v, cfg)?;
    Ok(std::mem::replace(&mut all[i.index()], Probability::Float(0.0)))
}

/// `P(G, L, v, i, D)` for all four colors.
pub fn estimate_marginals(
    inst: &Instance,
    v: Vertex,
    cfg: &EstimatorConfig,
) -> Result<[Probability; 4], EstimateError> {
    let d = cfg.depth;
    dispatch(cfg, |e| e.marginals(inst, v, d), |e| e.marginals(inst, v, d))
}

fn forced_step(
    inst: &Instance,
    v: Vertex,
    i: Color,
    cfg: &EstimatorConfig,
    degree: usize,
) -> Result<Probability, EstimateError> {
    expand(inst, v, 0)?; // presence check
    if inst.degree(v) != degree {
        return Err(EstimateError::Contract(format!(
            "vertex {v} has degree {}, expected {degree}",
            inst.degree(v)
        )));
    }
    if !inst.list(v).contains(i) {
        return Err(EstimateError::Contract(format!("color {i} not in L({v})")));
    }
    let order = (degree == 2).then(|| {
        let (v1, v2) = degree2_order(inst, v);
        // Both neighbors are leaves: put the one whose list misses `i` first.
        let leaves = inst.degree(v1) == 1 && inst.degree(v2) == 1;
        if leaves && !inst.list(v1).contains(i) && inst.list(v2).contains(i) {
            (v2, v1)
        } else {
            (v1, v2)
        }
    });
    let step = build_step(inst, v, cfg.depth, order)?;
    let d = cfg.depth;
    let mut all = dispatch(cfg, |e| e.eval_step(&step, d), |e| e.eval_step(&step, d))?;
    Ok(std::mem::replace(&mut all[i.index()], Probability::Float(0.0)))
}

/// Degree-1 procedure, evaluated regardless of the depth cut-off at `v`.
pub fn p1(inst: &Instance, v: Vertex, i: Color, cfg: &EstimatorConfig) -> Result<Probability, EstimateError> {
    forced_step(inst, v, i, cfg, 1)
}

/// Degree-2 procedure with the two-layer expansion through the first
/// neighbor, using the leaf-swap neighbor convention for `i`.
pub fn p2(inst: &Instance, v: Vertex, i: Color, cfg: &EstimatorConfig) -> Result<Probability, EstimateError> {
    forced_step(inst, v, i, cfg, 2)
}

/// Degree-3 procedure; children are evaluated at the same depth.
pub fn p3(inst: &Instance, v: Vertex, i: Color, cfg: &EstimatorConfig) -> Result<Probability, EstimateError> {
    forced_step(inst, v, i, cfg, 3)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryKind {
    Zero,
    HalfCase1,
    HalfCase2,
    HalfCase3,
    Interior,
}

impl BoundaryKind {
    pub fn is_half(self) -> bool {
        matches!(
            self,
            BoundaryKind::HalfCase1 | BoundaryKind::HalfCase2 | BoundaryKind::HalfCase3
        )
    }
}

impl fmt::Display for BoundaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryClass {
    pub kind: BoundaryKind,
    pub witness: String,
}

/// Classifies a reachable triple by the local structure that forces its
/// marginal to 0 or 1/2.
pub fn classify_boundary(inst: &Instance, v: Vertex, i: Color) -> Result<BoundaryClass, EstimateError> {
    let reach = inst.check_reachable(v);
    if !reach.satisfied {
        return Err(EstimateError::Contract(format!(
            "({v}, {i}) is not reachable: {}",
            reach.violated_condition.unwrap_or_default()
        )));
    }
    let lv = inst.list(v);
    let class = |kind, witness: String| Ok(BoundaryClass { kind, witness });
    if !lv.contains(i) {
        return class(BoundaryKind::Zero, format!("{i} ∉ L({v}) = {lv:?}"));
    }
    let nbrs = inst.neighbor_vec(v);
    match nbrs[..] {
        [] if lv.len() == 2 => class(
            BoundaryKind::HalfCase1,
            format!("{v} isolated with L({v}) = {lv:?}"),
        ),
        [u] => {
            let lu = inst.list(u);
            let spare = lu.union(lv).complement().without(i).iter().next();
            match spare {
                Some(j) if !lu.contains(i) => class(
                    BoundaryKind::HalfCase2,
                    format!("neighbor {u}: {i} ∉ L({u}) = {lu:?}, {j} ∉ L({u}) ∪ L({v})"),
                ),
                _ => class(BoundaryKind::Interior, String::new()),
            }
        }
        [u1, u2] if inst.adjacent(u1, u2) => {
            let (l1, l2) = (inst.list(u1), inst.list(u2));
            if l1.union(l2).contains(i) {
                class(BoundaryKind::Interior, String::new())
            } else {
                class(
                    BoundaryKind::HalfCase3,
                    format!("triangle {v}-{u1}-{u2}: {i} ∉ L({u1}) ∪ L({u2})"),
                )
            }
        }
        _ => class(BoundaryKind::Interior, String::new()),
    }
}
