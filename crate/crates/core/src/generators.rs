//! Named graphs, seeded random instances, and exhaustive small graphs.
//!
//! Randomness comes from xoshiro256** seeded through SplitMix64
//! (`Xoshiro256StarStar::seed_from_u64`). Draws are:
//! - integer in `[0, k)`: `next_u64() % k`;
//! - uniform real in `[0, 1)`: `(next_u64() >> 11) · 2^-53`.
//!
//! `random_cubic` shuffles the `3n` half-edges with Fisher–Yates (for
//! `k = 3n−1` down to 1, swap `k` with `next_u64() % (k+1)`), pairs
//! consecutive entries, and redraws the whole pairing if it has a loop or a
//! repeated edge. `random_subcubic` visits pairs `u < v` in lexicographic
//! order, draws one real per pair, and keeps the edge if the draw is below
//! `p` and both endpoints still have degree below 3. `random_valid` lists
//! visit vertices in ascending order, draw `r = next_u64() % (4 − deg)`
//! colors to remove, then remove them one by one, each time taking index
//! `next_u64() % len` of the remaining colors in ascending order.

use std::collections::BTreeSet;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;
use thiserror::Error;

use crate::instance::{ColorLists, ColorSet, Graph, Instance, InstanceError, Vertex, MAX_DEGREE};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("infeasible family: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Family {
    CompleteK4,
    Cycle(usize),
    Path(usize),
    Star3,
    Petersen,
    Kp33,
    RandomCubic { n: usize, seed: u64 },
    RandomSubcubic { n: usize, p: f64, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ListPolicy {
    Full,
    RandomValid { seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorpusSpec {
    pub family: Family,
    pub lists: ListPolicy,
}

impl CorpusSpec {
    pub fn full(family: Family) -> Self {
        CorpusSpec { family, lists: ListPolicy::Full }
    }
}

fn rng(seed: u64) -> Xoshiro256StarStar {
    Xoshiro256StarStar::seed_from_u64(seed)
}

fn unit(r: &mut impl RngCore) -> f64 {
    (r.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn generate(spec: &CorpusSpec) -> Result<Instance, GenError> {
    let graph = graph(&spec.family)?;
    let lists = match spec.lists {
        ListPolicy::Full => ColorLists::full(graph.num_vertices()),
        ListPolicy::RandomValid { seed } => random_valid_lists(&graph, seed),
    };
    Ok(Instance::new(graph, lists)?)
}

pub fn graph(family: &Family) -> Result<Graph, GenError> {
    let g = match *family {
        Family::CompleteK4 => Graph::from_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])?,
        Family::Cycle(n) => {
            if n < 3 {
                return Err(GenError::Infeasible(format!("cycle needs n >= 3, got {n}")));
            }
            Graph::from_edges(n, (0..n).map(|k| (k, (k + 1) % n)))?
        }
        Family::Path(n) => {
            if n == 0 {
                return Err(GenError::Infeasible("path needs n >= 1".into()));
            }
            Graph::from_edges(n, (1..n).map(|k| (k - 1, k)))?
        }
        Family::Star3 => Graph::from_edges(4, [(0, 1), (0, 2), (0, 3)])?,
        Family::Petersen => Graph::from_edges(
            10,
            (0..5).flat_map(|i| [(i, (i + 1) % 5), (i, i + 5), (5 + i, 5 + (i + 2) % 5)]),
        )?,
        Family::Kp33 => Graph::from_edges(6, (0..3).flat_map(|a| (3..6).map(move |b| (a, b))))?,
        Family::RandomCubic { n, seed } => random_cubic(n, seed)?,
        Family::RandomSubcubic { n, p, seed } => {
            if !(0.0..=1.0).contains(&p) {
                return Err(GenError::Infeasible(format!("edge probability {p} not in [0, 1]")));
            }
            random_subcubic(n, p, seed)
        }
    };
    Ok(g)
}

pub fn petersen() -> Instance {
    Instance::with_full_lists(graph(&Family::Petersen).expect("petersen"))
}

fn random_cubic(n: usize, seed: u64) -> Result<Graph, GenError> {
    if n < 4 || n % 2 == 1 {
        return Err(GenError::Infeasible(format!("cubic graphs need even n >= 4, got {n}")));
    }
    let mut r = rng(seed);
    let mut points: Vec<Vertex> = (0..3 * n).map(|k| k / 3).collect();
    loop {
        for k in (1..points.len()).rev() {
            let j = (r.next_u64() % (k as u64 + 1)) as usize;
            points.swap(k, j);
        }
        let mut seen = BTreeSet::new();
        let ok = points.chunks(2).all(|e| {
            let (u, v) = (e[0].min(e[1]), e[0].max(e[1]));
            u != v && seen.insert((u, v))
        });
        if ok {
            return Ok(Graph::from_edges(n, seen)?);
        }
    }
}

fn random_subcubic(n: usize, p: f64, seed: u64) -> Graph {
    let mut r = rng(seed);
    let mut deg = vec![0usize; n];
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let x = unit(&mut r);
            if x < p && deg[u] < MAX_DEGREE && deg[v] < MAX_DEGREE {
                deg[u] += 1;
                deg[v] += 1;
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges).expect("degrees are capped")
}

/// Lists with `|L(v)| ≥ deg(v) + 1`: start full and remove up to
/// `3 − deg(v)` colors.
pub fn random_valid_lists(graph: &Graph, seed: u64) -> ColorLists {
    let mut r = rng(seed);
    let lists = (0..graph.num_vertices())
        .map(|v| {
            let removable = (MAX_DEGREE - graph.degree(v)) as u64;
            let k = r.next_u64() % (removable + 1);
            let mut list = ColorSet::FULL;
            for _ in 0..k {
                let colors: Vec<_> = list.iter().collect();
                let pick = colors[(r.next_u64() % colors.len() as u64) as usize];
                list = list.without(pick);
            }
            list
        })
        .collect();
    ColorLists::new(lists)
}

/// A random reachable pair `(instance, target)` for fuzzing: a subcubic
/// graph on `1..=n_max` vertices with `random_valid` lists, a target of
/// degree at most 2, and the target's list topped up to `deg + 2` colors.
pub fn random_reachable(n_max: usize, seed: u64) -> (Instance, Vertex) {
    let mut r = rng(seed);
    let n = 1 + (r.next_u64() % n_max.max(1) as u64) as usize;
    let p = 0.15 + 0.5 * unit(&mut r);
    let g = random_subcubic(n, p, r.next_u64());
    let lists = random_valid_lists(&g, r.next_u64());
    let mut inst = Instance::new(g, lists).expect("generated lists fit the graph");
    let mut candidates: Vec<Vertex> = inst.vertices().filter(|&v| inst.degree(v) <= 2).collect();
    if candidates.is_empty() {
        // Every vertex is cubic; dropping one frees its neighbors.
        inst = inst.without(0);
        candidates = inst.vertices().filter(|&v| inst.degree(v) <= 2).collect();
    }
    let v = candidates[(r.next_u64() % candidates.len() as u64) as usize];
    let mut list = inst.list(v);
    while list.len() < inst.degree(v) + 2 {
        let missing: Vec<_> = list.complement().iter().collect();
        list = list.with(missing[(r.next_u64() % missing.len() as u64) as usize]);
    }
    let inst = inst.with_list(v, list).expect("target is present");
    debug_assert!(inst.check_reachable(v).satisfied);
    (inst, v)
}

/// All connected graphs with `1..=n_max` vertices and maximum degree at
/// most 3, one per isomorphism class, with full lists. Ordered by vertex
/// count, then canonical adjacency code.
pub fn enumerate_small(n_max: usize) -> Vec<Instance> {
    assert!(n_max <= 8, "enumerate_small supports n_max <= 8");
    let mut out = Vec::new();
    if n_max == 0 {
        return out;
    }
    let mut level: BTreeSet<u32> = BTreeSet::from([0]);
    for n in 1..=n_max {
        for &code in &level {
            let g = Graph::from_edges(n, decode(n, code)).expect("enumerated graph");
            out.push(Instance::with_full_lists(g));
        }
        if n == n_max {
            break;
        }
        let mut next = BTreeSet::new();
        for &code in &level {
            let edges = decode(n, code);
            let mut deg = vec![0usize; n];
            for &(u, v) in &edges {
                deg[u] += 1;
                deg[v] += 1;
            }
            let open: Vec<Vertex> = (0..n).filter(|&v| deg[v] < MAX_DEGREE).collect();
            for mask in 1u32..(1 << open.len()) {
                if mask.count_ones() as usize > MAX_DEGREE {
                    continue;
                }
                let mut e = edges.clone();
                e.extend(open.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &u)| (u, n)));
                next.insert(canonical(n + 1, &e));
            }
        }
        level = next;
    }
    out
}

fn pair_bit(n: usize, u: usize, v: usize) -> u32 {
    // Position of (u, v), u < v, in the row-major upper triangle.
    let (u, v) = (u.min(v), u.max(v));
    (u * (2 * n - u - 1) / 2 + (v - u - 1)) as u32
}

fn decode(n: usize, code: u32) -> Vec<(Vertex, Vertex)> {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if code >> pair_bit(n, u, v) & 1 == 1 {
                edges.push((u, v));
            }
        }
    }
    edges
}

/// Smallest adjacency code over relabellings that respect a color
/// refinement of the vertices.
fn canonical(n: usize, edges: &[(Vertex, Vertex)]) -> u32 {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut color: Vec<usize> = adj.iter().map(Vec::len).collect();
    loop {
        let sig: Vec<(usize, Vec<usize>)> = (0..n)
            .map(|v| {
                let mut s: Vec<usize> = adj[v].iter().map(|&w| color[w]).collect();
                s.sort_unstable();
                (color[v], s)
            })
            .collect();
        let classes: BTreeSet<&(usize, Vec<usize>)> = sig.iter().collect();
        let classes: Vec<_> = classes.into_iter().collect();
        let refined: Vec<usize> = sig.iter().map(|s| classes.binary_search(&s).unwrap()).collect();
        let before = color.iter().collect::<BTreeSet<_>>().len();
        color = refined;
        if classes.len() == before {
            break;
        }
    }
    // Cells in color order; new labels are assigned cell by cell.
    let mut cells: Vec<Vec<Vertex>> = Vec::new();
    for c in 0..n {
        let cell: Vec<Vertex> = (0..n).filter(|&v| color[v] == c).collect();
        if !cell.is_empty() {
            cells.push(cell);
        }
    }
    let mut best = u32::MAX;
    let mut label = vec![0usize; n];
    let mut cells_perm = cells.clone();
    search_labels(&mut cells_perm, 0, 0, &mut label, edges, n, &mut best);
    best
}

fn search_labels(
    cells: &mut [Vec<Vertex>],
    cell: usize,
    next: usize,
    label: &mut [usize],
    edges: &[(Vertex, Vertex)],
    n: usize,
    best: &mut u32,
) {
    if cell == cells.len() {
        let code = edges.iter().fold(0u32, |acc, &(u, v)| acc | 1 << pair_bit(n, label[u], label[v]));
        *best = (*best).min(code);
        return;
    }
    permute(cells, cell, 0, next, label, edges, n, best);
}

#[allow(clippy::too_many_arguments)]
fn permute(
    cells: &mut [Vec<Vertex>],
    cell: usize,
    k: usize,
    next: usize,
    label: &mut [usize],
    edges: &[(Vertex, Vertex)],
    n: usize,
    best: &mut u32,
) {
    let len = cells[cell].len();
    if k == len {
        for (off, &v) in cells[cell].iter().enumerate() {
            label[v] = next + off;
        }
        search_labels(cells, cell + 1, next + len, label, edges, n, best);
        return;
    }
    for j in k..len {
        cells[cell].swap(k, j);
        permute(cells, cell, k + 1, next, label, edges, n, best);
        cells[cell].swap(k, j);
    }
}
