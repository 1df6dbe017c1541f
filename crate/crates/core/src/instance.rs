//! List-coloring instances over the palette {1,2,3,4} on graphs of maximum
//! degree 3, and the surgery operations the recursion is built from.
//!
//! An [`Instance`] never renumbers vertices: removing a vertex only marks it
//! absent, so ids stay meaningful across every sub-instance of a computation
//! tree.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Vertex identifier. Ids are `0..n` and are stable under removal.
pub type Vertex = usize;

/// Number of colors in the palette.
pub const PALETTE_SIZE: usize = 4;

/// Largest degree the model accepts.
pub const MAX_DEGREE: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstanceError {
    #[error("vertex {vertex} out of range (graph has {n} vertices)")]
    VertexOutOfRange { vertex: Vertex, n: usize },
    #[error("vertex {0} has been removed")]
    VertexRemoved(Vertex),
    #[error("self-loop at vertex {0}")]
    SelfLoop(Vertex),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(Vertex, Vertex),
    #[error("vertex {vertex} has degree {degree}, maximum is 3")]
    DegreeTooLarge { vertex: Vertex, degree: usize },
    #[error("color {0} outside the palette 1..=4")]
    ColorOutOfRange(u8),
    #[error("expected {expected} color lists, found {found}")]
    ListCountMismatch { expected: usize, found: usize },
    #[error("neighbor index {k} outside 1..={len}")]
    IndexOutOfRange { k: usize, len: usize },
    #[error("vertex {vertex} has list size {list_len} but degree {degree} (need list size >= degree + 1)")]
    ListTooShort {
        vertex: Vertex,
        list_len: usize,
        degree: usize,
    },
}

/// A color of the palette, `1..=4`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Color(u8);

impl Color {
    pub const ALL: [Color; PALETTE_SIZE] = [Color(1), Color(2), Color(3), Color(4)];

    pub fn new(c: u8) -> Result<Color, InstanceError> {
        if (1..=PALETTE_SIZE as u8).contains(&c) {
            Ok(Color(c))
        } else {
            Err(InstanceError::ColorOutOfRange(c))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Zero-based position in the palette.
    pub fn index(self) -> usize {
        (self.0 - 1) as usize
    }
}

impl TryFrom<u8> for Color {
    type Error = InstanceError;
    fn try_from(c: u8) -> Result<Self, Self::Error> {
        Color::new(c)
    }
}

impl From<Color> for u8 {
    fn from(c: Color) -> u8 {
        c.0
    }
}

impl fmt::Debug for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A subset of the palette, stored as a 4-bit mask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ColorSet(u8);

impl ColorSet {
    pub const EMPTY: ColorSet = ColorSet(0);
    pub const FULL: ColorSet = ColorSet(0b1111);

    pub fn from_bits(bits: u8) -> ColorSet {
        ColorSet(bits & 0b1111)
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn contains(self, c: Color) -> bool {
        self.0 & (1 << c.index()) != 0
    }

    #[must_use]
    pub fn with(self, c: Color) -> ColorSet {
        ColorSet(self.0 | (1 << c.index()))
    }

    #[must_use]
    pub fn without(self, c: Color) -> ColorSet {
        ColorSet(self.0 & !(1 << c.index()))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Colors in ascending order.
    pub fn iter(self) -> impl Iterator<Item = Color> {
        Color::ALL.into_iter().filter(move |&c| self.contains(c))
    }

    #[must_use]
    pub fn union(self, other: ColorSet) -> ColorSet {
        ColorSet(self.0 | other.0)
    }

    #[must_use]
    pub fn complement(self) -> ColorSet {
        ColorSet(!self.0 & 0b1111)
    }
}

impl FromIterator<Color> for ColorSet {
    fn from_iter<I: IntoIterator<Item = Color>>(iter: I) -> Self {
        iter.into_iter().fold(ColorSet::EMPTY, ColorSet::with)
    }
}

impl fmt::Debug for ColorSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, c) in self.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str("}")
    }
}

static NEXT_GRAPH_ID: AtomicU64 = AtomicU64::new(1);

/// Simple undirected graph with maximum degree 3. Adjacency lists are sorted
/// ascending, which is the canonical neighbor order used everywhere.
#[derive(Clone)]
pub struct Graph {
    id: u64,
    adj: Vec<Vec<Vertex>>,
}

impl Graph {
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Graph, InstanceError>
    where
        I: IntoIterator<Item = (Vertex, Vertex)>,
    {
        let mut adj = vec![Vec::new(); n];
        for (u, v) in edges {
            for w in [u, v] {
                if w >= n {
                    return Err(InstanceError::VertexOutOfRange { vertex: w, n });
                }
            }
            if u == v {
                return Err(InstanceError::SelfLoop(u));
            }
            if adj[u].contains(&v) {
                return Err(InstanceError::DuplicateEdge(u.min(v), u.max(v)));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for (v, nbrs) in adj.iter_mut().enumerate() {
            if nbrs.len() > MAX_DEGREE {
                return Err(InstanceError::DegreeTooLarge {
                    vertex: v,
                    degree: nbrs.len(),
                });
            }
            nbrs.sort_unstable();
        }
        Ok(Graph {
            id: NEXT_GRAPH_ID.fetch_add(1, Ordering::Relaxed),
            adj,
        })
    }

    pub fn empty(n: usize) -> Graph {
        Graph::from_edges(n, std::iter::empty()).expect("edgeless graph is valid")
    }

    /// Process-unique identity used to scope memo tables. Clones share it.
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn num_vertices(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.adj[v]
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn num_edges(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(Vertex, Vertex)> {
        let mut out = Vec::with_capacity(self.num_edges());
        for (u, nbrs) in self.adj.iter().enumerate() {
            out.extend(nbrs.iter().filter(|&&v| v > u).map(|&v| (u, v)));
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        let n = self.num_vertices();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &w in &self.adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == n
    }
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.adj == other.adj
    }
}

impl Eq for Graph {}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("n", &self.num_vertices())
            .field("edges", &self.edges())
            .finish()
    }
}

/// Per-vertex color lists.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ColorLists(Vec<ColorSet>);

impl ColorLists {
    pub fn new(lists: Vec<ColorSet>) -> ColorLists {
        ColorLists(lists)
    }

    pub fn full(n: usize) -> ColorLists {
        ColorLists(vec![ColorSet::FULL; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, v: Vertex) -> ColorSet {
        self.0[v]
    }

    pub fn set(&mut self, v: Vertex, list: ColorSet) {
        self.0[v] = list;
    }

    pub fn as_slice(&self) -> &[ColorSet] {
        &self.0
    }
}

const REMOVED: u8 = 0x10;

/// A graph together with color lists, where some vertices may have been
/// removed. Immutable: every surgery returns a new instance.
#[derive(Clone)]
pub struct Instance {
    graph: Arc<Graph>,
    // Low 4 bits: color list. `REMOVED` marks a deleted vertex.
    state: Vec<u8>,
}

impl Instance {
    pub fn new(graph: Graph, lists: ColorLists) -> Result<Instance, InstanceError> {
        Instance::with_shared_graph(Arc::new(graph), lists)
    }

    pub fn with_shared_graph(
        graph: Arc<Graph>,
        lists: ColorLists,
    ) -> Result<Instance, InstanceError> {
        if lists.len() != graph.num_vertices() {
            return Err(InstanceError::ListCountMismatch {
                expected: graph.num_vertices(),
                found: lists.len(),
            });
        }
        let state = lists.as_slice().iter().map(|l| l.bits()).collect();
        Ok(Instance { graph, state })
    }

    pub fn with_full_lists(graph: Graph) -> Instance {
        let n = graph.num_vertices();
        Instance::new(graph, ColorLists::full(n)).expect("list count matches")
    }

    /// The underlying graph before any removals.
    pub fn base_graph(&self) -> &Graph {
        &self.graph
    }

    pub fn shared_graph(&self) -> &Arc<Graph> {
        &self.graph
    }

    /// Number of vertex ids (present or removed).
    pub fn capacity(&self) -> usize {
        self.state.len()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        v < self.state.len() && self.state[v] & REMOVED == 0
    }

    /// Present vertices in ascending order.
    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        (0..self.state.len()).filter(move |&v| self.state[v] & REMOVED == 0)
    }

    pub fn num_vertices(&self) -> usize {
        self.state.iter().filter(|&&s| s & REMOVED == 0).count()
    }

    pub fn is_empty(&self) -> bool {
        self.num_vertices() == 0
    }

    pub fn list(&self, v: Vertex) -> ColorSet {
        ColorSet::from_bits(self.state[v])
    }

    pub fn lists(&self) -> ColorLists {
        ColorLists(self.state.iter().map(|&s| ColorSet::from_bits(s)).collect())
    }

    /// Present neighbors of `v` in ascending id order.
    pub fn neighbors(&self, v: Vertex) -> impl Iterator<Item = Vertex> + '_ {
        self.graph.adj[v]
            .iter()
            .copied()
            .filter(move |&w| self.state[w] & REMOVED == 0)
    }

    pub fn neighbor_vec(&self, v: Vertex) -> Vec<Vertex> {
        self.neighbors(v).collect()
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.neighbors(v).count()
    }

    pub fn adjacent(&self, u: Vertex, v: Vertex) -> bool {
        self.contains(u) && self.contains(v) && self.graph.adj[u].contains(&v)
    }

    pub fn num_edges(&self) -> usize {
        self.vertices().map(|v| self.degree(v)).sum::<usize>() / 2
    }

    /// Edges among present vertices, `(u, v)` with `u < v`.
    pub fn edges(&self) -> Vec<(Vertex, Vertex)> {
        self.graph
            .edges()
            .into_iter()
            .filter(|&(u, v)| self.contains(u) && self.contains(v))
            .collect()
    }

    pub(crate) fn state_byte(&self, v: Vertex) -> u8 {
        self.state[v]
    }

    fn check_present(&self, v: Vertex) -> Result<(), InstanceError> {
        if v >= self.state.len() {
            Err(InstanceError::VertexOutOfRange {
                vertex: v,
                n: self.state.len(),
            })
        } else if self.state[v] & REMOVED != 0 {
            Err(InstanceError::VertexRemoved(v))
        } else {
            Ok(())
        }
    }

    /// `|L(v)| >= deg(v) + 1` for every present vertex.
    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        for v in self.vertices() {
            let degree = self.degree(v);
            let list_len = self.list(v).len();
            if list_len < degree + 1 {
                return Err(InstanceError::ListTooShort {
                    vertex: v,
                    list_len,
                    degree,
                });
            }
        }
        Ok(())
    }

    /// Deletes `v` and its incident edges (`G_v`).
    pub fn remove_vertex(&self, v: Vertex) -> Result<Instance, InstanceError> {
        self.check_present(v)?;
        Ok(self.without(v))
    }

    pub(crate) fn without(&self, v: Vertex) -> Instance {
        let mut state = self.state.clone();
        state[v] |= REMOVED;
        Instance {
            graph: Arc::clone(&self.graph),
            state,
        }
    }

    /// Removes color `i` from the lists of `ordered_neighbors[l]` for every
    /// `l < k` (1-based `k`), leaving everything else untouched (`L_{k,i}`).
    pub fn restrict_lists(
        &self,
        ordered_neighbors: &[Vertex],
        k: usize,
        i: Color,
    ) -> Result<Instance, InstanceError> {
        if k == 0 || k > ordered_neighbors.len() {
            return Err(InstanceError::IndexOutOfRange {
                k,
                len: ordered_neighbors.len(),
            });
        }
        for &u in &ordered_neighbors[..k - 1] {
            self.check_present(u)?;
        }
        Ok(self.with_color_removed(&ordered_neighbors[..k - 1], i))
    }

    pub(crate) fn with_color_removed(&self, targets: &[Vertex], i: Color) -> Instance {
        let mut state = self.state.clone();
        let mask = !(1u8 << i.index());
        for &u in targets {
            state[u] &= mask;
        }
        Instance {
            graph: Arc::clone(&self.graph),
            state,
        }
    }

    /// Replaces the list of a present vertex.
    pub fn with_list(&self, v: Vertex, list: ColorSet) -> Result<Instance, InstanceError> {
        self.check_present(v)?;
        let mut state = self.state.clone();
        state[v] = list.bits();
        Ok(Instance {
            graph: Arc::clone(&self.graph),
            state,
        })
    }

    /// Tests whether `(G, L, target)` is reachable: every vertex satisfies
    /// `|L(u)| >= deg(u) + 1`, and the target has degree at most 2 with
    /// `|L(target)| >= deg(target) + 2`.
    pub fn check_reachable(&self, target: Vertex) -> ReachabilityWitness {
        let fail = |msg: String| ReachabilityWitness {
            target,
            satisfied: false,
            violated_condition: Some(msg),
        };
        if !self.contains(target) {
            return fail(format!("target {target} is not a vertex of the instance"));
        }
        if let Err(InstanceError::ListTooShort { vertex, .. }) = self.validate() {
            return fail(format!("|L(u)| ≥ deg(u)+1 for u = {vertex}"));
        }
        let degree = self.degree(target);
        if degree > 2 {
            return fail("deg(target) ≤ 2".to_string());
        }
        if self.list(target).len() < degree + 2 {
            return fail("|L(target)| ≥ deg(target)+2".to_string());
        }
        ReachabilityWitness {
            target,
            satisfied: true,
            violated_condition: None,
        }
    }
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.state == other.state && (Arc::ptr_eq(&self.graph, &other.graph) || self.graph == other.graph)
    }
}

impl Eq for Instance {}

impl fmt::Debug for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lists: Vec<String> = self
            .vertices()
            .map(|v| format!("{v}:{:?}", self.list(v)))
            .collect();
        f.debug_struct("Instance")
            .field("edges", &self.edges())
            .field("lists", &lists)
            .finish()
    }
}

/// Outcome of [`Instance::check_reachable`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReachabilityWitness {
    pub target: Vertex,
    pub satisfied: bool,
    pub violated_condition: Option<String>,
}
