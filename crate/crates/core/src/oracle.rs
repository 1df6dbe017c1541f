//! Exact list-coloring counts and marginals by backtracking.
//!
//! Vertices are assigned fail-first (smallest current list, lowest id on
//! ties). A vertex with no uncolored neighbors contributes its list size as
//! a factor without branching.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use crate::instance::{Color, ColorSet, Instance, InstanceError, Vertex};

/// Default guard on the number of present vertices.
pub const DEFAULT_VERTEX_CAP: usize = 26;

// Counts are accumulated in u128, which cannot overflow below this size.
const HARD_VERTEX_LIMIT: usize = 63;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("instance has {vertices} vertices, oracle cap is {cap}")]
    Capacity { vertices: usize, cap: usize },
    #[error("marginal undefined: the instance has no proper coloring")]
    UndefinedMeasure,
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

#[derive(Clone, Copy, Debug)]
pub struct Oracle {
    cap: usize,
}

impl Default for Oracle {
    fn default() -> Self {
        Oracle {
            cap: DEFAULT_VERTEX_CAP,
        }
    }
}

impl Oracle {
    /// Oracle with a custom vertex cap (at most 63).
    pub fn with_cap(cap: usize) -> Oracle {
        Oracle {
            cap: cap.min(HARD_VERTEX_LIMIT),
        }
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn count(&self, inst: &Instance) -> Result<BigUint, OracleError> {
        self.count_u128(inst).map(BigUint::from)
    }

    fn count_u128(&self, inst: &Instance) -> Result<u128, OracleError> {
        let vertices = inst.num_vertices();
        if vertices > self.cap {
            return Err(OracleError::Capacity {
                vertices,
                cap: self.cap,
            });
        }
        let mut search = Search::new(inst);
        Ok(search.run())
    }

    /// `Z(c(v) = i) / Z` as an exact rational.
    pub fn marginal(
        &self,
        inst: &Instance,
        v: Vertex,
        i: Color,
    ) -> Result<BigRational, OracleError> {
        Ok(self.marginals(inst, v)?[i.index()].clone())
    }

    /// Exact marginals of every color at `v`.
    pub fn marginals(&self, inst: &Instance, v: Vertex) -> Result<[BigRational; 4], OracleError> {
        // Validates v as a side effect.
        inst.with_list(v, inst.list(v))?;
        let mut parts = [0u128; 4];
        for c in inst.list(v).iter() {
            let pinned = inst.with_list(v, ColorSet::EMPTY.with(c))?;
            parts[c.index()] = self.count_u128(&pinned)?;
        }
        let z: u128 = parts.iter().sum();
        if z == 0 {
            return Err(OracleError::UndefinedMeasure);
        }
        Ok(parts.map(|p| BigRational::new(BigInt::from(p), BigInt::from(z))))
    }
}

/// Number of proper list-colorings, with the default cap.
pub fn count_colorings(inst: &Instance) -> Result<BigUint, OracleError> {
    Oracle::default().count(inst)
}

/// Exact marginal `Pr[c(v) = i]`, with the default cap.
pub fn exact_marginal(inst: &Instance, v: Vertex, i: Color) -> Result<BigRational, OracleError> {
    Oracle::default().marginal(inst, v, i)
}

/// True iff the instance admits at least one proper coloring.
pub fn is_satisfiable(inst: &Instance) -> Result<bool, OracleError> {
    Ok(!Oracle::default().count(inst)?.is_zero())
}

struct Search {
    // Compact relabelling of the present vertices.
    adj: Vec<Vec<usize>>,
    lists: Vec<u8>,
    colored: Vec<bool>,
}

impl Search {
    fn new(inst: &Instance) -> Search {
        let ids: Vec<Vertex> = inst.vertices().collect();
        let mut pos = vec![usize::MAX; inst.capacity()];
        for (k, &v) in ids.iter().enumerate() {
            pos[v] = k;
        }
        let adj = ids
            .iter()
            .map(|&v| inst.neighbors(v).map(|w| pos[w]).collect())
            .collect();
        let lists = ids.iter().map(|&v| inst.list(v).bits()).collect();
        Search {
            adj,
            lists,
            colored: vec![false; ids.len()],
        }
    }

    fn run(&mut self) -> u128 {
        let mut factor: u128 = 1;
        let mut branch = None;
        let mut best = u32::MAX;
        // Vertices whose neighbors are all colored are independent: take
        // their list sizes as a factor and mark them done for this frame.
        let mut settled = Vec::new();
        for v in 0..self.adj.len() {
            if self.colored[v] {
                continue;
            }
            let size = self.lists[v].count_ones();
            if size == 0 {
                return 0;
            }
            if self.adj[v].iter().all(|&w| self.colored[w]) {
                factor *= size as u128;
                settled.push(v);
            } else if size < best {
                best = size;
                branch = Some(v);
            }
        }
        let Some(v) = branch else {
            return factor;
        };
        for &s in &settled {
            self.colored[s] = true;
        }
        let list = self.lists[v];
        let mut total = 0u128;
        self.colored[v] = true;
        for c in 0..4 {
            let bit = 1u8 << c;
            if list & bit == 0 {
                continue;
            }
            let mut touched = [usize::MAX; 3];
            for (slot, &w) in self.adj[v].iter().enumerate() {
                if !self.colored[w] && self.lists[w] & bit != 0 {
                    self.lists[w] &= !bit;
                    touched[slot] = w;
                }
            }
            total += self.run();
            for &w in touched.iter().filter(|&&w| w != usize::MAX) {
                self.lists[w] |= bit;
            }
        }
        self.colored[v] = false;
        for &s in &settled {
            self.colored[s] = false;
        }
        total * factor
    }
}
