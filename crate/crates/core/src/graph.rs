//! Undirected agent graphs, their groups, and the connectivity measures the
//! game and the cluster bounds are phrased in.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::ActionTriple;

/// Largest edge count accepted by the exhaustive enumerations in this module.
pub const DEFAULT_ENUMERATION_EDGE_LIMIT: usize = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph must have at least one agent")]
    Empty,
    #[error("edge ({0}, {1}) is a self-loop")]
    SelfLoop(usize, usize),
    #[error("edge ({0}, {1}) references an agent outside 0..{2}")]
    OutOfRange(usize, usize, usize),
    #[error("edge {0} appears more than once")]
    DuplicateEdge(Edge),
    #[error("graph is not connected")]
    Disconnected,
    #[error("edge {0} is not part of the base graph")]
    UnknownEdge(Edge),
    #[error("{edges} edges exceed the enumeration limit of {limit}")]
    TooManyEdges { edges: usize, limit: usize },
}

/// Unordered pair of agents, stored with the smaller id first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "[usize; 2]", try_from = "[usize; 2]")]
pub struct Edge {
    lo: usize,
    hi: usize,
}

impl Edge {
    /// Normalizes the endpoint order. Self-loops are rejected.
    pub fn new(i: usize, j: usize) -> Result<Self, GraphError> {
        match i.cmp(&j) {
            Ordering::Less => Ok(Edge { lo: i, hi: j }),
            Ordering::Greater => Ok(Edge { lo: j, hi: i }),
            Ordering::Equal => Err(GraphError::SelfLoop(i, j)),
        }
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn hi(&self) -> usize {
        self.hi
    }
}

impl From<Edge> for [usize; 2] {
    fn from(e: Edge) -> Self {
        [e.lo, e.hi]
    }
}

impl TryFrom<[usize; 2]> for Edge {
    type Error = GraphError;

    fn try_from(pair: [usize; 2]) -> Result<Self, Self::Error> {
        Edge::new(pair[0], pair[1])
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.lo, self.hi)
    }
}

/// Simple undirected graph over agents `0..n`. Edges are kept sorted, so an
/// edge's position in [`Graph::edges`] is its canonical index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
}

impl Graph {
    pub fn new<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut list = Vec::new();
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(GraphError::OutOfRange(i, j, n));
            }
            list.push(Edge::new(i, j)?);
        }
        Self::from_edges(n, list)
    }

    pub fn from_edges(n: usize, mut edges: Vec<Edge>) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        if let Some(e) = edges.iter().find(|e| e.hi >= n) {
            return Err(GraphError::OutOfRange(e.lo, e.hi, n));
        }
        edges.sort_unstable();
        if let Some(w) = edges.windows(2).find(|w| w[0] == w[1]) {
            return Err(GraphError::DuplicateEdge(w[0]));
        }
        Ok(Graph { n, edges })
    }

    /// Graph with no edges.
    pub fn empty(n: usize) -> Result<Self, GraphError> {
        Self::from_edges(n, Vec::new())
    }

    pub fn path(n: usize) -> Result<Self, GraphError> {
        Self::new(n, (1..n).map(|i| (i - 1, i)))
    }

    pub fn complete(n: usize) -> Result<Self, GraphError> {
        Self::new(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_index(&self, e: Edge) -> Option<usize> {
        self.edges.binary_search(&e).ok()
    }

    pub fn contains_edge(&self, e: Edge) -> bool {
        self.edge_index(e).is_some()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.lo == v || e.hi == v).count()
    }

    pub fn max_degree(&self) -> usize {
        let mut deg = vec![0usize; self.n];
        for e in &self.edges {
            deg[e.lo] += 1;
            deg[e.hi] += 1;
        }
        deg.into_iter().max().unwrap_or(0)
    }

    pub fn is_complete(&self) -> bool {
        self.edges.len() == self.n * (self.n - 1) / 2
    }

    pub fn is_connected(&self) -> bool {
        component_count(self.n, self.edges.iter().map(|e| (e.lo, e.hi))) == 1
    }

    /// Whether every edge of `self` is an edge of `other` over the same agents.
    pub fn is_subgraph_of(&self, other: &Graph) -> bool {
        self.n == other.n && self.edges.iter().all(|e| other.contains_edge(*e))
    }

    /// Subgraph keeping the edges whose index bit is set in `mask`.
    pub fn with_edge_mask(&self, mask: u64) -> Graph {
        let edges = self
            .edges
            .iter()
            .enumerate()
            .filter(|(idx, _)| mask >> idx & 1 == 1)
            .map(|(_, e)| *e)
            .collect();
        Graph { n: self.n, edges }
    }

    /// Bitmask (bit = canonical edge index) of an edge set of this graph.
    pub fn mask_of<'a, I>(&self, edges: I) -> Result<u64, GraphError>
    where
        I: IntoIterator<Item = &'a Edge>,
    {
        let mut mask = 0u64;
        for e in edges {
            let idx = self.edge_index(*e).ok_or(GraphError::UnknownEdge(*e))?;
            mask |= 1 << idx;
        }
        Ok(mask)
    }

    /// Edges selected by a bitmask over canonical edge indices.
    pub fn edges_of_mask(&self, mask: u64) -> Vec<Edge> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(idx, _)| mask >> idx & 1 == 1)
            .map(|(_, e)| *e)
            .collect()
    }

    pub(crate) fn full_mask(&self) -> u64 {
        if self.edges.len() >= 64 {
            u64::MAX
        } else {
            (1u64 << self.edges.len()) - 1
        }
    }
}

/// Disjoint-set forest over `0..n` with path compression and union by size.
#[derive(Debug, Clone)]
pub struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSet {
    pub fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut node: usize) -> usize {
        let mut root = node;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[node] != root {
            let next = self.parent[node];
            self.parent[node] = root;
            node = next;
        }
        root
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        true
    }

    /// Blocks in canonical order: members ascending, blocks by smallest member.
    pub fn into_partition(mut self) -> Partition {
        let n = self.parent.len();
        let mut slot = vec![usize::MAX; n];
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for v in 0..n {
            let root = self.find(v);
            if slot[root] == usize::MAX {
                slot[root] = blocks.len();
                blocks.push(Vec::new());
            }
            blocks[slot[root]].push(v);
        }
        Partition { blocks }
    }
}

fn component_count<I>(n: usize, edges: I) -> usize
where
    I: IntoIterator<Item = (usize, usize)>,
{
    let mut dsu = DisjointSet::new(n);
    let mut count = n;
    for (i, j) in edges {
        if dsu.union(i, j) {
            count -= 1;
        }
    }
    count
}

/// A partition of the agents into disjoint, nonempty blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn agent_count(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    /// Block sizes, largest first.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes: Vec<usize> = self.blocks.iter().map(Vec::len).collect();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        sizes
    }
}

/// Connected components of `g`.
pub fn groups(g: &Graph) -> Partition {
    let mut dsu = DisjointSet::new(g.n);
    for e in &g.edges {
        dsu.union(e.lo, e.hi);
    }
    dsu.into_partition()
}

/// Sum of squared group sizes minus `n^2`. Zero exactly when `g` is connected,
/// negative otherwise.
pub fn agent_group_index(g: &Graph) -> i64 {
    partition_group_index(&groups(g))
}

pub fn partition_group_index(p: &Partition) -> i64 {
    let n = p.agent_count() as i64;
    p.blocks.iter().map(|b| (b.len() as i64).pow(2)).sum::<i64>() - n * n
}

/// Group index of the subgraph of `g` keeping the edges in `kept_mask`.
pub(crate) fn masked_group_index(g: &Graph, kept_mask: u64) -> i64 {
    let mut dsu = DisjointSet::new(g.n);
    for (idx, e) in g.edges.iter().enumerate() {
        if kept_mask >> idx & 1 == 1 {
            dsu.union(e.lo, e.hi);
        }
    }
    partition_group_index(&dsu.into_partition())
}

fn masked_component_count(g: &Graph, kept_mask: u64) -> usize {
    component_count(
        g.n,
        g.edges
            .iter()
            .enumerate()
            .filter(|(idx, _)| kept_mask >> idx & 1 == 1)
            .map(|(_, e)| (e.lo, e.hi)),
    )
}

fn check_enumerable(g: &Graph, limit: usize) -> Result<(), GraphError> {
    if g.edge_count() > limit || g.edge_count() >= 64 {
        return Err(GraphError::TooManyEdges {
            edges: g.edge_count(),
            limit,
        });
    }
    Ok(())
}

/// Edge connectivity by enumerating removal sets of increasing size.
pub fn edge_connectivity(g: &Graph) -> Result<usize, GraphError> {
    edge_connectivity_with_limit(g, DEFAULT_ENUMERATION_EDGE_LIMIT)
}

pub fn edge_connectivity_with_limit(g: &Graph, limit: usize) -> Result<usize, GraphError> {
    if !g.is_connected() {
        return Err(GraphError::Disconnected);
    }
    check_enumerable(g, limit)?;
    let m = g.edge_count();
    let full = g.full_mask();
    for size in 1..=m {
        let mut removed = (1u64 << size) - 1;
        while removed <= full {
            if masked_component_count(g, full & !removed) > 1 {
                return Ok(size);
            }
            removed = next_same_popcount(removed);
        }
    }
    // A single agent has nothing to disconnect.
    Ok(m)
}

// Gosper's hack: next larger integer with the same number of set bits.
pub(crate) fn next_same_popcount(x: u64) -> u64 {
    let c = x & x.wrapping_neg();
    let r = x + c;
    (((r ^ x) >> 2) / c) | r
}

/// `values[j - 1]` is the largest number of groups reachable by removing
/// exactly `j` edges from the base graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThetaVector {
    values: Vec<usize>,
}

impl ThetaVector {
    pub fn values(&self) -> &[usize] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// One-based access. Index 0 means no removal (one group); indices past
    /// the edge count clamp to the last entry.
    pub fn get(&self, j: usize) -> usize {
        if j == 0 {
            1
        } else {
            let idx = j.min(self.values.len());
            self.values[idx - 1]
        }
    }
}

pub fn theta_vector(g: &Graph) -> Result<ThetaVector, GraphError> {
    theta_vector_with_limit(g, DEFAULT_ENUMERATION_EDGE_LIMIT)
}

pub fn theta_vector_with_limit(g: &Graph, limit: usize) -> Result<ThetaVector, GraphError> {
    if !g.is_connected() {
        return Err(GraphError::Disconnected);
    }
    check_enumerable(g, limit)?;
    let m = g.edge_count();
    let full = g.full_mask();
    let mut values = vec![0usize; m + 1];
    for removed in 0..=full {
        let j = removed.count_ones() as usize;
        let count = masked_component_count(g, full & !removed);
        values[j] = values[j].max(count);
    }
    values.remove(0);
    Ok(ThetaVector { values })
}

/// Effective graph after the attacker removes the strong and normal sets and
/// the defender restores the recovered set.
pub fn apply_actions(base: &Graph, act: &ActionTriple) -> Result<Graph, GraphError> {
    let strong = base.mask_of(act.strong())?;
    let normal = base.mask_of(act.normal())?;
    let recovered = base.mask_of(act.recovered())?;
    let kept = (base.full_mask() & !(strong | normal)) | recovered;
    Ok(base.with_edge_mask(kept))
}
