//! Discrete-time consensus update and the state-difference functional.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Edge, Graph};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("degree scale must lie in (0, 1), got {0}")]
    BadScale(f64),
    #[error("state has {got} entries, graph has {expected} agents")]
    LengthMismatch { expected: usize, got: usize },
    #[error("state entry {0} is not finite")]
    NonFinite(usize),
    #[error("no consensus weight for edge {0}")]
    MissingWeight(Edge),
    #[error("weight for edge {0} must be positive and finite, got {1}")]
    BadWeight(Edge, f64),
    #[error("weight given for edge {0}, which is not in the base graph")]
    ForeignWeight(Edge),
    #[error("weights around agent {agent} sum to {sum}, must be below 1")]
    RowSum { agent: usize, sum: f64 },
    #[error("uniform weight {a_hat} must lie in (0, 1/(max degree + 1)) = (0, {bound})")]
    UniformTooLarge { a_hat: f64, bound: f64 },
}

/// Scalar agent states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateVector(Vec<f64>);

impl StateVector {
    pub fn new(values: Vec<f64>) -> Result<Self, DynamicsError> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(DynamicsError::NonFinite(i));
        }
        Ok(StateVector(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    /// `max - min` over the agents.
    pub fn spread(&self) -> f64 {
        let max = self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.0.iter().copied().fold(f64::INFINITY, f64::min);
        if self.0.is_empty() {
            0.0
        } else {
            max - min
        }
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Symmetric positive weights on the base graph's edges, with every agent's
/// weight sum strictly below one.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusWeights {
    // Indexed by the base graph's canonical edge index.
    by_edge: Vec<(Edge, f64)>,
}

impl ConsensusWeights {
    pub fn new(base: &Graph, weights: &BTreeMap<Edge, f64>) -> Result<Self, DynamicsError> {
        if let Some(e) = weights.keys().find(|e| !base.contains_edge(**e)) {
            return Err(DynamicsError::ForeignWeight(*e));
        }
        let mut by_edge = Vec::with_capacity(base.edge_count());
        for e in base.edges() {
            let w = *weights.get(e).ok_or(DynamicsError::MissingWeight(*e))?;
            if !(w.is_finite() && w > 0.0) {
                return Err(DynamicsError::BadWeight(*e, w));
            }
            by_edge.push((*e, w));
        }
        let mut row = vec![0.0; base.n()];
        for (e, w) in &by_edge {
            row[e.lo()] += w;
            row[e.hi()] += w;
        }
        if let Some((agent, sum)) = row.iter().copied().enumerate().find(|(_, s)| *s >= 1.0) {
            return Err(DynamicsError::RowSum { agent, sum });
        }
        Ok(ConsensusWeights { by_edge })
    }

    /// Same weight on every edge. Requires `a_hat < 1/(max degree + 1)`.
    pub fn uniform(base: &Graph, a_hat: f64) -> Result<Self, DynamicsError> {
        let bound = 1.0 / (base.max_degree() as f64 + 1.0);
        if !(a_hat.is_finite() && a_hat > 0.0 && a_hat < bound) {
            return Err(DynamicsError::UniformTooLarge { a_hat, bound });
        }
        let map = base.edges().iter().map(|e| (*e, a_hat)).collect();
        Self::new(base, &map)
    }

    /// `a_ij = scale / max(d_i, d_j)` for `0 < scale < 1`. Every row sum is
    /// at most `scale`, and each edge gets the largest weight its busier
    /// endpoint allows.
    pub fn degree_scaled(base: &Graph, scale: f64) -> Result<Self, DynamicsError> {
        if !(scale > 0.0 && scale < 1.0) {
            return Err(DynamicsError::BadScale(scale));
        }
        let map = base
            .edges()
            .iter()
            .map(|e| (*e, scale / base.degree(e.lo()).max(base.degree(e.hi())) as f64))
            .collect();
        Self::new(base, &map)
    }

    pub fn get(&self, e: Edge) -> Option<f64> {
        self.by_edge
            .binary_search_by(|(k, _)| k.cmp(&e))
            .ok()
            .map(|i| self.by_edge[i].1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Edge, f64)> + '_ {
        self.by_edge.iter().copied()
    }

    /// Weights in base-graph edge order.
    pub(crate) fn by_index(&self) -> impl Iterator<Item = f64> + '_ {
        self.by_edge.iter().map(|(_, w)| *w)
    }
}

/// Which Laplacian the state-difference term uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaplacianVariant {
    /// Complete graph on all agents. Nonincreasing along any trajectory.
    #[default]
    Complete,
    /// The base topology. Not monotone in general.
    BaseGraph,
}

// All consensus arithmetic goes through here so that every caller produces
// bit-identical states for the same active edge set.
pub(crate) fn step_into<I>(x: &[f64], active: I, out: &mut Vec<f64>)
where
    I: IntoIterator<Item = (usize, usize, f64)>,
{
    out.clear();
    out.extend_from_slice(x);
    let mut input = vec![0.0; x.len()];
    for (i, j, w) in active {
        let flow = w * (x[j] - x[i]);
        input[i] += flow;
        input[j] -= flow;
    }
    for (xi, ui) in out.iter_mut().zip(input) {
        *xi += ui;
    }
}

/// One consensus update over the effective graph `g_eff`.
pub fn consensus_step(
    x: &StateVector,
    g_eff: &Graph,
    w: &ConsensusWeights,
) -> Result<StateVector, DynamicsError> {
    if x.len() != g_eff.n() {
        return Err(DynamicsError::LengthMismatch {
            expected: g_eff.n(),
            got: x.len(),
        });
    }
    let mut active = Vec::with_capacity(g_eff.edge_count());
    for e in g_eff.edges() {
        let weight = w.get(*e).ok_or(DynamicsError::MissingWeight(*e))?;
        active.push((e.lo(), e.hi(), weight));
    }
    let mut out = Vec::with_capacity(x.len());
    step_into(x.as_slice(), active, &mut out);
    Ok(StateVector(out))
}

/// `x^T L_c x` for the complete-graph Laplacian, i.e. the sum of squared
/// differences over all agent pairs.
pub fn state_difference(x: &StateVector) -> f64 {
    complete_difference(x.as_slice())
}

pub(crate) fn complete_difference(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sum, sum_sq) = x
        .iter()
        .fold((0.0, 0.0), |(s, q), v| (s + v, q + v * v));
    n * sum_sq - sum * sum
}

/// Sum of squared differences across the edges of `g`.
pub fn state_difference_graph_laplacian(x: &StateVector, g: &Graph) -> f64 {
    edge_difference(x.as_slice(), g.edges())
}

pub(crate) fn edge_difference(x: &[f64], edges: &[Edge]) -> f64 {
    edges
        .iter()
        .map(|e| (x[e.lo()] - x[e.hi()]).powi(2))
        .sum()
}

pub(crate) fn variant_difference(x: &[f64], variant: LaplacianVariant, base: &Graph) -> f64 {
    match variant {
        LaplacianVariant::Complete => complete_difference(x),
        LaplacianVariant::BaseGraph => edge_difference(x, base.edges()),
    }
}
