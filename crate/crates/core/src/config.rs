//! TOML scenario files.
//!
//! ```toml
//! x0 = [1.0, 0.75, 0.75, -1.0]
//! laplacian_variant = "complete"
//!
//! [graph]
//! n = 4
//! edges = [[0, 1], [1, 2], [2, 3]]
//!
//! [weights]
//! uniform = 0.3
//!
//! [attacker]
//! kappa = 2.6
//! rho = 2.6
//! beta_normal = 1.0
//! beta_strong = 2.0
//!
//! [defender]
//! kappa = 0.8
//! rho = 0.3
//! beta = 1.0
//!
//! [game]
//! a = 0.9
//! b = 0.1
//! h = 2
//! T = 1
//!
//! [run]
//! K_max = 50
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{ConsensusWeights, LaplacianVariant, StateVector};
use crate::energy::{AttackerParams, DefenderParams};
use crate::engine::{RunParams, Scenario, DEFAULT_EPS, DEFAULT_K_MAX};
use crate::game::{GameConfig, DEFAULT_ENUMERATION_LIMIT_LOG2, DEFAULT_UTILITY_TOLERANCE};
use crate::graph::{Edge, Graph};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot serialize config: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

fn invalid(path: impl Into<String>, message: impl ToString) -> ConfigError {
    ConfigError::Invalid {
        path: path.into(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
    /// Agents in `edges` are numbered from 1.
    #[serde(default, skip_serializing_if = "is_false")]
    pub one_indexed: bool,
}

fn is_false(v: &bool) -> bool {
    !*v
}

/// Exactly one of: one weight for every edge, a weight per edge as
/// `[i, j, w]`, or `degree_scaled = s` for `a_ij = s / max(d_i, d_j)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniform: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_edge: Option<Vec<(usize, usize, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree_scaled: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSection {
    pub a: f64,
    pub b: f64,
    pub h: usize,
    #[serde(rename = "T")]
    pub period: usize,
    #[serde(default)]
    pub prune: bool,
    #[serde(default = "default_limit")]
    pub enumeration_limit_log2: u32,
}

fn default_limit() -> u32 {
    DEFAULT_ENUMERATION_LIMIT_LOG2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(rename = "K_max", default = "default_k_max")]
    pub k_max: u64,
    #[serde(default = "default_eps")]
    pub eps_consensus: f64,
    #[serde(default = "default_eps")]
    pub eps_cluster: f64,
    #[serde(default = "default_tolerance")]
    pub utility_tolerance: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            k_max: DEFAULT_K_MAX,
            eps_consensus: DEFAULT_EPS,
            eps_cluster: DEFAULT_EPS,
            utility_tolerance: DEFAULT_UTILITY_TOLERANCE,
        }
    }
}

fn default_k_max() -> u64 {
    DEFAULT_K_MAX
}

fn default_eps() -> f64 {
    DEFAULT_EPS
}

fn default_tolerance() -> f64 {
    DEFAULT_UTILITY_TOLERANCE
}

/// Raw scenario file contents. [`ScenarioConfig::to_scenario`] validates it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub x0: Vec<f64>,
    #[serde(default)]
    pub laplacian_variant: LaplacianVariant,
    pub graph: GraphConfig,
    pub weights: WeightsConfig,
    pub attacker: AttackerParams,
    pub defender: DefenderParams,
    pub game: GameSection,
    #[serde(default)]
    pub run: RunSection,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string(self)?)
    }

    /// Validates every field and builds the runnable scenario.
    pub fn to_scenario(&self) -> Result<Scenario, ConfigError> {
        let graph = self.build_graph()?;
        if !graph.is_connected() {
            return Err(invalid("graph", "base graph must be connected"));
        }
        if self.x0.len() != graph.n() {
            return Err(invalid(
                "x0",
                format!("expected {} entries, got {}", graph.n(), self.x0.len()),
            ));
        }
        let x0 = StateVector::new(self.x0.clone()).map_err(|e| invalid("x0", e))?;
        let weights = self.build_weights(&graph)?;
        self.attacker.validate().map_err(|e| invalid("attacker", e))?;
        self.defender.validate().map_err(|e| invalid("defender", e))?;

        let g = &self.game;
        let game = GameConfig {
            a: g.a,
            b: g.b,
            h: g.h,
            period: g.period,
            utility_tolerance: self.run.utility_tolerance,
            laplacian: self.laplacian_variant,
            prune: g.prune,
            enumeration_limit_log2: g.enumeration_limit_log2,
        };
        game.validate().map_err(|e| invalid("game", e))?;
        if !(self.run.utility_tolerance >= 0.0 && self.run.utility_tolerance.is_finite()) {
            return Err(invalid("run.utility_tolerance", "must be finite and >= 0"));
        }
        let tree_log2 = 2 * graph.edge_count() as u64 * g.h as u64;
        if tree_log2 > g.enumeration_limit_log2 as u64 {
            return Err(invalid(
                "game.h",
                format!(
                    "{} edges over horizon {} need 2^{} leaves, limit is 2^{}",
                    graph.edge_count(),
                    g.h,
                    tree_log2,
                    g.enumeration_limit_log2
                ),
            ));
        }
        let run = RunParams {
            k_max: self.run.k_max,
            eps_consensus: self.run.eps_consensus,
            eps_cluster: self.run.eps_cluster,
        };
        if run.k_max == 0 {
            return Err(invalid("run.K_max", "must be at least 1"));
        }
        if !(run.eps_consensus > 0.0 && run.eps_consensus.is_finite()) {
            return Err(invalid("run.eps_consensus", "must be positive"));
        }
        if !(run.eps_cluster > 0.0 && run.eps_cluster.is_finite()) {
            return Err(invalid("run.eps_cluster", "must be positive"));
        }
        Ok(Scenario {
            graph,
            x0,
            weights,
            attacker: self.attacker,
            defender: self.defender,
            game,
            run,
        })
    }

    fn edge(&self, idx: usize, i: usize, j: usize) -> Result<Edge, ConfigError> {
        let path = format!("graph.edges[{idx}]");
        let shift = |v: usize| {
            if self.graph.one_indexed {
                v.checked_sub(1)
                    .ok_or_else(|| invalid(&path, "agent 0 in a one-indexed graph"))
            } else {
                Ok(v)
            }
        };
        let (i, j) = (shift(i)?, shift(j)?);
        if i >= self.graph.n || j >= self.graph.n {
            return Err(invalid(&path, format!("agent out of range for n = {}", self.graph.n)));
        }
        Edge::new(i, j).map_err(|e| invalid(&path, e))
    }

    fn build_graph(&self) -> Result<Graph, ConfigError> {
        if self.graph.n == 0 {
            return Err(invalid("graph.n", "must be at least 1"));
        }
        let mut edges = Vec::with_capacity(self.graph.edges.len());
        for (idx, [i, j]) in self.graph.edges.iter().enumerate() {
            let e = self.edge(idx, *i, *j)?;
            if edges.contains(&e) {
                return Err(invalid(format!("graph.edges[{idx}]"), format!("duplicate edge {e}")));
            }
            edges.push(e);
        }
        Graph::from_edges(self.graph.n, edges).map_err(|e| invalid("graph", e))
    }

    fn build_weights(&self, graph: &Graph) -> Result<ConsensusWeights, ConfigError> {
        match (&self.weights.uniform, &self.weights.per_edge, &self.weights.degree_scaled) {
            (None, None, Some(scale)) => ConsensusWeights::degree_scaled(graph, *scale)
                .map_err(|e| invalid("weights.degree_scaled", e)),
            (Some(a_hat), None, None) => {
                ConsensusWeights::uniform(graph, *a_hat).map_err(|e| invalid("weights.uniform", e))
            }
            (None, Some(list), None) => {
                let mut map = BTreeMap::new();
                for (idx, &(i, j, w)) in list.iter().enumerate() {
                    let path = format!("weights.per_edge[{idx}]");
                    let e = self.edge(idx, i, j).map_err(|e| match e {
                        ConfigError::Invalid { message, .. } => invalid(&path, message),
                        other => other,
                    })?;
                    if map.insert(e, w).is_some() {
                        return Err(invalid(path, format!("duplicate weight for {e}")));
                    }
                }
                ConsensusWeights::new(graph, &map).map_err(|e| invalid("weights.per_edge", e))
            }
            _ => Err(invalid("weights", "give exactly one of `uniform`, `per_edge` or `degree_scaled`")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
x0 = [1.0, 0.75, 0.75, -1.0]

[graph]
n = 4
edges = [[0, 1], [1, 2], [2, 3]]

[weights]
uniform = 0.3

[attacker]
kappa = 2.6
rho = 2.6
beta_normal = 1.0
beta_strong = 2.0

[defender]
kappa = 0.8
rho = 0.3
beta = 1.0

[game]
a = 0.9
b = 0.1
h = 2
T = 1
"#;

    fn sample() -> ScenarioConfig {
        ScenarioConfig::from_toml_str(SAMPLE).unwrap()
    }

    fn error_path(cfg: &ScenarioConfig) -> String {
        match cfg.to_scenario().unwrap_err() {
            ConfigError::Invalid { path, .. } => path,
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn loads_with_defaults() {
        let s = sample().to_scenario().unwrap();
        assert_eq!(s.graph.edge_count(), 3);
        assert_eq!(s.run.k_max, 50);
        assert_eq!(s.run.eps_cluster, 1e-3);
        assert_eq!(s.game.utility_tolerance, 1e-9);
        assert_eq!(s.game.laplacian, LaplacianVariant::Complete);
    }

    #[test]
    fn round_trip() {
        let cfg = sample();
        let text = cfg.to_toml_string().unwrap();
        let again = ScenarioConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, again);
        again.to_scenario().unwrap();
    }

    #[test]
    fn one_indexed_edges() {
        let mut cfg = sample();
        cfg.graph.one_indexed = true;
        cfg.graph.edges = vec![[1, 2], [2, 3], [3, 4]];
        assert_eq!(cfg.to_scenario().unwrap().graph, Graph::path(4).unwrap());
        cfg.graph.edges[0] = [0, 1];
        assert_eq!(error_path(&cfg), "graph.edges[0]");
    }

    #[test]
    fn reports_field_paths() {
        let mut cfg = sample();
        cfg.graph.edges = vec![[0, 1], [2, 3]];
        assert_eq!(error_path(&cfg), "graph");

        let mut cfg = sample();
        cfg.graph.edges.push([1, 1]);
        assert_eq!(error_path(&cfg), "graph.edges[3]");

        let mut cfg = sample();
        cfg.x0.pop();
        assert_eq!(error_path(&cfg), "x0");

        let mut cfg = sample();
        cfg.weights.uniform = Some(0.4);
        assert_eq!(error_path(&cfg), "weights.uniform");

        let mut cfg = sample();
        cfg.weights.per_edge = Some(vec![(0, 1, 0.1)]);
        assert_eq!(error_path(&cfg), "weights");

        let mut cfg = sample();
        cfg.attacker.beta_strong = 0.5;
        assert_eq!(error_path(&cfg), "attacker");

        let mut cfg = sample();
        cfg.game.period = 3;
        assert_eq!(error_path(&cfg), "game");

        let mut cfg = sample();
        cfg.game.h = 6;
        assert_eq!(error_path(&cfg), "game.h");

        let mut cfg = sample();
        cfg.run.k_max = 0;
        assert_eq!(error_path(&cfg), "run.K_max");
    }

    #[test]
    fn per_edge_weights() {
        let mut cfg = sample();
        cfg.weights = WeightsConfig {
            uniform: None,
            per_edge: Some(vec![(0, 1, 0.1), (1, 2, 0.2), (2, 3, 0.3)]),
            degree_scaled: None,
        };
        let s = cfg.to_scenario().unwrap();
        assert_eq!(s.weights.get(Edge::new(2, 3).unwrap()), Some(0.3));
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(ScenarioConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn degree_scaled_weights() {
        let mut cfg = sample();
        cfg.weights = WeightsConfig { degree_scaled: Some(0.9), ..Default::default() };
        let s = cfg.to_scenario().unwrap();
        assert_eq!(s.weights.get(Edge::new(0, 1).unwrap()), Some(0.45));
        cfg.weights.uniform = Some(0.2);
        assert_eq!(error_path(&cfg), "weights");
        cfg.weights = WeightsConfig { degree_scaled: Some(1.5), ..Default::default() };
        assert_eq!(error_path(&cfg), "weights.degree_scaled");
    }

    #[test]
    fn rejects_unknown_fields() {
        let text = SAMPLE.replace("[game]", "[game]\nalpha = 1");
        assert!(matches!(ScenarioConfig::from_toml_str(&text), Err(ConfigError::Parse(_))));
    }
}
