//! Parameter sweeps over a base scenario.
//!
//! A sweep file names a base scenario (inline as `[base]` or by path as
//! `base_config`) and one or two axes. Each axis sets a dotted config path,
//! such as `game.a` or `attacker.rho`, to each listed value. Two derived
//! parameters are also accepted:
//!
//! * `attacker.strong_ratio` sets `rho = value * beta_strong` and `kappa = rho`.
//! * `graph.max_lambda_edges` replaces the graph by the first graph on the
//!   same agents with that many edges and the largest edge connectivity.
//!
//! With `couple_b = true`, `b` is set to `1 - a` at every grid point. With
//! `x0_samples = s > 0`, every grid point runs `s` times from random initial
//! states: sample `i` draws each agent uniformly from `[-1, 1]` with a
//! ChaCha8 generator seeded by `seed + i`.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::config::{ConfigError, GraphConfig, ScenarioConfig};
use crate::dynamics;
use crate::engine::{self, EngineError};
use crate::graph::{self, Graph, GraphError};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse sweep: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("{0}")]
    Spec(String),
    #[error("grid point {index}: {source}")]
    Point { index: usize, source: ConfigError },
    #[error("grid point {index}: {source}")]
    Run { index: usize, source: EngineError },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("failed to write CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("failed to write output: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub param: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    base_config: Option<String>,
    base: Option<ScenarioConfig>,
    axes: Vec<Axis>,
    #[serde(default)]
    couple_b: bool,
    #[serde(default)]
    x0_samples: u64,
    #[serde(default)]
    seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: ScenarioConfig,
    pub axes: Vec<Axis>,
    pub couple_b: bool,
    pub x0_samples: u64,
    pub seed: u64,
}

impl SweepSpec {
    /// Parses a sweep file; a relative `base_config` resolves against `dir`.
    pub fn from_toml_str(text: &str, dir: &Path) -> Result<Self, SweepError> {
        let file: SweepFile = toml::from_str(text)?;
        let base = match (file.base, file.base_config) {
            (Some(base), None) => base,
            (None, Some(path)) => {
                let path = dir.join(path);
                ScenarioConfig::load(&path).map_err(|e| SweepError::Spec(format!("base_config: {e}")))?
            }
            _ => return Err(SweepError::Spec("give exactly one of `base` or `base_config`".into())),
        };
        let spec = SweepSpec {
            base,
            axes: file.axes,
            couple_b: file.couple_b,
            x0_samples: file.x0_samples,
            seed: file.seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, SweepError> {
        let text = std::fs::read_to_string(path).map_err(|source| SweepError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn validate(&self) -> Result<(), SweepError> {
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(SweepError::Spec(format!("need one or two axes, got {}", self.axes.len())));
        }
        for (i, axis) in self.axes.iter().enumerate() {
            if axis.values.is_empty() {
                return Err(SweepError::Spec(format!("axes[{i}] has no values")));
            }
            if let Some(v) = axis.values.iter().find(|v| !v.is_finite()) {
                return Err(SweepError::Spec(format!("axes[{i}] has non-finite value {v}")));
            }
        }
        Ok(())
    }

    /// Axis values of every grid point, first axis outermost.
    pub fn grid(&self) -> Vec<Vec<f64>> {
        let mut points = vec![Vec::new()];
        for axis in &self.axes {
            points = points
                .into_iter()
                .flat_map(|p| {
                    axis.values.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push(*v);
                        q
                    })
                })
                .collect();
        }
        points
    }

    /// Base config with one grid point's values applied.
    pub fn point_config(&self, values: &[f64]) -> Result<ScenarioConfig, String> {
        let mut cfg = self.base.clone();
        for (axis, &v) in self.axes.iter().zip(values) {
            apply_param(&mut cfg, &axis.param, v)?;
        }
        if self.couple_b {
            cfg.game.b = 1.0 - cfg.game.a;
        }
        Ok(cfg)
    }
}

fn apply_param(cfg: &mut ScenarioConfig, param: &str, v: f64) -> Result<(), String> {
    match param {
        "attacker.strong_ratio" => {
            cfg.attacker.rho = v * cfg.attacker.beta_strong;
            cfg.attacker.kappa = cfg.attacker.rho;
            Ok(())
        }
        "graph.max_lambda_edges" => {
            let m = as_count(param, v)?;
            let g = max_lambda_graph(cfg.graph.n, m).map_err(|e| format!("{param}: {e}"))?;
            cfg.graph = GraphConfig {
                n: g.n(),
                edges: g.edges().iter().map(|e| [e.lo(), e.hi()]).collect(),
                one_indexed: false,
            };
            Ok(())
        }
        _ => {
            let mut tree = serde_json::to_value(&*cfg).map_err(|e| e.to_string())?;
            let slot = param
                .split('.')
                .try_fold(&mut tree, |node, key| node.get_mut(key))
                .ok_or_else(|| format!("unknown parameter `{param}`"))?;
            *slot = match slot {
                Value::Number(n) if n.is_u64() || n.is_i64() => Value::from(as_count(param, v)? as u64),
                Value::Number(_) => Value::from(v),
                _ => return Err(format!("parameter `{param}` is not numeric")),
            };
            *cfg = serde_json::from_value(tree).map_err(|e| format!("{param}: {e}"))?;
            Ok(())
        }
    }
}

fn as_count(param: &str, v: f64) -> Result<usize, String> {
    if v >= 0.0 && v.fract() == 0.0 {
        Ok(v as usize)
    } else {
        Err(format!("parameter `{param}` needs a nonnegative integer, got {v}"))
    }
}

/// Among connected graphs on `n` agents with `m` edges, the one with the
/// largest edge connectivity; ties go to the graph whose edge set comes first
/// in combination order over the sorted complete-graph edges.
pub fn max_lambda_graph(n: usize, m: usize) -> Result<Graph, GraphError> {
    let complete = Graph::complete(n)?;
    let total = complete.edge_count();
    if n < 2 || m + 1 < n || m > total || total > graph::DEFAULT_ENUMERATION_EDGE_LIMIT {
        return Err(GraphError::TooManyEdges {
            edges: m,
            limit: total.min(graph::DEFAULT_ENUMERATION_EDGE_LIMIT),
        });
    }
    let mut best: Option<(usize, Graph)> = None;
    let mut mask = (1u64 << m) - 1;
    while mask < 1 << total {
        let g = complete.with_edge_mask(mask);
        if g.is_connected() {
            let lambda = graph::edge_connectivity(&g)?;
            if best.as_ref().is_none_or(|(l, _)| lambda > *l) {
                best = Some((lambda, g));
            }
        }
        if mask == 0 {
            break;
        }
        mask = graph::next_same_popcount(mask);
    }
    Ok(best.expect("a spanning tree exists for m >= n - 1").1)
}

/// Initial state of random sample `index`.
pub fn sample_x0(n: usize, seed: u64, index: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(index));
    (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}

/// Summary metrics of one simulation in a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub sample: Option<u64>,
    pub values: Vec<f64>,
    pub consensus: bool,
    pub cluster_count: usize,
    pub final_z: f64,
    pub group_index_sum: i64,
    pub cumulative_applied_utility_attacker: f64,
    pub cumulative_applied_utility_defender: f64,
    pub strong_attacks: usize,
    pub normal_attacks: usize,
    pub recovered: usize,
}

/// Runs every grid point (and sample) in parallel. Rows come back in grid
/// order, then sample order, whatever the worker count.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, SweepError> {
    spec.validate()?;
    let mut jobs = Vec::new();
    for (index, values) in spec.grid().into_iter().enumerate() {
        let cfg = spec.point_config(&values).map_err(SweepError::Spec)?;
        let scenario = cfg.to_scenario().map_err(|source| SweepError::Point { index, source })?;
        if spec.x0_samples == 0 {
            jobs.push((index, None, values, scenario));
        } else {
            for sample in 0..spec.x0_samples {
                let mut s = scenario.clone();
                s.x0 = dynamics::StateVector::new(sample_x0(s.graph.n(), spec.seed, sample))
                    .expect("samples are finite");
                jobs.push((index, Some(sample), values.clone(), s));
            }
        }
    }
    jobs.into_par_iter()
        .map(|(index, sample, values, scenario)| {
            let result = engine::run(&scenario).map_err(|source| SweepError::Run { index, source })?;
            let summary = engine::summarize(&scenario, &result);
            Ok(SweepRow {
                index,
                sample,
                values,
                consensus: summary.consensus,
                cluster_count: summary.cluster_count,
                final_z: summary.final_z,
                group_index_sum: summary.group_index_sum,
                cumulative_applied_utility_attacker: summary.cumulative_applied_utility_attacker,
                cumulative_applied_utility_defender: summary.cumulative_applied_utility_defender,
                strong_attacks: summary.strong_attack_count,
                normal_attacks: summary.normal_attack_count,
                recovered: summary.recovered_count,
            })
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(spec: &SweepSpec, rows: &[SweepRow], out: W) -> Result<(), SweepError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["index".to_string(), "sample".to_string()];
    header.extend(spec.axes.iter().map(|a| a.param.clone()));
    header.extend(
        [
            "consensus",
            "cluster_count",
            "final_z",
            "group_index_sum",
            "cumulative_applied_utility_attacker",
            "cumulative_applied_utility_defender",
            "strong_attacks",
            "normal_attacks",
            "recovered",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    w.write_record(&header)?;
    for r in rows {
        let mut row = vec![r.index.to_string(), r.sample.map(|s| s.to_string()).unwrap_or_default()];
        row.extend(r.values.iter().map(|v| v.to_string()));
        row.extend([
            r.consensus.to_string(),
            r.cluster_count.to_string(),
            r.final_z.to_string(),
            r.group_index_sum.to_string(),
            r.cumulative_applied_utility_attacker.to_string(),
            r.cumulative_applied_utility_defender.to_string(),
            r.strong_attacks.to_string(),
            r.normal_attacks.to_string(),
            r.recovered.to_string(),
        ]);
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
