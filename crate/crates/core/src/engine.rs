//! Rolling-horizon execution: solve a window every `T` steps, apply its
//! first `T` steps, and log what happened.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis;
use crate::dynamics::{self, ConsensusWeights, LaplacianVariant, StateVector};
use crate::energy::{self, AttackerParams, DefenderParams, EnergyError, EnergyLedger, EnergySupply};
use crate::energy::FEASIBILITY_TOLERANCE;
use crate::game::{ActionTriple, GameConfig, GameError, GamePlan, GameSolver};
use crate::graph::{self, DisjointSet, Graph, GraphError, Partition};

pub const DEFAULT_K_MAX: u64 = 50;
pub const DEFAULT_EPS: f64 = 1e-3;
/// Per-step motion below which a run counts as settled for the audit.
pub const SETTLED_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Dynamics(#[from] dynamics::DynamicsError),
    #[error("energy ledger rejected the equilibrium action: {0}")]
    Energy(#[from] EnergyError),
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("failed to write output: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to write CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("failed to encode JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Length of a simulation and the thresholds of its finite-time surrogates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunParams {
    pub k_max: u64,
    pub eps_consensus: f64,
    pub eps_cluster: f64,
}

impl Default for RunParams {
    fn default() -> Self {
        RunParams {
            k_max: DEFAULT_K_MAX,
            eps_consensus: DEFAULT_EPS,
            eps_cluster: DEFAULT_EPS,
        }
    }
}

/// Everything needed to run one simulation.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub graph: Graph,
    pub x0: StateVector,
    pub weights: ConsensusWeights,
    pub attacker: AttackerParams,
    pub defender: DefenderParams,
    pub game: GameConfig,
    pub run: RunParams,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), EngineError> {
        if !self.graph.is_connected() {
            return Err(GraphError::Disconnected.into());
        }
        if self.x0.len() != self.graph.n() {
            return Err(EngineError::Scenario(format!(
                "x0 has {} entries, graph has {} agents",
                self.x0.len(),
                self.graph.n()
            )));
        }
        self.attacker.validate()?;
        self.defender.validate()?;
        self.game.validate()?;
        if !(self.run.eps_consensus > 0.0 && self.run.eps_cluster > 0.0) {
            return Err(EngineError::Scenario("eps thresholds must be positive".into()));
        }
        Ok(())
    }
}

/// What happened at step `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub k: u64,
    pub action: ActionTriple,
    pub x_next: StateVector,
    pub z: f64,
    pub c_after: i64,
    /// Cumulative spend including this step.
    pub attacker_spent: f64,
    pub defender_spent: f64,
    /// `kappa + rho k` minus the cumulative spend including this step.
    pub attacker_available: f64,
    pub defender_available: f64,
    pub applied_utility_attacker: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub records: Vec<TrajectoryRecord>,
    pub consensus: bool,
    pub clusters: Partition,
    /// Every solved window, including the steps that were never applied.
    pub plans: Vec<GamePlan>,
}

impl SimulationResult {
    pub fn final_state<'a>(&'a self, scenario: &'a Scenario) -> &'a StateVector {
        self.records.last().map_or(&scenario.x0, |r| &r.x_next)
    }

    pub fn cumulative_applied_utility(&self) -> f64 {
        self.records.iter().map(|r| r.applied_utility_attacker).sum()
    }

    pub fn strong_attack_count(&self) -> usize {
        self.records.iter().map(|r| r.action.strong().len()).sum()
    }

    pub fn normal_attack_count(&self) -> usize {
        self.records.iter().map(|r| r.action.normal().len()).sum()
    }

    pub fn recovered_count(&self) -> usize {
        self.records.iter().map(|r| r.action.recovered().len()).sum()
    }

    pub fn group_index_sum(&self) -> i64 {
        self.records.iter().map(|r| r.c_after).sum()
    }
}

/// Runs the rolling-horizon game for `K_max` steps.
pub fn run(scenario: &Scenario) -> Result<SimulationResult, EngineError> {
    scenario.validate()?;
    let solver = GameSolver::new(
        &scenario.graph,
        &scenario.weights,
        scenario.attacker,
        scenario.defender,
        scenario.game,
    )?;
    let cfg = &scenario.game;
    let (ap, dp) = (&scenario.attacker, &scenario.defender);
    let k_max = scenario.run.k_max;

    let mut x = scenario.x0.clone();
    let mut attacker = EnergyLedger::new();
    let mut defender = EnergyLedger::new();
    let mut records = Vec::with_capacity(k_max as usize);
    let mut plans = Vec::new();
    let mut k = 0u64;
    while k < k_max {
        let plan = solver.solve(&x, &attacker, &defender, k)?;
        for action in plan.steps.iter().take(cfg.period) {
            if k >= k_max {
                break;
            }
            let (cost_a, cost_d) = energy::action_cost(action, ap, dp);
            attacker = attacker.charge(ap, cost_a, k)?;
            defender = defender.charge(dp, cost_d, k)?;
            let effective = graph::apply_actions(&scenario.graph, action)?;
            x = dynamics::consensus_step(&x, &effective, &scenario.weights)?;
            let z = dynamics::variant_difference(x.as_slice(), cfg.laplacian, &scenario.graph);
            let c_after = graph::agent_group_index(&effective);
            records.push(TrajectoryRecord {
                k,
                action: action.clone(),
                x_next: x.clone(),
                z,
                c_after,
                attacker_spent: attacker.spent,
                defender_spent: defender.spent,
                attacker_available: attacker.available(ap, k),
                defender_available: defender.available(dp, k),
                applied_utility_attacker: cfg.a * z - cfg.b * c_after as f64,
            });
            k += 1;
        }
        plans.push(plan);
    }
    Ok(SimulationResult {
        consensus: detect_consensus(&x, scenario.run.eps_consensus),
        clusters: detect_clusters(&x, scenario.run.eps_cluster),
        records,
        plans,
    })
}

/// Groups agents whose states are chained together by gaps of at most `eps`.
pub fn detect_clusters(x: &StateVector, eps: f64) -> Partition {
    let v = x.as_slice();
    let mut sets = DisjointSet::new(v.len());
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            if (v[i] - v[j]).abs() <= eps {
                sets.union(i, j);
            }
        }
    }
    sets.into_partition()
}

pub fn detect_consensus(x: &StateVector, eps: f64) -> bool {
    x.spread() <= eps
}

/// Longest run of steps in which the attacker can keep normally attacking
/// without the defender ever recovering.
pub fn recovery_interval(dp: &DefenderParams, edge_count: usize, h: usize, period: usize) -> u64 {
    let ratio = (h as f64 * edge_count as f64 * dp.beta - dp.rho) / (dp.rho * period as f64) + 1.0;
    (ratio - FEASIBILITY_TOLERANCE).ceil().max(1.0) as u64
}

/// Invariant violations found in a finished simulation.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AuditReport {
    pub violations: Vec<String>,
    /// Whether the final cluster count was compared against the cluster
    /// bounds. Only done for `b = 0` runs that have settled on an attack the
    /// recharge rate can pay for.
    pub cluster_bound_checked: bool,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Re-checks a trajectory against the model's invariants: `z` never grows
/// (complete-graph variant only), the state sum is conserved, the energy
/// ledgers match the applied actions and never overdraw, the defender
/// recovers (or the attacker stops normal attacks) within every
/// [`recovery_interval`], and, for `b = 0`, the final cluster count respects
/// both cluster bounds.
///
/// The cluster bounds describe the limit `k -> inf`. A finite run still
/// drifting between clusters can show more eps-clusters than the limit will
/// have, and an attacker can hold a cut above its recharge rate for a while
/// by draining its stock. The bound check therefore only runs when the last
/// step moved no agent by more than [`SETTLED_TOLERANCE`] and the last attack
/// costs no more than `rho`.
pub fn audit(scenario: &Scenario, result: &SimulationResult) -> AuditReport {
    let mut violations = Vec::new();
    let (ap, dp) = (&scenario.attacker, &scenario.defender);
    let sum0 = scenario.x0.sum();
    let scale = 1.0 + scenario.x0.as_slice().iter().map(|v| v.abs()).sum::<f64>();
    let mut prev_z = dynamics::variant_difference(scenario.x0.as_slice(), scenario.game.laplacian, &scenario.graph);
    let (mut spent_a, mut spent_d) = (0.0, 0.0);

    for (idx, r) in result.records.iter().enumerate() {
        if r.k != idx as u64 {
            violations.push(format!("record {idx} has step {}", r.k));
        }
        if scenario.game.laplacian == LaplacianVariant::Complete && r.z > prev_z + 1e-9 {
            violations.push(format!("z rose at k={}: {} -> {}", r.k, prev_z, r.z));
        }
        prev_z = r.z;
        let drift = (r.x_next.sum() - sum0).abs();
        if drift > 1e-12 * scale * (r.k + 1) as f64 {
            violations.push(format!("state sum drifted by {drift} at k={}", r.k));
        }
        let (cost_a, cost_d) = energy::action_cost(&r.action, ap, dp);
        spent_a += cost_a;
        spent_d += cost_d;
        if spent_a != r.attacker_spent || spent_d != r.defender_spent {
            violations.push(format!("ledger mismatch at k={}", r.k));
        }
        if spent_a > ap.supplied(r.k) + FEASIBILITY_TOLERANCE {
            violations.push(format!("attacker overdrew at k={}", r.k));
        }
        if spent_d > dp.supplied(r.k) + FEASIBILITY_TOLERANCE {
            violations.push(format!("defender overdrew at k={}", r.k));
        }
        match graph::apply_actions(&scenario.graph, &r.action) {
            Ok(g) if graph::agent_group_index(&g) == r.c_after => {}
            _ => violations.push(format!("c_after inconsistent at k={}", r.k)),
        }
    }

    let m = scenario.graph.edge_count();
    let window = recovery_interval(dp, m, scenario.game.h, scenario.game.period) as usize;
    for (start, span) in result.records.windows(window).enumerate() {
        if !span
            .iter()
            .any(|r| !r.action.recovered().is_empty() || r.action.normal().is_empty())
        {
            violations.push(format!(
                "no recovery within {window} steps from k={start} while normal attacks continued"
            ));
            break;
        }
    }

    let settled = final_step_change(scenario, result) <= SETTLED_TOLERANCE;
    let sustainable = result
        .records
        .last()
        .is_none_or(|r| energy::action_cost(&r.action, ap, dp).0 <= ap.rho + FEASIBILITY_TOLERANCE);
    let cluster_bound_checked = scenario.game.b == 0.0 && settled && sustainable;
    if cluster_bound_checked {
        let count = result.clusters.len();
        if let Ok(theta) = graph::theta_vector(&scenario.graph) {
            let bound = analysis::cluster_upper_bound(&theta, ap);
            if count > bound {
                violations.push(format!("{count} clusters exceed the theta bound {bound}"));
            }
        }
        let free = analysis::topology_free_bound(ap);
        if count > free {
            violations.push(format!("{count} clusters exceed the topology-free bound {free}"));
        }
    }
    AuditReport { violations, cluster_bound_checked }
}

/// Largest absolute change of any agent over the last recorded step.
pub fn final_step_change(scenario: &Scenario, result: &SimulationResult) -> f64 {
    let n = result.records.len();
    let Some(last) = result.records.last() else {
        return 0.0;
    };
    let prev = if n >= 2 { &result.records[n - 2].x_next } else { &scenario.x0 };
    last.x_next
        .as_slice()
        .iter()
        .zip(prev.as_slice())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

fn edge_list(edges: &[graph::Edge]) -> String {
    edges.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(";")
}

/// Writes one CSV row per step.
pub fn write_trajectory_csv<W: Write>(scenario: &Scenario, result: &SimulationResult, out: W) -> Result<(), EngineError> {
    let mut w = csv::Writer::from_writer(out);
    let n = scenario.graph.n();
    let mut header: Vec<String> = ["k", "strong_edges", "normal_edges", "recovered_edges"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..n).map(|i| format!("x_{i}")));
    header.extend(
        ["z", "c_after", "attacker_available", "defender_available", "applied_utility_attacker"]
            .iter()
            .map(|s| s.to_string()),
    );
    w.write_record(&header)?;
    for r in &result.records {
        let mut row = vec![
            r.k.to_string(),
            edge_list(r.action.strong()),
            edge_list(r.action.normal()),
            edge_list(r.action.recovered()),
        ];
        row.extend(r.x_next.as_slice().iter().map(|v| v.to_string()));
        row.push(r.z.to_string());
        row.push(r.c_after.to_string());
        row.push(r.attacker_available.to_string());
        row.push(r.defender_available.to_string());
        row.push(r.applied_utility_attacker.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Condensed results of one simulation, serialized as `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub consensus: bool,
    pub clusters: Vec<Vec<usize>>,
    pub cluster_count: usize,
    pub steps: u64,
    pub final_state: Vec<f64>,
    pub final_z: f64,
    pub group_index_sum: i64,
    pub cumulative_applied_utility_attacker: f64,
    pub cumulative_applied_utility_defender: f64,
    pub strong_attack_count: usize,
    pub normal_attack_count: usize,
    pub recovered_count: usize,
    pub plans: Vec<GamePlan>,
}

pub fn summarize(scenario: &Scenario, result: &SimulationResult) -> Summary {
    let x = result.final_state(scenario);
    let total = result.cumulative_applied_utility();
    Summary {
        consensus: result.consensus,
        clusters: result.clusters.blocks().to_vec(),
        cluster_count: result.clusters.len(),
        steps: result.records.len() as u64,
        final_state: x.as_slice().to_vec(),
        final_z: dynamics::variant_difference(x.as_slice(), scenario.game.laplacian, &scenario.graph),
        group_index_sum: result.group_index_sum(),
        cumulative_applied_utility_attacker: total,
        cumulative_applied_utility_defender: -total,
        strong_attack_count: result.strong_attack_count(),
        normal_attack_count: result.normal_attack_count(),
        recovered_count: result.recovered_count(),
        plans: result.plans.clone(),
    }
}
