//! Closed-form consensus conditions and cluster-count bounds.
//!
//! Ratios are floored and compared with a `1e-9` slack so that a ratio such
//! as `2.6 / 1.3` still counts as 2.

use serde::{Deserialize, Serialize};

use crate::energy::{AttackerParams, FEASIBILITY_TOLERANCE};
use crate::engine::{self, Scenario};
use crate::graph::{self, GraphError, ThetaVector};

fn at_least(ratio: f64, bound: f64) -> bool {
    ratio + FEASIBILITY_TOLERANCE >= bound
}

fn floor_ratio(ratio: f64) -> usize {
    (ratio + FEASIBILITY_TOLERANCE).floor().max(0.0) as usize
}

/// Edges the attacker can strongly attack at every step forever.
pub fn sustained_strong_edges(ap: &AttackerParams) -> usize {
    floor_ratio(ap.rho / ap.beta_strong)
}

/// `floor(rho / beta_normal) >= lambda`: without this, consensus is reached
/// for any utility weights.
pub fn necessary_condition_general(ap: &AttackerParams, lambda: usize) -> bool {
    floor_ratio(ap.rho / ap.beta_normal) >= lambda
}

/// `rho / beta_strong >= lambda`, the sharper necessary condition when `b = 0`.
pub fn necessary_condition_b0(ap: &AttackerParams, lambda: usize) -> bool {
    at_least(ap.rho / ap.beta_strong, lambda as f64)
}

/// `rho / beta_strong >= |E|`: the attacker can cut every edge at every step.
pub fn sufficient_condition_prevent(ap: &AttackerParams, edge_count: usize) -> bool {
    at_least(ap.rho / ap.beta_strong, edge_count as f64)
}

/// `rho / beta_strong >= n - 1`; sufficient on a complete graph with `b = 0`
/// and `h = 1`.
pub fn complete_graph_h1_sufficient(ap: &AttackerParams, n: usize) -> bool {
    at_least(ap.rho / ap.beta_strong, n.saturating_sub(1) as f64)
}

/// `Theta` at the number of sustainable strong attacks, or 1 when none can
/// be sustained. Valid for `b = 0`.
pub fn cluster_upper_bound(theta: &ThetaVector, ap: &AttackerParams) -> usize {
    match sustained_strong_edges(ap) {
        0 => 1,
        j => theta.get(j),
    }
}

/// Cluster bound on the complete graph `K_n`: one more cluster for every `j`
/// whose isolation cost `j (2n - j - 1) / 2` edges the attacker can sustain.
pub fn complete_graph_bound(n: usize, ap: &AttackerParams) -> usize {
    1 + (1..n)
        .map(|j| {
            let denom = (j * (2 * n - j - 1)) as f64 * ap.beta_strong;
            floor_ratio(2.0 * ap.rho / denom).min(1)
        })
        .sum::<usize>()
}

/// `floor(rho / beta_strong) + 1`, independent of the topology.
pub fn topology_free_bound(ap: &AttackerParams) -> usize {
    sustained_strong_edges(ap) + 1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub edge_connectivity: usize,
    pub theta: Vec<usize>,
    pub necessary_general: bool,
    pub necessary_b0: bool,
    pub sufficient_all_edges: bool,
    /// `None` unless the graph is complete.
    pub complete_graph_h1_sufficient: Option<bool>,
    pub cluster_bound_theta: usize,
    pub cluster_bound_topology_free: usize,
    /// `None` unless the graph is complete.
    pub complete_graph_bound: Option<usize>,
    pub recovery_interval: u64,
}

pub fn build_report(scenario: &Scenario) -> Result<ConditionReport, GraphError> {
    let g = &scenario.graph;
    let ap = &scenario.attacker;
    let lambda = graph::edge_connectivity(g)?;
    let theta = graph::theta_vector(g)?;
    let complete = g.is_complete();
    Ok(ConditionReport {
        edge_connectivity: lambda,
        necessary_general: necessary_condition_general(ap, lambda),
        necessary_b0: necessary_condition_b0(ap, lambda),
        sufficient_all_edges: sufficient_condition_prevent(ap, g.edge_count()),
        complete_graph_h1_sufficient: complete.then(|| complete_graph_h1_sufficient(ap, g.n())),
        cluster_bound_theta: cluster_upper_bound(&theta, ap),
        cluster_bound_topology_free: topology_free_bound(ap),
        complete_graph_bound: complete.then(|| complete_graph_bound(g.n(), ap)),
        recovery_interval: engine::recovery_interval(
            &scenario.defender,
            g.edge_count(),
            scenario.game.h,
            scenario.game.period,
        ),
        theta: theta.values().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{ConsensusWeights, StateVector};
    use crate::energy::DefenderParams;
    use crate::engine::RunParams;
    use crate::game::GameConfig;
    use crate::graph::Graph;
    use proptest::prelude::*;

    fn ap(rho: f64, beta_normal: f64, beta_strong: f64) -> AttackerParams {
        AttackerParams {
            kappa: rho,
            rho,
            beta_normal,
            beta_strong,
        }
    }

    #[test]
    fn necessary_general_examples() {
        assert!(necessary_condition_general(&ap(2.6, 1.0, 2.0), 1));
        assert!(!necessary_condition_general(&ap(0.5, 1.0, 2.0), 1));
        assert!(necessary_condition_general(&ap(3.0, 1.0, 2.0), 3));
    }

    #[test]
    fn necessary_b0_examples() {
        assert!(necessary_condition_b0(&ap(1.0, 0.5, 1.0), 1));
        assert!(!necessary_condition_b0(&ap(1.0, 0.5, 2.0), 1));
        assert!(necessary_condition_b0(&ap(2.6, 1.0, 2.0), 1));
    }

    #[test]
    fn sufficient_examples() {
        assert!(!sufficient_condition_prevent(&ap(1.4, 0.5, 1.0), 4));
        assert!(sufficient_condition_prevent(&ap(8.0, 1.0, 2.0), 4));
        assert!(!sufficient_condition_prevent(&ap(2.6, 1.0, 2.0), 3));
    }

    #[test]
    fn complete_graph_h1_examples() {
        assert!(complete_graph_h1_sufficient(&ap(3.0, 0.5, 1.0), 4));
        assert!(!complete_graph_h1_sufficient(&ap(2.9, 0.5, 1.0), 4));
        assert!(complete_graph_h1_sufficient(&ap(1.0, 0.5, 1.0), 2));
    }

    #[test]
    fn theta_bound_examples() {
        let pendant = Graph::new(4, [(0, 1), (1, 2), (1, 3), (2, 3)]).unwrap();
        let theta = graph::theta_vector(&pendant).unwrap();
        let bounds: Vec<usize> = [1.0, 2.0, 3.0, 4.0]
            .iter()
            .map(|&r| cluster_upper_bound(&theta, &ap(r, 0.5, 1.0)))
            .collect();
        assert_eq!(bounds, vec![2, 2, 3, 4]);
        assert_eq!(cluster_upper_bound(&theta, &ap(0.9, 0.5, 1.0)), 1);
        // Saturated ratios clamp to all-edges removal.
        assert_eq!(cluster_upper_bound(&theta, &ap(9.0, 0.5, 1.0)), 4);
    }

    #[test]
    fn complete_graph_bound_examples() {
        assert_eq!(complete_graph_bound(4, &ap(3.0, 0.5, 1.0)), 2);
        assert_eq!(complete_graph_bound(4, &ap(6.0, 0.5, 1.0)), 4);
        assert_eq!(complete_graph_bound(4, &ap(1.0, 0.5, 1.0)), 1);
    }

    #[test]
    fn topology_free_examples() {
        let got: Vec<usize> = [1.0, 2.0, 3.0, 4.0, 0.9]
            .iter()
            .map(|&r| topology_free_bound(&ap(r, 0.5, 1.0)))
            .collect();
        assert_eq!(got, vec![2, 3, 4, 5, 1]);
    }

    fn report_for(graph: Graph, attacker: AttackerParams) -> ConditionReport {
        let n = graph.n();
        let weights = ConsensusWeights::uniform(&graph, 0.5 / n as f64).unwrap();
        let scenario = Scenario {
            graph,
            x0: StateVector::new(vec![0.0; n]).unwrap(),
            weights,
            attacker,
            defender: DefenderParams { kappa: 0.8, rho: 0.3, beta: 1.0 },
            game: GameConfig::new(0.5, 0.5, 2, 1),
            run: RunParams::default(),
        };
        build_report(&scenario).unwrap()
    }

    #[test]
    fn report_examples() {
        let r = report_for(
            Graph::path(4).unwrap(),
            AttackerParams { kappa: 2.6, rho: 2.6, beta_normal: 1.0, beta_strong: 2.0 },
        );
        assert!(r.necessary_general);
        assert!(!r.sufficient_all_edges);
        assert_eq!(r.complete_graph_bound, None);
        assert_eq!(r.recovery_interval, 20);

        let r = report_for(Graph::complete(5).unwrap(), ap(10.0, 0.5, 1.0));
        assert!(r.sufficient_all_edges);
        assert_eq!(r.cluster_bound_theta, 5);
        assert_eq!(r.complete_graph_bound, Some(5));
        assert_eq!(r.complete_graph_h1_sufficient, Some(true));

        let tree = Graph::new(4, [(0, 1), (1, 2), (1, 3)]).unwrap();
        assert_eq!(report_for(tree, ap(1.0, 0.5, 1.0)).cluster_bound_theta, 2);
    }

    proptest! {
        #[test]
        fn implication_chain(
            rho in 0.05f64..12.0,
            beta_normal in 0.05f64..3.0,
            extra in 0.01f64..3.0,
            edges in 1usize..12,
            lambda_frac in 0.0f64..1.0,
        ) {
            let p = ap(rho, beta_normal, beta_normal + extra);
            let lambda = 1 + ((edges - 1) as f64 * lambda_frac) as usize;
            if sufficient_condition_prevent(&p, edges) {
                prop_assert!(necessary_condition_b0(&p, lambda));
            }
            if necessary_condition_b0(&p, lambda) {
                prop_assert!(necessary_condition_general(&p, lambda));
            }
        }

        #[test]
        fn theta_bound_within_topology_free(seed_edges in proptest::collection::vec(any::<bool>(), 10), rho in 0.1f64..12.0) {
            let all = Graph::complete(5).unwrap();
            let picked: Vec<_> = all.edges().iter().zip(&seed_edges).filter(|(_, &k)| k).map(|(e, _)| *e).collect();
            let g = Graph::from_edges(5, picked).unwrap();
            prop_assume!(g.is_connected());
            let theta = graph::theta_vector(&g).unwrap();
            let p = ap(rho, 0.05, 1.0);
            prop_assert!(cluster_upper_bound(&theta, &p) <= topology_free_bound(&p));
        }
    }
}
