mod common;

use common::{random_attacker, random_connected_graph, random_defender, random_weights};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rhjam::config::{GameSection, GraphConfig, RunSection, ScenarioConfig, WeightsConfig};
use rhjam::dynamics::{consensus_step, LaplacianVariant, StateVector};
use rhjam::engine::{audit, run, RunParams, Scenario};
use rhjam::game::{stage_utility, GameConfig};
use rhjam::graph::apply_actions;

fn random_scenario(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=5);
    let m = rng.gen_range(n - 1..=(n * (n - 1) / 2).min(5));
    let graph = random_connected_graph(&mut rng, n, m);
    let weights = random_weights(&mut rng, &graph);
    let h = rng.gen_range(1..=2);
    let mut game = GameConfig::new(rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=1.0), h, rng.gen_range(1..=h));
    if rng.gen_bool(0.3) {
        game.laplacian = LaplacianVariant::BaseGraph;
    }
    Scenario {
        x0: StateVector::new((0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect()).unwrap(),
        graph,
        weights,
        attacker: random_attacker(&mut rng),
        defender: random_defender(&mut rng),
        game,
        run: RunParams { k_max: rng.gen_range(1..=25), ..Default::default() },
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn runs_are_deterministic_and_audit_clean(seed in any::<u64>()) {
        let s = random_scenario(seed);
        let r = run(&s).unwrap();
        prop_assert_eq!(&r, &run(&s).unwrap());
        prop_assert_eq!(r.records.len() as u64, s.run.k_max);
        let report = audit(&s, &r);
        prop_assert!(report.is_clean(), "{:?}", report.violations);
    }

    #[test]
    fn records_replay_from_actions(seed in any::<u64>()) {
        let s = random_scenario(seed);
        let r = run(&s).unwrap();
        let mut x = s.x0.clone();
        for rec in &r.records {
            let g = apply_actions(&s.graph, &rec.action).unwrap();
            x = consensus_step(&x, &g, &s.weights).unwrap();
            prop_assert_eq!(&x, &rec.x_next);
            prop_assert_eq!(stage_utility(&x, &g, &s.graph, &s.game), rec.applied_utility_attacker);
            prop_assert!(rec.attacker_available >= -1e-9 && rec.defender_available >= -1e-9);
        }
    }

    #[test]
    fn windows_start_on_period_boundaries(seed in any::<u64>()) {
        let s = random_scenario(seed);
        let r = run(&s).unwrap();
        let period = s.game.period as u64;
        prop_assert_eq!(r.plans.len() as u64, s.run.k_max.div_ceil(period));
        for (l, plan) in r.plans.iter().enumerate() {
            prop_assert_eq!(plan.k_start, l as u64 * period);
            prop_assert_eq!(plan.steps.len(), s.game.h);
            for (i, step) in plan.steps.iter().take(s.game.period).enumerate() {
                if let Some(rec) = r.records.get(plan.k_start as usize + i) {
                    prop_assert_eq!(step, &rec.action);
                }
            }
        }
    }

    #[test]
    fn config_round_trips(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_scenario(seed);
        let cfg = ScenarioConfig {
            x0: s.x0.as_slice().to_vec(),
            laplacian_variant: s.game.laplacian,
            graph: GraphConfig {
                n: s.graph.n(),
                edges: s.graph.edges().iter().map(|e| [e.lo(), e.hi()]).collect(),
                one_indexed: false,
            },
            weights: WeightsConfig {
                per_edge: Some(s.weights.iter().map(|(e, w)| (e.lo(), e.hi(), w)).collect()),
                ..Default::default()
            },
            attacker: s.attacker,
            defender: s.defender,
            game: GameSection {
                a: s.game.a,
                b: s.game.b,
                h: s.game.h,
                period: s.game.period,
                prune: rng.gen_bool(0.5),
                enumeration_limit_log2: s.game.enumeration_limit_log2,
            },
            run: RunSection { k_max: s.run.k_max, ..Default::default() },
        };
        let text = cfg.to_toml_string().unwrap();
        let back = ScenarioConfig::from_toml_str(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        let rebuilt = back.to_scenario().unwrap();
        prop_assert_eq!(rebuilt.graph, s.graph);
        prop_assert_eq!(rebuilt.weights, s.weights);
    }
}
