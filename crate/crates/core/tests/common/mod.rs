//! Shared helpers for integration tests: an exhaustive minimax oracle and
//! random instance generators.

#![allow(dead_code)]

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::Rng;
use rhjam::dynamics::{consensus_step, ConsensusWeights, StateVector};
use rhjam::energy::{AttackerParams, DefenderParams, EnergyLedger};
use rhjam::engine::{RunParams, Scenario};
use rhjam::game::{stage_utility, ActionTriple, GameConfig};
use rhjam::graph::{apply_actions, Edge, Graph};

const TOL: f64 = 1e-9;

/// Full-tree backward induction over explicit action triples. No
/// memoization and no pruning; the tie-break is re-derived here.
pub struct Oracle<'a> {
    pub g: &'a Graph,
    pub w: &'a ConsensusWeights,
    pub ap: &'a AttackerParams,
    pub dp: &'a DefenderParams,
    pub cfg: &'a GameConfig,
    pub k_start: u64,
}

#[derive(Clone, Copy)]
struct Key {
    cost: f64,
    count: usize,
}

fn resource_order(a: Key, b: Key, abundant: bool) -> Ordering {
    let by_cost = if (a.cost - b.cost).abs() > TOL {
        a.cost.partial_cmp(&b.cost).unwrap()
    } else {
        Ordering::Equal
    };
    let o = by_cost.then(a.count.cmp(&b.count));
    if abundant {
        o.reverse()
    } else {
        o
    }
}

impl Oracle<'_> {
    pub fn solve(&self, x: &StateVector, spent_a: f64, spent_d: f64) -> (f64, Vec<ActionTriple>) {
        self.node(1, x, spent_a, spent_d)
    }

    fn all_attacks(&self) -> Vec<ActionTriple> {
        let m = self.g.edge_count();
        let mut out = Vec::new();
        for code in 0..3usize.pow(m as u32) {
            let (mut strong, mut normal) = (Vec::new(), Vec::new());
            let mut c = code;
            for e in self.g.edges() {
                match c % 3 {
                    1 => strong.push(*e),
                    2 => normal.push(*e),
                    _ => {}
                }
                c /= 3;
            }
            out.push(ActionTriple::new(strong, normal, vec![]).unwrap());
        }
        out
    }

    fn node(&self, stage: usize, x: &StateVector, spent_a: f64, spent_d: f64) -> (f64, Vec<ActionTriple>) {
        let (ap, dp, cfg) = (self.ap, self.dp, self.cfg);
        let m = self.g.edge_count() as f64;
        let k = self.k_start + stage as u64 - 1;
        let remaining = (cfg.h - stage + 1) as f64;
        let supply_a = ap.kappa + ap.rho * k as f64;
        let supply_d = dp.kappa + dp.rho * k as f64;
        let avail_a = supply_a - spent_a;
        let avail_d = supply_d - spent_d;
        let abundant_a = ap.rho / ap.beta_strong + TOL >= m
            || spent_a <= supply_a - remaining * (ap.beta_strong * m) + TOL;
        let abundant_d = spent_d <= supply_d - (remaining * m) * dp.beta + TOL;

        let mut options: Vec<(f64, ActionTriple, Vec<ActionTriple>)> = Vec::new();
        for attack in self.all_attacks() {
            let cost_a = ap.cost(attack.strong().len(), attack.normal().len());
            if cost_a > avail_a + TOL {
                continue;
            }
            let normal = attack.normal().to_vec();
            let mut responses: Vec<(f64, ActionTriple, Vec<ActionTriple>)> = Vec::new();
            for bits in 0u32..1 << normal.len() {
                let recovered: Vec<Edge> = normal
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| bits >> i & 1 == 1)
                    .map(|(_, e)| *e)
                    .collect();
                let cost_d = dp.cost(recovered.len());
                if cost_d > avail_d + TOL {
                    continue;
                }
                let act = ActionTriple::new(attack.strong().to_vec(), normal.clone(), recovered).unwrap();
                let gd = apply_actions(self.g, &act).unwrap();
                let next = consensus_step(x, &gd, self.w).unwrap();
                let u = stage_utility(&next, &gd, self.g, cfg);
                let (total, tail) = if stage == cfg.h {
                    (u, Vec::new())
                } else {
                    let (v, tail) = self.node(stage + 1, &next, spent_a + cost_a, spent_d + cost_d);
                    (u + v, tail)
                };
                responses.push((total, act, tail));
            }
            let best = responses.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
            let chosen = responses
                .into_iter()
                .filter(|r| r.0 <= best + cfg.utility_tolerance)
                .min_by(|p, q| {
                    let kp = Key { cost: dp.cost(p.1.recovered().len()), count: p.1.recovered().len() };
                    let kq = Key { cost: dp.cost(q.1.recovered().len()), count: q.1.recovered().len() };
                    resource_order(kp, kq, abundant_d).then_with(|| p.1.recovered().cmp(q.1.recovered()))
                })
                .unwrap();
            options.push(chosen);
        }
        let best = options.iter().map(|o| o.0).fold(f64::NEG_INFINITY, f64::max);
        let (value, act, tail) = options
            .into_iter()
            .filter(|o| o.0 >= best - cfg.utility_tolerance)
            .min_by(|p, q| {
                let key = |a: &ActionTriple| Key {
                    cost: ap.cost(a.strong().len(), a.normal().len()),
                    count: a.strong().len() + a.normal().len(),
                };
                resource_order(key(&p.1), key(&q.1), abundant_a)
                    .then_with(|| p.1.strong().cmp(q.1.strong()))
                    .then_with(|| p.1.normal().cmp(q.1.normal()))
            })
            .unwrap();
        let mut path = vec![act];
        path.extend(tail);
        (value, path)
    }
}

/// Uniformly random spanning tree plus extra random edges, `m` edges total.
pub fn random_connected_graph<R: Rng>(rng: &mut R, n: usize, m: usize) -> Graph {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges: Vec<(usize, usize)> = (1..n).map(|i| (order[i], order[rng.gen_range(0..i)])).collect();
    let mut rest: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| !edges.iter().any(|&(a, b)| (a.min(b), a.max(b)) == (i, j)))
        .collect();
    rest.shuffle(rng);
    edges.extend(rest.into_iter().take(m.saturating_sub(n - 1)));
    Graph::new(n, edges).unwrap()
}

/// Random weights satisfying the row-sum condition.
pub fn random_weights<R: Rng>(rng: &mut R, g: &Graph) -> ConsensusWeights {
    let cap = 0.95 / (g.max_degree() as f64);
    let map = g.edges().iter().map(|e| (*e, rng.gen_range(0.05..cap))).collect();
    ConsensusWeights::new(g, &map).unwrap()
}

/// Values on a coarse grid so that cost and budget ties actually occur.
pub fn grid<R: Rng>(rng: &mut R, lo: u32, hi: u32, step: f64) -> f64 {
    rng.gen_range(lo..=hi) as f64 * step
}

pub fn random_attacker<R: Rng>(rng: &mut R) -> AttackerParams {
    let beta_normal = grid(rng, 1, 4, 0.5);
    let beta_strong = beta_normal + grid(rng, 1, 4, 0.5);
    let rho = grid(rng, 1, 12, 0.5);
    AttackerParams { kappa: rho + grid(rng, 0, 6, 0.5), rho, beta_normal, beta_strong }
}

pub fn random_defender<R: Rng>(rng: &mut R) -> DefenderParams {
    let rho = grid(rng, 1, 8, 0.25);
    DefenderParams { kappa: rho + grid(rng, 0, 8, 0.25), rho, beta: grid(rng, 1, 4, 0.5) }
}

pub fn random_state<R: Rng>(rng: &mut R, n: usize) -> StateVector {
    // Occasionally repeat values so that utility ties appear.
    let pool: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let v = (0..n)
        .map(|i| if rng.gen_bool(0.2) { pool[0] } else { pool[i] })
        .collect();
    StateVector::new(v).unwrap()
}

/// One randomized small game instance.
pub struct Instance {
    pub g: Graph,
    pub w: ConsensusWeights,
    pub ap: AttackerParams,
    pub dp: DefenderParams,
    pub cfg: GameConfig,
    pub x: StateVector,
    pub attacker: EnergyLedger,
    pub defender: EnergyLedger,
    pub k_start: u64,
}

pub fn random_instance<R: Rng>(rng: &mut R, max_edges: usize, max_h: usize) -> Instance {
    let n = rng.gen_range(2..=4);
    let max_m = (n * (n - 1) / 2).min(max_edges);
    let m = rng.gen_range(n - 1..=max_m);
    let g = random_connected_graph(rng, n, m);
    let w = random_weights(rng, &g);
    let ap = random_attacker(rng);
    let dp = random_defender(rng);
    let a = [0.0, 0.5, 1.0, rng.gen_range(0.0..1.0)][rng.gen_range(0..4)];
    let b = [0.0, 0.5, 1.0, 1.0 - a][rng.gen_range(0..4)];
    let h = rng.gen_range(1..=max_h);
    let mut cfg = GameConfig::new(a, b, h, rng.gen_range(1..=h));
    if rng.gen_bool(0.2) {
        cfg.laplacian = rhjam::dynamics::LaplacianVariant::BaseGraph;
    }
    let k_start = rng.gen_range(0..4);
    let attacker = EnergyLedger { spent: grid(rng, 0, 2 * k_start as u32, 0.5).min(ap.kappa + ap.rho * k_start as f64 - ap.rho), k: 0 };
    let defender = EnergyLedger { spent: grid(rng, 0, 2 * k_start as u32, 0.25).min(dp.kappa + dp.rho * k_start as f64 - dp.rho), k: 0 };
    Instance {
        x: random_state(rng, n),
        g,
        w,
        ap,
        dp,
        cfg,
        attacker,
        defender,
        k_start,
    }
}

/// Scenario with uniform weights `a_hat`.
pub fn scenario(
    graph: Graph,
    x0: Vec<f64>,
    a_hat: f64,
    attacker: AttackerParams,
    defender: DefenderParams,
    game: GameConfig,
    run: RunParams,
) -> Scenario {
    let weights = ConsensusWeights::uniform(&graph, a_hat).unwrap();
    Scenario {
        graph,
        x0: StateVector::new(x0).unwrap(),
        weights,
        attacker,
        defender,
        game,
        run,
    }
}
