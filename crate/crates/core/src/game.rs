//! One game window: action sets, stage utility, and the subgame-perfect
//! equilibrium found by backward induction over the `2h` alternating
//! decisions (attacker first, then defender, at every step).

use std::cmp::Ordering;
use std::collections::HashMap;
use std::rc::Rc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{self, ConsensusWeights, LaplacianVariant, StateVector};
use crate::energy::{AttackerParams, DefenderParams, EnergyLedger, EnergySupply, FEASIBILITY_TOLERANCE};
use crate::graph::{self, Edge, Graph, GraphError};

/// Default absolute tolerance under which two utilities count as tied.
pub const DEFAULT_UTILITY_TOLERANCE: f64 = 1e-9;

/// Default cap on `log2` of the unpruned game-tree size, `4^(|E| h)`.
pub const DEFAULT_ENUMERATION_LIMIT_LOG2: u32 = 32;

// Costs closer than this are the same cost for tie-breaking purposes.
const COST_EPSILON: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("strong and normal attack sets share edge {0}")]
    StrongNormalOverlap(Edge),
    #[error("recovered edge {0} was not normally attacked")]
    RecoveredNotNormal(Edge),
    #[error("edge {0} listed twice in one action set")]
    RepeatedEdge(Edge),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("invalid game config: {0}")]
    Config(String),
    #[error("game tree with {edges} edges and horizon {h} exceeds 2^{limit_log2} leaves")]
    TooLarge { edges: usize, h: usize, limit_log2: u32 },
    #[error("state has {got} entries, graph has {expected} agents")]
    StateLength { expected: usize, got: usize },
    #[error("recovery lowered the group index ({after_attack} -> {after_recovery})")]
    Unclassified { after_attack: i64, after_recovery: i64 },
    #[error("equilibrium case prediction needs h = 1 and a = 0")]
    PredictionDomain,
}

/// One step's decisions: strongly attacked, normally attacked, and recovered
/// edges. Each list is sorted, so the derived ordering is the canonical
/// lexicographic order used to break residual ties.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ActionTriple {
    strong: Vec<Edge>,
    normal: Vec<Edge>,
    recovered: Vec<Edge>,
}

impl ActionTriple {
    pub fn new(
        strong: Vec<Edge>,
        normal: Vec<Edge>,
        recovered: Vec<Edge>,
    ) -> Result<Self, GameError> {
        let strong = sorted_unique(strong)?;
        let normal = sorted_unique(normal)?;
        let recovered = sorted_unique(recovered)?;
        if let Some(e) = strong.iter().find(|e| normal.binary_search(e).is_ok()) {
            return Err(GameError::StrongNormalOverlap(*e));
        }
        if let Some(e) = recovered.iter().find(|e| normal.binary_search(e).is_err()) {
            return Err(GameError::RecoveredNotNormal(*e));
        }
        Ok(ActionTriple {
            strong,
            normal,
            recovered,
        })
    }

    /// No attack and no recovery.
    pub fn none() -> Self {
        ActionTriple {
            strong: Vec::new(),
            normal: Vec::new(),
            recovered: Vec::new(),
        }
    }

    pub(crate) fn from_masks(base: &Graph, strong: u64, normal: u64, recovered: u64) -> Self {
        ActionTriple {
            strong: base.edges_of_mask(strong),
            normal: base.edges_of_mask(normal),
            recovered: base.edges_of_mask(recovered),
        }
    }

    pub fn strong(&self) -> &[Edge] {
        &self.strong
    }

    pub fn normal(&self) -> &[Edge] {
        &self.normal
    }

    pub fn recovered(&self) -> &[Edge] {
        &self.recovered
    }

    pub fn is_none(&self) -> bool {
        self.strong.is_empty() && self.normal.is_empty()
    }

    /// Checks that every edge belongs to `base`.
    pub fn validate_against(&self, base: &Graph) -> Result<(), GameError> {
        for e in self.strong.iter().chain(&self.normal) {
            if !base.contains_edge(*e) {
                return Err(GraphError::UnknownEdge(*e).into());
            }
        }
        Ok(())
    }
}

fn sorted_unique(mut edges: Vec<Edge>) -> Result<Vec<Edge>, GameError> {
    edges.sort_unstable();
    if let Some(w) = edges.windows(2).find(|w| w[0] == w[1]) {
        return Err(GameError::RepeatedEdge(w[0]));
    }
    Ok(edges)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Player {
    Attacker,
    Defender,
}

/// Utility weights and window geometry shared by both players.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    /// Weight on the state difference.
    pub a: f64,
    /// Weight on the agent-group index.
    pub b: f64,
    /// Horizon length.
    pub h: usize,
    /// Game period: steps applied before the next window is solved.
    pub period: usize,
    pub utility_tolerance: f64,
    pub laplacian: LaplacianVariant,
    /// Restrict attacks to edge sets that split the base graph.
    pub prune: bool,
    pub enumeration_limit_log2: u32,
}

impl GameConfig {
    pub fn new(a: f64, b: f64, h: usize, period: usize) -> Self {
        GameConfig {
            a,
            b,
            h,
            period,
            utility_tolerance: DEFAULT_UTILITY_TOLERANCE,
            laplacian: LaplacianVariant::Complete,
            prune: false,
            enumeration_limit_log2: DEFAULT_ENUMERATION_LIMIT_LOG2,
        }
    }

    pub fn validate(&self) -> Result<(), GameError> {
        let fail = |msg: String| Err(GameError::Config(msg));
        if !(self.a >= 0.0 && self.a.is_finite()) {
            return fail(format!("a must be finite and >= 0, got {}", self.a));
        }
        if !(self.b >= 0.0 && self.b.is_finite()) {
            return fail(format!("b must be finite and >= 0, got {}", self.b));
        }
        if self.h == 0 || self.period == 0 || self.period > self.h {
            return fail(format!("need 1 <= T <= h, got T={} h={}", self.period, self.h));
        }
        if !(self.utility_tolerance >= 0.0 && self.utility_tolerance.is_finite()) {
            return fail(format!(
                "utility tolerance must be finite and >= 0, got {}",
                self.utility_tolerance
            ));
        }
        Ok(())
    }
}

/// Table 1 classification of one step's combined strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum CombinedStrategyCase {
    /// Nothing removed: `c(G^A) = c(G)` and `c(G^D) = c(G^A)`.
    NoEffect,
    /// Split and left split: `c(G^A) < c(G)` and `c(G^D) = c(G^A)`.
    Unrecovered,
    /// Split and partly repaired: `c(G^A) < c(G)` and `c(G^D) > c(G^A)`.
    Recovered,
}

impl CombinedStrategyCase {
    pub fn id(self) -> u8 {
        match self {
            CombinedStrategyCase::NoEffect => 1,
            CombinedStrategyCase::Unrecovered => 2,
            CombinedStrategyCase::Recovered => 3,
        }
    }
}

impl From<CombinedStrategyCase> for u8 {
    fn from(c: CombinedStrategyCase) -> u8 {
        c.id()
    }
}

impl TryFrom<u8> for CombinedStrategyCase {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            1 => Ok(CombinedStrategyCase::NoEffect),
            2 => Ok(CombinedStrategyCase::Unrecovered),
            3 => Ok(CombinedStrategyCase::Recovered),
            _ => Err(format!("no combined strategy case {v}")),
        }
    }
}

/// Equilibrium path of one game window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GamePlan {
    pub k_start: u64,
    pub steps: Vec<ActionTriple>,
    /// Attacker's stage utility along the path.
    pub stage_utilities: Vec<f64>,
    /// Attacker's utility for the window; the defender's is its negation.
    pub value: f64,
}

/// Attacker's per-step utility `a z - b c(G^D)` for the state reached
/// through `g_after`.
pub fn stage_utility(x_next: &StateVector, g_after: &Graph, base: &Graph, cfg: &GameConfig) -> f64 {
    let z = dynamics::variant_difference(x_next.as_slice(), cfg.laplacian, base);
    utility_terms(cfg, z, graph::agent_group_index(g_after))
}

fn utility_terms(cfg: &GameConfig, z: f64, group_index: i64) -> f64 {
    cfg.a * z - cfg.b * group_index as f64
}

/// Every affordable attack, in canonical order. `recovered` is empty.
pub fn enumerate_attacker_actions(g: &Graph, budget: f64, ap: &AttackerParams) -> Vec<ActionTriple> {
    let full = g.full_mask();
    let mut out: Vec<ActionTriple> = attack_masks(full)
        .filter(|&(s, n)| {
            ap.cost(s.count_ones() as usize, n.count_ones() as usize) <= budget + FEASIBILITY_TOLERANCE
        })
        .map(|(s, n)| ActionTriple::from_masks(g, s, n, 0))
        .collect();
    out.sort_unstable();
    out
}

/// Every affordable recovery of the normally attacked edges, in canonical order.
pub fn enumerate_defender_actions(
    normal_attacked: &[Edge],
    budget: f64,
    dp: &DefenderParams,
) -> Vec<Vec<Edge>> {
    let mut normal = normal_attacked.to_vec();
    normal.sort_unstable();
    normal.dedup();
    let mut out: Vec<Vec<Edge>> = (0u64..1 << normal.len())
        .filter(|r| dp.cost(r.count_ones() as usize) <= budget + FEASIBILITY_TOLERANCE)
        .map(|r| {
            normal
                .iter()
                .enumerate()
                .filter(|(i, _)| r >> i & 1 == 1)
                .map(|(_, e)| *e)
                .collect()
        })
        .collect();
    out.sort_unstable();
    out
}

// All (strong, normal) pairs of disjoint submasks of `full`.
fn attack_masks(full: u64) -> impl Iterator<Item = (u64, u64)> {
    submasks(full).flat_map(move |s| submasks(full & !s).map(move |n| (s, n)))
}

fn submasks(mask: u64) -> impl Iterator<Item = u64> {
    let mut next = Some(0u64);
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == mask {
            None
        } else {
            Some(((cur | !mask).wrapping_add(1)) & mask)
        };
        Some(cur)
    })
}

/// Lexicographic comparison of two edge-index sets as ascending sequences.
fn lex_cmp(mut a: u64, mut b: u64) -> Ordering {
    loop {
        match (a == 0, b == 0) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        let (ia, ib) = (a.trailing_zeros(), b.trailing_zeros());
        if ia != ib {
            return ia.cmp(&ib);
        }
        a &= a - 1;
        b &= b - 1;
    }
}

/// Tie-break ordering key for one player's action.
#[derive(Debug, Clone, Copy)]
struct TieKey {
    cost: f64,
    edges: u32,
    // Attacker: (strong, normal). Defender: (recovered, 0).
    lex: (u64, u64),
}

impl TieKey {
    /// Whether `self` wins the tie against `other`. Players short on energy
    /// take the cheapest action (then the fewest edges); players that can
    /// afford their largest action for the rest of the window take the most
    /// expensive one (then the most edges). Remaining ties go to the
    /// lexicographically smallest action.
    fn beats(&self, other: &TieKey, abundant: bool) -> bool {
        let by_cost = if (self.cost - other.cost).abs() > COST_EPSILON {
            self.cost.partial_cmp(&other.cost).unwrap_or(Ordering::Equal)
        } else {
            Ordering::Equal
        };
        let by_count = self.edges.cmp(&other.edges);
        let resource = by_cost.then(by_count);
        let resource = if abundant { resource.reverse() } else { resource };
        match resource {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => {
                lex_cmp(self.lex.0, other.lex.0).then(lex_cmp(self.lex.1, other.lex.1)) == Ordering::Less
            }
        }
    }
}

fn attacker_key(ap: &AttackerParams, strong: u64, normal: u64) -> TieKey {
    let (ns, nn) = (strong.count_ones(), normal.count_ones());
    TieKey {
        cost: ap.cost(ns as usize, nn as usize),
        edges: ns + nn,
        lex: (strong, normal),
    }
}

fn defender_key(dp: &DefenderParams, recovered: u64) -> TieKey {
    let nr = recovered.count_ones();
    TieKey {
        cost: dp.cost(nr as usize),
        edges: nr,
        lex: (recovered, 0),
    }
}

/// Picks among equal-utility actions of `player`. See the rule on the
/// solver: cheapest unless `abundant`, then most expensive; remaining ties go
/// to the canonical lexicographic order.
pub fn tie_break<'a>(
    base: &Graph,
    candidates: &'a [ActionTriple],
    player: Player,
    abundant: bool,
    ap: &AttackerParams,
    dp: &DefenderParams,
) -> Result<Option<&'a ActionTriple>, GameError> {
    let mut best: Option<(TieKey, &ActionTriple)> = None;
    for act in candidates {
        let key = match player {
            Player::Attacker => attacker_key(ap, base.mask_of(act.strong())?, base.mask_of(act.normal())?),
            Player::Defender => defender_key(dp, base.mask_of(act.recovered())?),
        };
        if best.as_ref().is_none_or(|(k, _)| key.beats(k, abundant)) {
            best = Some((key, act));
        }
    }
    Ok(best.map(|(_, a)| a))
}

/// Whether the attacker can strongly attack every edge at each of the
/// `remaining` steps starting at step `k`, having spent `spent` before it.
pub fn attacker_abundant(ap: &AttackerParams, edge_count: usize, spent: f64, k: u64, remaining: usize) -> bool {
    let all = ap.beta_strong * edge_count as f64;
    ap.strong_ratio() + FEASIBILITY_TOLERANCE >= edge_count as f64
        || spent <= ap.supplied(k) - remaining as f64 * all + FEASIBILITY_TOLERANCE
}

/// Whether the defender can recover every edge at each of the `remaining`
/// steps starting at step `k`.
pub fn defender_abundant(dp: &DefenderParams, edge_count: usize, spent: f64, k: u64, remaining: usize) -> bool {
    spent <= dp.supplied(k) - (remaining * edge_count) as f64 * dp.beta + FEASIBILITY_TOLERANCE
}

#[derive(Debug, Clone, Copy)]
struct StepChoice {
    strong: u64,
    normal: u64,
    recovered: u64,
    utility: f64,
}

#[derive(Debug)]
struct Node {
    value: f64,
    path: Vec<StepChoice>,
}

/// Value, tie key, kept-edge mask, recovery cost and continuation.
type DefenderOption = (f64, TieKey, u64, f64, Option<Rc<Node>>);

#[derive(Debug, PartialEq, Eq, Hash)]
struct NodeKey {
    history: Vec<u64>,
    spent_attacker: u64,
    spent_defender: u64,
}

/// Precomputed tables for repeatedly solving windows on one base graph.
#[derive(Debug, Clone)]
pub struct GameSolver {
    base: Graph,
    edges: Vec<(usize, usize, f64)>,
    group_index: Vec<i64>,
    attacks: Vec<(u64, u64)>,
    full: u64,
    ap: AttackerParams,
    dp: DefenderParams,
    cfg: GameConfig,
}

impl GameSolver {
    pub fn new(
        base: &Graph,
        weights: &ConsensusWeights,
        ap: AttackerParams,
        dp: DefenderParams,
        cfg: GameConfig,
    ) -> Result<Self, GameError> {
        cfg.validate()?;
        let m = base.edge_count();
        let log2 = 2 * m as u64 * cfg.h as u64;
        if m >= 32 || log2 > cfg.enumeration_limit_log2 as u64 {
            return Err(GameError::TooLarge {
                edges: m,
                h: cfg.h,
                limit_log2: cfg.enumeration_limit_log2,
            });
        }
        let full = base.full_mask();
        let group_index: Vec<i64> = (0..=full).map(|kept| graph::masked_group_index(base, kept)).collect();
        let edges = base
            .edges()
            .iter()
            .zip(weights.by_index())
            .map(|(e, w)| (e.lo(), e.hi(), w))
            .collect();
        let mut attacks: Vec<(u64, u64)> = attack_masks(full)
            .filter(|&(s, n)| !cfg.prune || s | n == 0 || group_index[(full & !(s | n)) as usize] < 0)
            .collect();
        attacks.sort_by(|a, b| lex_cmp(a.0, b.0).then(lex_cmp(a.1, b.1)));
        Ok(GameSolver {
            base: base.clone(),
            edges,
            group_index,
            attacks,
            full,
            ap,
            dp,
            cfg,
        })
    }

    pub fn config(&self) -> &GameConfig {
        &self.cfg
    }

    pub fn base(&self) -> &Graph {
        &self.base
    }

    /// Solves the window starting at step `k_start` from state `x`, with the
    /// ledgers holding everything spent before `k_start`.
    pub fn solve(
        &self,
        x: &StateVector,
        attacker: &EnergyLedger,
        defender: &EnergyLedger,
        k_start: u64,
    ) -> Result<GamePlan, GameError> {
        if x.len() != self.base.n() {
            return Err(GameError::StateLength {
                expected: self.base.n(),
                got: x.len(),
            });
        }
        let mut window = Window {
            solver: self,
            k_start,
            memo: HashMap::new(),
        };
        let mut history = Vec::with_capacity(self.cfg.h);
        let root = window.attacker_node(1, x.as_slice(), &mut history, attacker.spent, defender.spent);
        Ok(GamePlan {
            k_start,
            steps: root
                .path
                .iter()
                .map(|c| ActionTriple::from_masks(&self.base, c.strong, c.normal, c.recovered))
                .collect(),
            stage_utilities: root.path.iter().map(|c| c.utility).collect(),
            value: root.value,
        })
    }
}

struct Window<'s> {
    solver: &'s GameSolver,
    k_start: u64,
    memo: HashMap<NodeKey, Rc<Node>>,
}

impl Window<'_> {
    fn attacker_node(
        &mut self,
        stage: usize,
        x: &[f64],
        history: &mut Vec<u64>,
        spent_a: f64,
        spent_d: f64,
    ) -> Rc<Node> {
        let key = NodeKey {
            history: history.clone(),
            spent_attacker: spent_a.to_bits(),
            spent_defender: spent_d.to_bits(),
        };
        if let Some(node) = self.memo.get(&key) {
            return Rc::clone(node);
        }
        let node = Rc::new(self.expand(stage, x, history, spent_a, spent_d));
        self.memo.insert(key, Rc::clone(&node));
        node
    }

    fn expand(&mut self, stage: usize, x: &[f64], history: &mut Vec<u64>, spent_a: f64, spent_d: f64) -> Node {
        let s = self.solver;
        let (ap, dp, cfg) = (&s.ap, &s.dp, &s.cfg);
        let m = s.base.edge_count();
        let k = self.k_start + stage as u64 - 1;
        let remaining = cfg.h - stage + 1;
        let avail_a = ap.supplied(k) - spent_a;
        let avail_d = dp.supplied(k) - spent_d;
        let abundant_a = attacker_abundant(ap, m, spent_a, k, remaining);
        let abundant_d = defender_abundant(dp, m, spent_d, k, remaining);

        // Successor state and stage utility per surviving edge set.
        let mut outcomes: HashMap<u64, (Vec<f64>, f64)> = HashMap::new();
        let mut attacker_options: Vec<(f64, TieKey, StepChoice, Rc<Node>)> = Vec::new();
        let mut defender_options: Vec<DefenderOption> = Vec::new();

        for &(strong, normal) in &s.attacks {
            let key_a = attacker_key(ap, strong, normal);
            if key_a.cost > avail_a + FEASIBILITY_TOLERANCE {
                continue;
            }
            defender_options.clear();
            for recovered in submasks(normal) {
                let key_d = defender_key(dp, recovered);
                if key_d.cost > avail_d + FEASIBILITY_TOLERANCE {
                    continue;
                }
                let kept = (s.full & !(strong | normal)) | recovered;
                let (next, utility) = outcomes
                    .entry(kept)
                    .or_insert_with(|| {
                        let mut next = Vec::with_capacity(x.len());
                        dynamics::step_into(
                            x,
                            s.edges
                                .iter()
                                .enumerate()
                                .filter(|(idx, _)| kept >> idx & 1 == 1)
                                .map(|(_, e)| *e),
                            &mut next,
                        );
                        let z = dynamics::variant_difference(&next, cfg.laplacian, &s.base);
                        let u = utility_terms(cfg, z, s.group_index[kept as usize]);
                        (next, u)
                    })
                    .clone();
                let (total, child) = if stage == cfg.h {
                    (utility, None)
                } else {
                    history.push(kept);
                    let child = self.attacker_node(
                        stage + 1,
                        &next,
                        history,
                        spent_a + key_a.cost,
                        spent_d + key_d.cost,
                    );
                    history.pop();
                    (utility + child.value, Some(child))
                };
                defender_options.push((total, key_d, recovered, utility, child));
            }
            // The defender minimizes the attacker's utility.
            let best = defender_options
                .iter()
                .map(|o| o.0)
                .fold(f64::INFINITY, f64::min);
            let mut pick: Option<usize> = None;
            for (i, o) in defender_options.iter().enumerate() {
                if o.0 <= best + cfg.utility_tolerance
                    && pick.is_none_or(|p| o.1.beats(&defender_options[p].1, abundant_d))
                {
                    pick = Some(i);
                }
            }
            let (total, _, recovered, utility, child) =
                defender_options.swap_remove(pick.expect("empty recovery is always feasible"));
            let choice = StepChoice {
                strong,
                normal,
                recovered,
                utility,
            };
            let child = child.unwrap_or_else(|| {
                Rc::new(Node {
                    value: 0.0,
                    path: Vec::new(),
                })
            });
            attacker_options.push((total, key_a, choice, child));
        }

        let best = attacker_options
            .iter()
            .map(|o| o.0)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut pick: Option<usize> = None;
        for (i, o) in attacker_options.iter().enumerate() {
            if o.0 >= best - cfg.utility_tolerance
                && pick.is_none_or(|p| o.1.beats(&attacker_options[p].1, abundant_a))
            {
                pick = Some(i);
            }
        }
        let (value, _, choice, child) =
            attacker_options.swap_remove(pick.expect("the empty attack is always feasible"));
        let mut path = Vec::with_capacity(child.path.len() + 1);
        path.push(choice);
        path.extend_from_slice(&child.path);
        Node { value, path }
    }
}

/// Solves one window. Builds a [`GameSolver`]; reuse one directly when
/// solving many windows on the same graph.
#[allow(clippy::too_many_arguments)]
pub fn solve_game(
    x: &StateVector,
    attacker: &EnergyLedger,
    defender: &EnergyLedger,
    k_start: u64,
    cfg: &GameConfig,
    g: &Graph,
    w: &ConsensusWeights,
    ap: &AttackerParams,
    dp: &DefenderParams,
) -> Result<GamePlan, GameError> {
    GameSolver::new(g, w, *ap, *dp, *cfg)?.solve(x, attacker, defender, k_start)
}

/// Table 1 case of one applied action on base graph `g`.
pub fn classify_step(g: &Graph, act: &ActionTriple) -> Result<CombinedStrategyCase, GameError> {
    let base = graph::agent_group_index(g);
    let attacked = ActionTriple::new(act.strong.clone(), act.normal.clone(), Vec::new())?;
    let after_attack = graph::agent_group_index(&graph::apply_actions(g, &attacked)?);
    let after_recovery = graph::agent_group_index(&graph::apply_actions(g, act)?);
    match (after_attack.cmp(&base), after_recovery.cmp(&after_attack)) {
        (_, Ordering::Less) => Err(GameError::Unclassified {
            after_attack,
            after_recovery,
        }),
        (Ordering::Equal, _) => Ok(CombinedStrategyCase::NoEffect),
        (_, Ordering::Equal) => Ok(CombinedStrategyCase::Unrecovered),
        (_, Ordering::Greater) => Ok(CombinedStrategyCase::Recovered),
    }
}

/// Predicts the combined-strategy case of a one-step (`h = 1`), grouping-only
/// (`a = 0`) window from the energy state alone.
///
/// The maximum attacker utility (every attack, defender best-responding) is
/// computed by direct enumeration. When no affordable attack earns positive
/// utility the attacker has no reason to act and the case is 1. When the
/// strong-only attack attains the maximum but ties with other attacks, the
/// energy-saving rule decides which one is played, and the case follows from
/// that attack and the defender's response to it.
pub fn predict_equilibrium_case(
    cfg: &GameConfig,
    attacker: &EnergyLedger,
    defender: &EnergyLedger,
    k_start: u64,
    ap: &AttackerParams,
    dp: &DefenderParams,
    g: &Graph,
) -> Result<CombinedStrategyCase, GameError> {
    if cfg.h != 1 || cfg.a != 0.0 {
        return Err(GameError::PredictionDomain);
    }
    let avail_a = attacker.available(ap, k_start);
    if ap.beta_normal > avail_a + FEASIBILITY_TOLERANCE {
        return Ok(CombinedStrategyCase::NoEffect);
    }
    let avail_d = defender.available(dp, k_start);
    let m = g.edge_count();
    let full = g.full_mask();
    let grouping = |kept: u64| -(cfg.b * graph::masked_group_index(g, kept) as f64);
    let abundant_d = defender_abundant(dp, m, defender.spent, k_start, 1);

    // (utility, attacker key, kept after attack, kept after recovery)
    let mut outcomes: Vec<(f64, TieKey, u64, u64)> = Vec::new();
    for (strong, normal) in attack_masks(full) {
        let key_a = attacker_key(ap, strong, normal);
        if key_a.cost > avail_a + FEASIBILITY_TOLERANCE {
            continue;
        }
        let attacked = full & !(strong | normal);
        let responses: Vec<(f64, TieKey, u64)> = submasks(normal)
            .map(|r| (grouping(attacked | r), defender_key(dp, r), r))
            .filter(|(_, key, _)| key.cost <= avail_d + FEASIBILITY_TOLERANCE)
            .collect();
        let low = responses.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
        let (utility, _, recovered) = responses
            .into_iter()
            .filter(|r| r.0 <= low + cfg.utility_tolerance)
            .reduce(|best, r| if r.1.beats(&best.1, abundant_d) { r } else { best })
            .expect("the empty recovery is always affordable");
        outcomes.push((utility, key_a, attacked, attacked | recovered));
    }
    let best = outcomes.iter().map(|o| o.0).fold(f64::NEG_INFINITY, f64::max);
    if best <= cfg.utility_tolerance {
        return Ok(CombinedStrategyCase::NoEffect);
    }
    if dp.beta > avail_d + FEASIBILITY_TOLERANCE {
        return Ok(CombinedStrategyCase::Unrecovered);
    }
    let affordable = ((avail_a + FEASIBILITY_TOLERANCE) / ap.beta_strong).floor() as usize;
    let count = affordable.min(m) as u32;
    let strong_only = submasks(full)
        .filter(|s| s.count_ones() == count)
        .map(|s| grouping(full & !s))
        .fold(f64::NEG_INFINITY, f64::max);
    if (strong_only - best).abs() > cfg.utility_tolerance {
        return Ok(CombinedStrategyCase::Recovered);
    }
    let abundant_a = attacker_abundant(ap, m, attacker.spent, k_start, 1);
    let (_, _, attacked, recovered) = outcomes
        .into_iter()
        .filter(|o| o.0 >= best - cfg.utility_tolerance)
        .reduce(|p, o| if o.1.beats(&p.1, abundant_a) { o } else { p })
        .expect("best is attained");
    let (c_a, c_d) = (graph::masked_group_index(g, attacked), graph::masked_group_index(g, recovered));
    Ok(if c_a == 0 {
        CombinedStrategyCase::NoEffect
    } else if c_d == c_a {
        CombinedStrategyCase::Unrecovered
    } else {
        CombinedStrategyCase::Recovered
    })
}
