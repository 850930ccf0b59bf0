//! Global topology adjustment: complexity-driven choice between an exact
//! search and a heuristic, candidate verification with link-lifetime
//! prediction, and the improvement-gated update.

mod adjust;
mod exact;
mod heuristic;
mod lifetime;
mod verify;

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

pub use adjust::{adjust, AdjustOutcome};
pub use exact::{rank, solve_exact, ExactSolution};
pub use heuristic::{solve_heuristic, HeuristicSolution};
pub use lifetime::{lifetime_from_motion, predict_fixed_lifetime, predict_link_lifetime, Lifetime};
pub use verify::{verify, Verification, VerifyOutcome};

use crate::fusion::FeatureMatrix;
use crate::metrics::{evaluate_pairs, MetricsParams, PairEvaluation};
use crate::mobility::NetworkSnapshot;
use crate::netgraph::{CandidateLinks, CommPairSet, IndexStrategy, LinkGraph, LinkKind, NetworkParams};
use crate::regulation::{Performance, RegulationState};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default, deny_unknown_fields))]
pub struct UtilityWeights {
    pub adaptability: f64,
    pub demand: f64,
    pub distance: f64,
    /// Stands in for the adaptability index on V2I links, which has no
    /// second motion state to compare against.
    pub v2i_adaptability: f64,
}

impl Default for UtilityWeights {
    fn default() -> Self {
        UtilityWeights { adaptability: 0.5, demand: 0.3, distance: 0.2, v2i_adaptability: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default, deny_unknown_fields))]
pub struct SolverParams {
    pub xi: f64,
    pub zeta: f64,
    pub q0: f64,
    pub delta0: f64,
    pub k_min: usize,
    pub lifetime_min_cycles: u32,
    pub lifetime_horizon_cycles: u32,
    /// Largest vehicle count the exact search accepts.
    pub exact_max_vehicles: usize,
    /// Largest candidate pool the exact search accepts.
    pub exact_max_links: usize,
    /// Search-node budget; exhausting it returns an uncertified incumbent.
    pub exact_node_limit: u64,
    pub utility: UtilityWeights,
    /// Whether repair also links vehicles left without any active link.
    pub attach_isolated: bool,
    /// Whether the heuristic adds throughput-raising links that leave the
    /// objective no worse.
    pub fill_capacity: bool,
    /// Sweeps of single-link drop/add moves after pruning; 0 disables them.
    pub refine_rounds: usize,
    /// Largest candidate pool the single-link refinement runs on.
    pub refine_max_links: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            xi: 0.01,
            zeta: 1.0,
            q0: 1.0,
            delta0: 0.01,
            k_min: 1,
            lifetime_min_cycles: 2,
            lifetime_horizon_cycles: 100,
            exact_max_vehicles: 12,
            exact_max_links: 18,
            exact_node_limit: 2_000_000,
            utility: UtilityWeights::default(),
            attach_isolated: true,
            fill_capacity: true,
            refine_rounds: 3,
            refine_max_links: 48,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OptimizerParams {
    pub network: NetworkParams,
    pub metrics: MetricsParams,
    pub solver: SolverParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveMode {
    Exact,
    Heuristic,
}

impl SolveMode {
    pub fn label(self) -> &'static str {
        match self {
            SolveMode::Exact => "exact",
            SolveMode::Heuristic => "heuristic",
        }
    }
}

/// `Q = xi * N + zeta * rho` from vehicle count and link density.
pub fn complexity(n_vehicles: usize, link_density: f64, params: &SolverParams) -> f64 {
    params.xi * n_vehicles as f64 + params.zeta * link_density
}

/// Exact search only when the criterion is below threshold and the
/// instance fits the search budget.
pub fn select_mode(q: f64, n_vehicles: usize, pool_links: usize, params: &SolverParams) -> SolveMode {
    if q < params.q0 && n_vehicles <= params.exact_max_vehicles && pool_links <= params.exact_max_links {
        SolveMode::Exact
    } else {
        SolveMode::Heuristic
    }
}

/// One activatable link. For V2I links `b` is the RSU number, not its node index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoolLink {
    pub kind: LinkKind,
    pub a: usize,
    pub b: usize,
    pub distance: f64,
    pub utility: f64,
}

/// The links a solver may choose from: V2V first in `(a, b)` order, then V2I
/// in `(vehicle, rsu)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkPool {
    n_vehicles: usize,
    n_rsus: usize,
    links: Vec<PoolLink>,
    incident: Vec<Vec<usize>>,
}

impl LinkPool {
    pub fn new(n_vehicles: usize, n_rsus: usize, links: Vec<PoolLink>) -> Self {
        let mut incident = vec![Vec::new(); n_vehicles + n_rsus];
        for (i, l) in links.iter().enumerate() {
            incident[l.a].push(i);
            let b = match l.kind {
                LinkKind::V2v => l.b,
                LinkKind::V2i => n_vehicles + l.b,
            };
            incident[b].push(i);
        }
        LinkPool { n_vehicles, n_rsus, links, incident }
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn links(&self) -> &[PoolLink] {
        &self.links
    }

    pub fn n_vehicles(&self) -> usize {
        self.n_vehicles
    }

    pub fn n_rsus(&self) -> usize {
        self.n_rsus
    }

    /// Graph node indices of link `i`.
    pub fn endpoints(&self, i: usize) -> (usize, usize) {
        let l = &self.links[i];
        match l.kind {
            LinkKind::V2v => (l.a, l.b),
            LinkKind::V2i => (l.a, self.n_vehicles + l.b),
        }
    }

    pub fn incident(&self, node: usize) -> &[usize] {
        &self.incident[node]
    }

    /// Index strategy of the chosen pool links.
    pub fn strategy_of(&self, chosen: impl IntoIterator<Item = usize>) -> IndexStrategy {
        let mut s = IndexStrategy::default();
        for i in chosen {
            let l = &self.links[i];
            match l.kind {
                LinkKind::V2v => s.v2v.push((l.a, l.b)),
                LinkKind::V2i => s.v2i.push((l.a, l.b)),
            }
        }
        s.normalize();
        s
    }

    /// Pool index of each link of `strategy`, or `None` for links outside the pool.
    pub fn indices_of(&self, strategy: &IndexStrategy) -> Vec<Option<usize>> {
        let find = |kind: LinkKind, a: usize, b: usize| {
            self.links.iter().position(|l| l.kind == kind && l.a == a && l.b == b)
        };
        strategy
            .v2v
            .iter()
            .map(|&(a, b)| find(LinkKind::V2v, a, b))
            .chain(strategy.v2i.iter().map(|&(v, m)| find(LinkKind::V2i, v, m)))
            .collect()
    }
}

fn link_lifetime(snapshot: &NetworkSnapshot, kind: LinkKind, a: usize, b: usize, network: &NetworkParams, solver: &SolverParams) -> Lifetime {
    let va = &snapshot.vehicles[a];
    match kind {
        LinkKind::V2v => predict_link_lifetime(
            va,
            &snapshot.vehicles[b],
            network.v2v_range_m,
            snapshot.step_s,
            solver.lifetime_horizon_cycles,
        ),
        LinkKind::V2i => {
            let r = &snapshot.rsus[b];
            predict_fixed_lifetime(va, r.x, r.y, network.v2i_range_m, snapshot.step_s, solver.lifetime_horizon_cycles)
        }
    }
}

/// Predicted lifetime of an index-level link on `snapshot`.
pub fn index_link_lifetime(
    snapshot: &NetworkSnapshot,
    kind: LinkKind,
    a: usize,
    b: usize,
    params: &OptimizerParams,
) -> Lifetime {
    link_lifetime(snapshot, kind, a, b, &params.network, &params.solver)
}

/// Candidate links that are expected to survive at least the minimum number
/// of cycles, scored by utility.
pub fn build_pool(
    snapshot: &NetworkSnapshot,
    candidates: &CandidateLinks,
    features: Option<&FeatureMatrix>,
    params: &OptimizerParams,
) -> LinkPool {
    let n = snapshot.vehicle_count();
    let w = &params.solver.utility;
    let demand: Vec<f64> = match features {
        Some(f) if f.len() == snapshot.node_count() => {
            let peak = (0..f.len()).map(|i| f.demand(i)).fold(0.0, f64::max);
            (0..f.len()).map(|i| if peak > 0.0 { f.demand(i) / peak } else { 0.0 }).collect()
        }
        _ => vec![0.0; snapshot.node_count()],
    };
    let keep = |kind, a, b| link_lifetime(snapshot, kind, a, b, &params.network, &params.solver).at_least(params.solver.lifetime_min_cycles);
    let mut links = Vec::new();
    for c in &candidates.v2v {
        if keep(LinkKind::V2v, c.a, c.b) {
            let utility = w.adaptability * c.adaptability
                + w.demand * (demand[c.a] + demand[c.b]) / 2.0
                + w.distance * (1.0 - c.distance / params.network.v2v_range_m);
            links.push(PoolLink { kind: LinkKind::V2v, a: c.a, b: c.b, distance: c.distance, utility });
        }
    }
    for c in &candidates.v2i {
        if keep(LinkKind::V2i, c.vehicle, c.rsu) {
            let utility = w.adaptability * w.v2i_adaptability
                + w.demand * (demand[c.vehicle] + demand[n + c.rsu]) / 2.0
                + w.distance * (1.0 - c.distance / params.network.v2i_range_m);
            links.push(PoolLink { kind: LinkKind::V2i, a: c.vehicle, b: c.rsu, distance: c.distance, utility });
        }
    }
    LinkPool::new(n, snapshot.rsu_count(), links)
}

/// Solver ranking of a strategy: missing disjoint key-pair paths first, then
/// the composite objective, then link count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub violations: usize,
    pub objective: f64,
    pub links: usize,
}

impl Score {
    pub fn cmp_key(&self, other: &Score) -> Ordering {
        self.violations
            .cmp(&other.violations)
            .then(self.objective.total_cmp(&other.objective))
            .then(self.links.cmp(&other.links))
    }
}

/// Shared inputs of one solve.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub snapshot: &'a NetworkSnapshot,
    pub pool: &'a LinkPool,
    pub pairs: &'a CommPairSet,
    pub regulation: &'a RegulationState,
    pub params: &'a OptimizerParams,
}

impl Problem<'_> {
    pub fn graph_of(&self, strategy: &IndexStrategy) -> LinkGraph {
        strategy.to_graph(self.snapshot)
    }

    pub fn unsatisfied_pairs(&self, graph: &LinkGraph) -> Vec<usize> {
        let k = self.params.solver.k_min.max(1);
        self.pairs
            .iter()
            .enumerate()
            .filter(|(_, p)| graph.edge_disjoint_paths(p.src, p.dst, k) < k)
            .map(|(i, _)| i)
            .collect()
    }

    /// Disjoint paths short of `k_min`, summed over key pairs.
    pub fn missing_paths(&self, graph: &LinkGraph) -> usize {
        let k = self.params.solver.k_min.max(1);
        self.pairs.iter().map(|p| k - graph.edge_disjoint_paths(p.src, p.dst, k).min(k)).sum()
    }

    pub fn evaluate(&self, graph: &LinkGraph) -> PairEvaluation {
        evaluate_pairs(graph, self.pairs, &self.params.metrics.delay, &self.params.metrics.bandwidth)
    }

    pub fn score_graph(&self, graph: &LinkGraph) -> (Score, PairEvaluation) {
        let eval = self.evaluate(graph);
        let score = Score {
            violations: self.missing_paths(graph),
            objective: self.regulation.composite_objective(eval.l_avg, eval.mean_delay_s),
            links: graph.link_count(),
        };
        (score, eval)
    }

    pub fn score(&self, strategy: &IndexStrategy) -> Score {
        self.score_graph(&self.graph_of(strategy)).0
    }

    pub fn performance(&self, graph: &LinkGraph) -> Performance {
        let e = self.evaluate(graph);
        Performance { l_avg: e.l_avg, mean_delay_s: e.mean_delay_s }
    }
}

/// Degree bookkeeping for incremental strategy construction.
#[derive(Debug, Clone)]
pub(crate) struct Selection {
    pub chosen: Vec<bool>,
    v2v_deg: Vec<usize>,
    rsu_deg: Vec<usize>,
    count: usize,
}

impl Selection {
    pub fn new(pool: &LinkPool) -> Self {
        Selection { chosen: vec![false; pool.len()], v2v_deg: vec![0; pool.n_vehicles], rsu_deg: vec![0; pool.n_rsus], count: 0 }
    }

    pub fn can_add(&self, pool: &LinkPool, i: usize, network: &NetworkParams) -> bool {
        if self.chosen[i] {
            return false;
        }
        let l = &pool.links[i];
        match l.kind {
            LinkKind::V2v => self.v2v_deg[l.a] < network.max_v2v_degree && self.v2v_deg[l.b] < network.max_v2v_degree,
            LinkKind::V2i => self.rsu_deg[l.b] < network.max_v2i_degree,
        }
    }

    pub fn add(&mut self, pool: &LinkPool, i: usize) {
        debug_assert!(!self.chosen[i]);
        self.chosen[i] = true;
        self.count += 1;
        let l = &pool.links[i];
        match l.kind {
            LinkKind::V2v => {
                self.v2v_deg[l.a] += 1;
                self.v2v_deg[l.b] += 1;
            }
            LinkKind::V2i => self.rsu_deg[l.b] += 1,
        }
    }

    pub fn remove(&mut self, pool: &LinkPool, i: usize) {
        debug_assert!(self.chosen[i]);
        self.chosen[i] = false;
        self.count -= 1;
        let l = &pool.links[i];
        match l.kind {
            LinkKind::V2v => {
                self.v2v_deg[l.a] -= 1;
                self.v2v_deg[l.b] -= 1;
            }
            LinkKind::V2i => self.rsu_deg[l.b] -= 1,
        }
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.chosen.iter().enumerate().filter(|(_, &c)| c).map(|(i, _)| i)
    }

    pub fn strategy(&self, pool: &LinkPool) -> IndexStrategy {
        pool.strategy_of(self.indices())
    }

    /// Whether node `u` has any chosen link.
    pub fn touches(&self, pool: &LinkPool, u: usize) -> bool {
        pool.incident(u).iter().any(|&i| self.chosen[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complexity_examples() {
        let p = SolverParams::default();
        assert_eq!(complexity(0, 0.0, &p), 0.0);
        let q = complexity(60, 0.2, &p);
        assert!((q - 0.8).abs() < 1e-12);
        assert_eq!(select_mode(q, 8, 10, &p), SolveMode::Exact);
        assert_eq!(select_mode(1.0, 8, 10, &p), SolveMode::Heuristic);
        assert_eq!(select_mode(q, 60, 10, &p), SolveMode::Heuristic);
    }
}
