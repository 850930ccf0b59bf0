//! Branch-and-bound over link inclusion with degree-cap propagation.
//!
//! Strategies are ranked by `(unsatisfied pairs, objective, link count,
//! chosen pool indices lexicographically)`, so the optimum is unique.

use alloc::vec::Vec;
use core::cmp::Ordering;

use super::heuristic::selection_from;
use super::{Problem, Score, Selection};
use crate::netgraph::{LinkGraph, UNREACHABLE};

#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    pub strategy: crate::netgraph::IndexStrategy,
    pub chosen: Vec<usize>,
    pub score: Score,
    pub unsatisfied: Vec<usize>,
    /// False when the node budget ran out before the tree was exhausted.
    pub certified: bool,
    pub nodes: u64,
}

/// Total order used by the search and by any enumeration that must agree with it.
pub fn rank(a: (&Score, &[usize]), b: (&Score, &[usize])) -> Ordering {
    a.0.cmp_key(b.0).then_with(|| a.1.cmp(b.1))
}

struct Search<'p, 'a> {
    problem: &'p Problem<'a>,
    sel: Selection,
    best: Option<(Score, Vec<usize>)>,
    nodes: u64,
    limit: u64,
    exhausted_budget: bool,
    /// Smallest possible delay contribution of one hop.
    hop_floor: f64,
}

impl Search<'_, '_> {
    fn optimistic_graph(&self, from: usize) -> LinkGraph {
        let pool = self.problem.pool;
        let chosen = self.sel.indices().chain(from..pool.len());
        self.problem.graph_of(&pool.strategy_of(chosen))
    }

    /// Lower bounds on (violations, objective) over all completions.
    fn bound(&self, from: usize) -> (usize, f64) {
        let g = self.optimistic_graph(from);
        let k = self.problem.params.solver.k_min.max(1);
        let mut violations = 0;
        let mut hops = Vec::new();
        for p in self.problem.pairs.iter() {
            let d = g.hop_distances(p.dst)[p.src];
            if d == UNREACHABLE {
                violations += k;
                continue;
            }
            hops.push(d as f64);
            let paths = if k > 1 { g.edge_disjoint_paths(p.src, p.dst, k).min(k) } else { 1 };
            violations += k - paths;
        }
        if hops.is_empty() {
            return (violations, 0.0);
        }
        // A completion matching this violation count keeps every pair's
        // optimistic path count, so its reachable set is fixed and the mean of
        // optimistic hop counts bounds L_avg.
        let h = hops.iter().sum::<f64>() / hops.len() as f64;
        let r = self.problem.regulation;
        (violations, r.lambda1 * h / r.l_norm + r.lambda2 * h * self.hop_floor / r.t_norm)
    }

    fn offer(&mut self, score: Score) {
        let chosen: Vec<usize> = self.sel.indices().collect();
        let better = match &self.best {
            None => true,
            Some((bs, bc)) => rank((&score, &chosen), (bs, bc)) == Ordering::Less,
        };
        if better {
            self.best = Some((score, chosen));
        }
    }

    fn visit(&mut self, i: usize) {
        self.nodes += 1;
        if self.nodes > self.limit {
            self.exhausted_budget = true;
            return;
        }
        let pool = self.problem.pool;
        if i == pool.len() {
            let g = self.problem.graph_of(&self.sel.strategy(pool));
            let (score, _) = self.problem.score_graph(&g);
            self.offer(score);
            return;
        }
        if let Some((bs, _)) = &self.best {
            let (v, obj) = self.bound(i);
            if v > bs.violations || (v == bs.violations && obj > bs.objective + 1e-9 * bs.objective.abs().max(1.0)) {
                return;
            }
        }
        self.visit(i + 1);
        if self.sel.can_add(pool, i, &self.problem.params.network) {
            self.sel.add(pool, i);
            self.visit(i + 1);
            self.sel.remove(pool, i);
        }
    }
}

/// Exhaustive search for the best strategy over the problem's pool. A
/// feasible `seed` (pool indices) only sharpens pruning.
pub fn solve_exact(problem: &Problem<'_>, seed: Option<&[usize]>) -> ExactSolution {
    let m = &problem.params.metrics;
    let dp = &m.delay;
    let max_rsu_bw = problem.snapshot.rsus.iter().map(|r| r.bandwidth_mbps).fold(0.0, f64::max);
    let fastest = m.bandwidth.v2v_base_mbps.max(max_rsu_bw);
    let hop_floor = (dp.k_v * dp.tau_v_s).min(dp.k_i * dp.tau_i_s) + dp.packet_bits / (fastest * 1e6);
    let mut search = Search {
        problem,
        sel: Selection::new(problem.pool),
        best: None,
        nodes: 0,
        limit: problem.params.solver.exact_node_limit,
        exhausted_budget: false,
        hop_floor,
    };
    if let Some(seed) = seed {
        let mut sorted = seed.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let sel = selection_from(problem.pool, &sorted);
        let g = problem.graph_of(&sel.strategy(problem.pool));
        let (score, _) = problem.score_graph(&g);
        search.best = Some((score, sorted));
    }
    search.visit(0);
    let (score, chosen) = search.best.unwrap_or_else(|| {
        let empty = Selection::new(problem.pool);
        (problem.score(&empty.strategy(problem.pool)), Vec::new())
    });
    let strategy = problem.pool.strategy_of(chosen.iter().copied());
    let unsatisfied = problem.unsatisfied_pairs(&problem.graph_of(&strategy));
    ExactSolution {
        strategy,
        chosen,
        score,
        unsatisfied,
        certified: !search.exhausted_budget,
        nodes: search.nodes,
    }
}
