//! Greedy construction: route key pairs over high-utility links, attach
//! isolated vehicles, prune links whose removal lowers the objective, refine
//! by single-link moves, then add spare capacity that leaves the objective
//! no worse.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use super::{LinkPool, Problem, Score, Selection};
use crate::metrics::raw_throughput;
use crate::netgraph::{IndexStrategy, LinkGraph, UNREACHABLE};

#[derive(Debug, Clone, PartialEq)]
pub struct HeuristicSolution {
    pub strategy: IndexStrategy,
    /// Chosen pool link indices, ascending.
    pub chosen: Vec<usize>,
    /// Key pairs (by position) left without `k_min` disjoint paths.
    pub unsatisfied: Vec<usize>,
    pub score: Score,
}

const MAX_REROUTES: usize = 16;

/// Cheapest route by (hops, summed `1 - utility` of links not yet chosen).
/// Links that would break a degree cap are skipped.
fn cheapest_route(problem: &Problem<'_>, sel: &Selection, src: usize, dst: usize, banned: &[bool]) -> Option<Vec<usize>> {
    let pool = problem.pool;
    let n = pool.n_vehicles() + pool.n_rsus();
    let mut best: Vec<(u32, u64)> = vec![(u32::MAX, u64::MAX); n];
    let mut via: Vec<usize> = vec![UNREACHABLE; n];
    let mut heap = BinaryHeap::new();
    best[src] = (0, 0f64.to_bits());
    heap.push(Reverse((0u32, 0f64.to_bits(), src)));
    while let Some(Reverse((hops, soft_bits, u))) = heap.pop() {
        if (hops, soft_bits) != best[u] {
            continue;
        }
        if u == dst {
            break;
        }
        let soft = f64::from_bits(soft_bits);
        for &li in pool.incident(u) {
            if banned[li] {
                continue;
            }
            let step = if sel.chosen[li] {
                0.0
            } else if sel.can_add(pool, li, &problem.params.network) {
                (1.0 - pool.links()[li].utility).max(0.0)
            } else {
                continue;
            };
            let (a, b) = pool.endpoints(li);
            let w = if a == u { b } else { a };
            // soft costs are non-negative, so their bit patterns sort like the values
            let key = (hops + 1, (soft + step).to_bits());
            if key < best[w] {
                best[w] = key;
                via[w] = li;
                heap.push(Reverse((key.0, key.1, w)));
            }
        }
    }
    if best[dst].0 == u32::MAX {
        return None;
    }
    let mut route = Vec::new();
    let mut v = dst;
    while v != src {
        let li = via[v];
        route.push(li);
        let (a, b) = pool.endpoints(li);
        v = if a == v { b } else { a };
    }
    route.reverse();
    Some(route)
}

/// Routes `src`-`dst` and activates the route's links. Links whose
/// activation would overrun a cap mid-route are banned and the route is
/// recomputed.
pub(crate) fn insert_route(
    problem: &Problem<'_>,
    sel: &mut Selection,
    src: usize,
    dst: usize,
    banned: &mut [bool],
) -> Option<Vec<usize>> {
    for _ in 0..MAX_REROUTES {
        let route = cheapest_route(problem, sel, src, dst, banned)?;
        let mut added = Vec::new();
        let mut blocked = None;
        for &li in &route {
            if sel.chosen[li] {
                continue;
            }
            if sel.can_add(problem.pool, li, &problem.params.network) {
                sel.add(problem.pool, li);
                added.push(li);
            } else {
                blocked = Some(li);
                break;
            }
        }
        match blocked {
            None => return Some(route),
            Some(li) => {
                for &a in &added {
                    sel.remove(problem.pool, a);
                }
                banned[li] = true;
            }
        }
    }
    None
}

/// Routes every key pair, in descending demand, with `k_min` link-disjoint routes.
pub(crate) fn route_pairs(problem: &Problem<'_>, sel: &mut Selection, only: Option<&[usize]>) {
    let mut order: Vec<usize> = match only {
        Some(list) => list.to_vec(),
        None => (0..problem.pairs.len()).collect(),
    };
    let pairs = &problem.pairs.pairs;
    order.sort_by(|&x, &y| pairs[y].demand.total_cmp(&pairs[x].demand).then(x.cmp(&y)));
    let k = problem.params.solver.k_min.max(1);
    let mut banned = vec![false; problem.pool.len()];
    for pi in order {
        let p = pairs[pi];
        banned.iter_mut().for_each(|b| *b = false);
        for _ in 0..k {
            match insert_route(problem, sel, p.src, p.dst, &mut banned) {
                Some(route) => {
                    for li in route {
                        banned[li] = true;
                    }
                }
                None => break,
            }
        }
    }
}

fn route_nodes(graph: &LinkGraph, problem: &Problem<'_>) -> Vec<bool> {
    let mut on = vec![false; graph.node_count()];
    for p in problem.pairs.iter() {
        if let Some(path) = graph.shortest_path(p.src, p.dst) {
            for u in path {
                on[u] = true;
            }
        }
    }
    on
}

/// Links each vehicle without any chosen link to its best feasible
/// partner, preferring partners that carry no key-pair route.
pub(crate) fn attach_isolated(problem: &Problem<'_>, sel: &mut Selection) {
    let pool = problem.pool;
    let graph = problem.graph_of(&sel.strategy(pool));
    let on_route = route_nodes(&graph, problem);
    for v in 0..pool.n_vehicles() {
        if sel.touches(pool, v) {
            continue;
        }
        let pick = pool
            .incident(v)
            .iter()
            .copied()
            .filter(|&li| sel.can_add(pool, li, &problem.params.network))
            .min_by(|&x, &y| {
                let other = |li: usize| {
                    let (a, b) = pool.endpoints(li);
                    if a == v {
                        b
                    } else {
                        a
                    }
                };
                on_route[other(x)]
                    .cmp(&on_route[other(y)])
                    .then(pool.links()[y].utility.total_cmp(&pool.links()[x].utility))
                    .then(x.cmp(&y))
            });
        if let Some(li) = pick {
            sel.add(pool, li);
        }
    }
}

fn satisfied_mask(problem: &Problem<'_>, graph: &LinkGraph) -> Vec<bool> {
    let mut mask = vec![true; problem.pairs.len()];
    for i in problem.unsatisfied_pairs(graph) {
        mask[i] = false;
    }
    mask
}

/// Drops links near key routes, lowest utility first, whenever that strictly
/// lowers the objective without lengthening the average route, losing a
/// satisfied pair or isolating a vehicle.
fn prune(problem: &Problem<'_>, sel: &mut Selection) {
    let pool = problem.pool;
    let graph = problem.graph_of(&sel.strategy(pool));
    let (mut score, eval) = problem.score_graph(&graph);
    let mut l_avg = eval.l_avg;
    let mut satisfied = satisfied_mask(problem, &graph);
    let on_route = route_nodes(&graph, problem);
    let mut order: Vec<usize> = sel
        .indices()
        .filter(|&li| {
            let (a, b) = pool.endpoints(li);
            on_route[a] || on_route[b]
        })
        .collect();
    order.sort_by(|&x, &y| pool.links()[x].utility.total_cmp(&pool.links()[y].utility).then(x.cmp(&y)));
    for li in order {
        let (a, b) = pool.endpoints(li);
        sel.remove(pool, li);
        let isolates = [a, b].iter().any(|&u| u < pool.n_vehicles() && !sel.touches(pool, u));
        if !isolates {
            let trial = problem.graph_of(&sel.strategy(pool));
            let (s, e) = problem.score_graph(&trial);
            let mask = satisfied_mask(problem, &trial);
            let keeps = satisfied.iter().zip(&mask).all(|(&before, &after)| !before || after);
            if keeps && e.l_avg <= l_avg && s.objective < score.objective {
                score = s;
                l_avg = e.l_avg;
                satisfied = mask;
                continue;
            }
        }
        sel.add(pool, li);
    }
}

/// Strict improvement in (missing paths, objective); link count is ignored
/// so spare capacity is left to `fill_capacity`.
fn improves(new: &Score, old: &Score) -> bool {
    new.violations < old.violations
        || (new.violations == old.violations && new.objective < old.objective - 1e-12 * old.objective.abs().max(1.0))
}

/// First-improvement hill climb over dropping one chosen link or adding one
/// feasible link, for at most `rounds` sweeps.
fn refine(problem: &Problem<'_>, sel: &mut Selection, rounds: usize) {
    let pool = problem.pool;
    let mut score = problem.score(&sel.strategy(pool));
    for _ in 0..rounds {
        let mut moved = false;
        for li in 0..pool.len() {
            let was = sel.chosen[li];
            if was {
                sel.remove(pool, li);
            } else if sel.can_add(pool, li, &problem.params.network) {
                sel.add(pool, li);
            } else {
                continue;
            }
            let s = problem.score(&sel.strategy(pool));
            if improves(&s, &score) {
                score = s;
                moved = true;
            } else if was {
                sel.add(pool, li);
            } else {
                sel.remove(pool, li);
            }
        }
        if !moved {
            break;
        }
    }
}

/// Adds links in descending utility when they raise raw throughput while
/// keeping every satisfied pair, the average route length and the
/// objective no worse.
pub(crate) fn fill_capacity(problem: &Problem<'_>, sel: &mut Selection) {
    let pool = problem.pool;
    let tp = &problem.params.metrics.throughput;
    let bw = &problem.params.metrics.bandwidth;
    let graph = problem.graph_of(&sel.strategy(pool));
    let (mut score, eval) = problem.score_graph(&graph);
    let mut l_avg = eval.l_avg;
    let mut raw = raw_throughput(&graph, tp, bw);
    let mut satisfied = satisfied_mask(problem, &graph);
    let mut order: Vec<usize> = (0..pool.len()).filter(|&li| !sel.chosen[li]).collect();
    order.sort_by(|&x, &y| pool.links()[y].utility.total_cmp(&pool.links()[x].utility).then(x.cmp(&y)));
    for li in order {
        if !sel.can_add(pool, li, &problem.params.network) {
            continue;
        }
        sel.add(pool, li);
        let trial = problem.graph_of(&sel.strategy(pool));
        let trial_raw = raw_throughput(&trial, tp, bw);
        if trial_raw > raw + 1e-9 {
            let (s, e) = problem.score_graph(&trial);
            let mask = satisfied_mask(problem, &trial);
            let keeps = satisfied.iter().zip(&mask).all(|(&before, &after)| !before || after);
            if keeps && e.l_avg <= l_avg && s.objective <= score.objective {
                score = s;
                l_avg = e.l_avg;
                raw = trial_raw;
                satisfied = mask;
                continue;
            }
        }
        sel.remove(pool, li);
    }
}

pub fn solve_heuristic(problem: &Problem<'_>) -> HeuristicSolution {
    let pool = problem.pool;
    let mut sel = Selection::new(pool);
    route_pairs(problem, &mut sel, None);
    if problem.params.solver.attach_isolated {
        attach_isolated(problem, &mut sel);
    }
    prune(problem, &mut sel);
    if pool.len() <= problem.params.solver.refine_max_links {
        refine(problem, &mut sel, problem.params.solver.refine_rounds);
    }
    if problem.params.solver.fill_capacity {
        fill_capacity(problem, &mut sel);
    }
    finish(problem, &sel)
}

pub(crate) fn finish(problem: &Problem<'_>, sel: &Selection) -> HeuristicSolution {
    let strategy = sel.strategy(problem.pool);
    let graph = problem.graph_of(&strategy);
    let (score, _) = problem.score_graph(&graph);
    HeuristicSolution {
        chosen: sel.indices().collect(),
        unsatisfied: problem.unsatisfied_pairs(&graph),
        strategy,
        score,
    }
}

pub(crate) fn selection_from(pool: &LinkPool, chosen: &[usize]) -> Selection {
    let mut sel = Selection::new(pool);
    for &i in chosen {
        sel.add(pool, i);
    }
    sel
}
