//! Three-step candidate validation: constraint check, lifetime screening,
//! and repair from the distance-feasible link pool.

use alloc::vec::Vec;

use super::heuristic::{attach_isolated, route_pairs, selection_from};
use super::{index_link_lifetime, Problem, Selection};
use crate::netgraph::{IndexStrategy, LinkKind, LinkStrategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verification {
    Pass,
    /// Names the first unrepairable constraint family.
    Fail(&'static str),
}

impl Verification {
    pub fn passed(self) -> bool {
        self == Verification::Pass
    }

    pub fn label(self) -> &'static str {
        match self {
            Verification::Pass => "pass",
            Verification::Fail(reason) => reason,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOutcome {
    pub verification: Verification,
    /// The corrected strategy; meaningful only on a pass.
    pub strategy: IndexStrategy,
    /// Links dropped for broken range or departed endpoints.
    pub frozen: usize,
    /// Links dropped for a predicted lifetime below the minimum.
    pub short_lived: usize,
    /// Links added during repair.
    pub supplemented: usize,
    /// Key pairs (by position) still lacking `k_min` disjoint paths.
    pub unsatisfied: Vec<usize>,
}

fn fail(reason: &'static str) -> VerifyOutcome {
    VerifyOutcome {
        verification: Verification::Fail(reason),
        strategy: IndexStrategy::default(),
        frozen: 0,
        short_lived: 0,
        supplemented: 0,
        unsatisfied: Vec::new(),
    }
}

/// Checks `candidate` against the problem's snapshot and repairs what can be
/// repaired. Range breaks and departed endpoints are frozen out; degree or
/// bandwidth over-allocation fails.
pub fn verify(candidate: &LinkStrategy, problem: &Problem<'_>) -> VerifyOutcome {
    let snap = problem.snapshot;
    let net = &problem.params.network;
    let n = snap.vehicle_count();
    let mut frozen = 0;

    // step 1: constraints
    let mut kept = IndexStrategy::default();
    for (a, b) in candidate.v2v() {
        match (snap.vehicle_index(a), snap.vehicle_index(b)) {
            (Some(i), Some(j)) if snap.node_distance(i, j) <= net.v2v_range_m => kept.v2v.push((i.min(j), i.max(j))),
            _ => frozen += 1,
        }
    }
    let mut allocated = alloc::vec![0.0; snap.rsu_count()];
    for ((v, r), &bw) in candidate.v2i() {
        match (snap.vehicle_index(v), snap.rsu_index(r)) {
            (Some(i), Some(m)) if snap.node_distance(i, n + m) <= net.v2i_range_m => {
                if !(bw > 0.0) {
                    return fail("bandwidth");
                }
                allocated[m] += bw;
                kept.v2i.push((i, m));
            }
            _ => frozen += 1,
        }
    }
    kept.normalize();
    let mut v2v_deg = alloc::vec![0usize; n];
    for &(a, b) in &kept.v2v {
        v2v_deg[a] += 1;
        v2v_deg[b] += 1;
    }
    if v2v_deg.iter().any(|&d| d > net.max_v2v_degree) {
        return fail("degree");
    }
    if kept.rsu_degrees(snap.rsu_count()).iter().any(|&d| d > net.max_v2i_degree) {
        return fail("degree");
    }
    if snap.rsus.iter().zip(&allocated).any(|(r, &sum)| sum > r.bandwidth_mbps * (1.0 + 1e-9)) {
        return fail("bandwidth");
    }

    // step 2: lifetime screening
    let min = problem.params.solver.lifetime_min_cycles;
    let before = kept.link_count();
    kept.v2v.retain(|&(a, b)| index_link_lifetime(snap, LinkKind::V2v, a, b, problem.params).at_least(min));
    kept.v2i.retain(|&(v, m)| index_link_lifetime(snap, LinkKind::V2i, v, m, problem.params).at_least(min));
    let short_lived = before - kept.link_count();

    // step 3: repair from the pool
    let chosen: Vec<usize> = problem.pool.indices_of(&kept).into_iter().flatten().collect();
    let mut sel: Selection = selection_from(problem.pool, &chosen);
    let start = sel.len();
    let unsatisfied = problem.unsatisfied_pairs(&problem.graph_of(&sel.strategy(problem.pool)));
    if !unsatisfied.is_empty() {
        route_pairs(problem, &mut sel, Some(&unsatisfied));
    }
    if problem.params.solver.attach_isolated {
        attach_isolated(problem, &mut sel);
    }
    let strategy = sel.strategy(problem.pool);
    let unsatisfied = problem.unsatisfied_pairs(&problem.graph_of(&strategy));
    VerifyOutcome {
        verification: Verification::Pass,
        supplemented: sel.len() - start,
        strategy,
        frozen,
        short_lived,
        unsatisfied,
    }
}
