//! One control step of the global layer.

use super::exact::solve_exact;
use super::heuristic::solve_heuristic;
use super::verify::{verify, Verification};
use super::{build_pool, complexity, select_mode, OptimizerParams, Problem, SolveMode};
use crate::fusion::FeatureMatrix;
use crate::mobility::NetworkSnapshot;
use crate::netgraph::{candidate_links, CommPairSet, IndexStrategy, LinkStrategy};
use crate::regulation::{Performance, RegulationState};

#[derive(Debug, Clone, PartialEq)]
pub struct AdjustOutcome {
    /// Topology to carry into the next step.
    pub strategy: LinkStrategy,
    /// The verified (possibly corrected) candidate.
    pub candidate: IndexStrategy,
    pub mode: SolveMode,
    pub q: f64,
    pub current: Performance,
    pub predicted: Performance,
    pub delta: f64,
    /// A zero current metric dropped its term from `delta`.
    pub degenerate: bool,
    pub verification: Verification,
    pub applied: bool,
    /// The candidate was not applied on its merit; a repaired or replacement topology was adopted.
    pub corrected: bool,
    /// Key pairs without `k_min` disjoint paths in the resulting topology.
    pub unsatisfied: usize,
    /// False only when the exact search ran out of budget.
    pub certified: bool,
}

/// Builds a candidate for `snapshot`, verifies it and applies it when the
/// joint improvement over the current topology exceeds the threshold;
/// otherwise repairs the current topology. When the current topology cannot
/// be repaired the verified candidate (or the plain heuristic build) replaces it.
///
/// `previous` is the strategy decided at the last step; links it holds that
/// no longer fit `snapshot` are dropped before comparison.
pub fn adjust(
    previous: &LinkStrategy,
    snapshot: &NetworkSnapshot,
    features: Option<&FeatureMatrix>,
    pairs: &CommPairSet,
    regulation: &RegulationState,
    params: &OptimizerParams,
) -> AdjustOutcome {
    let candidates = candidate_links(snapshot, &params.network);
    let pool = build_pool(snapshot, &candidates, features, params);
    let problem = Problem { snapshot, pool: &pool, pairs, regulation, params };

    let carried = previous.carried_onto(snapshot, &params.network).index_links(snapshot);
    let current_graph = carried.to_graph(snapshot);
    let current = problem.performance(&current_graph);
    let q = complexity(snapshot.vehicle_count(), current_graph.stats().link_density, &params.solver);
    let mode = select_mode(q, snapshot.vehicle_count(), pool.len(), &params.solver);

    let heuristic = solve_heuristic(&problem);
    let fallback = heuristic.strategy.clone();
    let (raw, certified) = match mode {
        SolveMode::Heuristic => (heuristic.strategy, true),
        SolveMode::Exact => {
            let exact = solve_exact(&problem, Some(&heuristic.chosen));
            (exact.strategy, exact.certified)
        }
    };

    let checked = verify(&raw.to_strategy(snapshot), &problem);
    let predicted = problem.performance(&problem.graph_of(&checked.strategy));
    let improvement = regulation.improvement_rate(current, predicted);
    let applied = checked.verification.passed() && improvement.delta > params.solver.delta0;

    let (result, corrected, unsatisfied) = if applied {
        (checked.strategy.clone(), false, checked.unsatisfied.len())
    } else {
        let local = verify(previous, &problem);
        if local.verification.passed() {
            (local.strategy, true, local.unsatisfied.len())
        } else if checked.verification.passed() {
            (checked.strategy.clone(), true, checked.unsatisfied.len())
        } else {
            // the current topology breaks a cap; the unverified heuristic
            // build respects every cap by construction
            let left = problem.unsatisfied_pairs(&problem.graph_of(&fallback)).len();
            (fallback, true, left)
        }
    };

    AdjustOutcome {
        strategy: result.to_strategy(snapshot),
        candidate: checked.strategy,
        mode,
        q,
        current,
        predicted,
        delta: improvement.delta,
        degenerate: improvement.degenerate,
        verification: checked.verification,
        applied,
        corrected,
        unsatisfied,
        certified,
    }
}
