//! The per-step control loop shared by every algorithm.
//!
//! At step `t` the topology decided at `t - 1` is carried onto snapshot `t`
//! (links whose endpoints left or drifted out of range drop) and measured
//! against the key pairs of `t`. The algorithm then decides the topology
//! that will carry into `t + 1`.

use vanet_core::baselines::Baseline;
use vanet_core::fusion::{extract_features, run_fusion};
use vanet_core::metrics::{measure_graph, MetricsRecord};
use vanet_core::mobility::NetworkSnapshot;
use vanet_core::netgraph::{candidate_links, demand_matrix, key_pairs, LinkStrategy};
use vanet_core::optimizer::{adjust, SolveMode, Verification};
use vanet_core::regulation::RegulationState;

use crate::config::{Algorithm, ExperimentConfig};
use crate::error::SimError;

/// What the controller decided at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub mode: SolveMode,
    pub q: f64,
    pub delta: f64,
    pub applied: bool,
    pub verification: Verification,
    pub fusion_rounds: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRow {
    pub algorithm: Algorithm,
    pub record: MetricsRecord,
    /// Present for the hierarchical controller only.
    pub decision: Option<Decision>,
    pub vehicles: usize,
    pub links: usize,
}

enum Driver {
    Hierarchical(Box<RegulationState>),
    Baseline(Box<Baseline>),
}

/// Runs `algorithm` over `snapshots`, handing each row to `sink` as soon as
/// it is produced.
pub fn run_steps(
    config: &ExperimentConfig,
    snapshots: &[NetworkSnapshot],
    algorithm: Algorithm,
    mut sink: impl FnMut(&StepRow) -> Result<(), SimError>,
) -> Result<Vec<StepRow>, SimError> {
    let params = config.optimizer_params();
    let net = &params.network;
    let mut driver = match algorithm.baseline() {
        None => Driver::Hierarchical(Box::new(RegulationState::new(config.regulation.clone()))),
        Some(kind) => Driver::Baseline(Box::new(Baseline::new(kind, config.motif.clone()))),
    };
    let mut previous = LinkStrategy::new();
    let mut rows = Vec::with_capacity(snapshots.len());

    for (t, snap) in snapshots.iter().enumerate() {
        let demand = demand_matrix(snap, net.demand_d0_m, net.alpha).map_err(|e| SimError::Runtime(format!("step {t}: {e}")))?;
        let pairs = key_pairs(snap, &demand, net.v2v_range_m, net.demand_threshold);
        let candidates = candidate_links(snap, net);

        let realized = previous.carried_onto(snap, net).index_links(snap);
        let graph = realized.to_graph(snap);
        let (record, evaluation) = measure_graph(snap.step, &graph, &pairs, &params.metrics);

        let decision = match &mut driver {
            Driver::Hierarchical(regulation) => {
                let features = extract_features(snap, &demand, net.v2i_range_m)
                    .map_err(|e| SimError::Runtime(format!("step {t}: {e}")))?;
                let fused = run_fusion(features, &candidates.neighborhoods(snap), &config.fusion)
                    .map_err(|e| SimError::Runtime(format!("step {t}: {e}")))?;
                let outcome = adjust(&previous, snap, Some(&fused.features), &pairs, regulation, &params);
                previous = outcome.strategy;

                regulation.update_t_norm(&evaluation.delays);
                regulation.update_l_norm(evaluation.max_hops as f64, graph.stats().diameter as f64);
                regulation.update_weights(config.run.q_urgent_at(t));
                debug_assert!((regulation.lambda1 + regulation.lambda2 - 1.0).abs() < 1e-12);

                Some(Decision {
                    mode: outcome.mode,
                    q: outcome.q,
                    delta: outcome.delta,
                    applied: outcome.applied,
                    verification: outcome.verification,
                    fusion_rounds: fused.rounds_used,
                })
            }
            Driver::Baseline(baseline) => {
                previous = baseline.step(snap, &candidates, &pairs, net).to_strategy(snap);
                None
            }
        };

        let row = StepRow { algorithm, record, decision, vehicles: snap.vehicle_count(), links: graph.link_count() };
        sink(&row)?;
        rows.push(row);
    }
    Ok(rows)
}
