//! Topology evaluation: end-to-end delay, average path length, throughput
//! and the per-step metrics record.

use alloc::vec::Vec;

use crate::error::MetricsError;
use crate::netgraph::{CommPairSet, LinkGraph, LinkKind, NodeId, Topology, UNREACHABLE};

/// Queueing and transmission constants of the delay model.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default, deny_unknown_fields))]
pub struct DelayParams {
    pub k_v: f64,
    pub k_i: f64,
    /// Per-packet service time at a vehicle relay, seconds.
    pub tau_v_s: f64,
    /// Per-packet service time at an RSU, seconds.
    pub tau_i_s: f64,
    pub packet_bits: f64,
}

impl Default for DelayParams {
    fn default() -> Self {
        DelayParams { k_v: 1.0, k_i: 1.0, tau_v_s: 0.5e-3, tau_i_s: 0.1e-3, packet_bits: 8000.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default, deny_unknown_fields))]
pub struct ThroughputParams {
    pub eta_v: f64,
    pub eta_i: f64,
    pub p_loss_per_hop: f64,
}

impl Default for ThroughputParams {
    fn default() -> Self {
        ThroughputParams { eta_v: 0.8, eta_i: 0.9, p_loss_per_hop: 0.03 }
    }
}

/// V2V links share `v2v_base_mbps` by the larger endpoint V2V degree; V2I
/// links use their allocated bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default, deny_unknown_fields))]
pub struct BandwidthModel {
    pub v2v_base_mbps: f64,
}

impl Default for BandwidthModel {
    fn default() -> Self {
        BandwidthModel { v2v_base_mbps: 20.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default, deny_unknown_fields))]
pub struct MetricsParams {
    pub delay: DelayParams,
    pub throughput: ThroughputParams,
    pub bandwidth: BandwidthModel,
}

/// Largest loss fraction used in the throughput multiplier.
pub const MAX_LOSS: f64 = 1.0 - 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRecord {
    pub step: u64,
    /// Mean shortest-hop count over connected key pairs.
    pub l_avg: f64,
    pub mean_delay_s: f64,
    pub throughput_mbps: f64,
    pub connectivity_rate: f64,
    pub pair_count: usize,
}

/// Effective bandwidth of link `l` in Mbps.
pub fn link_bandwidth(graph: &LinkGraph, l: usize, model: &BandwidthModel) -> f64 {
    let link = &graph.links()[l];
    match link.kind {
        LinkKind::V2v => {
            let deg = graph.v2v_degree(link.a).max(graph.v2v_degree(link.b)).max(1);
            model.v2v_base_mbps / deg as f64
        }
        LinkKind::V2i => link.bandwidth_mbps,
    }
}

fn node_queue_delay(graph: &LinkGraph, u: usize, dp: &DelayParams) -> f64 {
    let deg = graph.degree(u) as f64;
    if graph.is_vehicle(u) {
        dp.k_v * deg * dp.tau_v_s
    } else {
        dp.k_i * deg * dp.tau_i_s
    }
}

/// End-to-end delay of an index path: queueing at every node except a
/// vehicle destination, plus transmission on every link.
pub fn path_delay_indices(
    graph: &LinkGraph,
    path: &[usize],
    dp: &DelayParams,
    model: &BandwidthModel,
) -> Result<f64, MetricsError> {
    if path.is_empty() {
        return Err(MetricsError::EmptyPath);
    }
    if let Some(&bad) = path.iter().find(|&&u| u >= graph.node_count()) {
        return Err(MetricsError::UnknownNode(bad));
    }
    let mut total = 0.0;
    for (i, &u) in path.iter().enumerate() {
        if i + 1 < path.len() || !graph.is_vehicle(u) {
            total += node_queue_delay(graph, u, dp);
        }
    }
    for w in path.windows(2) {
        let l = graph.link_between(w[0], w[1]).ok_or(MetricsError::InactiveEdge(w[0], w[1]))?;
        total += dp.packet_bits / (link_bandwidth(graph, l, model) * 1e6);
    }
    Ok(total)
}

pub fn path_delay(
    topology: &Topology<'_>,
    path: &[NodeId],
    dp: &DelayParams,
    model: &BandwidthModel,
) -> Result<f64, MetricsError> {
    let mut idx = Vec::with_capacity(path.len());
    for (pos, id) in path.iter().enumerate() {
        idx.push(topology.node_index(id).ok_or(MetricsError::UnknownNode(pos))?);
    }
    path_delay_indices(topology.graph(), &idx, dp, model)
}

/// Per-pair routing outcome over a key-pair set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PairEvaluation {
    pub connected: usize,
    pub total: usize,
    /// Mean hop count over connected pairs, 0 when none is connected.
    pub l_avg: f64,
    pub mean_delay_s: f64,
    pub max_hops: usize,
    /// Delay of each connected pair, in pair order.
    pub delays: Vec<f64>,
}

/// Routes every key pair along its tie-broken shortest-hop path.
pub fn evaluate_pairs(graph: &LinkGraph, pairs: &CommPairSet, dp: &DelayParams, model: &BandwidthModel) -> PairEvaluation {
    let mut out = PairEvaluation { total: pairs.len(), ..Default::default() };
    let mut hops_sum = 0usize;
    for p in pairs.iter() {
        let dist = graph.hop_distances(p.dst);
        if dist[p.src] == UNREACHABLE {
            continue;
        }
        let path = graph.walk_down(p.src, &dist).expect("reachable source has a descending walk");
        let d = path_delay_indices(graph, &path, dp, model).expect("walk follows active links");
        hops_sum += dist[p.src];
        out.max_hops = out.max_hops.max(dist[p.src]);
        out.delays.push(d);
        out.connected += 1;
    }
    if out.connected > 0 {
        out.l_avg = hops_sum as f64 / out.connected as f64;
        out.mean_delay_s = out.delays.iter().sum::<f64>() / out.connected as f64;
    }
    out
}

pub fn average_path_length(topology: &Topology<'_>, pairs: &CommPairSet) -> f64 {
    let g = topology.graph();
    let mut sum = 0usize;
    let mut n = 0usize;
    for p in pairs.iter() {
        let d = g.hop_distances(p.dst)[p.src];
        if d != UNREACHABLE {
            sum += d;
            n += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        sum as f64 / n as f64
    }
}

pub fn mean_delay(topology: &Topology<'_>, pairs: &CommPairSet, dp: &DelayParams, model: &BandwidthModel) -> f64 {
    evaluate_pairs(topology.graph(), pairs, dp, model).mean_delay_s
}

/// Raw capacity `W_V + W_I` before path loss, each undirected link counted once.
pub fn raw_throughput(graph: &LinkGraph, tp: &ThroughputParams, model: &BandwidthModel) -> f64 {
    (0..graph.link_count())
        .map(|l| {
            let eta = match graph.links()[l].kind {
                LinkKind::V2v => tp.eta_v,
                LinkKind::V2i => tp.eta_i,
            };
            link_bandwidth(graph, l, model) * eta
        })
        .sum()
}

pub fn loss_fraction(tp: &ThroughputParams, l_avg: f64) -> f64 {
    (tp.p_loss_per_hop * l_avg).clamp(0.0, MAX_LOSS)
}

pub fn throughput_of_graph(graph: &LinkGraph, tp: &ThroughputParams, model: &BandwidthModel, l_avg: f64) -> f64 {
    raw_throughput(graph, tp, model) * (1.0 - loss_fraction(tp, l_avg))
}

pub fn throughput(topology: &Topology<'_>, tp: &ThroughputParams, model: &BandwidthModel, l_avg: f64) -> f64 {
    throughput_of_graph(topology.graph(), tp, model, l_avg)
}

/// All per-step metrics of a realised graph.
pub fn measure_graph(step: u64, graph: &LinkGraph, pairs: &CommPairSet, params: &MetricsParams) -> (MetricsRecord, PairEvaluation) {
    let eval = evaluate_pairs(graph, pairs, &params.delay, &params.bandwidth);
    let record = MetricsRecord {
        step,
        l_avg: eval.l_avg,
        mean_delay_s: eval.mean_delay_s,
        throughput_mbps: throughput_of_graph(graph, &params.throughput, &params.bandwidth, eval.l_avg),
        connectivity_rate: graph.connectivity_rate(),
        pair_count: pairs.len(),
    };
    (record, eval)
}

pub fn measure(topology: &Topology<'_>, pairs: &CommPairSet, params: &MetricsParams) -> MetricsRecord {
    measure_graph(topology.snapshot().step, topology.graph(), pairs, params).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobility::{NetworkSnapshot, RsuId, RsuNode, VehicleState};
    use crate::netgraph::{CommPair, LinkStrategy, NetworkParams};
    use alloc::format;
    use alloc::vec;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * b.abs().max(1.0)
    }

    fn line(n: usize, spacing: f64) -> NetworkSnapshot {
        let vs = (0..n)
            .map(|i| VehicleState::new(format!("v{i:02}").as_str(), spacing * i as f64, 0.0, 10.0, 0.0).unwrap())
            .collect();
        NetworkSnapshot::new(3, 1.0, vs, vec![]).unwrap()
    }

    fn pairs(list: &[(usize, usize)]) -> CommPairSet {
        CommPairSet { pairs: list.iter().map(|&(src, dst)| CommPair { src, dst, demand: 0.5 }).collect() }
    }

    fn chain_strategy(s: &NetworkSnapshot) -> LinkStrategy {
        let mut st = LinkStrategy::new();
        for w in s.vehicles.windows(2) {
            st.insert_v2v(w[0].id.clone(), w[1].id.clone());
        }
        st
    }

    #[test]
    fn single_hop_delay() {
        let s = line(2, 100.0);
        let t = Topology::new(&s, chain_strategy(&s), &NetworkParams::default()).unwrap();
        let model = BandwidthModel { v2v_base_mbps: 10.0 };
        let d = path_delay_indices(t.graph(), &[0, 1], &DelayParams::default(), &model).unwrap();
        assert!(close(d, 1.3e-3));
        assert_eq!(path_delay_indices(t.graph(), &[0], &DelayParams::default(), &model).unwrap(), 0.0);
        assert!(close(mean_delay(&t, &pairs(&[(0, 1)]), &DelayParams::default(), &model), 1.3e-3));
    }

    #[test]
    fn rsu_relay_delay() {
        // v00 - r - v01 with the RSU serving four vehicles at 25 Mbps each
        let vs = (0..4)
            .map(|i| VehicleState::new(format!("v{i:02}").as_str(), 100.0 * i as f64, 0.0, 10.0, 0.0).unwrap())
            .collect();
        let r = RsuNode { id: RsuId("r".into()), x: 150.0, y: 50.0, bandwidth_mbps: 100.0 };
        let s = NetworkSnapshot::new(0, 1.0, vs, vec![r]).unwrap();
        let mut st = LinkStrategy::new();
        for v in &s.vehicles {
            st.insert_v2i(v.id.clone(), "r".into(), 25.0);
        }
        let t = Topology::new(&s, st, &NetworkParams::default()).unwrap();
        let d = path_delay_indices(t.graph(), &[0, 4, 1], &DelayParams::default(), &BandwidthModel::default()).unwrap();
        assert!(close(d, 0.5e-3 + 0.4e-3 + 0.32e-3 + 0.32e-3));
        assert!(matches!(
            path_delay_indices(t.graph(), &[0, 1], &DelayParams::default(), &BandwidthModel::default()),
            Err(MetricsError::InactiveEdge(0, 1))
        ));
    }

    #[test]
    fn delay_is_additive_on_chains() {
        let s = line(6, 100.0);
        let t = Topology::new(&s, chain_strategy(&s), &NetworkParams::default()).unwrap();
        let (dp, bm) = (DelayParams::default(), BandwidthModel::default());
        let g = t.graph();
        let whole = path_delay_indices(g, &[0, 1, 2, 3, 4, 5], &dp, &bm).unwrap();
        let left = path_delay_indices(g, &[0, 1, 2, 3], &dp, &bm).unwrap();
        let right = path_delay_indices(g, &[3, 4, 5], &dp, &bm).unwrap();
        assert!(close(whole, left + right));
    }

    #[test]
    fn path_length_means() {
        let s = line(6, 100.0);
        let t = Topology::new(&s, chain_strategy(&s), &NetworkParams::default()).unwrap();
        assert_eq!(average_path_length(&t, &pairs(&[(0, 2)])), 2.0);
        assert_eq!(average_path_length(&t, &pairs(&[(0, 2), (1, 5)])), 3.0);
        assert_eq!(average_path_length(&t, &pairs(&[])), 0.0);
        let empty = Topology::empty(&s);
        assert_eq!(average_path_length(&empty, &pairs(&[(0, 2)])), 0.0);
        assert_eq!(mean_delay(&empty, &pairs(&[(0, 2)]), &DelayParams::default(), &BandwidthModel::default()), 0.0);
    }

    #[test]
    fn throughput_examples() {
        let s = line(2, 100.0);
        let tp = ThroughputParams::default();
        assert_eq!(throughput(&Topology::empty(&s), &tp, &BandwidthModel::default(), 0.0), 0.0);
        let t = Topology::new(&s, chain_strategy(&s), &NetworkParams::default()).unwrap();
        let w = throughput(&t, &tp, &BandwidthModel { v2v_base_mbps: 10.0 }, 4.0);
        assert!(close(w, 7.04));

        let r = RsuNode { id: RsuId("r".into()), x: 0.0, y: 10.0, bandwidth_mbps: 100.0 };
        let s2 = NetworkSnapshot::new(0, 1.0, s.vehicles.clone(), vec![r]).unwrap();
        let mut st = LinkStrategy::new();
        st.insert_v2i("v00".into(), "r".into(), 20.0);
        let t2 = Topology::new(&s2, st, &NetworkParams::default()).unwrap();
        assert!(close(throughput(&t2, &tp, &BandwidthModel::default(), 0.0), 18.0));
    }

    #[test]
    fn loss_is_clamped() {
        let tp = ThroughputParams::default();
        assert!(close(loss_fraction(&tp, 4.0), 0.12));
        assert!(loss_fraction(&tp, 1000.0) < 1.0);
    }

    #[test]
    fn record_from_chain() {
        let s = line(4, 100.0);
        let t = Topology::new(&s, chain_strategy(&s), &NetworkParams::default()).unwrap();
        let rec = measure(&t, &pairs(&[(0, 3)]), &MetricsParams::default());
        assert_eq!(rec.step, 3);
        assert_eq!(rec.l_avg, 3.0);
        assert_eq!(rec.connectivity_rate, 1.0);
        assert_eq!(rec.pair_count, 1);
        // source 1 link, two relays with 2 links each, three links at 20/2 Mbps
        assert!(close(rec.mean_delay_s, 0.5e-3 + 2.0 * 1e-3 + 3.0 * 0.8e-3));
        assert_eq!(rec, measure(&t, &pairs(&[(0, 3)]), &MetricsParams::default()));
    }
}
