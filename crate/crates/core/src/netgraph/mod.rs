//! Dynamic communication graph over a snapshot: link adaptability, candidate
//! links, the demand matrix, key communication pairs, link strategies and
//! constraint-checked topologies.

mod graph;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

pub use graph::{GraphStats, Link, LinkGraph, LinkKind, UNREACHABLE};

use crate::error::{ConstraintViolation, GraphError};
use crate::mobility::{heading_gap, NetworkSnapshot, RsuId, VehicleId, VehicleState};

/// Speeds below this count as stopped when comparing motion states.
pub const STOPPED_SPEED_MPS: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeId {
    Vehicle(VehicleId),
    Rsu(RsuId),
}

/// Link-level network parameters. Defaults follow the reference urban
/// scenario (300 m V2V range, 500 m RSU coverage, degree caps 5 and 10).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default, deny_unknown_fields))]
pub struct NetworkParams {
    pub v2v_range_m: f64,
    pub v2i_range_m: f64,
    pub max_v2v_degree: usize,
    pub max_v2i_degree: usize,
    /// Speed-similarity weight in the adaptability index.
    pub alpha: f64,
    /// Adaptability at or above which a V2V candidate is flagged preferred.
    pub r_th: f64,
    /// Distance scale of the demand kernel; defaults to the V2V range.
    pub demand_d0_m: f64,
    pub demand_threshold: f64,
}

impl Default for NetworkParams {
    fn default() -> Self {
        NetworkParams {
            v2v_range_m: 300.0,
            v2i_range_m: 500.0,
            max_v2v_degree: 5,
            max_v2i_degree: 10,
            alpha: 0.7,
            r_th: 0.7,
            demand_d0_m: 300.0,
            demand_threshold: 0.3,
        }
    }
}

/// Motion-state similarity of two vehicles, in `[-(1 - alpha), 1]`.
///
/// The speed term is `min/max` of the two speeds; when both vehicles are
/// stopped it is 1, when exactly one is stopped it is 0.
pub fn link_adaptability(a: &VehicleState, b: &VehicleState, alpha: f64) -> f64 {
    let (lo, hi) = if a.speed <= b.speed { (a.speed, b.speed) } else { (b.speed, a.speed) };
    let speed_term = if hi < STOPPED_SPEED_MPS {
        1.0
    } else if lo < STOPPED_SPEED_MPS {
        0.0
    } else {
        lo / hi
    };
    alpha * speed_term + (1.0 - alpha) * libm::cos(heading_gap(a.heading, b.heading))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct V2vCandidate {
    /// Vehicle indices, `a < b`.
    pub a: usize,
    pub b: usize,
    pub distance: f64,
    pub adaptability: f64,
    pub preferred: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct V2iCandidate {
    pub vehicle: usize,
    /// RSU index within the snapshot's RSU list.
    pub rsu: usize,
    pub distance: f64,
}

/// All distance-feasible links of a snapshot, V2V sorted by `(a, b)` and
/// V2I sorted by `(vehicle, rsu)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CandidateLinks {
    pub v2v: Vec<V2vCandidate>,
    pub v2i: Vec<V2iCandidate>,
}

impl CandidateLinks {
    pub fn len(&self) -> usize {
        self.v2v.len() + self.v2i.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Per-node neighbour lists (vehicles then RSUs) with distances, sorted by index.
    pub fn neighborhoods(&self, snapshot: &NetworkSnapshot) -> Vec<Vec<(usize, f64)>> {
        let n = snapshot.vehicle_count();
        let mut out = vec![Vec::new(); snapshot.node_count()];
        for c in &self.v2v {
            out[c.a].push((c.b, c.distance));
            out[c.b].push((c.a, c.distance));
        }
        for c in &self.v2i {
            out[c.vehicle].push((n + c.rsu, c.distance));
            out[n + c.rsu].push((c.vehicle, c.distance));
        }
        for list in &mut out {
            list.sort_by_key(|&(u, _)| u);
        }
        out
    }
}

pub fn candidate_links(snapshot: &NetworkSnapshot, params: &NetworkParams) -> CandidateLinks {
    let vs = &snapshot.vehicles;
    let mut v2v = Vec::new();
    for a in 0..vs.len() {
        for b in a + 1..vs.len() {
            let distance = libm::hypot(vs[a].x - vs[b].x, vs[a].y - vs[b].y);
            if distance <= params.v2v_range_m {
                let adaptability = link_adaptability(&vs[a], &vs[b], params.alpha);
                v2v.push(V2vCandidate { a, b, distance, adaptability, preferred: adaptability >= params.r_th });
            }
        }
    }
    let mut v2i = Vec::new();
    for (vehicle, v) in vs.iter().enumerate() {
        for (rsu, r) in snapshot.rsus.iter().enumerate() {
            let distance = libm::hypot(v.x - r.x, v.y - r.y);
            if distance <= params.v2i_range_m {
                v2i.push(V2iCandidate { vehicle, rsu, distance });
            }
        }
    }
    CandidateLinks { v2v, v2i }
}

/// Symmetric vehicle-to-vehicle demand intensities in `[0, 1]`, zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandMatrix {
    n: usize,
    values: Vec<f64>,
}

impl DemandMatrix {
    pub fn zeros(n: usize) -> Self {
        DemandMatrix { n, values: vec![0.0; n * n] }
    }

    /// Builds from a row-major square matrix, enforcing symmetry and a zero
    /// diagonal.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, GraphError> {
        let n = rows.len();
        let mut m = DemandMatrix::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(GraphError::Config(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            for (j, &v) in row.iter().enumerate() {
                let sym_ok = rows[j][i] == v;
                if (i == j && v != 0.0) || !sym_ok || !(0.0..=1.0).contains(&v) {
                    return Err(GraphError::Config(format!("entry ({i}, {j}) breaks symmetry, range or zero diagonal")));
                }
                m.values[i * n + j] = v;
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    /// Mean of column `j` including the zero diagonal term.
    pub fn column_mean(&self, j: usize) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        (0..self.n).map(|i| self.get(i, j)).sum::<f64>() / self.n as f64
    }
}

/// `D_ij = exp(-d_ij / d0) * (1 + R_ij) / 2` with `R_ij` the adaptability index.
pub fn demand_matrix(snapshot: &NetworkSnapshot, d0_m: f64, alpha: f64) -> Result<DemandMatrix, GraphError> {
    if !(d0_m > 0.0) {
        return Err(GraphError::Config(format!("demand distance scale must be positive, got {d0_m}")));
    }
    let vs = &snapshot.vehicles;
    let n = vs.len();
    let mut m = DemandMatrix::zeros(n);
    for i in 0..n {
        for j in i + 1..n {
            let d = libm::hypot(vs[i].x - vs[j].x, vs[i].y - vs[j].y);
            let r = link_adaptability(&vs[i], &vs[j], alpha);
            let v = (libm::exp(-d / d0_m) * (1.0 + r) / 2.0).clamp(0.0, 1.0);
            m.values[i * n + j] = v;
            m.values[j * n + i] = v;
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommPair {
    /// Vehicle indices, `src < dst`.
    pub src: usize,
    pub dst: usize,
    pub demand: f64,
}

/// Key communication pairs C(t): beyond single-hop range but with enough
/// demand to need multi-hop cooperation. Sorted by `(src, dst)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CommPairSet {
    pub pairs: Vec<CommPair>,
}

impl CommPairSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &CommPair> {
        self.pairs.iter()
    }

    pub fn ids(&self, snapshot: &NetworkSnapshot) -> Vec<(VehicleId, VehicleId)> {
        self.pairs
            .iter()
            .map(|p| (snapshot.vehicles[p.src].id.clone(), snapshot.vehicles[p.dst].id.clone()))
            .collect()
    }
}

pub fn key_pairs(snapshot: &NetworkSnapshot, demand: &DemandMatrix, v2v_range_m: f64, demand_th: f64) -> CommPairSet {
    let vs = &snapshot.vehicles;
    let mut pairs = Vec::new();
    for i in 0..vs.len() {
        for j in i + 1..vs.len() {
            let d = libm::hypot(vs[i].x - vs[j].x, vs[i].y - vs[j].y);
            let dem = demand.get(i, j);
            if d > v2v_range_m && dem >= demand_th {
                pairs.push(CommPair { src: i, dst: j, demand: dem });
            }
        }
    }
    CommPairSet { pairs }
}

/// The decision variables of one control step: active V2V pairs and active
/// V2I links with their allocated bandwidth.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinkStrategy {
    v2v: BTreeSet<(VehicleId, VehicleId)>,
    v2i: BTreeMap<(VehicleId, RsuId), f64>,
}

impl LinkStrategy {
    pub fn new() -> Self {
        Self::default()
    }

    /// Activates the unordered pair; returns false for self pairs and duplicates.
    pub fn insert_v2v(&mut self, a: VehicleId, b: VehicleId) -> bool {
        match a.cmp(&b) {
            core::cmp::Ordering::Less => self.v2v.insert((a, b)),
            core::cmp::Ordering::Greater => self.v2v.insert((b, a)),
            core::cmp::Ordering::Equal => false,
        }
    }

    pub fn remove_v2v(&mut self, a: &VehicleId, b: &VehicleId) -> bool {
        let key = if a <= b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
        self.v2v.remove(&key)
    }

    /// Activates a V2I link with `bandwidth_mbps`; returns false if that is not
    /// strictly positive.
    pub fn insert_v2i(&mut self, vehicle: VehicleId, rsu: RsuId, bandwidth_mbps: f64) -> bool {
        if !(bandwidth_mbps > 0.0) {
            return false;
        }
        self.v2i.insert((vehicle, rsu), bandwidth_mbps);
        true
    }

    pub fn remove_v2i(&mut self, vehicle: &VehicleId, rsu: &RsuId) -> bool {
        self.v2i.remove(&(vehicle.clone(), rsu.clone())).is_some()
    }

    pub fn v2v(&self) -> impl Iterator<Item = &(VehicleId, VehicleId)> {
        self.v2v.iter()
    }

    pub fn v2i(&self) -> impl Iterator<Item = (&(VehicleId, RsuId), &f64)> {
        self.v2i.iter()
    }

    pub fn contains_v2v(&self, a: &VehicleId, b: &VehicleId) -> bool {
        let key = if a <= b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
        self.v2v.contains(&key)
    }

    pub fn v2i_bandwidth(&self, vehicle: &VehicleId, rsu: &RsuId) -> Option<f64> {
        self.v2i.get(&(vehicle.clone(), rsu.clone())).copied()
    }

    pub fn link_count(&self) -> usize {
        self.v2v.len() + self.v2i.len()
    }

    pub fn is_empty(&self) -> bool {
        self.link_count() == 0
    }

    /// Drops links whose endpoints departed or moved out of range.
    pub fn carried_onto(&self, snapshot: &NetworkSnapshot, params: &NetworkParams) -> LinkStrategy {
        let mut out = LinkStrategy::new();
        for (a, b) in &self.v2v {
            if let (Some(i), Some(j)) = (snapshot.vehicle_index(a), snapshot.vehicle_index(b)) {
                if snapshot.node_distance(i, j) <= params.v2v_range_m {
                    out.v2v.insert((a.clone(), b.clone()));
                }
            }
        }
        let n = snapshot.vehicle_count();
        for ((v, r), &bw) in &self.v2i {
            if let (Some(i), Some(m)) = (snapshot.vehicle_index(v), snapshot.rsu_index(r)) {
                if snapshot.node_distance(i, n + m) <= params.v2i_range_m {
                    out.v2i.insert((v.clone(), r.clone()), bw);
                }
            }
        }
        out
    }

    /// Index form over `snapshot`, silently dropping links with unknown endpoints.
    pub fn index_links(&self, snapshot: &NetworkSnapshot) -> IndexStrategy {
        let mut out = IndexStrategy::default();
        for (a, b) in &self.v2v {
            if let (Some(i), Some(j)) = (snapshot.vehicle_index(a), snapshot.vehicle_index(b)) {
                out.v2v.push(if i < j { (i, j) } else { (j, i) });
            }
        }
        for (v, r) in self.v2i.keys() {
            if let (Some(i), Some(m)) = (snapshot.vehicle_index(v), snapshot.rsu_index(r)) {
                out.v2i.push((i, m));
            }
        }
        out.normalize();
        out
    }
}

/// Solver-side strategy over snapshot indices. V2I bandwidth is implicit:
/// each RSU splits its capacity equally among its active links.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash, PartialOrd, Ord)]
pub struct IndexStrategy {
    /// `(a, b)` vehicle pairs with `a < b`.
    pub v2v: Vec<(usize, usize)>,
    /// `(vehicle, rsu)` pairs.
    pub v2i: Vec<(usize, usize)>,
}

impl IndexStrategy {
    pub fn normalize(&mut self) {
        for e in &mut self.v2v {
            if e.0 > e.1 {
                *e = (e.1, e.0);
            }
        }
        self.v2v.sort_unstable();
        self.v2v.dedup();
        self.v2i.sort_unstable();
        self.v2i.dedup();
    }

    pub fn link_count(&self) -> usize {
        self.v2v.len() + self.v2i.len()
    }

    pub fn rsu_degrees(&self, n_rsus: usize) -> Vec<usize> {
        let mut deg = vec![0; n_rsus];
        for &(_, m) in &self.v2i {
            deg[m] += 1;
        }
        deg
    }

    pub fn to_graph(&self, snapshot: &NetworkSnapshot) -> LinkGraph {
        let mut g = LinkGraph::new(snapshot.vehicle_count(), snapshot.rsu_count());
        for &(a, b) in &self.v2v {
            g.add_v2v(a, b);
        }
        let deg = self.rsu_degrees(snapshot.rsu_count());
        for &(v, m) in &self.v2i {
            g.add_v2i(v, m, snapshot.rsus[m].bandwidth_mbps / deg[m] as f64);
        }
        g
    }

    pub fn to_strategy(&self, snapshot: &NetworkSnapshot) -> LinkStrategy {
        let mut s = LinkStrategy::new();
        for &(a, b) in &self.v2v {
            s.insert_v2v(snapshot.vehicles[a].id.clone(), snapshot.vehicles[b].id.clone());
        }
        let deg = self.rsu_degrees(snapshot.rsu_count());
        for &(v, m) in &self.v2i {
            let r = &snapshot.rsus[m];
            s.insert_v2i(snapshot.vehicles[v].id.clone(), r.id.clone(), r.bandwidth_mbps / deg[m] as f64);
        }
        s
    }
}

/// A strategy realised on a snapshot. Construction enforces the range,
/// degree and RSU bandwidth constraints.
#[derive(Debug, Clone)]
pub struct Topology<'a> {
    snapshot: &'a NetworkSnapshot,
    strategy: LinkStrategy,
    graph: LinkGraph,
}

impl<'a> Topology<'a> {
    pub fn new(
        snapshot: &'a NetworkSnapshot,
        strategy: LinkStrategy,
        params: &NetworkParams,
    ) -> Result<Self, ConstraintViolation> {
        let n = snapshot.vehicle_count();
        let mut graph = LinkGraph::new(n, snapshot.rsu_count());
        for (a, b) in &strategy.v2v {
            let i = snapshot.vehicle_index(a).ok_or_else(|| ConstraintViolation::UnknownVehicle(a.clone()))?;
            let j = snapshot.vehicle_index(b).ok_or_else(|| ConstraintViolation::UnknownVehicle(b.clone()))?;
            let distance = snapshot.node_distance(i, j);
            if distance > params.v2v_range_m {
                return Err(ConstraintViolation::V2vRange {
                    a: a.clone(),
                    b: b.clone(),
                    distance,
                    range: params.v2v_range_m,
                });
            }
            graph.add_v2v(i, j);
        }
        let mut allocated = vec![0.0; snapshot.rsu_count()];
        for ((v, r), &bw) in &strategy.v2i {
            let i = snapshot.vehicle_index(v).ok_or_else(|| ConstraintViolation::UnknownVehicle(v.clone()))?;
            let m = snapshot.rsu_index(r).ok_or_else(|| ConstraintViolation::UnknownRsu(r.clone()))?;
            if !(bw > 0.0) {
                return Err(ConstraintViolation::NonPositiveBandwidth {
                    vehicle: v.clone(),
                    rsu: r.clone(),
                    bandwidth: bw,
                });
            }
            let distance = snapshot.node_distance(i, n + m);
            if distance > params.v2i_range_m {
                return Err(ConstraintViolation::V2iRange {
                    vehicle: v.clone(),
                    rsu: r.clone(),
                    distance,
                    range: params.v2i_range_m,
                });
            }
            allocated[m] += bw;
            graph.add_v2i(i, m, bw);
        }
        for u in 0..n {
            let degree = graph.v2v_degree(u);
            if degree > params.max_v2v_degree {
                return Err(ConstraintViolation::V2vDegree {
                    vehicle: snapshot.vehicles[u].id.clone(),
                    degree,
                    cap: params.max_v2v_degree,
                });
            }
        }
        for (m, rsu) in snapshot.rsus.iter().enumerate() {
            let degree = graph.degree(n + m);
            if degree > params.max_v2i_degree {
                return Err(ConstraintViolation::V2iDegree { rsu: rsu.id.clone(), degree, cap: params.max_v2i_degree });
            }
            // relative slack absorbs rounding in equal-share allocations
            if allocated[m] > rsu.bandwidth_mbps * (1.0 + 1e-9) {
                return Err(ConstraintViolation::Bandwidth {
                    rsu: rsu.id.clone(),
                    allocated: allocated[m],
                    capacity: rsu.bandwidth_mbps,
                });
            }
        }
        Ok(Topology { snapshot, strategy, graph })
    }

    /// Topology with no active links.
    pub fn empty(snapshot: &'a NetworkSnapshot) -> Self {
        Topology {
            snapshot,
            strategy: LinkStrategy::new(),
            graph: LinkGraph::new(snapshot.vehicle_count(), snapshot.rsu_count()),
        }
    }

    pub fn from_index(
        snapshot: &'a NetworkSnapshot,
        links: &IndexStrategy,
        params: &NetworkParams,
    ) -> Result<Self, ConstraintViolation> {
        Topology::new(snapshot, links.to_strategy(snapshot), params)
    }

    pub fn snapshot(&self) -> &'a NetworkSnapshot {
        self.snapshot
    }

    pub fn strategy(&self) -> &LinkStrategy {
        &self.strategy
    }

    pub fn into_strategy(self) -> LinkStrategy {
        self.strategy
    }

    pub fn graph(&self) -> &LinkGraph {
        &self.graph
    }

    pub fn node_index(&self, id: &NodeId) -> Option<usize> {
        match id {
            NodeId::Vehicle(v) => self.snapshot.vehicle_index(v),
            NodeId::Rsu(r) => self.snapshot.rsu_index(r).map(|m| self.snapshot.vehicle_count() + m),
        }
    }

    pub fn node_id(&self, idx: usize) -> NodeId {
        let n = self.snapshot.vehicle_count();
        if idx < n {
            NodeId::Vehicle(self.snapshot.vehicles[idx].id.clone())
        } else {
            NodeId::Rsu(self.snapshot.rsus[idx - n].id.clone())
        }
    }

    fn lookup(&self, id: &NodeId) -> Result<usize, GraphError> {
        self.node_index(id).ok_or_else(|| {
            GraphError::UnknownNode(match id {
                NodeId::Vehicle(v) => v.0.to_string(),
                NodeId::Rsu(r) => r.0.to_string(),
            })
        })
    }
}

/// Breadth-first shortest-hop path over active V2V and V2I links, breaking
/// ties toward the smallest next node id. `Ok(None)` when unreachable.
pub fn shortest_hop_path(topology: &Topology<'_>, src: &NodeId, dst: &NodeId) -> Result<Option<Vec<NodeId>>, GraphError> {
    let s = topology.lookup(src)?;
    let d = topology.lookup(dst)?;
    Ok(topology.graph.shortest_path(s, d).map(|p| p.into_iter().map(|u| topology.node_id(u)).collect()))
}

pub fn graph_stats(topology: &Topology<'_>) -> GraphStats {
    topology.graph.stats()
}

/// Whether at least `k_min` edge-disjoint paths join the two nodes.
pub fn k_path_count(topology: &Topology<'_>, src: &NodeId, dst: &NodeId, k_min: usize) -> Result<bool, GraphError> {
    let s = topology.lookup(src)?;
    let d = topology.lookup(dst)?;
    Ok(topology.graph.edge_disjoint_paths(s, d, k_min) >= k_min)
}
