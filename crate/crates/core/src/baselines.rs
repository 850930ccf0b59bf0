//! Comparison strategies built under the same caps as the controller:
//! distance-greedy, union of shortest routes, and co-travel frequency.

use alloc::collections::{BTreeMap, BinaryHeap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};
use core::f64::consts::PI;

use crate::mobility::{heading_gap, NetworkSnapshot, VehicleId};
use crate::netgraph::{CandidateLinks, CommPairSet, IndexStrategy, NetworkParams, UNREACHABLE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BaselineKind {
    Greedy,
    ShortestPath,
    Motif,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 3] = [BaselineKind::Greedy, BaselineKind::ShortestPath, BaselineKind::Motif];

    pub fn label(self) -> &'static str {
        match self {
            BaselineKind::Greedy => "greedy",
            BaselineKind::ShortestPath => "shortest_path",
            BaselineKind::Motif => "motif",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        BaselineKind::ALL.into_iter().find(|k| k.label() == s)
    }
}

/// A candidate link in a kind-agnostic form: V2I links use the RSU's node index.
#[derive(Debug, Clone, Copy)]
struct Edge {
    v2i: bool,
    a: usize,
    /// Vehicle index for V2V, RSU number for V2I.
    b: usize,
    distance: f64,
    adaptability: f64,
}

impl Edge {
    fn id(&self) -> (bool, usize, usize) {
        (self.v2i, self.a, self.b)
    }

    fn node_b(&self, n_vehicles: usize) -> usize {
        if self.v2i {
            n_vehicles + self.b
        } else {
            self.b
        }
    }
}

fn edges(candidates: &CandidateLinks) -> Vec<Edge> {
    let mut out: Vec<Edge> = candidates
        .v2v
        .iter()
        .map(|c| Edge { v2i: false, a: c.a, b: c.b, distance: c.distance, adaptability: c.adaptability })
        .collect();
    // V2I links carry no adaptability score; they rank after V2V links at equal distance
    out.extend(candidates.v2i.iter().map(|c| Edge {
        v2i: true,
        a: c.vehicle,
        b: c.rsu,
        distance: c.distance,
        adaptability: f64::NEG_INFINITY,
    }));
    out
}

fn greedy_order(x: &Edge, y: &Edge) -> Ordering {
    x.distance
        .total_cmp(&y.distance)
        .then(y.adaptability.total_cmp(&x.adaptability))
        .then(x.id().cmp(&y.id()))
}

struct Caps<'a> {
    params: &'a NetworkParams,
    v2v_deg: Vec<usize>,
    rsu_deg: Vec<usize>,
    out: IndexStrategy,
}

impl<'a> Caps<'a> {
    fn new(snapshot: &NetworkSnapshot, params: &'a NetworkParams) -> Self {
        Caps {
            params,
            v2v_deg: vec![0; snapshot.vehicle_count()],
            rsu_deg: vec![0; snapshot.rsu_count()],
            out: IndexStrategy::default(),
        }
    }

    fn fits(&self, e: &Edge) -> bool {
        if e.v2i {
            self.rsu_deg[e.b] < self.params.max_v2i_degree
        } else {
            self.v2v_deg[e.a] < self.params.max_v2v_degree && self.v2v_deg[e.b] < self.params.max_v2v_degree
        }
    }

    fn add(&mut self, e: &Edge) {
        if e.v2i {
            self.rsu_deg[e.b] += 1;
            self.out.v2i.push((e.a, e.b));
        } else {
            self.v2v_deg[e.a] += 1;
            self.v2v_deg[e.b] += 1;
            self.out.v2v.push((e.a, e.b));
        }
    }

    fn try_add(&mut self, e: &Edge) -> bool {
        let ok = self.fits(e);
        if ok {
            self.add(e);
        }
        ok
    }

    fn finish(mut self) -> IndexStrategy {
        self.out.normalize();
        self.out
    }
}

/// Shortest candidates first, each added while its endpoints have room.
pub fn greedy_build(snapshot: &NetworkSnapshot, candidates: &CandidateLinks, params: &NetworkParams) -> IndexStrategy {
    let mut es = edges(candidates);
    es.sort_by(greedy_order);
    let mut caps = Caps::new(snapshot, params);
    for e in &es {
        caps.try_add(e);
    }
    caps.finish()
}

/// Union of per-pair hop-shortest routes over the candidate graph, pairs in
/// `(src, dst)` order. Ties go to the route adding the least new link
/// length; links already active cost nothing extra.
pub fn shortest_path_build(
    snapshot: &NetworkSnapshot,
    candidates: &CandidateLinks,
    pairs: &CommPairSet,
    params: &NetworkParams,
) -> IndexStrategy {
    let es = edges(candidates);
    let n = snapshot.vehicle_count();
    let nodes = snapshot.node_count();
    let mut incident = vec![Vec::new(); nodes];
    for (i, e) in es.iter().enumerate() {
        incident[e.a].push(i);
        incident[e.node_b(n)].push(i);
    }
    let mut active = vec![false; es.len()];
    let mut caps = Caps::new(snapshot, params);
    let mut order: Vec<(usize, usize)> = pairs.iter().map(|p| (p.src, p.dst)).collect();
    order.sort_unstable();
    for (src, dst) in order {
        let mut banned = vec![false; es.len()];
        // a route may need two new links at one node; retry around blocked links
        for _ in 0..16 {
            let Some(route) = dijkstra(&es, &incident, &active, &banned, &caps, n, src, dst) else {
                break;
            };
            let mut added = Vec::new();
            let mut blocked = None;
            for &i in &route {
                if active[i] {
                    continue;
                }
                if caps.fits(&es[i]) {
                    caps.add(&es[i]);
                    active[i] = true;
                    added.push(i);
                } else {
                    blocked = Some(i);
                    break;
                }
            }
            match blocked {
                None => break,
                Some(b) => {
                    for &i in added.iter().rev() {
                        undo(&mut caps, &es[i]);
                        active[i] = false;
                    }
                    banned[b] = true;
                }
            }
        }
    }
    caps.finish()
}

fn undo(caps: &mut Caps<'_>, e: &Edge) {
    if e.v2i {
        caps.rsu_deg[e.b] -= 1;
        let pos = caps.out.v2i.iter().rposition(|&x| x == (e.a, e.b)).expect("link was added");
        caps.out.v2i.remove(pos);
    } else {
        caps.v2v_deg[e.a] -= 1;
        caps.v2v_deg[e.b] -= 1;
        let pos = caps.out.v2v.iter().rposition(|&x| x == (e.a, e.b)).expect("link was added");
        caps.out.v2v.remove(pos);
    }
}

#[allow(clippy::too_many_arguments)]
fn dijkstra(
    es: &[Edge],
    incident: &[Vec<usize>],
    active: &[bool],
    banned: &[bool],
    caps: &Caps<'_>,
    n_vehicles: usize,
    src: usize,
    dst: usize,
) -> Option<Vec<usize>> {
    let nodes = incident.len();
    let mut best = vec![(usize::MAX, u64::MAX); nodes];
    let mut via = vec![UNREACHABLE; nodes];
    let mut heap = BinaryHeap::new();
    best[src] = (0, 0f64.to_bits());
    heap.push(Reverse((0usize, 0f64.to_bits(), src)));
    while let Some(Reverse((hops, bits, u))) = heap.pop() {
        if (hops, bits) != best[u] {
            continue;
        }
        if u == dst {
            break;
        }
        for &i in &incident[u] {
            let e = &es[i];
            if banned[i] || (!active[i] && !caps.fits(e)) {
                continue;
            }
            let extra = if active[i] { 0.0 } else { e.distance };
            let w = if e.a == u { e.node_b(n_vehicles) } else { e.a };
            let key = (hops + 1, (f64::from_bits(bits) + extra).to_bits());
            if key < best[w] {
                best[w] = key;
                via[w] = i;
                heap.push(Reverse((key.0, key.1, w)));
            }
        }
    }
    if best[dst].0 == usize::MAX {
        return None;
    }
    let mut route = Vec::new();
    let mut v = dst;
    while v != src {
        let i = via[v];
        route.push(i);
        let e = &es[i];
        v = if e.a == v { e.node_b(n_vehicles) } else { e.a };
    }
    Some(route)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default, deny_unknown_fields))]
pub struct MotifParams {
    pub window_steps: usize,
    pub heading_tolerance_rad: f64,
}

impl Default for MotifParams {
    fn default() -> Self {
        MotifParams { window_steps: 50, heading_tolerance_rad: PI / 6.0 }
    }
}

/// Rolling record of which vehicle pairs travelled together, within range
/// and on similar headings, over the last `window_steps` snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct MotifTracker {
    params: MotifParams,
    window: VecDeque<Vec<(VehicleId, VehicleId)>>,
    counts: BTreeMap<(VehicleId, VehicleId), u32>,
}

impl MotifTracker {
    pub fn new(params: MotifParams) -> Self {
        MotifTracker { params, window: VecDeque::new(), counts: BTreeMap::new() }
    }

    pub fn observe(&mut self, snapshot: &NetworkSnapshot, candidates: &CandidateLinks) {
        let vs = &snapshot.vehicles;
        let together: Vec<(VehicleId, VehicleId)> = candidates
            .v2v
            .iter()
            .filter(|c| heading_gap(vs[c.a].heading, vs[c.b].heading) < self.params.heading_tolerance_rad)
            .map(|c| (vs[c.a].id.clone(), vs[c.b].id.clone()))
            .collect();
        for key in &together {
            *self.counts.entry(key.clone()).or_insert(0) += 1;
        }
        self.window.push_back(together);
        while self.window.len() > self.params.window_steps.max(1) {
            for key in self.window.pop_front().expect("window is non-empty") {
                if let Some(c) = self.counts.get_mut(&key) {
                    *c -= 1;
                    if *c == 0 {
                        self.counts.remove(&key);
                    }
                }
            }
        }
    }

    pub fn count(&self, a: &VehicleId, b: &VehicleId) -> u32 {
        let key = if a <= b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
        self.counts.get(&key).copied().unwrap_or(0)
    }

    /// V2V candidates by co-travel count, then greedy order; V2I afterwards in
    /// greedy order.
    pub fn build(&self, snapshot: &NetworkSnapshot, candidates: &CandidateLinks, params: &NetworkParams) -> IndexStrategy {
        let vs = &snapshot.vehicles;
        let mut scored: Vec<(u32, Edge)> = edges(candidates)
            .into_iter()
            .filter(|e| !e.v2i)
            .map(|e| (self.count(&vs[e.a].id, &vs[e.b].id), e))
            .collect();
        scored.sort_by(|x, y| y.0.cmp(&x.0).then_with(|| greedy_order(&x.1, &y.1)));
        let mut v2i: Vec<Edge> = edges(candidates).into_iter().filter(|e| e.v2i).collect();
        v2i.sort_by(greedy_order);
        let mut caps = Caps::new(snapshot, params);
        for (_, e) in &scored {
            caps.try_add(e);
        }
        for e in &v2i {
            caps.try_add(e);
        }
        caps.finish()
    }
}

/// Stateful wrapper so a harness can drive any baseline step by step.
#[derive(Debug, Clone, PartialEq)]
pub struct Baseline {
    pub kind: BaselineKind,
    motif: MotifTracker,
}

impl Baseline {
    pub fn new(kind: BaselineKind, motif: MotifParams) -> Self {
        Baseline { kind, motif: MotifTracker::new(motif) }
    }

    pub fn step(
        &mut self,
        snapshot: &NetworkSnapshot,
        candidates: &CandidateLinks,
        pairs: &CommPairSet,
        params: &NetworkParams,
    ) -> IndexStrategy {
        match self.kind {
            BaselineKind::Greedy => greedy_build(snapshot, candidates, params),
            BaselineKind::ShortestPath => shortest_path_build(snapshot, candidates, pairs, params),
            BaselineKind::Motif => {
                self.motif.observe(snapshot, candidates);
                self.motif.build(snapshot, candidates, params)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobility::{RsuId, RsuNode, VehicleState};
    use crate::netgraph::{candidate_links, CommPair};
    use alloc::format;

    fn snap(points: &[(f64, f64, f64)], rsus: &[(f64, f64)]) -> NetworkSnapshot {
        let vs = points
            .iter()
            .enumerate()
            .map(|(i, &(x, y, h))| VehicleState::new(format!("v{i}").as_str(), x, y, 10.0, h).unwrap())
            .collect();
        let rs = rsus
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| RsuNode { id: RsuId(format!("r{i}")), x, y, bandwidth_mbps: 100.0 })
            .collect();
        NetworkSnapshot::new(0, 1.0, vs, rs).unwrap()
    }

    #[test]
    fn greedy_examples() {
        let empty = snap(&[], &[]);
        let p = NetworkParams::default();
        assert_eq!(greedy_build(&empty, &candidate_links(&empty, &p), &p), IndexStrategy::default());

        // collinear at 100 m: both 100 m links beat the 200 m one, and the
        // middle vehicle's single slot goes to the first in edge order
        let s = snap(&[(0.0, 0.0, 0.0), (100.0, 0.0, 0.0), (200.0, 0.0, 0.0)], &[]);
        let tight = NetworkParams { max_v2v_degree: 1, ..p };
        let g = greedy_build(&s, &candidate_links(&s, &tight), &tight);
        assert_eq!(g.v2v, vec![(0, 1)]);
    }

    #[test]
    fn shortest_path_examples() {
        let s = snap(&[(0.0, 0.0, 0.0), (200.0, 0.0, 0.0), (400.0, 0.0, 0.0), (200.0, 250.0, 0.0)], &[]);
        let p = NetworkParams::default();
        let c = candidate_links(&s, &p);
        assert!(shortest_path_build(&s, &c, &CommPairSet::default(), &p).v2v.is_empty());
        let pairs = CommPairSet { pairs: vec![CommPair { src: 0, dst: 2, demand: 0.4 }] };
        // via vehicle 1 (400 m of new links) beats via vehicle 3 (2 * 320 m)
        assert_eq!(shortest_path_build(&s, &c, &pairs, &p).v2v, vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn motif_prefers_platoons() {
        let p = NetworkParams::default();
        let mut tracker = MotifTracker::new(MotifParams::default());
        for t in 0..50 {
            let x = 10.0 * t as f64;
            // v0 and v1 drive together; v2 crosses at a right angle
            let s = snap(&[(x, 0.0, 0.0), (x + 250.0, 0.0, 0.0), (x + 125.0, 50.0, PI / 2.0)], &[]);
            tracker.observe(&s, &candidate_links(&s, &p));
        }
        assert_eq!(tracker.count(&"v0".into(), &"v1".into()), 50);
        assert_eq!(tracker.count(&"v0".into(), &"v2".into()), 0);
        let s = snap(&[(500.0, 0.0, 0.0), (750.0, 0.0, 0.0), (625.0, 50.0, PI / 2.0)], &[]);
        let tight = NetworkParams { max_v2v_degree: 1, ..p };
        let built = tracker.build(&s, &candidate_links(&s, &tight), &tight);
        assert_eq!(built.v2v, vec![(0, 1)]);
    }

    #[test]
    fn motif_cold_start_is_greedy() {
        let p = NetworkParams::default();
        let s = snap(&[(0.0, 0.0, 0.0), (100.0, 0.0, 1.0), (180.0, 0.0, 2.0)], &[(90.0, 10.0)]);
        let c = candidate_links(&s, &p);
        let tracker = MotifTracker::new(MotifParams::default());
        assert_eq!(tracker.build(&s, &c, &p), greedy_build(&s, &c, &p));
    }

    #[test]
    fn window_forgets() {
        let p = NetworkParams::default();
        let mut tracker = MotifTracker::new(MotifParams { window_steps: 3, ..Default::default() });
        let s = snap(&[(0.0, 0.0, 0.0), (100.0, 0.0, 0.0)], &[]);
        for _ in 0..5 {
            tracker.observe(&s, &candidate_links(&s, &p));
        }
        assert_eq!(tracker.count(&"v0".into(), &"v1".into()), 3);
        let apart = snap(&[(0.0, 0.0, 0.0), (1000.0, 0.0, 0.0)], &[]);
        for _ in 0..3 {
            tracker.observe(&apart, &candidate_links(&apart, &p));
        }
        assert_eq!(tracker.count(&"v0".into(), &"v1".into()), 0);
    }
}
