//! Fixtures and independent oracles shared by integration tests.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vanet_core::mobility::{NetworkSnapshot, RsuId, RsuNode, VehicleState};
use vanet_core::netgraph::{candidate_links, CommPair, CommPairSet, LinkKind, LinkStrategy, NetworkParams};
use vanet_core::optimizer::{build_pool, rank, LinkPool, OptimizerParams, Problem, Score};
use vanet_core::regulation::RegulationState;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Vehicles scattered over a `w` x `h` box with random motion, RSUs on the
/// box's centre line.
pub fn random_snapshot(rng: &mut impl Rng, n: usize, rsus: usize, w: f64, h: f64) -> NetworkSnapshot {
    let vehicles = (0..n)
        .map(|i| {
            let speed = if rng.random_bool(0.1) { 0.0 } else { rng.random_range(0.0..20.0) };
            VehicleState::new(
                format!("v{i:02}").as_str(),
                rng.random_range(0.0..w),
                rng.random_range(0.0..h),
                speed,
                rng.random_range(0.0..std::f64::consts::TAU),
            )
            .unwrap()
        })
        .collect();
    let rsus = (0..rsus)
        .map(|m| RsuNode {
            id: RsuId(format!("r{m}")),
            x: w * (m as f64 + 1.0) / (rsus as f64 + 1.0),
            y: h / 2.0,
            bandwidth_mbps: rng.random_range(20.0..120.0),
        })
        .collect();
    NetworkSnapshot::new(0, 1.0, vehicles, rsus).unwrap()
}

/// Up to `max` distinct random vehicle pairs.
pub fn random_pairs(rng: &mut impl Rng, n: usize, max: usize) -> CommPairSet {
    let mut chosen = BTreeMap::new();
    if n >= 2 {
        for _ in 0..max {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if a != b {
                chosen.insert((a.min(b), a.max(b)), rng.random_range(0.3..1.0));
            }
        }
    }
    CommPairSet { pairs: chosen.into_iter().map(|((src, dst), demand)| CommPair { src, dst, demand }).collect() }
}

/// A small optimisation instance with everything a `Problem` borrows.
pub struct Instance {
    pub snapshot: NetworkSnapshot,
    pub pool: LinkPool,
    pub pairs: CommPairSet,
    pub regulation: RegulationState,
    pub params: OptimizerParams,
}

impl Instance {
    pub fn problem(&self) -> Problem<'_> {
        Problem {
            snapshot: &self.snapshot,
            pool: &self.pool,
            pairs: &self.pairs,
            regulation: &self.regulation,
            params: &self.params,
        }
    }
}

/// Random instance with at most `max_vehicles` vehicles, `max_rsus` RSUs and
/// a candidate pool of at most `max_links` links (resampled until it fits).
pub fn small_instance(rng: &mut impl Rng, max_vehicles: usize, max_rsus: usize, max_links: usize) -> Instance {
    loop {
        let n = rng.random_range(2..=max_vehicles);
        let r = rng.random_range(0..=max_rsus);
        let snapshot = random_snapshot(rng, n, r, 800.0, 400.0);
        let mut params = OptimizerParams::default();
        params.network.max_v2v_degree = rng.random_range(1..=3);
        params.network.max_v2i_degree = rng.random_range(1..=3);
        params.solver.k_min = if rng.random_bool(0.2) { 2 } else { 1 };
        let candidates = candidate_links(&snapshot, &params.network);
        let pool = build_pool(&snapshot, &candidates, None, &params);
        if pool.len() > max_links {
            continue;
        }
        let pairs = random_pairs(rng, n, 3);
        let mut regulation = RegulationState::default();
        regulation.lambda1 = rng.random_range(0.1..0.9);
        regulation.lambda2 = 1.0 - regulation.lambda1;
        regulation.l_norm = rng.random_range(1.0..10.0);
        regulation.t_norm = rng.random_range(0.002..0.05);
        return Instance { snapshot, pool, pairs, regulation, params };
    }
}

/// Brute force over every cap-respecting subset of the pool, ranked like the
/// exact solver ranks strategies.
pub fn enumerate_optimum(problem: &Problem<'_>) -> (Score, Vec<usize>) {
    fn walk(
        problem: &Problem<'_>,
        i: usize,
        chosen: &mut Vec<usize>,
        v2v: &mut Vec<usize>,
        rsu: &mut Vec<usize>,
        best: &mut Option<(Score, Vec<usize>)>,
    ) {
        let pool = problem.pool;
        if i == pool.len() {
            let strategy = pool.strategy_of(chosen.iter().copied());
            let (score, _) = problem.score_graph(&problem.graph_of(&strategy));
            let better = match best {
                None => true,
                Some((s, c)) => rank((&score, chosen), (s, c)).is_lt(),
            };
            if better {
                *best = Some((score, chosen.clone()));
            }
            return;
        }
        walk(problem, i + 1, chosen, v2v, rsu, best);
        let l = pool.links()[i];
        let net = &problem.params.network;
        let fits = match l.kind {
            LinkKind::V2v => v2v[l.a] < net.max_v2v_degree && v2v[l.b] < net.max_v2v_degree,
            LinkKind::V2i => rsu[l.b] < net.max_v2i_degree,
        };
        if fits {
            match l.kind {
                LinkKind::V2v => {
                    v2v[l.a] += 1;
                    v2v[l.b] += 1;
                }
                LinkKind::V2i => rsu[l.b] += 1,
            }
            chosen.push(i);
            walk(problem, i + 1, chosen, v2v, rsu, best);
            chosen.pop();
            match l.kind {
                LinkKind::V2v => {
                    v2v[l.a] -= 1;
                    v2v[l.b] -= 1;
                }
                LinkKind::V2i => rsu[l.b] -= 1,
            }
        }
    }
    let mut best = None;
    let mut v2v = vec![0; problem.pool.n_vehicles()];
    let mut rsu = vec![0; problem.pool.n_rsus()];
    walk(problem, 0, &mut Vec::new(), &mut v2v, &mut rsu, &mut best);
    best.expect("the empty strategy is always enumerated")
}

/// Range, degree, bandwidth-sign and RSU-capacity constraints checked
/// directly on a strategy, without going through `Topology`.
pub fn check_constraints(snapshot: &NetworkSnapshot, strategy: &LinkStrategy, net: &NetworkParams) -> Result<(), String> {
    let find_v = |id| snapshot.vehicles.iter().find(|v| &v.id == id);
    let mut v2v_deg: BTreeMap<_, usize> = BTreeMap::new();
    for (a, b) in strategy.v2v() {
        let (Some(va), Some(vb)) = (find_v(a), find_v(b)) else {
            return Err(format!("V2V link {a}-{b} has an unknown endpoint"));
        };
        if a == b {
            return Err(format!("self link at {a}"));
        }
        let d = ((va.x - vb.x).powi(2) + (va.y - vb.y).powi(2)).sqrt();
        if d > net.v2v_range_m {
            return Err(format!("V2V link {a}-{b} spans {d} m"));
        }
        *v2v_deg.entry(a.clone()).or_default() += 1;
        *v2v_deg.entry(b.clone()).or_default() += 1;
    }
    if let Some((v, d)) = v2v_deg.iter().find(|(_, &d)| d > net.max_v2v_degree) {
        return Err(format!("{v} has {d} V2V links"));
    }
    let mut load: BTreeMap<_, (usize, f64)> = BTreeMap::new();
    for ((v, r), &bw) in strategy.v2i() {
        let Some(veh) = find_v(v) else {
            return Err(format!("V2I link from unknown vehicle {v}"));
        };
        let Some(rsu) = snapshot.rsus.iter().find(|x| &x.id == r) else {
            return Err(format!("V2I link to unknown RSU {r}"));
        };
        if !(bw > 0.0) {
            return Err(format!("V2I link {v}-{r} has bandwidth {bw}"));
        }
        let d = ((veh.x - rsu.x).powi(2) + (veh.y - rsu.y).powi(2)).sqrt();
        if d > net.v2i_range_m {
            return Err(format!("V2I link {v}-{r} spans {d} m"));
        }
        let e = load.entry(r.clone()).or_default();
        e.0 += 1;
        e.1 += bw;
    }
    for (r, (deg, total)) in &load {
        let cap = snapshot.rsus.iter().find(|x| &x.id == r).unwrap().bandwidth_mbps;
        if *deg > net.max_v2i_degree {
            return Err(format!("{r} has {deg} V2I links"));
        }
        if *total > cap * (1.0 + 1e-9) {
            return Err(format!("{r} allocates {total} of {cap} Mbps"));
        }
    }
    Ok(())
}

/// All-pairs hop counts by Floyd-Warshall over an adjacency list.
pub fn floyd_warshall(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<Option<usize>>> {
    let mut d = vec![vec![None; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = Some(0);
    }
    for &(a, b) in edges {
        d[a][b] = Some(1);
        d[b][a] = Some(1);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(x), Some(y)) = (d[i][k], d[k][j]) {
                    if d[i][j].is_none_or(|c| x + y < c) {
                        d[i][j] = Some(x + y);
                    }
                }
            }
        }
    }
    d
}
