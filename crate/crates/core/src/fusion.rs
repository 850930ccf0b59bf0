//! Local feature extraction and distance-weighted neighbourhood fusion.
//!
//! Each node carries `[x, y, speed, heading, demand]`. Internally the heading
//! is held as a `(cos, sin)` pair so that averaging respects the wrap at 2π;
//! RSUs have no heading and embed it as `(0, 0)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::FusionError;
use crate::mobility::NetworkSnapshot;
use crate::netgraph::DemandMatrix;

pub const FEATURE_DIM: usize = 5;
const EMBED_DIM: usize = 6;

pub type FeatureVector = [f64; FEATURE_DIM];

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default, deny_unknown_fields))]
pub struct FusionParams {
    /// Distance decay of neighbour weights, per metre.
    pub decay_per_m: f64,
    pub self_weight_vehicle: f64,
    pub self_weight_rsu: f64,
    pub max_rounds: usize,
    pub epsilon: f64,
}

impl Default for FusionParams {
    fn default() -> Self {
        FusionParams { decay_per_m: 0.01, self_weight_vehicle: 0.7, self_weight_rsu: 0.3, max_rounds: 10, epsilon: 1e-3 }
    }
}

/// Per-node features, vehicles first then RSUs, in snapshot order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n_vehicles: usize,
    rows: Vec<[f64; EMBED_DIM]>,
}

impl FeatureMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_vehicles(&self) -> usize {
        self.n_vehicles
    }

    /// Five-component view of node `i`; heading in `[0, 2π)`.
    pub fn row(&self, i: usize) -> FeatureVector {
        let r = &self.rows[i];
        let heading = if r[3] == 0.0 && r[4] == 0.0 {
            0.0
        } else {
            crate::mobility::normalize_heading(libm::atan2(r[4], r[3]))
        };
        [r[0], r[1], r[2], heading, r[5]]
    }

    /// Heading as stored: `(cos, sin)` weighted by fusion, not renormalised.
    pub fn heading_embedding(&self, i: usize) -> (f64, f64) {
        (self.rows[i][3], self.rows[i][4])
    }

    pub fn demand(&self, i: usize) -> f64 {
        self.rows[i][5]
    }

    /// Raw embedded coordinates `[x, y, speed, cos, sin, demand]`.
    pub fn embedded(&self, i: usize) -> [f64; EMBED_DIM] {
        self.rows[i]
    }

    /// Builds a matrix from five-component vehicle rows and RSU rows. RSU
    /// headings are ignored.
    pub fn from_rows(vehicles: &[FeatureVector], rsus: &[FeatureVector]) -> Self {
        let mut rows = Vec::with_capacity(vehicles.len() + rsus.len());
        for v in vehicles {
            rows.push([v[0], v[1], v[2], libm::cos(v[3]), libm::sin(v[3]), v[4]]);
        }
        for r in rsus {
            rows.push([r[0], r[1], r[2], 0.0, 0.0, r[4]]);
        }
        FeatureMatrix { n_vehicles: vehicles.len(), rows }
    }
}

/// Vehicle demand is the column mean of the demand matrix (zero diagonal
/// included); an RSU's is the mean over vehicles within `rsu_coverage_m`.
pub fn extract_features(
    snapshot: &NetworkSnapshot,
    demand: &DemandMatrix,
    rsu_coverage_m: f64,
) -> Result<FeatureMatrix, FusionError> {
    let n = snapshot.vehicle_count();
    if demand.dim() != n {
        return Err(FusionError::Shape { expected: n, got: demand.dim() });
    }
    let mut rows = Vec::with_capacity(snapshot.node_count());
    let mut vehicle_demand = Vec::with_capacity(n);
    for (j, v) in snapshot.vehicles.iter().enumerate() {
        let d = demand.column_mean(j);
        vehicle_demand.push(d);
        rows.push([v.x, v.y, v.speed, libm::cos(v.heading), libm::sin(v.heading), d]);
    }
    for (m, r) in snapshot.rsus.iter().enumerate() {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (j, d) in vehicle_demand.iter().enumerate() {
            if snapshot.node_distance(j, n + m) <= rsu_coverage_m {
                sum += d;
                count += 1;
            }
        }
        let d = if count == 0 { 0.0 } else { sum / count as f64 };
        rows.push([r.x, r.y, 0.0, 0.0, 0.0, d]);
    }
    Ok(FeatureMatrix { n_vehicles: n, rows })
}

/// Softmax of `-decay * distance`; closer neighbours weigh more.
pub fn neighbor_weights(distances: &[f64], decay_per_m: f64) -> Vec<f64> {
    let Some(nearest) = distances.iter().copied().reduce(f64::min) else {
        return Vec::new();
    };
    // shifting by the nearest distance avoids underflow without changing the ratios
    let raw: Vec<f64> = distances.iter().map(|d| libm::exp(-decay_per_m * (d - nearest))).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// One synchronous round. `neighborhoods[i]` lists `(node, distance)` pairs.
pub fn fuse_step(
    features: &FeatureMatrix,
    neighborhoods: &[Vec<(usize, f64)>],
    params: &FusionParams,
) -> Result<FeatureMatrix, FusionError> {
    let (next, _) = fuse_round(features, neighborhoods, params)?;
    Ok(next)
}

fn fuse_round(
    features: &FeatureMatrix,
    neighborhoods: &[Vec<(usize, f64)>],
    params: &FusionParams,
) -> Result<(FeatureMatrix, f64), FusionError> {
    if neighborhoods.len() != features.len() {
        return Err(FusionError::Neighborhoods { expected: features.len(), got: neighborhoods.len() });
    }
    let mut rows = features.rows.clone();
    let mut max_change = 0.0f64;
    let mut distances = Vec::new();
    for (i, nbrs) in neighborhoods.iter().enumerate() {
        if nbrs.is_empty() {
            continue;
        }
        distances.clear();
        distances.extend(nbrs.iter().map(|&(_, d)| d));
        let weights = neighbor_weights(&distances, params.decay_per_m);
        let mut agg = [0.0; EMBED_DIM];
        for (&(u, _), w) in nbrs.iter().zip(&weights) {
            for (a, x) in agg.iter_mut().zip(&features.rows[u]) {
                *a += w * x;
            }
        }
        let own = features.rows[i];
        let ws = if i < features.n_vehicles { params.self_weight_vehicle } else { params.self_weight_rsu };
        let mut change = 0.0;
        for k in 0..EMBED_DIM {
            let v = ws * own[k] + (1.0 - ws) * agg[k];
            change += (v - own[k]) * (v - own[k]);
            rows[i][k] = v;
        }
        max_change = max_change.max(libm::sqrt(change));
    }
    Ok((FeatureMatrix { n_vehicles: features.n_vehicles, rows }, max_change))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionOutcome {
    pub features: FeatureMatrix,
    pub rounds_used: usize,
    pub converged: bool,
    /// Largest per-node change in each round.
    pub max_changes: Vec<f64>,
}

/// Repeats [`fuse_step`] until the largest per-node change (over vehicles and
/// RSUs, measured on the embedded coordinates) drops below `epsilon`, or
/// `max_rounds` rounds have run.
pub fn run_fusion(
    initial: FeatureMatrix,
    neighborhoods: &[Vec<(usize, f64)>],
    params: &FusionParams,
) -> Result<FusionOutcome, FusionError> {
    let mut current = initial;
    let mut max_changes = Vec::new();
    let mut converged = false;
    for _ in 0..params.max_rounds.max(1) {
        let (next, change) = fuse_round(&current, neighborhoods, params)?;
        current = next;
        max_changes.push(change);
        if change < params.epsilon {
            converged = true;
            break;
        }
    }
    Ok(FusionOutcome { features: current, rounds_used: max_changes.len(), converged, max_changes })
}

/// Fused per-vehicle demand rescaled to `[0, 1]` by the largest value.
pub fn normalized_vehicle_demand(features: &FeatureMatrix) -> Vec<f64> {
    let n = features.n_vehicles;
    let peak = (0..n).map(|i| features.demand(i)).fold(0.0, f64::max);
    if peak <= 0.0 {
        return vec![0.0; n];
    }
    (0..n).map(|i| features.demand(i) / peak).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobility::{RsuId, RsuNode, VehicleState};
    use crate::netgraph::{candidate_links, demand_matrix, NetworkParams};
    use alloc::format;
    use core::f64::consts::PI;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * b.abs().max(1.0)
    }

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
    fn extraction_examples() {
        let one = snap(&[(0.0, 0.0, 0.0)], &[]);
        let f = extract_features(&one, &demand_matrix(&one, 300.0, 0.7).unwrap(), 500.0).unwrap();
        assert_eq!(f.row(0)[4], 0.0);

        let three = snap(&[(0.0, 0.0, 0.0), (10.0, 0.0, 0.0), (20.0, 0.0, 0.0)], &[(5000.0, 5000.0)]);
        let m = DemandMatrix::from_rows(&[vec![0.0, 0.6, 0.0], vec![0.6, 0.0, 0.6], vec![0.0, 0.6, 0.0]]).unwrap();
        let f = extract_features(&three, &m, 500.0).unwrap();
        assert!(close(f.row(1)[4], 0.4));
        assert_eq!(f.row(3), [5000.0, 5000.0, 0.0, 0.0, 0.0]);

        assert!(matches!(extract_features(&one, &m, 500.0), Err(FusionError::Shape { expected: 1, got: 3 })));
    }

    #[test]
    fn rsu_demand_averages_covered_vehicles() {
        let s = snap(&[(0.0, 0.0, 0.0), (100.0, 0.0, 0.0), (2000.0, 0.0, 0.0)], &[(50.0, 0.0)]);
        let m = demand_matrix(&s, 300.0, 0.7).unwrap();
        let f = extract_features(&s, &m, 500.0).unwrap();
        assert!(close(f.demand(3), (f.demand(0) + f.demand(1)) / 2.0));
    }

    #[test]
    fn weight_examples() {
        assert_eq!(neighbor_weights(&[42.0], 0.01), vec![1.0]);
        assert_eq!(neighbor_weights(&[70.0, 70.0], 0.01), vec![0.5, 0.5]);
        let w = neighbor_weights(&[0.0, 100.0], 0.01);
        let e = (-1.0f64).exp();
        assert!(close(w[0], 1.0 / (1.0 + e)));
        assert!(close(w[1], e / (1.0 + e)));
        assert!((w[0] - 0.731).abs() < 5e-4 && (w[1] - 0.269).abs() < 5e-4);
        assert!(neighbor_weights(&[], 0.01).is_empty());
        let far = neighbor_weights(&[1e6, 1e6 + 1.0], 0.01);
        assert!(far.iter().all(|w| w.is_finite()));
    }

    #[test]
    fn pair_round_averages() {
        let f = FeatureMatrix::from_rows(&[[0.0, 0.0, 10.0, 1.0, 0.2], [100.0, 50.0, 20.0, 1.0, 0.6]], &[]);
        let nb = vec![vec![(1, 111.8)], vec![(0, 111.8)]];
        let p = FusionParams { self_weight_vehicle: 0.5, ..Default::default() };
        let out = fuse_step(&f, &nb, &p).unwrap();
        for i in 0..2 {
            let r = out.row(i);
            assert!(close(r[0], 50.0) && close(r[1], 25.0) && close(r[2], 15.0) && close(r[4], 0.4));
            assert!(close(r[3], 1.0));
        }
    }

    #[test]
    fn identity_and_isolation() {
        let s = snap(&[(0.0, 0.0, 0.3), (100.0, 0.0, 1.0), (5000.0, 0.0, 2.0)], &[(50.0, 50.0)]);
        let m = demand_matrix(&s, 300.0, 0.7).unwrap();
        let f = extract_features(&s, &m, 500.0).unwrap();
        let nb = candidate_links(&s, &NetworkParams::default()).neighborhoods(&s);
        let frozen = FusionParams { self_weight_vehicle: 1.0, self_weight_rsu: 1.0, ..Default::default() };
        let out = run_fusion(f.clone(), &nb, &frozen).unwrap();
        assert_eq!(out.features, f);
        assert_eq!(out.rounds_used, 1);
        assert!(out.converged);

        let moved = fuse_step(&f, &nb, &FusionParams::default()).unwrap();
        assert_eq!(moved.row(2), f.row(2));
        assert!(run_fusion(f.clone(), &nb[..2], &FusionParams::default()).is_err());
    }

    #[test]
    fn single_round_bound() {
        let s = snap(&[(0.0, 0.0, 0.0), (200.0, 0.0, 0.0)], &[]);
        let f = extract_features(&s, &demand_matrix(&s, 300.0, 0.7).unwrap(), 500.0).unwrap();
        let nb = candidate_links(&s, &NetworkParams::default()).neighborhoods(&s);
        let p = FusionParams { max_rounds: 1, ..Default::default() };
        let out = run_fusion(f, &nb, &p).unwrap();
        assert_eq!(out.rounds_used, 1);
        assert_eq!(out.converged, out.max_changes[0] < p.epsilon);
        assert!(!out.converged);
    }

    #[test]
    fn shared_heading_survives_wrap() {
        let h = 2.0 * PI - 0.05;
        let s = snap(&[(0.0, 0.0, h), (80.0, 0.0, h), (160.0, 30.0, h)], &[(60.0, 60.0)]);
        let f = extract_features(&s, &demand_matrix(&s, 300.0, 0.7).unwrap(), 500.0).unwrap();
        let nb = candidate_links(&s, &NetworkParams::default()).neighborhoods(&s);
        let out = run_fusion(f, &nb, &FusionParams { epsilon: 1e-9, max_rounds: 50, ..Default::default() }).unwrap();
        for i in 0..3 {
            assert!((out.features.row(i)[3] - h).abs() < 1e-12);
        }
        assert!((out.features.row(3)[3] - h).abs() < 1e-12);
    }

    #[test]
    fn chain_matches_scalar_recurrence() {
        // five nodes 100 m apart on a line: only positions and demand differ
        let pts: Vec<(f64, f64, f64)> = (0..5).map(|i| (100.0 * i as f64, 0.0, 0.0)).collect();
        let s = snap(&pts, &[]);
        let f = extract_features(&s, &demand_matrix(&s, 300.0, 0.7).unwrap(), 500.0).unwrap();
        let nb: Vec<Vec<(usize, f64)>> = (0..5usize)
            .map(|i| {
                let mut v = Vec::new();
                if i > 0 {
                    v.push((i - 1, 100.0));
                }
                if i < 4 {
                    v.push((i + 1, 100.0));
                }
                v
            })
            .collect();
        let p = FusionParams { self_weight_vehicle: 0.5, epsilon: 1e-6, max_rounds: 10_000, ..Default::default() };
        let out = run_fusion(f.clone(), &nb, &p).unwrap();

        // scalar oracle: x' = 0.5 x + 0.5 mean(neighbours), per coordinate
        let mut xs: Vec<[f64; 6]> = (0..5).map(|i| f.embedded(i)).collect();
        let mut rounds = 0;
        loop {
            rounds += 1;
            let prev = xs.clone();
            let mut delta = 0.0f64;
            for i in 0..5 {
                let ns: Vec<usize> = nb[i].iter().map(|x| x.0).collect();
                let mut d2 = 0.0;
                for k in 0..6 {
                    let m = ns.iter().map(|&u| prev[u][k]).sum::<f64>() / ns.len() as f64;
                    xs[i][k] = 0.5 * prev[i][k] + 0.5 * m;
                    d2 += (xs[i][k] - prev[i][k]).powi(2);
                }
                delta = delta.max(d2.sqrt());
            }
            if delta < 1e-6 || rounds == 10_000 {
                break;
            }
        }
        assert_eq!(out.rounds_used, rounds);
        assert!(out.converged);
        for i in 0..5 {
            for k in 0..6 {
                assert!((out.features.embedded(i)[k] - xs[i][k]).abs() < 1e-9);
            }
        }
        for w in out.max_changes.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-9));
        }
    }
}
