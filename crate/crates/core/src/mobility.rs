//! Vehicle and RSU state, network snapshots, the synthetic grid mobility
//! generator and RSU placement.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI, TAU};
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::MobilityError;

/// Opaque vehicle identifier (the trace or generator name).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VehicleId(pub String);

/// Opaque RSU identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RsuId(pub String);

impl fmt::Display for VehicleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for RsuId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for VehicleId {
    fn from(s: &str) -> Self {
        VehicleId(s.into())
    }
}

impl From<&str> for RsuId {
    fn from(s: &str) -> Self {
        RsuId(s.into())
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn normalize_heading(theta: f64) -> f64 {
    let mut h = theta % TAU;
    if h < 0.0 {
        h += TAU;
    }
    // -0.0 % TAU and tiny negatives can round up to exactly TAU
    if h >= TAU {
        h = 0.0;
    }
    h
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    pub id: VehicleId,
    pub x: f64,
    pub y: f64,
    /// m/s, never negative.
    pub speed: f64,
    /// Radians counterclockwise from east, in `[0, 2π)`.
    pub heading: f64,
}

impl VehicleState {
    pub fn new(
        id: impl Into<VehicleId>,
        x: f64,
        y: f64,
        speed: f64,
        heading: f64,
    ) -> Result<Self, MobilityError> {
        let id = id.into();
        if !(x.is_finite() && y.is_finite() && speed.is_finite() && heading.is_finite()) {
            return Err(MobilityError::InvalidState(format!("non-finite field for vehicle {id}")));
        }
        if speed < 0.0 {
            return Err(MobilityError::InvalidState(format!("negative speed {speed} for vehicle {id}")));
        }
        Ok(VehicleState { id, x, y, speed, heading: normalize_heading(heading) })
    }

    /// Velocity vector in m/s.
    pub fn velocity(&self) -> (f64, f64) {
        (self.speed * libm::cos(self.heading), self.speed * libm::sin(self.heading))
    }
}

impl From<String> for VehicleId {
    fn from(s: String) -> Self {
        VehicleId(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RsuNode {
    pub id: RsuId,
    pub x: f64,
    pub y: f64,
    /// B_RSU in Mbps.
    pub bandwidth_mbps: f64,
}

/// Axis-aligned scene rectangle in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneBounds {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl SceneBounds {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        SceneBounds { min_x, min_y, max_x, max_y }
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }
}

/// Positions of all vehicles and RSUs at one control step.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSnapshot {
    pub step: u64,
    pub step_s: f64,
    /// Sorted by id, ids unique.
    pub vehicles: Vec<VehicleState>,
    /// Sorted by id; identical for every snapshot of a run.
    pub rsus: Vec<RsuNode>,
}

impl NetworkSnapshot {
    /// Sorts vehicles and RSUs by id and rejects duplicate ids.
    pub fn new(
        step: u64,
        step_s: f64,
        mut vehicles: Vec<VehicleState>,
        mut rsus: Vec<RsuNode>,
    ) -> Result<Self, MobilityError> {
        if !(step_s > 0.0) {
            return Err(MobilityError::Config(format!("step duration must be positive, got {step_s}")));
        }
        vehicles.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = vehicles.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(MobilityError::DuplicateVehicle(w[0].id.clone()));
        }
        rsus.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = rsus.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(MobilityError::DuplicateRsu(w[0].id.clone()));
        }
        Ok(NetworkSnapshot { step, step_s, vehicles, rsus })
    }

    pub fn vehicle_count(&self) -> usize {
        self.vehicles.len()
    }

    pub fn rsu_count(&self) -> usize {
        self.rsus.len()
    }

    /// Vehicles then RSUs.
    pub fn node_count(&self) -> usize {
        self.vehicles.len() + self.rsus.len()
    }

    pub fn vehicle_index(&self, id: &VehicleId) -> Option<usize> {
        self.vehicles.binary_search_by(|v| v.id.cmp(id)).ok()
    }

    pub fn rsu_index(&self, id: &RsuId) -> Option<usize> {
        self.rsus.binary_search_by(|r| r.id.cmp(id)).ok()
    }

    /// Planar position of node `idx` in vehicles-then-RSUs order.
    pub fn node_position(&self, idx: usize) -> (f64, f64) {
        let n = self.vehicles.len();
        if idx < n {
            (self.vehicles[idx].x, self.vehicles[idx].y)
        } else {
            let r = &self.rsus[idx - n];
            (r.x, r.y)
        }
    }

    pub fn node_distance(&self, a: usize, b: usize) -> f64 {
        let (ax, ay) = self.node_position(a);
        let (bx, by) = self.node_position(b);
        libm::hypot(ax - bx, ay - by)
    }
}

/// Replaces the RSU set of every snapshot.
pub fn attach_rsus(snapshots: &mut [NetworkSnapshot], rsus: &[RsuNode]) {
    let mut sorted: Vec<RsuNode> = rsus.to_vec();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    for s in snapshots {
        s.rsus = sorted.clone();
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default, deny_unknown_fields))]
pub struct SyntheticMobilityConfig {
    /// Intersections along x.
    pub grid_cols: usize,
    /// Intersections along y.
    pub grid_rows: usize,
    /// Road segment length between adjacent intersections (m).
    pub block_m: f64,
    /// Lane speed limit (m/s).
    pub speed_limit_mps: f64,
    /// Per-vehicle desired speed drawn uniformly from
    /// `[min_speed_factor, 1] * speed_limit_mps`.
    pub min_speed_factor: f64,
    /// Mean vehicle arrivals per second at the grid boundary.
    pub spawn_rate: f64,
    /// When set, the arrival rate ramps linearly from `spawn_rate` at the
    /// first step to this value at the last step.
    pub spawn_rate_end: Option<f64>,
    /// Vehicles scattered on random road segments at step 0.
    pub initial_vehicles: usize,
    pub step_s: f64,
    #[cfg_attr(feature = "serde", serde(skip))]
    pub steps: usize,
    pub turn_left_prob: f64,
    pub turn_right_prob: f64,
    pub max_accel: f64,
    pub max_decel: f64,
    /// Bumper-to-bumper standstill gap kept behind a leader (m).
    pub min_gap_m: f64,
}

impl Default for SyntheticMobilityConfig {
    fn default() -> Self {
        SyntheticMobilityConfig {
            grid_cols: 4,
            grid_rows: 4,
            block_m: 300.0,
            speed_limit_mps: 13.9,
            min_speed_factor: 0.7,
            spawn_rate: 0.5,
            spawn_rate_end: None,
            initial_vehicles: 0,
            step_s: 1.0,
            steps: 500,
            turn_left_prob: 0.2,
            turn_right_prob: 0.2,
            max_accel: 2.6,
            max_decel: 4.5,
            min_gap_m: 7.5,
        }
    }
}

impl SyntheticMobilityConfig {
    pub fn bounds(&self) -> SceneBounds {
        SceneBounds::new(
            0.0,
            0.0,
            (self.grid_cols.saturating_sub(1)) as f64 * self.block_m,
            (self.grid_rows.saturating_sub(1)) as f64 * self.block_m,
        )
    }

    pub fn validate(&self) -> Result<(), MobilityError> {
        if self.grid_cols < 2 || self.grid_rows < 2 || !(self.block_m > 0.0) {
            return Err(MobilityError::Config(format!(
                "grid {}x{} with block {} m has zero area",
                self.grid_cols, self.grid_rows, self.block_m
            )));
        }
        if !(self.step_s > 0.0) {
            return Err(MobilityError::Config(format!("step duration must be positive, got {}", self.step_s)));
        }
        if !(self.speed_limit_mps > 0.0) {
            return Err(MobilityError::Config("speed limit must be positive".into()));
        }
        if !(self.min_speed_factor > 0.0 && self.min_speed_factor <= 1.0) {
            return Err(MobilityError::Config("min_speed_factor must lie in (0, 1]".into()));
        }
        let rates_ok = self.spawn_rate >= 0.0
            && self.spawn_rate.is_finite()
            && self.spawn_rate_end.map_or(true, |r| r >= 0.0 && r.is_finite());
        if !rates_ok {
            return Err(MobilityError::Config("spawn rate must be finite and non-negative".into()));
        }
        let turns = self.turn_left_prob + self.turn_right_prob;
        if self.turn_left_prob < 0.0 || self.turn_right_prob < 0.0 || turns > 1.0 {
            return Err(MobilityError::Config("turn probabilities must be non-negative and sum to at most 1".into()));
        }
        if !(self.max_accel > 0.0 && self.max_decel > 0.0 && self.min_gap_m >= 0.0) {
            return Err(MobilityError::Config("acceleration limits must be positive".into()));
        }
        Ok(())
    }

    fn rate_at(&self, step: usize) -> f64 {
        match self.spawn_rate_end {
            Some(end) if self.steps > 1 => {
                let f = step as f64 / (self.steps - 1) as f64;
                self.spawn_rate + (end - self.spawn_rate) * f
            }
            _ => self.spawn_rate,
        }
    }
}

// Grid directions, counterclockwise from east.
const DIRS: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];
const CAR_LENGTH_M: f64 = 5.0;

#[derive(Debug, Clone)]
struct SimVehicle {
    id: usize,
    // from-intersection and direction index
    col: i64,
    row: i64,
    dir: usize,
    offset: f64,
    speed: f64,
    desired: f64,
}

struct Grid<'a> {
    cfg: &'a SyntheticMobilityConfig,
}

impl Grid<'_> {
    fn inside(&self, col: i64, row: i64) -> bool {
        col >= 0 && row >= 0 && (col as usize) < self.cfg.grid_cols && (row as usize) < self.cfg.grid_rows
    }

    fn edge_exists(&self, col: i64, row: i64, dir: usize) -> bool {
        let (dx, dy) = DIRS[dir];
        self.inside(col, row) && self.inside(col + dx, row + dy)
    }

    fn position(&self, v: &SimVehicle) -> (f64, f64) {
        let (dx, dy) = DIRS[v.dir];
        let b = self.cfg.block_m;
        (v.col as f64 * b + dx as f64 * v.offset, v.row as f64 * b + dy as f64 * v.offset)
    }

    /// Boundary entry points: (col, row, inward dir).
    fn entries(&self) -> Vec<(i64, i64, usize)> {
        let (c, r) = (self.cfg.grid_cols as i64, self.cfg.grid_rows as i64);
        let mut out = Vec::new();
        for row in 0..r {
            out.push((0, row, 0));
            out.push((c - 1, row, 2));
        }
        for col in 0..c {
            out.push((col, 0, 1));
            out.push((col, r - 1, 3));
        }
        out
    }

    fn edges(&self) -> Vec<(i64, i64, usize)> {
        let mut out = Vec::new();
        for row in 0..self.cfg.grid_rows as i64 {
            for col in 0..self.cfg.grid_cols as i64 {
                for dir in 0..4 {
                    if self.edge_exists(col, row, dir) {
                        out.push((col, row, dir));
                    }
                }
            }
        }
        out
    }
}

fn vehicle_name(id: usize) -> VehicleId {
    VehicleId(format!("veh{id:05}"))
}

/// Generates a deterministic mobility trace on a Manhattan grid.
///
/// Vehicles enter at boundary intersections according to a Poisson arrival
/// process, follow road segments with bounded acceleration and a simple
/// leader-gap rule, pick straight/left/right at every intersection, and
/// leave the scene when their chosen exit points off the grid. Snapshots
/// carry no RSUs; see [`attach_rsus`].
pub fn generate_synthetic(config: &SyntheticMobilityConfig, seed: u64) -> Result<Vec<NetworkSnapshot>, MobilityError> {
    config.validate()?;
    let grid = Grid { cfg: config };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries = grid.entries();
    let edges = grid.edges();
    let dt = config.step_s;
    let block = config.block_m;
    let draw_desired = |rng: &mut ChaCha8Rng| {
        config.speed_limit_mps * rng.random_range(config.min_speed_factor..=1.0)
    };

    let mut next_id = 0usize;
    let mut fleet: Vec<SimVehicle> = Vec::new();
    for _ in 0..config.initial_vehicles {
        let (col, row, dir) = edges[rng.random_range(0..edges.len())];
        let desired = draw_desired(&mut rng);
        fleet.push(SimVehicle {
            id: next_id,
            col,
            row,
            dir,
            offset: rng.random_range(0.0..block),
            speed: desired,
            desired,
        });
        next_id += 1;
    }

    let mut out = Vec::with_capacity(config.steps);
    for step in 0..config.steps {
        if step > 0 {
            advance(&grid, &mut fleet, dt, &mut rng);
        }
        // arrivals
        let lambda = config.rate_at(step) * dt;
        if lambda > 0.0 {
            let arrivals = Poisson::new(lambda).map(|p| p.sample(&mut rng) as usize).unwrap_or(0);
            for _ in 0..arrivals {
                let (col, row, dir) = entries[rng.random_range(0..entries.len())];
                let blocked = fleet.iter().any(|v| {
                    v.col == col && v.row == row && v.dir == dir && v.offset < CAR_LENGTH_M + config.min_gap_m
                });
                let desired = draw_desired(&mut rng);
                if blocked {
                    continue;
                }
                fleet.push(SimVehicle { id: next_id, col, row, dir, offset: 0.0, speed: desired * 0.5, desired });
                next_id += 1;
            }
        }
        let mut vehicles = Vec::with_capacity(fleet.len());
        for v in &fleet {
            let (x, y) = grid.position(v);
            vehicles.push(VehicleState {
                id: vehicle_name(v.id),
                x,
                y,
                speed: v.speed,
                heading: v.dir as f64 * FRAC_PI_2,
            });
        }
        out.push(NetworkSnapshot::new(step as u64, dt, vehicles, Vec::new())?);
    }
    Ok(out)
}

fn advance(grid: &Grid<'_>, fleet: &mut Vec<SimVehicle>, dt: f64, rng: &mut ChaCha8Rng) {
    let cfg = grid.cfg;
    let block = cfg.block_m;
    // leader gaps from the pre-move state
    let gaps: Vec<f64> = fleet
        .iter()
        .map(|v| {
            fleet
                .iter()
                .filter(|o| o.id != v.id && o.col == v.col && o.row == v.row && o.dir == v.dir && o.offset > v.offset)
                .map(|o| o.offset - v.offset - CAR_LENGTH_M)
                .fold(f64::INFINITY, f64::min)
        })
        .collect();

    let mut departed = BTreeSet::new();
    for (v, gap) in fleet.iter_mut().zip(gaps) {
        let safe = ((gap - cfg.min_gap_m) / dt).max(0.0);
        let target = v.desired.min(cfg.speed_limit_mps).min(safe);
        let new_speed = target
            .max(v.speed - cfg.max_decel * dt)
            .min(v.speed + cfg.max_accel * dt)
            .clamp(0.0, cfg.speed_limit_mps);
        // bounded deceleration cannot always honour the gap; never drive into the leader
        let travel = (new_speed * dt).min(gap.max(0.0));
        v.speed = new_speed;
        v.offset += travel;
        while v.offset >= block {
            let leftover = v.offset - block;
            let (dx, dy) = DIRS[v.dir];
            let (ncol, nrow) = (v.col + dx, v.row + dy);
            let u: f64 = rng.random();
            let turn = if u < cfg.turn_left_prob {
                1
            } else if u < cfg.turn_left_prob + cfg.turn_right_prob {
                3
            } else {
                0
            };
            let ndir = (v.dir + turn) % 4;
            if !grid.edge_exists(ncol, nrow, ndir) {
                departed.insert(v.id);
                break;
            }
            v.col = ncol;
            v.row = nrow;
            v.dir = ndir;
            v.offset = leftover;
        }
    }
    fleet.retain(|v| !departed.contains(&v.id));
}

/// RSU layout strategy.
#[derive(Debug, Clone, PartialEq)]
pub enum RsuPlacement {
    /// Cell-centred layout on a near-square grid of `count` cells.
    Grid { count: usize, coverage_m: f64 },
    /// Explicit coordinates, echoed in order.
    Manual(Vec<(f64, f64)>),
}

/// Places RSUs in the scene. Ids are `rsu00`, `rsu01`, ... in layout order.
pub fn place_rsus(
    bounds: &SceneBounds,
    placement: &RsuPlacement,
    bandwidth_mbps: f64,
) -> Result<Vec<RsuNode>, MobilityError> {
    let make = |i: usize, x: f64, y: f64| RsuNode { id: RsuId(format!("rsu{i:02}")), x, y, bandwidth_mbps };
    if !(bandwidth_mbps > 0.0) {
        return Err(MobilityError::Placement(format!("RSU bandwidth must be positive, got {bandwidth_mbps}")));
    }
    match placement {
        RsuPlacement::Manual(points) => points
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| {
                if bounds.contains(x, y) {
                    Ok(make(i, x, y))
                } else {
                    Err(MobilityError::Placement(format!("RSU at ({x}, {y}) lies outside the scene")))
                }
            })
            .collect(),
        RsuPlacement::Grid { count, coverage_m } => {
            let count = *count;
            if count == 0 {
                return Ok(Vec::new());
            }
            let cols = libm::ceil(libm::sqrt(count as f64)) as usize;
            let rows = count.div_ceil(cols);
            let sx = bounds.width() / cols as f64;
            let sy = bounds.height() / rows as f64;
            let coverage = *coverage_m;
            if (cols > 1 && sx > 2.0 * coverage) || (rows > 1 && sy > 2.0 * coverage) {
                return Err(MobilityError::Placement(format!(
                    "{count} RSUs with coverage {coverage} m cannot overlap across a {}x{} m scene",
                    bounds.width(),
                    bounds.height()
                )));
            }
            let mut out = Vec::with_capacity(count);
            for i in 0..count {
                let (c, r) = (i % cols, i / cols);
                out.push(make(i, bounds.min_x + (c as f64 + 0.5) * sx, bounds.min_y + (r as f64 + 0.5) * sy));
            }
            Ok(out)
        }
    }
}

/// Heading difference wrapped into `[0, π]`.
pub fn heading_gap(a: f64, b: f64) -> f64 {
    let d = libm::fabs(a - b) % TAU;
    if d > PI {
        TAU - d
    } else {
        d
    }
}
