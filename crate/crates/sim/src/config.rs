//! Experiment configuration, read from TOML. Every section is optional and
//! falls back to the reference scenario's values; unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use vanet_core::baselines::{BaselineKind, MotifParams};
use vanet_core::fusion::FusionParams;
use vanet_core::metrics::MetricsParams;
use vanet_core::mobility::{place_rsus, NetworkSnapshot, RsuNode, RsuPlacement, SceneBounds, SyntheticMobilityConfig};
use vanet_core::netgraph::NetworkParams;
use vanet_core::optimizer::{OptimizerParams, SolverParams};
use vanet_core::regulation::RegulationConfig;

use crate::error::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Hierarchical,
    Greedy,
    ShortestPath,
    Motif,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Hierarchical, Algorithm::Greedy, Algorithm::ShortestPath, Algorithm::Motif];

    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Hierarchical => "hierarchical",
            Algorithm::Greedy => "greedy",
            Algorithm::ShortestPath => "shortest_path",
            Algorithm::Motif => "motif",
        }
    }

    pub fn baseline(self) -> Option<BaselineKind> {
        match self {
            Algorithm::Hierarchical => None,
            Algorithm::Greedy => Some(BaselineKind::Greedy),
            Algorithm::ShortestPath => Some(BaselineKind::ShortestPath),
            Algorithm::Motif => Some(BaselineKind::Motif),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.label() == s)
            .ok_or_else(|| format!("unknown algorithm `{s}` (expected hierarchical, greedy, shortest_path or motif)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub steps: usize,
    /// Leading steps left out of summaries.
    pub warmup: usize,
    /// Urgent-traffic fraction per step, cycled when shorter than the run.
    pub q_urgent: Vec<f64>,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            algorithm: Algorithm::Hierarchical,
            seed: 42,
            steps: 500,
            warmup: 50,
            q_urgent: vec![0.5],
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn q_urgent_at(&self, step: usize) -> f64 {
        if self.q_urgent.is_empty() {
            0.5
        } else {
            self.q_urgent[step % self.q_urgent.len()]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// FCD XML or trace CSV; relative paths resolve against the config
    /// file's directory. When absent the synthetic grid is generated.
    pub trace: Option<PathBuf>,
    pub synthetic: SyntheticMobilityConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlacementKind {
    Grid,
    Manual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RsuConfig {
    pub placement: PlacementKind,
    pub count: usize,
    pub positions: Vec<[f64; 2]>,
    pub bandwidth_mbps: f64,
}

impl Default for RsuConfig {
    fn default() -> Self {
        RsuConfig { placement: PlacementKind::Grid, count: 4, positions: Vec::new(), bandwidth_mbps: 100.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub run: RunConfig,
    pub scenario: ScenarioConfig,
    pub rsu: RsuConfig,
    pub network: NetworkParams,
    pub metrics: MetricsParams,
    pub regulation: RegulationConfig,
    pub fusion: FusionParams,
    pub solver: SolverParams,
    pub motif: MotifParams,
    /// Directory that relative paths resolve against; not part of the file.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn check(ok: bool, message: impl FnOnce() -> String) -> Result<(), SimError> {
    if ok {
        Ok(())
    } else {
        Err(SimError::Config(message()))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| SimError::Config(e.message().trim().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Config(format!("{}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text).map_err(|e| match e {
            SimError::Config(m) => SimError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    pub fn optimizer_params(&self) -> OptimizerParams {
        OptimizerParams { network: self.network.clone(), metrics: self.metrics, solver: self.solver.clone() }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let run = &self.run;
        check(run.q_urgent.iter().all(|q| (0.0..=1.0).contains(q)), || "run.q_urgent values must lie in [0, 1]".into())?;
        let mut synthetic = self.scenario.synthetic.clone();
        synthetic.steps = run.steps;
        if self.scenario.trace.is_none() {
            synthetic.validate().map_err(|e| SimError::Config(format!("scenario.synthetic: {e}")))?;
        }

        let n = &self.network;
        check(n.v2v_range_m > 0.0 && n.v2i_range_m > 0.0, || "network ranges must be positive".into())?;
        check(n.max_v2v_degree >= 1 && n.max_v2i_degree >= 1, || "network degree caps must be at least 1".into())?;
        check((0.0..=1.0).contains(&n.alpha), || "network.alpha must lie in [0, 1]".into())?;
        check((0.0..=1.0).contains(&n.r_th), || "network.r_th must lie in [0, 1]".into())?;
        check(n.demand_d0_m > 0.0, || "network.demand_d0_m must be positive".into())?;
        check((0.0..=1.0).contains(&n.demand_threshold), || "network.demand_threshold must lie in [0, 1]".into())?;

        let m = &self.metrics;
        check(m.delay.k_v >= 0.0 && m.delay.k_i >= 0.0, || "metrics.delay queue factors must be non-negative".into())?;
        check(m.delay.tau_v_s >= 0.0 && m.delay.tau_i_s >= 0.0, || "metrics.delay service times must be non-negative".into())?;
        check(m.delay.packet_bits > 0.0, || "metrics.delay.packet_bits must be positive".into())?;
        check(
            (0.0..=1.0).contains(&m.throughput.eta_v) && (0.0..=1.0).contains(&m.throughput.eta_i),
            || "metrics.throughput efficiencies must lie in [0, 1]".into(),
        )?;
        check((0.0..=1.0).contains(&m.throughput.p_loss_per_hop), || "metrics.throughput.p_loss_per_hop must lie in [0, 1]".into())?;
        check(m.bandwidth.v2v_base_mbps > 0.0, || "metrics.bandwidth.v2v_base_mbps must be positive".into())?;

        self.regulation.validate().map_err(|e| SimError::Config(format!("regulation: {e}")))?;

        let f = &self.fusion;
        check(f.decay_per_m >= 0.0 && f.decay_per_m.is_finite(), || "fusion.decay_per_m must be non-negative".into())?;
        check(
            (0.0..=1.0).contains(&f.self_weight_vehicle) && (0.0..=1.0).contains(&f.self_weight_rsu),
            || "fusion self weights must lie in [0, 1]".into(),
        )?;
        check(f.max_rounds >= 1 && f.epsilon > 0.0, || "fusion.max_rounds must be at least 1 and epsilon positive".into())?;

        let s = &self.solver;
        check(s.xi > 0.0 && s.zeta >= 0.0 && s.q0 > 0.0, || "solver complexity constants must be positive".into())?;
        check(s.k_min >= 1, || "solver.k_min must be at least 1".into())?;
        check(
            s.lifetime_horizon_cycles >= s.lifetime_min_cycles,
            || "solver.lifetime_horizon_cycles must not be below lifetime_min_cycles".into(),
        )?;
        let w = &s.utility;
        check(
            [w.adaptability, w.demand, w.distance, w.v2i_adaptability].iter().all(|x| *x >= 0.0 && x.is_finite()),
            || "solver.utility weights must be non-negative".into(),
        )?;

        check(self.motif.window_steps >= 1, || "motif.window_steps must be at least 1".into())?;
        check(self.motif.heading_tolerance_rad > 0.0, || "motif.heading_tolerance_rad must be positive".into())?;

        check(self.rsu.bandwidth_mbps > 0.0, || "rsu.bandwidth_mbps must be positive".into())?;
        if self.scenario.trace.is_none() {
            self.rsus(&synthetic.bounds())?;
        }
        Ok(())
    }

    pub fn rsus(&self, bounds: &SceneBounds) -> Result<Vec<RsuNode>, SimError> {
        let placement = match self.rsu.placement {
            PlacementKind::Grid => RsuPlacement::Grid { count: self.rsu.count, coverage_m: self.network.v2i_range_m },
            PlacementKind::Manual => RsuPlacement::Manual(self.rsu.positions.iter().map(|p| (p[0], p[1])).collect()),
        };
        place_rsus(bounds, &placement, self.rsu.bandwidth_mbps).map_err(|e| SimError::Config(format!("rsu: {e}")))
    }

    pub fn trace_path(&self) -> Option<PathBuf> {
        self.scenario.trace.as_ref().map(|p| if p.is_absolute() { p.clone() } else { self.base_dir.join(p) })
    }

    /// Snapshots for the whole run, RSUs attached. Traces longer than
    /// `run.steps` are cut; shorter ones end the run early.
    pub fn snapshots(&self) -> Result<Vec<NetworkSnapshot>, SimError> {
        let (mut snaps, bounds) = match self.trace_path() {
            Some(path) => {
                let text = std::fs::read_to_string(&path).map_err(|e| SimError::io(&path, e))?;
                let mut snaps = crate::trace::parse_trace(&text, crate::trace::TraceFormat::from_path(&path))?;
                snaps.truncate(self.run.steps);
                let bounds = trace_bounds(&snaps);
                (snaps, bounds)
            }
            None => {
                let mut synthetic = self.scenario.synthetic.clone();
                synthetic.steps = self.run.steps;
                let snaps = vanet_core::mobility::generate_synthetic(&synthetic, self.run.seed)
                    .map_err(|e| SimError::Config(format!("scenario.synthetic: {e}")))?;
                (snaps, synthetic.bounds())
            }
        };
        let rsus = self.rsus(&bounds)?;
        vanet_core::mobility::attach_rsus(&mut snaps, &rsus);
        Ok(snaps)
    }
}

fn trace_bounds(snaps: &[NetworkSnapshot]) -> SceneBounds {
    let mut b = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for v in snaps.iter().flat_map(|s| &s.vehicles) {
        b = (b.0.min(v.x), b.1.min(v.y), b.2.max(v.x), b.3.max(v.y));
    }
    if b.0 > b.2 {
        return SceneBounds::new(0.0, 0.0, 0.0, 0.0);
    }
    SceneBounds::new(b.0, b.1, b.2, b.3)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_reference_setup() {
        let c = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(c.network.v2v_range_m, 300.0);
        assert_eq!(c.network.v2i_range_m, 500.0);
        assert_eq!(c.network.max_v2v_degree, 5);
        assert_eq!(c.network.max_v2i_degree, 10);
        assert_eq!(c.rsu.bandwidth_mbps, 100.0);
        assert_eq!(c.network.alpha, 0.7);
        assert_eq!(c.network.r_th, 0.7);
        assert_eq!(c.metrics.throughput.p_loss_per_hop, 0.03);
        assert_eq!(c.run.seed, 42);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(ExperimentConfig::from_toml("[run]\nsteps = 5\nspeed = 3\n"), Err(SimError::Config(_))));
        assert!(matches!(ExperimentConfig::from_toml("[nonsense]\n"), Err(SimError::Config(_))));
        assert!(matches!(ExperimentConfig::from_toml("[network]\nrange = 3\n"), Err(SimError::Config(_))));
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(ExperimentConfig::from_toml("[network]\nalpha = 1.5\n").is_err());
        assert!(ExperimentConfig::from_toml("[scenario.synthetic]\nstep_s = 0.0\n").is_err());
        assert!(ExperimentConfig::from_toml("[run]\nq_urgent = [0.2, 1.2]\n").is_err());
        assert!(ExperimentConfig::from_toml("[rsu]\nplacement = \"manual\"\npositions = [[-5.0, 0.0]]\n").is_err());
    }

    #[test]
    fn algorithm_names() {
        let c = ExperimentConfig::from_toml("[run]\nalgorithm = \"shortest_path\"\n").unwrap();
        assert_eq!(c.run.algorithm, Algorithm::ShortestPath);
        for a in Algorithm::ALL {
            assert_eq!(a.label().parse::<Algorithm>().unwrap(), a);
        }
        assert!("random".parse::<Algorithm>().is_err());
    }

    #[test]
    fn urgent_series_cycles() {
        let run = RunConfig { q_urgent: vec![0.1, 0.9], ..Default::default() };
        assert_eq!(run.q_urgent_at(0), 0.1);
        assert_eq!(run.q_urgent_at(3), 0.9);
    }
}
