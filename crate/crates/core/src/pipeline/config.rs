//! Declarative experiment description, read from TOML.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genes::complete_windows;
use crate::negsel::DEFAULT_BUDGET;
use crate::netsim::{MacParams, SimConfig, TrafficModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologyConfig {
    pub nodes: usize,
    pub width: f64,
    pub height: f64,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConnectionConfig {
    pub count: usize,
    pub min_hops: u32,
    pub max_hops: u32,
    pub traffic: TrafficModel,
    /// Packets per second.
    pub rate: f64,
    pub packet_size: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    /// Seconds.
    pub duration: f64,
    /// Seconds.
    pub window: f64,
    pub queue_capacity: usize,
    pub retry_cap: u32,
    pub backoff_base: f64,
    pub bitrate: f64,
    pub base_failure: f64,
    pub per_contender: f64,
    pub overhear_loss: bool,
    /// Upper bound of the keyed RREQ rebroadcast delay, seconds.
    pub rreq_jitter: f64,
    /// First route-discovery timeout, seconds; doubles per retry.
    pub rreq_timeout: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MisbehaviorConfig {
    /// Misbehaving nodes, drawn once among the non-endpoint nodes.
    pub count: usize,
    pub level: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AisConfig {
    pub r: usize,
    pub detectors: usize,
    /// Candidate budget per node.
    pub budget: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdConfig {
    /// Flagged windows needed to pronounce a node misbehaving; 0 means
    /// half the windows of a run, rounded up.
    pub windows: u32,
    /// Mean data packets a node must forward per run, in both normal and
    /// misbehavior runs, to be judged at all.
    pub packets: f64,
    pub eligibility: Eligibility,
}

/// How the misbehavior-side load of C2 is measured.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Eligibility {
    /// Packets forwarded in the detection run being judged.
    #[default]
    PerRun,
    /// Mean over all detection runs of the cell.
    RunMean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub learning: u32,
    pub detection: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub r: Vec<usize>,
    pub detectors: Vec<usize>,
    pub levels: Vec<f64>,
    pub traffic: Vec<TrafficModel>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub topology: TopologyConfig,
    pub connections: ConnectionConfig,
    pub simulation: SimulationConfig,
    pub misbehavior: MisbehaviorConfig,
    pub ais: AisConfig,
    pub thresholds: ThresholdConfig,
    pub runs: RunConfig,
    pub sweep: SweepConfig,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        TopologyConfig { nodes: 100, width: 1000.0, height: 1000.0, radius: 150.0 }
    }
}

impl Default for ConnectionConfig {
    fn default() -> Self {
        ConnectionConfig {
            count: 5,
            min_hops: 5,
            max_hops: 7,
            traffic: TrafficModel::Cbr,
            rate: 1.0,
            packet_size: 512,
        }
    }
}

impl Default for SimulationConfig {
    fn default() -> Self {
        let sim = SimConfig::default();
        let mac = sim.mac;
        SimulationConfig {
            duration: 3600.0,
            window: 500.0,
            queue_capacity: sim.queue_capacity,
            retry_cap: mac.retry_cap,
            backoff_base: mac.backoff_base,
            bitrate: mac.bitrate,
            base_failure: mac.base_failure,
            per_contender: mac.per_contender,
            overhear_loss: sim.overhear_loss,
            rreq_jitter: sim.rreq_jitter,
            rreq_timeout: sim.rreq_timeout,
        }
    }
}

impl Default for MisbehaviorConfig {
    fn default() -> Self {
        MisbehaviorConfig { count: 14, level: 0.3 }
    }
}

impl Default for AisConfig {
    fn default() -> Self {
        AisConfig { r: 10, detectors: 2000, budget: DEFAULT_BUDGET }
    }
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig { windows: 0, packets: 250.0, eligibility: Eligibility::PerRun }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { learning: 40, detection: 5 }
    }
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            r: vec![10],
            detectors: vec![2000],
            levels: vec![0.1, 0.3, 0.5],
            traffic: vec![TrafficModel::Cbr],
        }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl ExperimentConfig {
    /// 100 nodes, five connections, one hour per run.
    pub fn desk() -> Self {
        ExperimentConfig {
            seed: 1,
            topology: TopologyConfig::default(),
            connections: ConnectionConfig::default(),
            simulation: SimulationConfig::default(),
            misbehavior: MisbehaviorConfig::default(),
            ais: AisConfig::default(),
            thresholds: ThresholdConfig::default(),
            runs: RunConfig::default(),
            sweep: SweepConfig::default(),
        }
    }

    /// The full-size study: 1,718 nodes, ten connections, four-hour runs.
    pub fn full() -> Self {
        ExperimentConfig {
            topology: TopologyConfig { nodes: 1718, width: 2900.0, height: 2950.0, radius: 100.0 },
            connections: ConnectionConfig { count: 10, min_hops: 6, max_hops: 8, ..ConnectionConfig::default() },
            simulation: SimulationConfig { duration: 14_400.0, ..SimulationConfig::default() },
            misbehavior: MisbehaviorConfig { count: 236, level: 0.3 },
            thresholds: ThresholdConfig { windows: 14, packets: 1000.0, ..ThresholdConfig::default() },
            runs: RunConfig { learning: 20, detection: 20 },
            sweep: SweepConfig {
                r: vec![7, 10, 13, 16, 19, 22],
                detectors: vec![500, 1000, 2000, 4000],
                levels: vec![0.1, 0.3, 0.5],
                traffic: vec![TrafficModel::Cbr, TrafficModel::Poisson],
            },
            ..Self::desk()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "desk" => Ok(Self::desk()),
            "full" => Ok(Self::full()),
            other => Err(Error::Config(format!("unknown preset {other:?} (desk, full)"))),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn windows(&self) -> u32 {
        complete_windows(self.simulation.duration, self.simulation.window)
    }

    /// C1 threshold in windows per run.
    pub fn window_threshold(&self) -> u32 {
        if self.thresholds.windows == 0 {
            self.windows().div_ceil(2)
        } else {
            self.thresholds.windows
        }
    }

    pub fn sim_config(&self) -> SimConfig {
        let s = &self.simulation;
        SimConfig {
            mac: MacParams {
                base_failure: s.base_failure,
                per_contender: s.per_contender,
                retry_cap: s.retry_cap,
                backoff_base: s.backoff_base,
                bitrate: s.bitrate,
                ..MacParams::default()
            },
            queue_capacity: s.queue_capacity,
            overhear_loss: s.overhear_loss,
            rreq_jitter: s.rreq_jitter,
            rreq_timeout: s.rreq_timeout,
            rreq_timeout_max: s.rreq_timeout.max(SimConfig::default().rreq_timeout_max),
            ..SimConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let t = &self.topology;
        if t.nodes < 2 || !(t.width > 0.0 && t.height > 0.0 && t.radius > 0.0) {
            return bad("topology needs >= 2 nodes and a positive area and radius".into());
        }
        let c = &self.connections;
        if c.count == 0 || c.min_hops == 0 || c.min_hops > c.max_hops || !(c.rate > 0.0) {
            return bad("connections need count >= 1, 1 <= min_hops <= max_hops and rate > 0".into());
        }
        let s = &self.simulation;
        if !(s.duration > 0.0 && s.window > 0.0) || self.windows() == 0 {
            return bad("simulation must span at least one complete window".into());
        }
        if !(0.0..=1.0).contains(&s.base_failure) || !(0.0..=1.0).contains(&s.per_contender) {
            return bad("failure probabilities must lie in [0, 1]".into());
        }
        if !(s.bitrate > 0.0) || s.queue_capacity == 0 {
            return bad("bitrate and queue capacity must be positive".into());
        }
        let levels = std::iter::once(self.misbehavior.level).chain(self.sweep.levels.iter().copied());
        for l in levels {
            if !(0.0..=1.0).contains(&l) {
                return bad(format!("misbehavior level {l} outside [0, 1]"));
            }
        }
        if self.misbehavior.count + 2 * c.count > t.nodes {
            return bad("more misbehaving nodes than non-endpoint nodes".into());
        }
        for &r in std::iter::once(&self.ais.r).chain(&self.sweep.r) {
            if !(1..=crate::encoding::ANTIGEN_BITS).contains(&r) {
                return bad(format!("r = {r} outside 1..=50"));
            }
        }
        for &d in std::iter::once(&self.ais.detectors).chain(&self.sweep.detectors) {
            if d == 0 {
                return bad("detector count must be >= 1".into());
            }
        }
        if self.window_threshold() > self.windows() {
            return bad("window threshold exceeds the windows per run".into());
        }
        if self.runs.learning == 0 || self.runs.detection == 0 {
            return bad("need at least one learning and one detection run".into());
        }
        if self.sweep.r.is_empty()
            || self.sweep.detectors.is_empty()
            || self.sweep.levels.is_empty()
            || self.sweep.traffic.is_empty()
        {
            return bad("sweep axes must be nonempty".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_round_trip() {
        for cfg in [ExperimentConfig::desk(), ExperimentConfig::full()] {
            cfg.validate().unwrap();
            assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        }
        let desk = ExperimentConfig::desk();
        assert_eq!((desk.windows(), desk.window_threshold()), (7, 4));
        let full = ExperimentConfig::full();
        assert_eq!((full.windows(), full.window_threshold()), (28, 14));
    }

    #[test]
    fn partial_file_fills_defaults() {
        let cfg = ExperimentConfig::from_toml("seed = 9\n[ais]\nr = 13\n").unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.ais.r, 13);
        assert_eq!(cfg.ais.detectors, 2000);
        assert_eq!(cfg.topology.nodes, 100);
    }

    #[test]
    fn bad_files_are_config_errors() {
        for text in ["[ais]\nr = 0\n", "[nope]\nx = 1\n", "seed = \"x\"", "[sweep]\nlevels = [1.5]\n"] {
            assert!(matches!(ExperimentConfig::from_toml(text), Err(Error::Config(_))), "{text}");
        }
    }
}
