//! The experiment: learning runs, detector generation, detection runs,
//! the C1/C2 verdict rules and the reported measures.
//!
//! Simulations are the expensive part, so an [`Experiment`] keeps the
//! window statistics of every run it has simulated and reuses them across
//! sweep cells that differ only in `r` or detector count.

pub mod config;
pub mod io;
pub mod report;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Mutex;

use rand::seq::IndexedRandom;
use rayon::prelude::*;

use crate::bitmatch::{genes_touched, BitString};
use crate::encoding::{calibrate_ranges, Antigen, GeneRanges, GENE_BITS};
use crate::error::{Error, Result};
use crate::genes::{accumulate, GeneVector, WindowStats};
use crate::negsel::{generate_detectors, DetectorSet, SelfSet};
use crate::netsim::{
    random_waypoint_snapshot, run_simulation, select_connections, Connection, FlowAccounting,
    MisbehaviorPlan, NodeId, Scenario, SimOutcome, Topology, Trace, TrafficModel, WaypointParams,
};
use crate::seed::{self, purpose};

pub use config::{Eligibility, ExperimentConfig};
pub use report::{GeneUsage, MetricsReport};

/// What stays fixed across all runs of an experiment.
#[derive(Clone, Debug)]
pub struct Setup {
    pub topology: Topology,
    pub endpoints: Vec<(NodeId, NodeId)>,
    /// Nodes that misbehave in every misbehavior run.
    pub misbehaving: BTreeSet<NodeId>,
}

impl Setup {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let t = &cfg.topology;
        let topology = random_waypoint_snapshot(
            t.nodes,
            t.width,
            t.height,
            t.radius,
            &WaypointParams::default(),
            seed::derive(cfg.seed, &[purpose::TOPOLOGY]),
        )?;
        let c = &cfg.connections;
        let endpoints = select_connections(
            &topology,
            c.count,
            c.min_hops,
            c.max_hops,
            seed::derive(cfg.seed, &[purpose::CONNECTIONS]),
        )?;
        let ends: BTreeSet<NodeId> = endpoints.iter().flat_map(|&(s, d)| [s, d]).collect();
        let pool: Vec<NodeId> = (0..t.nodes as NodeId).filter(|v| !ends.contains(v)).collect();
        let mut rng = seed::rng(seed::derive(cfg.seed, &[purpose::MISBEHAVIOR]));
        let misbehaving = pool
            .choose_multiple(&mut rng, cfg.misbehavior.count)
            .copied()
            .collect();
        Ok(Setup { topology, endpoints, misbehaving })
    }

    pub fn connections(&self, cfg: &ExperimentConfig, traffic: TrafficModel) -> Vec<Connection> {
        self.endpoints
            .iter()
            .map(|&(src, dst)| Connection {
                src,
                dst,
                model: traffic,
                rate: cfg.connections.rate,
                packet_size: cfg.connections.packet_size,
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    Learning,
    Detection,
}

fn traffic_tag(t: TrafficModel) -> u64 {
    match t {
        TrafficModel::Cbr => 0,
        TrafficModel::Poisson => 1,
    }
}

/// The scenario of one run. Detection runs share their seeds across
/// misbehavior levels, so levels differ only in the plan.
pub fn scenario(
    cfg: &ExperimentConfig,
    setup: &Setup,
    traffic: TrafficModel,
    level: f64,
    phase: Phase,
    run: u32,
) -> Result<Scenario> {
    let p = match phase {
        Phase::Learning => purpose::LEARNING_RUN,
        Phase::Detection => purpose::DETECTION_RUN,
    };
    let seed = seed::derive(cfg.seed, &[p, traffic_tag(traffic), run as u64]);
    let mut sc = Scenario::new(
        setup.topology.clone(),
        setup.connections(cfg, traffic),
        cfg.simulation.duration,
        seed,
    );
    sc.config = cfg.sim_config();
    if phase == Phase::Detection && level > 0.0 {
        sc.plan = MisbehaviorPlan::new(setup.misbehaving.iter().copied(), level)?;
    }
    Ok(sc)
}

/// Network-wide figures of one run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunSummary {
    pub run: u32,
    pub accounting: FlowAccounting,
    pub contention: f64,
}

/// Window statistics of one run; the trace itself is not kept.
#[derive(Clone, Debug)]
pub struct RunStats {
    pub run: u32,
    /// `[node][window]`.
    pub windows: Vec<Vec<WindowStats>>,
    pub accounting: FlowAccounting,
    pub conserved: bool,
    pub contention: f64,
}

impl RunStats {
    pub fn from_outcome(out: &SimOutcome, run: u32, cfg: &ExperimentConfig) -> Result<Self> {
        Ok(RunStats {
            accounting: out.total,
            conserved: out.total.is_conserved() && out.flows.iter().all(|f| f.is_conserved()),
            contention: out.network_contention(),
            ..Self::from_trace(&out.trace, run, cfg)?
        })
    }

    /// Window statistics of a stored trace. Flow accounting and contention
    /// are not recorded in traces and come back zero and NaN.
    pub fn from_trace(trace: &Trace, run: u32, cfg: &ExperimentConfig) -> Result<Self> {
        let windows = accumulate(trace, cfg.topology.nodes, cfg.simulation.duration, cfg.simulation.window)?;
        Ok(RunStats { run, windows, accounting: FlowAccounting::default(), conserved: true, contention: f64::NAN })
    }

    pub fn summary(&self) -> RunSummary {
        RunSummary { run: self.run, accounting: self.accounting, contention: self.contention }
    }

    /// Data packets `node` got acknowledged over the whole run.
    pub fn forwarded(&self, node: NodeId) -> u64 {
        self.windows[node as usize].iter().map(|w| w.data_packets_forwarded_by_self).sum()
    }
}

pub fn simulate_stats(
    cfg: &ExperimentConfig,
    setup: &Setup,
    traffic: TrafficModel,
    level: f64,
    phase: Phase,
    run: u32,
) -> Result<RunStats> {
    let sc = scenario(cfg, setup, traffic, level, phase, run)?;
    let out = run_simulation(&sc)?;
    RunStats::from_outcome(&out, run, cfg)
}

/// Per-node outcome of the learning phase.
#[derive(Clone, Debug)]
pub struct NodeModel {
    pub node: NodeId,
    pub ranges: GeneRanges,
    pub self_set: SelfSet,
    /// Mean data packets forwarded per learning run.
    pub forwarded_mean: f64,
}

/// Ranges and self sets from misbehavior-free runs.
pub fn learn_from_stats(runs: &[RunStats]) -> Result<Vec<NodeModel>> {
    if runs.is_empty() {
        return Err(Error::EmptySamples);
    }
    let nodes = runs[0].windows.len();
    (0..nodes as NodeId)
        .map(|v| {
            let vectors: Vec<GeneVector> = runs
                .iter()
                .flat_map(|r| r.windows[v as usize].iter().map(move |w| GeneVector::from_stats(w, r.run)))
                .collect();
            let samples: Vec<_> = vectors.iter().map(|g| g.genes).collect();
            let ranges = calibrate_ranges(&samples)?;
            let mut self_set = SelfSet::for_antigens(v);
            for g in &vectors {
                self_set.push(Antigen::build(&g.genes, &ranges, v, g.window, g.run)?)?;
            }
            let forwarded_mean =
                runs.iter().map(|r| r.forwarded(v) as f64).sum::<f64>() / runs.len() as f64;
            Ok(NodeModel { node: v, ranges, self_set, forwarded_mean })
        })
        .collect()
}

/// Simulate the learning runs and learn from them.
pub fn learning_phase(cfg: &ExperimentConfig, setup: &Setup, traffic: TrafficModel) -> Result<Vec<NodeModel>> {
    let runs: Vec<RunStats> = (0..cfg.runs.learning)
        .into_par_iter()
        .map(|run| simulate_stats(cfg, setup, traffic, 0.0, Phase::Learning, run))
        .collect::<Result<_>>()?;
    learn_from_stats(&runs)
}

/// One detector set per node, each censored against that node's self set.
pub fn generate_all(
    models: &[NodeModel],
    count: usize,
    r: usize,
    seed: u64,
    budget: u64,
) -> Result<Vec<DetectorSet>> {
    models
        .par_iter()
        .map(|m| {
            let s = seed::derive(seed, &[purpose::DETECTORS, m.node as u64, r as u64]);
            generate_detectors(&m.self_set, count, r, s, budget)
        })
        .collect()
}

/// The detector sets an experiment uses for `traffic`; sets of different
/// sizes at the same `r` share their leading detectors.
pub fn detectors_for(
    cfg: &ExperimentConfig,
    models: &[NodeModel],
    traffic: TrafficModel,
    r: usize,
    count: usize,
) -> Result<Vec<DetectorSet>> {
    let s = seed::derive(cfg.seed, &[traffic_tag(traffic)]);
    generate_all(models, count, r, s, cfg.ais.budget)
}

/// Detection result for one node in one window.
#[derive(Clone, Debug)]
pub struct WindowFlag {
    pub antigen: Antigen,
    /// First matching detector, if any.
    pub detector: Option<u32>,
}

#[derive(Clone, Debug)]
pub struct RunDetection {
    pub run: u32,
    /// `[node][window]`.
    pub flags: Vec<Vec<WindowFlag>>,
}

/// Encode every (node, window) of each run and test it against the node's
/// detectors (first-match semantics; usage counters are updated).
pub fn detection_phase(
    models: &[NodeModel],
    detectors: &mut [DetectorSet],
    runs: &[RunStats],
) -> Result<Vec<RunDetection>> {
    runs.iter()
        .map(|rs| {
            let flags = models
                .iter()
                .zip(detectors.iter_mut())
                .map(|(m, ds)| {
                    rs.windows[m.node as usize]
                        .iter()
                        .map(|w| {
                            let g = GeneVector::from_stats(w, rs.run);
                            let antigen = Antigen::build(&g.genes, &m.ranges, m.node, w.window, rs.run)?;
                            let detector = ds.detect(&antigen);
                            Ok(WindowFlag { antigen, detector })
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(RunDetection { run: rs.run, flags })
        })
        .collect()
}

/// C2: judged only if the mean forwarded load reaches `m` both without and
/// with misbehavior.
pub fn c2_eligible(normal_mean: f64, misbehavior_mean: f64, m: f64) -> bool {
    normal_mean >= m && misbehavior_mean >= m
}

/// C1 applied on top of C2.
pub fn c1_flagged(eligible: bool, windows_flagged: u32, threshold: u32) -> bool {
    eligible && windows_flagged >= threshold
}

/// The next hop a flagged window at a monitor is blamed on: a misbehaving
/// next hop if the monitor handed data to one (ground truth, scoring only),
/// otherwise the next hop that received the most data.
pub fn attribute(ws: &WindowStats, misbehaving: &BTreeSet<NodeId>) -> Option<NodeId> {
    let culprit = ws
        .per_next_hop
        .iter()
        .filter(|(h, l)| l.data_sent > 0 && misbehaving.contains(h))
        .max_by(|a, b| a.1.data_sent.cmp(&b.1.data_sent).then(b.0.cmp(a.0)))
        .map(|(&h, _)| h);
    culprit.or_else(|| ws.busiest_next_hop())
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodeVerdict {
    pub node: NodeId,
    pub run: u32,
    pub windows_flagged: u32,
    /// Data packets forwarded in this detection run.
    pub packets_forwarded: f64,
    /// Mean per learning run.
    pub packets_forwarded_normal: f64,
    pub eligible: bool,
    pub flagged: bool,
    pub ground_truth_misbehaving: bool,
}

/// Verdicts for every node in every detection run.
///
/// A flagged window at an eligible monitor counts against the next hop it
/// is attributed to; a node's flagged windows are the union over its
/// monitors.
pub fn classify_nodes(
    cfg: &ExperimentConfig,
    models: &[NodeModel],
    runs: &[RunStats],
    detections: &[RunDetection],
    misbehaving: &BTreeSet<NodeId>,
) -> Vec<Vec<NodeVerdict>> {
    let m = cfg.thresholds.packets;
    let threshold = cfg.window_threshold();
    let detect_mean: Vec<f64> = models
        .iter()
        .map(|nm| runs.iter().map(|r| r.forwarded(nm.node) as f64).sum::<f64>() / runs.len() as f64)
        .collect();
    runs.iter()
        .zip(detections)
        .map(|(rs, det)| {
            let eligible: Vec<bool> = models
                .iter()
                .map(|nm| {
                    let load = match cfg.thresholds.eligibility {
                        Eligibility::PerRun => rs.forwarded(nm.node) as f64,
                        Eligibility::RunMean => detect_mean[nm.node as usize],
                    };
                    c2_eligible(nm.forwarded_mean, load, m)
                })
                .collect();
            let mut blamed: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); models.len()];
            for (monitor, flags) in det.flags.iter().enumerate() {
                if !eligible[monitor] {
                    continue;
                }
                for (f, ws) in flags.iter().zip(&rs.windows[monitor]) {
                    if f.detector.is_none() {
                        continue;
                    }
                    if let Some(s) = attribute(ws, misbehaving) {
                        blamed[s as usize].insert(ws.window);
                    }
                }
            }
            models
                .iter()
                .map(|nm| {
                    let v = nm.node as usize;
                    let windows_flagged = blamed[v].len() as u32;
                    NodeVerdict {
                        node: nm.node,
                        run: rs.run,
                        windows_flagged,
                        packets_forwarded: rs.forwarded(nm.node) as f64,
                        packets_forwarded_normal: nm.forwarded_mean,
                        eligible: eligible[v],
                        flagged: c1_flagged(eligible[v], windows_flagged, threshold),
                        ground_truth_misbehaving: misbehaving.contains(&nm.node),
                    }
                })
                .collect()
        })
        .collect()
}

/// Per-gene counts over the exhaustive match spans of `pairs`.
pub fn gene_usage_analysis<'a>(
    pairs: impl IntoIterator<Item = (&'a BitString, &'a BitString)>,
    r: usize,
) -> Result<GeneUsage> {
    let mut usage = GeneUsage::default();
    for (antigen, detector) in pairs {
        for span in crate::bitmatch::all_match_spans(antigen, detector, r)? {
            usage.add_span(&genes_touched(span, GENE_BITS));
        }
    }
    Ok(usage)
}

/// Identifies one sweep cell.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Cell {
    pub traffic: TrafficModel,
    pub level: f64,
    pub r: usize,
    pub detectors: usize,
}

/// Everything one cell produced.
#[derive(Clone, Debug)]
pub struct CellOutcome {
    pub cell: Cell,
    pub report: MetricsReport,
    pub verdicts: Vec<Vec<NodeVerdict>>,
    pub detections: Vec<RunDetection>,
    pub detector_sets: Vec<DetectorSet>,
    pub runs: Vec<RunStats>,
}

type RunKey = (TrafficModel, u64, Phase, u32);

/// An experiment with memoized simulations, learning results and detector
/// sets.
pub struct Experiment {
    pub cfg: ExperimentConfig,
    pub setup: Setup,
    runs: Mutex<HashMap<RunKey, RunStats>>,
    models: Mutex<HashMap<TrafficModel, Vec<NodeModel>>>,
}

impl Experiment {
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let setup = Setup::new(&cfg)?;
        Ok(Experiment { cfg, setup, runs: Mutex::new(HashMap::new()), models: Mutex::new(HashMap::new()) })
    }

    fn key(traffic: TrafficModel, level: f64, phase: Phase, run: u32) -> RunKey {
        let level = if phase == Phase::Learning { 0.0 } else { level };
        (traffic, level.to_bits(), phase, run)
    }

    /// Simulate, in parallel, every run the given cells need.
    pub fn prepare(&self, traffics: &[TrafficModel], levels: &[f64]) -> Result<()> {
        let mut todo: Vec<(TrafficModel, f64, Phase, u32)> = Vec::new();
        for &t in traffics {
            todo.extend((0..self.cfg.runs.learning).map(|r| (t, 0.0, Phase::Learning, r)));
            for &l in levels {
                todo.extend((0..self.cfg.runs.detection).map(|r| (t, l, Phase::Detection, r)));
            }
        }
        {
            let have = self.runs.lock().unwrap();
            todo.retain(|&(t, l, p, r)| !have.contains_key(&Self::key(t, l, p, r)));
        }
        todo.dedup_by(|a, b| Self::key(a.0, a.1, a.2, a.3) == Self::key(b.0, b.1, b.2, b.3));
        let done: Vec<(RunKey, RunStats)> = todo
            .into_par_iter()
            .map(|(t, l, p, r)| {
                simulate_stats(&self.cfg, &self.setup, t, l, p, r).map(|s| (Self::key(t, l, p, r), s))
            })
            .collect::<Result<_>>()?;
        self.runs.lock().unwrap().extend(done);
        Ok(())
    }

    pub fn run_stats(&self, traffic: TrafficModel, level: f64, phase: Phase) -> Result<Vec<RunStats>> {
        let count = match phase {
            Phase::Learning => self.cfg.runs.learning,
            Phase::Detection => self.cfg.runs.detection,
        };
        let levels = if phase == Phase::Learning { vec![] } else { vec![level] };
        self.prepare(&[traffic], &levels)?;
        let have = self.runs.lock().unwrap();
        Ok((0..count).map(|r| have[&Self::key(traffic, level, phase, r)].clone()).collect())
    }

    pub fn models(&self, traffic: TrafficModel) -> Result<Vec<NodeModel>> {
        if let Some(m) = self.models.lock().unwrap().get(&traffic) {
            return Ok(m.clone());
        }
        let learned = learn_from_stats(&self.run_stats(traffic, 0.0, Phase::Learning)?)?;
        self.models.lock().unwrap().insert(traffic, learned.clone());
        Ok(learned)
    }

    pub fn detectors(&self, traffic: TrafficModel, r: usize, count: usize) -> Result<Vec<DetectorSet>> {
        detectors_for(&self.cfg, &self.models(traffic)?, traffic, r, count)
    }

    /// Run one cell end to end.
    pub fn cell(&self, cell: Cell) -> Result<CellOutcome> {
        let models = self.models(cell.traffic)?;
        let mut sets = self.detectors(cell.traffic, cell.r, cell.detectors)?;
        let runs = self.run_stats(cell.traffic, cell.level, Phase::Detection)?;
        let detections = detection_phase(&models, &mut sets, &runs)?;
        let misbehaving = if cell.level > 0.0 { self.setup.misbehaving.clone() } else { BTreeSet::new() };
        let verdicts = classify_nodes(&self.cfg, &models, &runs, &detections, &misbehaving);
        let summaries: Vec<RunSummary> = runs.iter().map(RunStats::summary).collect();
        let report = report::compute_metrics(cell, &models, &verdicts, &summaries, &detections, &sets)?;
        Ok(CellOutcome { cell, report, verdicts, detections, detector_sets: sets, runs })
    }

    pub fn cells(&self) -> Vec<Cell> {
        let s = &self.cfg.sweep;
        let mut out = Vec::new();
        for &traffic in &s.traffic {
            for &level in &s.levels {
                for &r in &s.r {
                    for &detectors in &s.detectors {
                        out.push(Cell { traffic, level, r, detectors });
                    }
                }
            }
        }
        out
    }

    /// Every cell of the configured grid, in grid order. A failing cell
    /// yields its error without stopping the others.
    pub fn sweep(&self) -> Result<Vec<(Cell, Result<MetricsReport>)>> {
        self.prepare(&self.cfg.sweep.traffic, &self.cfg.sweep.levels)?;
        Ok(self
            .cells()
            .into_par_iter()
            .map(|c| (c, self.cell(c).map(|o| o.report)))
            .collect())
    }
}

/// Distinct antigens in each node's windows of one run.
pub fn unique_antigens(flags: &[WindowFlag]) -> usize {
    flags.iter().map(|f| &f.antigen.bits).collect::<BTreeSet<_>>().len()
}

/// Per node of a run: distinct detectors that matched at least once.
pub fn detectors_used(det: &RunDetection) -> Vec<usize> {
    det.flags
        .iter()
        .map(|fl| fl.iter().filter_map(|f| f.detector).collect::<BTreeSet<_>>().len())
        .collect()
}

/// Gene-usage pairs for the flagged windows of `nodes`: each antigen with
/// every detector that matches it.
pub fn flagged_pairs<'a>(
    detections: &'a [RunDetection],
    sets: &'a [DetectorSet],
    nodes: &BTreeSet<NodeId>,
    r: usize,
) -> Vec<(&'a BitString, &'a BitString)> {
    let mut pairs = Vec::new();
    for det in detections {
        for &v in nodes {
            let ds = &sets[v as usize];
            for f in det.flags[v as usize].iter().filter(|f| f.detector.is_some()) {
                for d in &ds.detectors {
                    if crate::bitmatch::r_contiguous_match(&f.antigen.bits, &d.bits, r).unwrap_or(false) {
                        pairs.push((&f.antigen.bits, &d.bits));
                    }
                }
            }
        }
    }
    pairs
}

/// Per-node set of windows, for callers that only need the raw flags.
pub fn flagged_windows(det: &RunDetection) -> BTreeMap<NodeId, Vec<u32>> {
    det.flags
        .iter()
        .enumerate()
        .filter_map(|(v, fl)| {
            let w: Vec<u32> = fl.iter().filter(|f| f.detector.is_some()).map(|f| f.antigen.window).collect();
            (!w.is_empty()).then_some((v as NodeId, w))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c2_boundary_cases() {
        // 1250 packets without misbehavior, 750 with
        assert!(c2_eligible(1250.0, 750.0, 500.0));
        assert!(!c2_eligible(1250.0, 750.0, 1000.0));
        assert!(!c2_eligible(1250.0, 750.0, 2000.0));
    }

    #[test]
    fn c1_boundary_cases() {
        assert!(c1_flagged(true, 14, 14));
        assert!(!c1_flagged(true, 13, 14));
        assert!(!c1_flagged(false, 28, 14));
    }

    #[test]
    fn attribution_prefers_ground_truth() {
        let mut ws = WindowStats::default();
        ws.per_next_hop.entry(4).or_default().data_sent = 50;
        ws.per_next_hop.entry(7).or_default().data_sent = 10;
        assert_eq!(attribute(&ws, &BTreeSet::new()), Some(4));
        assert_eq!(attribute(&ws, &BTreeSet::from([7])), Some(7));
        assert_eq!(attribute(&WindowStats::default(), &BTreeSet::from([7])), None);
    }

    #[test]
    fn gene_usage_examples() {
        let a = BitString::with_ones(50, [0, 10, 20, 30, 40]).unwrap();
        // agreement exactly on bits 0..10
        let mut bits: Vec<bool> = (0..50).map(|i| !a.get(i)).collect();
        bits[..10].iter_mut().enumerate().for_each(|(i, b)| *b = a.get(i));
        let d = BitString::from_bits(&bits).unwrap();
        let u = gene_usage_analysis([(&a, &d)], 10).unwrap();
        assert_eq!(u.per_gene, [1, 0, 0, 0, 0]);
        assert_eq!((u.single, u.multiple), (1, 0));
        // agreement on bits 5..25
        let mut bits: Vec<bool> = (0..50).map(|i| !a.get(i)).collect();
        (5..25).for_each(|i| bits[i] = a.get(i));
        let d = BitString::from_bits(&bits).unwrap();
        let u = gene_usage_analysis([(&a, &d)], 10).unwrap();
        assert_eq!(u.per_gene, [1, 1, 1, 0, 0]);
        assert_eq!((u.single, u.multiple), (0, 1));
    }

    #[test]
    fn desk_scale_self_set_sizes() {
        // 2 runs x 7 windows per node
        let cfg = ExperimentConfig { runs: config::RunConfig { learning: 2, detection: 1 }, ..ExperimentConfig::desk() };
        let setup = Setup::new(&cfg).unwrap();
        let runs: Vec<RunStats> = (0..2)
            .map(|r| simulate_stats(&cfg, &setup, TrafficModel::Cbr, 0.0, Phase::Learning, r).unwrap())
            .collect();
        let models = learn_from_stats(&runs).unwrap();
        assert_eq!(models.len(), 100);
        assert!(models.iter().all(|m| m.self_set.len() == 14));
        assert!(setup.misbehaving.iter().all(|v| setup.endpoints.iter().all(|&(s, d)| s != *v && d != *v)));
        assert_eq!(setup.misbehaving.len(), cfg.misbehavior.count);
    }
}
