//! Whole-run properties of the simulator.

use proptest::prelude::*;
use wsn_ais::netsim::{
    random_waypoint_snapshot, run_simulation, select_connections, Connection, MisbehaviorPlan, Scenario, Trace,
    TrafficModel, WaypointParams,
};
use wsn_ais::pipeline::{scenario, ExperimentConfig, Phase, Setup};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]
    #[test]
    fn packets_are_conserved(seed in 0u64..10_000, level in 0.0..1.0f64, poisson: bool, rate in 0.5..4.0f64) {
        let topo = random_waypoint_snapshot(50, 600.0, 600.0, 130.0, &WaypointParams::default(), seed).unwrap();
        let pairs = select_connections(&topo, 3, 2, 6, seed + 1).unwrap_or_default();
        prop_assume!(!pairs.is_empty());
        let model = if poisson { TrafficModel::Poisson } else { TrafficModel::Cbr };
        let conns = pairs.iter().map(|&(src, dst)| Connection { src, dst, model, rate, packet_size: 512 }).collect();
        let mut sc = Scenario::new(topo, conns, 600.0, seed);
        if level > 0.0 {
            sc.plan = MisbehaviorPlan::new((0..50).step_by(7), level).unwrap();
        }
        let out = run_simulation(&sc).unwrap();
        prop_assert!(out.total.is_conserved(), "{:?}", out.total);
        for f in &out.flows {
            prop_assert!(f.is_conserved(), "{:?}", f);
        }
        prop_assert!(out.trace.is_clock_ordered());
    }
}

#[test]
fn desk_run_is_deterministic_and_trace_round_trips() {
    let cfg = ExperimentConfig::desk();
    let setup = Setup::new(&cfg).unwrap();
    let sc = scenario(&cfg, &setup, TrafficModel::Cbr, 0.3, Phase::Detection, 1).unwrap();
    let a = run_simulation(&sc).unwrap();
    let b = run_simulation(&sc).unwrap();
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.total, b.total);
    let mut buf = Vec::new();
    a.trace.write_to(&mut buf).unwrap();
    assert_eq!(Trace::read_from(&buf[..]).unwrap(), a.trace);
    // another run index differs
    let c = run_simulation(&scenario(&cfg, &setup, TrafficModel::Cbr, 0.3, Phase::Detection, 2).unwrap()).unwrap();
    assert_ne!(a.trace, c.trace);
}

#[test]
fn full_topology_is_mostly_connected() {
    let t = ExperimentConfig::full().topology;
    let topo =
        random_waypoint_snapshot(t.nodes, t.width, t.height, t.radius, &WaypointParams::default(), 1).unwrap();
    let giant = topo.components().iter().map(Vec::len).max().unwrap();
    assert!(giant as f64 >= 0.9 * t.nodes as f64, "{giant}");
}

#[test]
fn poisson_load_matches_cbr_load() {
    let cfg = ExperimentConfig::desk();
    let setup = Setup::new(&cfg).unwrap();
    let injected = |traffic| -> u64 {
        (0..4)
            .map(|run| {
                let sc = scenario(&cfg, &setup, traffic, 0.0, Phase::Learning, run).unwrap();
                run_simulation(&sc).unwrap().total.injected
            })
            .sum()
    };
    let (cbr, poisson) = (injected(TrafficModel::Cbr) as f64, injected(TrafficModel::Poisson) as f64);
    assert!((poisson / cbr - 1.0).abs() < 0.02, "cbr {cbr} poisson {poisson}");
}
