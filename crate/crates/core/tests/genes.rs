//! Gene extraction over simulated traffic.

use proptest::prelude::*;
use wsn_ais::encoding::GeneValue;
use wsn_ais::genes::{accumulate, gene1, gene2, gene3, gene4, gene5, WindowStats};
use wsn_ais::netsim::{
    random_waypoint_snapshot, run_simulation, Connection, NodeScript, Position, Scenario, Topology, TrafficModel,
    WaypointParams,
};
use wsn_ais::pipeline::{learn_from_stats, ExperimentConfig, Experiment, Phase};

fn cbr(src: u32, dst: u32, rate: f64) -> Connection {
    Connection { src, dst, model: TrafficModel::Cbr, rate, packet_size: 512 }
}

fn line(n: usize) -> Topology {
    Topology::new((0..n).map(|i| Position { x: 100.0 * i as f64, y: 0.0 }).collect(), 120.0)
}

fn quiet(sc: &mut Scenario) {
    sc.config.overhear_loss = false;
    sc.config.mac.base_failure = 0.0;
    sc.config.mac.per_contender = 0.0;
}

fn in_unit_or_inf(g: GeneValue) -> bool {
    g.is_infinite() || (0.0..=1.0).contains(&g.value())
}

fn check_window(ws: &WindowStats) -> Result<(), TestCaseError> {
    let s = ws.summed_over_next_hops();
    prop_assert_eq!(ws.data_sent_to_next, s.data_sent);
    prop_assert_eq!(ws.data_forwarded_by_next, s.data_forwarded);
    prop_assert_eq!(ws.rerr_sent_to_next, s.rerr_sent);
    prop_assert_eq!(ws.rerr_forwarded_by_next, s.rerr_forwarded);
    let (mut a, mut b) = (ws.forward_delays.clone(), s.forward_delays.clone());
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    prop_assert_eq!(a, b);
    prop_assert_eq!(ws.rerr_delays.len(), s.rerr_delays.len());
    prop_assert!(ws.data_forwarded_by_next <= ws.data_sent_to_next);
    prop_assert!(in_unit_or_inf(gene1(ws)) && in_unit_or_inf(gene2(ws)) && in_unit_or_inf(gene4(ws)));
    prop_assert!(gene3(ws).value() >= 0.0 && gene5(ws).value() >= 0.0);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]
    #[test]
    fn aggregates_equal_per_hop_sums(seed in 0u64..1000, drop in 0.0..0.8f64) {
        let topo = random_waypoint_snapshot(40, 500.0, 500.0, 130.0, &WaypointParams::default(), seed).unwrap();
        let giant = topo.components().into_iter().max_by_key(Vec::len).unwrap();
        prop_assume!(giant.len() >= 6);
        let conns = vec![cbr(giant[0], giant[giant.len() - 1], 2.0), cbr(giant[1], giant[giant.len() - 2], 2.0)];
        let mut sc = Scenario::new(topo, conns, 800.0, seed);
        sc.scripts.insert(giant[2], NodeScript { drop_probability: drop, ..NodeScript::default() });
        let out = run_simulation(&sc).unwrap();
        for node in accumulate(&out.trace, 40, 800.0, 200.0).unwrap() {
            for ws in &node {
                check_window(ws)?;
            }
        }
    }
}

#[test]
fn forwarded_fraction_tracks_drop_probability() {
    let (mut inside, mut total) = (0, 0);
    for (i, p) in [0.1, 0.3, 0.5].into_iter().enumerate() {
        for seed in 0..4u64 {
            let mut sc = Scenario::new(line(4), vec![cbr(0, 3, 2.0)], 2000.0, seed * 10 + i as u64);
            quiet(&mut sc);
            sc.scripts.insert(2, NodeScript { drop_probability: p, ..NodeScript::default() });
            let out = run_simulation(&sc).unwrap();
            let stats = accumulate(&out.trace, 4, 2000.0, 500.0).unwrap();
            for ws in stats[1].iter().filter(|w| w.data_sent_to_next >= 500) {
                total += 1;
                inside += ((gene2(ws).value() - (1.0 - p)).abs() <= 0.05) as u32;
            }
        }
    }
    assert!(total >= 40, "{total}");
    assert!(inside as f64 >= 0.95 * total as f64, "{inside}/{total}");
}

#[test]
fn rerr_dropping_relay_lowers_gene4() {
    // two parallel six-relay chains between node 0 and node 13
    let mut pos = vec![Position { x: 0.0, y: 0.0 }];
    for y in [70.0, -70.0] {
        for k in 0..6 {
            pos.push(Position { x: 60.0 + 100.0 * k as f64, y });
        }
    }
    pos.push(Position { x: 620.0, y: 0.0 });
    let topo = Topology::new(pos, 100.0);
    let run = |drop: f64| {
        let mut sc = Scenario::new(topo.clone(), vec![cbr(0, 13, 1.0)], 600.0, 5);
        quiet(&mut sc);
        // on both chains: the fourth relay dies, the second drops what it forwards
        for first in [1, 7] {
            sc.scripts.insert(first + 3, NodeScript { fail_at: Some(200.0), ..NodeScript::default() });
            sc.scripts.insert(first + 1, NodeScript { drop_probability: drop, ..NodeScript::default() });
        }
        let out = run_simulation(&sc).unwrap();
        assert!(out.total.is_conserved());
        let stats = accumulate(&out.trace, 14, 600.0, 600.0).unwrap();
        let mut third = stats[3][0].clone();
        let other = &stats[9][0];
        third.rerr_sent_to_next += other.rerr_sent_to_next;
        third.rerr_forwarded_by_next += other.rerr_forwarded_by_next;
        third
    };
    let clean = run(0.0);
    assert!(clean.rerr_sent_to_next > 0);
    assert_eq!(gene4(&clean).value(), 1.0);
    let lossy = run(0.5);
    assert!(lossy.rerr_sent_to_next > 0);
    assert!(gene4(&lossy).value() < 1.0, "{lossy:?}");
}

#[test]
fn idle_node_learns_the_no_traffic_antigen() {
    let mut cfg = ExperimentConfig::desk();
    cfg.runs.learning = 2;
    let exp = Experiment::new(cfg.clone()).unwrap();
    let models = learn_from_stats(&exp.run_stats(cfg.connections.traffic, 0.0, Phase::Learning).unwrap()).unwrap();
    let runs = exp.run_stats(cfg.connections.traffic, 0.0, Phase::Learning).unwrap();
    let idle = (0..cfg.topology.nodes)
        .find(|&v| runs.iter().all(|r| r.windows[v].iter().all(|w| w.rts_sent == 0 && w.data_sent_to_next == 0)))
        .expect("some node carries no traffic");
    let m = &models[idle];
    assert_eq!(m.self_set.len(), 2 * cfg.windows() as usize);
    assert_eq!(m.self_set.distinct().len(), 1);
    let bits = &m.self_set.distinct()[0];
    let ones: Vec<usize> = bits.ones().collect();
    assert_eq!(ones, vec![9, 19, 20, 39, 40]);
}
