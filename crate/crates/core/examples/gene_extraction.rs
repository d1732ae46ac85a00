//! Per-window gene values of the busiest relays in one run.

use wsn_ais::genes::{accumulate, gene_table_row, GENE_TABLE_HEADER};
use wsn_ais::netsim::run_simulation;
use wsn_ais::pipeline::{scenario, ExperimentConfig, Phase, Setup};

fn main() -> wsn_ais::Result<()> {
    let cfg = ExperimentConfig::desk();
    let setup = Setup::new(&cfg)?;
    let sc = scenario(&cfg, &setup, cfg.connections.traffic, 0.3, Phase::Detection, 0)?;
    let out = run_simulation(&sc)?;
    let windows = accumulate(&out.trace, cfg.topology.nodes, cfg.simulation.duration, cfg.simulation.window)?;

    let mut busiest: Vec<usize> = (0..windows.len()).collect();
    busiest.sort_by_key(|&v| std::cmp::Reverse(windows[v].iter().map(|w| w.data_sent_to_next).sum::<u64>()));
    println!("{GENE_TABLE_HEADER}");
    for &v in busiest.iter().take(4) {
        for ws in &windows[v] {
            println!("{}", gene_table_row(ws, 0));
        }
    }
    println!("misbehaving: {:?}", setup.misbehaving);
    Ok(())
}
