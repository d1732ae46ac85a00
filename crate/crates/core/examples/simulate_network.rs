//! One simulated hour of the desk network with misbehaving relays.

use std::collections::BTreeMap;

use wsn_ais::netsim::{run_simulation, Action, FrameKind};
use wsn_ais::pipeline::{scenario, ExperimentConfig, Phase, Setup};

fn main() -> wsn_ais::Result<()> {
    let cfg = ExperimentConfig::desk();
    let setup = Setup::new(&cfg)?;
    for level in [0.0, 0.5] {
        let sc = scenario(&cfg, &setup, cfg.connections.traffic, level, Phase::Detection, 0)?;
        let out = run_simulation(&sc)?;
        let a = out.total;
        println!(
            "level {level}: injected {} delivered {} misbehavior {} contention {} in flight {} (conserved {})",
            a.injected,
            a.delivered,
            a.dropped_misbehavior,
            a.dropped_contention,
            a.in_flight,
            a.is_conserved()
        );
        println!(
            "  {} events, {} RREQ sent, mean contention {:.3}",
            out.trace.events.len(),
            out.trace.count(FrameKind::Rreq, Action::Sent),
            out.network_contention()
        );
        let droppers: BTreeMap<usize, u64> = out
            .dropped_on_purpose
            .iter()
            .enumerate()
            .filter(|(_, &d)| d > 0)
            .map(|(v, &d)| (v, d))
            .collect();
        println!("  dropped on purpose: {droppers:?}");
    }
    Ok(())
}
