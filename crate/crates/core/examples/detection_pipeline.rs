//! Learning, detector generation and detection for one cell, with per-node
//! verdicts.

use wsn_ais::netsim::TrafficModel;
use wsn_ais::pipeline::{Cell, Experiment, ExperimentConfig};

fn main() -> wsn_ais::Result<()> {
    let mut cfg = ExperimentConfig::desk();
    cfg.runs.learning = 20;
    cfg.runs.detection = 3;
    let exp = Experiment::new(cfg)?;
    let out = exp.cell(Cell { traffic: TrafficModel::Cbr, level: 0.3, r: 10, detectors: 2000 })?;

    for run in &out.verdicts {
        for v in run.iter().filter(|v| v.eligible || v.flagged) {
            println!(
                "run {} node {:3} windows {} forwarded {:6.0} (normal {:6.0}) flagged {:5} misbehaving {}",
                v.run, v.node, v.windows_flagged, v.packets_forwarded, v.packets_forwarded_normal, v.flagged,
                v.ground_truth_misbehaving
            );
        }
    }
    let r = &out.report;
    println!("dr {}/{} = {:.3}, fp per run {:?}", r.dns, r.ns, r.detection_rate, r.false_positives.map(|e| e.mean));
    Ok(())
}
