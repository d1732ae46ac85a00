//! A small sweep over traffic models and misbehavior levels, printed as the
//! metrics CSV and the gene-usage table.

use wsn_ais::netsim::TrafficModel;
use wsn_ais::pipeline::{report, Experiment, ExperimentConfig};

fn main() -> wsn_ais::Result<()> {
    let mut cfg = ExperimentConfig::desk();
    cfg.runs.learning = 20;
    cfg.runs.detection = 3;
    cfg.sweep.levels = vec![0.0, 0.3];
    cfg.sweep.traffic = vec![TrafficModel::Cbr, TrafficModel::Poisson];
    let exp = Experiment::new(cfg)?;
    let reports: Vec<_> = exp.sweep()?.into_iter().map(|(_, r)| r).collect::<Result<_, _>>()?;
    print!("{}", report::write_csv(&reports));
    println!();
    print!("{}", report::gene_usage_table(&reports));
    Ok(())
}
