use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use wsn_ais::netsim::{run_simulation, Trace, TrafficModel};
use wsn_ais::pipeline::{
    classify_nodes, detection_phase, detectors_for, io, learn_from_stats, learning_phase, report, scenario, Cell, Experiment,
    ExperimentConfig, Phase, RunStats, RunSummary, Setup,
};
use wsn_ais::Error;

/// Negative-selection misbehavior detection for static sensor networks.
#[derive(Parser)]
#[command(version, arg_required_else_help = true)]
struct Cli {
    /// Print the configuration (defaults, preset or file) as TOML and exit.
    #[arg(long)]
    print_config: bool,

    #[command(flatten)]
    config: ConfigArgs,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Experiment file; unset keys take the preset's values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value = "desk")]
    preset: Preset,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Desk,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum Traffic {
    Cbr,
    Poisson,
}

impl From<Traffic> for TrafficModel {
    fn from(t: Traffic) -> Self {
        match t {
            Traffic::Cbr => TrafficModel::Cbr,
            Traffic::Poisson => TrafficModel::Poisson,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RunPhase {
    Learning,
    Detection,
}

#[derive(Subcommand)]
enum Command {
    /// Build the topology snapshot and print its summary.
    Topology {
        /// Write the node positions here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate one run and write its packet trace.
    Simulate {
        #[arg(long, value_enum, default_value = "detection")]
        phase: RunPhase,
        #[arg(long, default_value_t = 0)]
        run: u32,
        /// Drop probability of the misbehaving nodes (detection runs).
        #[arg(long)]
        level: Option<f64>,
        #[arg(long, value_enum)]
        traffic: Option<Traffic>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Learning runs, self sets and detectors, written to a model directory.
    Learn {
        #[arg(long, value_enum)]
        traffic: Option<Traffic>,
        /// Learning-run traces, one per run; simulated when absent.
        #[arg(long, num_args = 1..)]
        trace: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Detection runs against a model directory; writes verdicts and antigens.
    Detect {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        level: Option<f64>,
        #[arg(long, value_enum)]
        traffic: Option<Traffic>,
        /// Detection-run traces, one per run; simulated when absent.
        #[arg(long, num_args = 1..)]
        trace: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Metrics CSV and gene-usage table from a model and a detection directory.
    Report {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        detections: PathBuf,
        /// Metrics CSV; stdout if unset.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        genes: Option<PathBuf>,
    },
    /// Every cell of the configured grid.
    Sweep {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        genes: Option<PathBuf>,
    },
}

fn load(args: &ConfigArgs) -> anyhow::Result<ExperimentConfig> {
    let base = match args.preset {
        Preset::Desk => ExperimentConfig::desk(),
        Preset::Full => ExperimentConfig::full(),
    };
    let Some(path) = &args.config else { return Ok(base) };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    // overlay the file on the chosen preset
    let mut merged: toml::Table = toml::from_str(&base.to_toml()).expect("preset serializes");
    let file: toml::Table = toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    merge(&mut merged, file);
    Ok(ExperimentConfig::from_toml(&toml::to_string(&merged).expect("table serializes"))?)
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn read_traces(paths: &[PathBuf], cfg: &ExperimentConfig) -> anyhow::Result<Vec<RunStats>> {
    paths
        .iter()
        .enumerate()
        .map(|(run, p)| {
            let file = File::open(p).with_context(|| format!("opening {}", p.display()))?;
            let trace = Trace::read_from(std::io::BufReader::new(file))?;
            Ok(RunStats::from_trace(&trace, run as u32, cfg)?)
        })
        .collect()
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn emit(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => create(p)?.write_all(text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = load(&cli.config)?;
    if cli.print_config {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let Some(command) = cli.command else { return Ok(()) };
    let traffic_of = |t: Option<Traffic>| t.map_or(cfg.connections.traffic, TrafficModel::from);
    match command {
        Command::Topology { out } => {
            let setup = Setup::new(&cfg)?;
            let t = &setup.topology;
            let giant = t.components().iter().map(Vec::len).max().unwrap_or(0);
            eprintln!(
                "{} nodes, mean degree {:.2}, giant component {:.1}%",
                t.node_count(),
                t.mean_degree(),
                100.0 * giant as f64 / t.node_count() as f64
            );
            for &(s, d) in &setup.endpoints {
                let hops = t.hop_distances(s)[d as usize].unwrap_or(0);
                eprintln!("connection {s} -> {d}: {hops} hops");
            }
            eprintln!("misbehaving: {:?}", setup.misbehaving);
            if let Some(out) = out {
                t.write_to(create(&out)?)?;
            }
        }
        Command::Simulate { phase, run, level, traffic, out } => {
            let setup = Setup::new(&cfg)?;
            let phase = match phase {
                RunPhase::Learning => Phase::Learning,
                RunPhase::Detection => Phase::Detection,
            };
            let level = level.unwrap_or(cfg.misbehavior.level);
            let sc = scenario(&cfg, &setup, traffic_of(traffic), level, phase, run)?;
            let outcome = run_simulation(&sc)?;
            outcome.trace.write_to(create(&out)?)?;
            let a = outcome.total;
            eprintln!(
                "injected {} delivered {} dropped_misbehavior {} dropped_contention {} in_flight {}; {} events",
                a.injected,
                a.delivered,
                a.dropped_misbehavior,
                a.dropped_contention,
                a.in_flight,
                outcome.trace.events.len()
            );
        }
        Command::Learn { traffic, trace, out } => {
            let traffic = traffic_of(traffic);
            let models = if trace.is_empty() {
                learning_phase(&cfg, &Setup::new(&cfg)?, traffic)?
            } else {
                learn_from_stats(&read_traces(&trace, &cfg)?)?
            };
            let sets = detectors_for(&cfg, &models, traffic, cfg.ais.r, cfg.ais.detectors)?;
            io::write_model_dir(&out, &models, &sets)?;
            let iterations: u64 = sets.iter().map(|d| d.stats.iterations).sum();
            let rejected: u64 = sets.iter().map(|d| d.stats.non_valid).sum();
            eprintln!(
                "{} nodes, {} detectors each at r={}; {iterations} candidates, {:.2}% rejected",
                models.len(),
                cfg.ais.detectors,
                cfg.ais.r,
                100.0 * rejected as f64 / iterations.max(1) as f64
            );
        }
        Command::Detect { model, level, traffic, trace, out } => {
            let (models, mut sets) = io::read_model_dir(&model)?;
            if models.len() != cfg.topology.nodes {
                return Err(Error::Config(format!(
                    "model has {} nodes, configuration {}",
                    models.len(),
                    cfg.topology.nodes
                ))
                .into());
            }
            let traffic = traffic_of(traffic);
            let level = level.unwrap_or(cfg.misbehavior.level);
            let exp = Experiment::new(cfg.clone())?;
            let runs: Vec<RunStats> = if trace.is_empty() {
                exp.run_stats(traffic, level, Phase::Detection)?
            } else {
                read_traces(&trace, &cfg)?
            };
            let detections = detection_phase(&models, &mut sets, &runs)?;
            let misbehaving = if level > 0.0 { exp.setup.misbehaving.clone() } else { Default::default() };
            let verdicts = classify_nodes(&cfg, &models, &runs, &detections, &misbehaving);
            let r = sets.first().map_or(cfg.ais.r, |s| s.r);
            let cell = Cell { traffic, level, r, detectors: sets.first().map_or(0, |s| s.detectors.len()) };
            let summaries: Vec<RunSummary> = runs.iter().map(RunStats::summary).collect();
            io::write_detection_dir(&out, &cell, &summaries, &verdicts, &detections)?;
            let flagged: Vec<_> =
                verdicts.iter().map(|v| v.iter().filter(|n| n.flagged).count()).collect();
            eprintln!("flagged nodes per run: {flagged:?}");
        }
        Command::Report { model, detections, out, genes } => {
            let (models, sets) = io::read_model_dir(&model)?;
            let (cell, runs, verdicts, dets) = io::read_detection_dir(&detections, models.len())?;
            let rep = report::compute_metrics(cell, &models, &verdicts, &runs, &dets, &sets)?;
            emit(out.as_deref(), &report::write_csv(std::slice::from_ref(&rep)))?;
            if let Some(g) = genes {
                emit(Some(&g), &report::gene_usage_table(&[rep]))?;
            }
        }
        Command::Sweep { out, genes } => {
            let exp = Experiment::new(cfg)?;
            let results = exp.sweep()?;
            let mut reports = Vec::new();
            let mut budget_error = None;
            let mut other_error = None;
            for (cell, res) in results {
                match res {
                    Ok(r) => reports.push(r),
                    Err(e) => {
                        eprintln!("cell {cell:?} failed: {e}");
                        if matches!(e, Error::GenerationBudget { .. }) {
                            budget_error.get_or_insert(e);
                        } else {
                            other_error.get_or_insert(e);
                        }
                    }
                }
            }
            emit(out.as_deref(), &report::write_csv(&reports))?;
            if let Some(g) = genes {
                emit(Some(&g), &report::gene_usage_table(&reports))?;
            }
            if let Some(e) = budget_error.or(other_error) {
                return Err(e.into());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Error>() {
                Some(Error::Config(_)) => ExitCode::from(2),
                Some(Error::GenerationBudget { .. }) => ExitCode::from(3),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
