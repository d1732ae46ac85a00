//! Measures reported per sweep cell, and their CSV form.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::encoding::GENE_COUNT;
use crate::error::Result;
use crate::negsel::DetectorSet;
use crate::netsim::{NodeId, TrafficModel};
use crate::stats::{mean_ci, Estimate};

use super::{flagged_pairs, gene_usage_analysis, unique_antigens, Cell, NodeModel, NodeVerdict, RunDetection, RunSummary};

/// How often match spans fall on each gene.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GeneUsage {
    pub per_gene: [u64; GENE_COUNT],
    /// Spans confined to one gene.
    pub single: u64,
    /// Spans crossing a gene boundary.
    pub multiple: u64,
}

impl GeneUsage {
    pub fn add_span(&mut self, genes: &BTreeSet<usize>) {
        for &g in genes {
            self.per_gene[g] += 1;
        }
        if genes.len() == 1 {
            self.single += 1;
        } else {
            self.multiple += 1;
        }
    }

    pub fn spans(&self) -> u64 {
        self.single + self.multiple
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub traffic: TrafficModel,
    pub level: f64,
    pub r: usize,
    pub detectors: usize,
    /// Eligible misbehaving nodes, summed over runs.
    pub ns: u64,
    /// Of those, the ones pronounced misbehaving.
    pub dns: u64,
    /// `dns / ns`; NaN when nothing was eligible.
    pub detection_rate: f64,
    /// Per-run detection rate, mean and 95% interval.
    pub detection_rate_ci: Option<Estimate>,
    /// Fraction of non-self antigens at eligible nodes that some detector
    /// matched.
    pub string_detection_rate: f64,
    /// Normal nodes pronounced misbehaving, per run.
    pub false_positives: Option<Estimate>,
    /// Mean over nodes of rejected candidates per candidate.
    pub non_valid_rate: f64,
    /// Candidates drawn, summed over nodes.
    pub iterations: u64,
    /// Largest fraction of one node's detectors used in one run.
    pub used_max_fraction: f64,
    /// Distinct detectors used per eligible node and run.
    pub used_per_run: f64,
    /// Distinct (node, detector) pairs firing per window of a run.
    pub used_per_window: f64,
    /// Distinct antigens per eligible node and run.
    pub unique_antigens: f64,
    pub gene_usage: GeneUsage,
    pub contention: f64,
    pub delivery_ratio: f64,
}

/// Everything except the wall time, so equal seeds give equal files.
pub const CSV_HEADER: &str = "traffic,level,r,detectors,ns,dns,detection_rate,dr_mean,dr_half_width,\
string_detection_rate,fp_mean,fp_half_width,non_valid_rate,iterations,used_max_fraction,\
used_per_run,used_per_window,unique_antigens,gene1,gene2,gene3,gene4,gene5,single,multiple,\
contention,delivery_ratio";

fn f(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.6}")
    }
}

impl MetricsReport {
    pub fn csv_row(&self) -> String {
        let (drm, drh) = self.detection_rate_ci.map_or((f64::NAN, f64::NAN), |e| (e.mean, e.half_width));
        let (fpm, fph) = self.false_positives.map_or((f64::NAN, f64::NAN), |e| (e.mean, e.half_width));
        let traffic = match self.traffic {
            TrafficModel::Cbr => "cbr",
            TrafficModel::Poisson => "poisson",
        };
        let g = &self.gene_usage;
        let mut row = format!(
            "{traffic},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            f(self.level),
            self.r,
            self.detectors,
            self.ns,
            self.dns,
            f(self.detection_rate),
            f(drm),
            f(drh),
            f(self.string_detection_rate),
            f(fpm),
            f(fph),
            f(self.non_valid_rate),
            self.iterations,
            f(self.used_max_fraction),
            f(self.used_per_run),
            f(self.used_per_window),
            f(self.unique_antigens),
        );
        for c in g.per_gene {
            write!(row, ",{c}").unwrap();
        }
        write!(row, ",{},{},{},{}", g.single, g.multiple, f(self.contention), f(self.delivery_ratio)).unwrap();
        row
    }
}

pub fn write_csv(reports: &[MetricsReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Gene-usage table, one line per cell.
pub fn gene_usage_table(reports: &[MetricsReport]) -> String {
    let mut out = String::from("cell\tgene1\tgene2\tgene3\tgene4\tgene5\tsingle\tmultiple\n");
    for r in reports {
        let g = &r.gene_usage;
        let total = g.spans().max(1) as f64;
        write!(out, "{:?}/{}/r{}/{}", r.traffic, r.level, r.r, r.detectors).unwrap();
        for c in g.per_gene {
            write!(out, "\t{c}").unwrap();
        }
        writeln!(
            out,
            "\t{} ({:.1}%)\t{} ({:.1}%)",
            g.single,
            100.0 * g.single as f64 / total,
            g.multiple,
            100.0 * g.multiple as f64 / total
        )
        .unwrap();
    }
    out
}

pub fn compute_metrics(
    cell: Cell,
    models: &[NodeModel],
    verdicts: &[Vec<NodeVerdict>],
    runs: &[RunSummary],
    detections: &[RunDetection],
    sets: &[DetectorSet],
) -> Result<MetricsReport> {
    let mut ns = 0;
    let mut dns = 0;
    let mut per_run_dr = Vec::new();
    let mut per_run_fp = Vec::new();
    for run in verdicts {
        let judged = run.iter().filter(|v| v.eligible && v.ground_truth_misbehaving);
        let n = judged.clone().count() as u64;
        let d = judged.filter(|v| v.flagged).count() as u64;
        ns += n;
        dns += d;
        if n > 0 {
            per_run_dr.push(d as f64 / n as f64);
        }
        per_run_fp.push(run.iter().filter(|v| v.flagged && !v.ground_truth_misbehaving).count() as f64);
    }

    let eligible: Vec<BTreeSet<NodeId>> = verdicts
        .iter()
        .map(|run| run.iter().filter(|v| v.eligible).map(|v| v.node).collect())
        .collect();

    let (mut nonself, mut nonself_hit) = (0u64, 0u64);
    let (mut used_sum, mut used_n, mut used_max) = (0.0, 0usize, 0.0f64);
    let (mut uniq_sum, mut uniq_n) = (0.0, 0usize);
    let (mut per_window_sum, mut per_window_n) = (0.0, 0usize);
    let mut pairs = Vec::new();
    for (det, eligible) in detections.iter().zip(&eligible) {
        let used = super::detectors_used(det);
        for &v in eligible {
            let flags = &det.flags[v as usize];
            for fl in flags {
                if !models[v as usize].self_set.contains(&fl.antigen.bits) {
                    nonself += 1;
                    nonself_hit += fl.detector.is_some() as u64;
                }
            }
            used_sum += used[v as usize] as f64;
            used_n += 1;
            used_max = used_max.max(used[v as usize] as f64 / sets[v as usize].detectors.len() as f64);
            uniq_sum += unique_antigens(flags) as f64;
            uniq_n += 1;
        }
        let windows = det.flags.first().map_or(0, |f| f.len());
        for w in 0..windows {
            let fired: BTreeSet<(NodeId, u32)> = eligible
                .iter()
                .filter_map(|&v| det.flags[v as usize][w].detector.map(|d| (v, d)))
                .collect();
            per_window_sum += fired.len() as f64;
            per_window_n += 1;
        }
        pairs.extend(flagged_pairs(std::slice::from_ref(det), sets, eligible, cell.r));
    }
    let ratio = |a: f64, b: usize| if b == 0 { f64::NAN } else { a / b as f64 };

    let gene_usage = gene_usage_analysis(pairs, cell.r)?;

    let contention: Vec<f64> = runs.iter().map(|r| r.contention).filter(|c| !c.is_nan()).collect();
    let (injected, delivered) =
        runs.iter().fold((0u64, 0u64), |(i, d), r| (i + r.accounting.injected, d + r.accounting.delivered));

    Ok(MetricsReport {
        traffic: cell.traffic,
        level: cell.level,
        r: cell.r,
        detectors: cell.detectors,
        ns,
        dns,
        detection_rate: if ns == 0 { f64::NAN } else { dns as f64 / ns as f64 },
        detection_rate_ci: mean_ci(&per_run_dr, 0.95),
        string_detection_rate: if nonself == 0 { f64::NAN } else { nonself_hit as f64 / nonself as f64 },
        false_positives: mean_ci(&per_run_fp, 0.95),
        non_valid_rate: sets.iter().map(|s| s.stats.non_valid_rate()).sum::<f64>() / sets.len().max(1) as f64,
        iterations: sets.iter().map(|s| s.stats.iterations).sum(),
        used_max_fraction: used_max,
        used_per_run: ratio(used_sum, used_n),
        used_per_window: ratio(per_window_sum, per_window_n),
        unique_antigens: ratio(uniq_sum, uniq_n),
        gene_usage,
        contention: if contention.is_empty() {
            f64::NAN
        } else {
            contention.iter().sum::<f64>() / contention.len() as f64
        },
        delivery_ratio: if injected == 0 { f64::NAN } else { delivered as f64 / injected as f64 },
    })
}
