//! Tab-separated files passed between the CLI stages.
//!
//! A model directory holds `ranges.tsv`, `self.tsv` and one
//! `detectors/node-<id>.txt` per node.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::bitmatch::BitString;
use crate::encoding::{Antigen, GeneRanges, RangeSpec, GENE_COUNT};
use crate::error::{Error, Result};
use crate::negsel::{DetectorSet, SelfSet};

use crate::netsim::FlowAccounting;

use super::{Cell, NodeModel, NodeVerdict, RunDetection, RunSummary, WindowFlag};

fn parse<T: std::str::FromStr>(field: Option<&str>, what: &str) -> Result<T> {
    field
        .ok_or_else(|| Error::Parse(format!("missing {what}")))?
        .parse()
        .map_err(|_| Error::Parse(format!("bad {what}")))
}

pub fn write_ranges<W: Write>(models: &[NodeModel], mut out: W) -> Result<()> {
    write!(out, "node\tforwarded_mean")?;
    for g in 1..=GENE_COUNT {
        write!(out, "\tlo{g}\thi{g}")?;
    }
    writeln!(out)?;
    for m in models {
        write!(out, "{}\t{}", m.node, m.forwarded_mean)?;
        for spec in &m.ranges.0 {
            write!(out, "\t{}\t{}", spec.lower, spec.upper)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// `(node, forwarded_mean, ranges)` per line.
pub fn read_ranges<R: BufRead>(input: R) -> Result<Vec<(u32, f64, GeneRanges)>> {
    let mut out = Vec::new();
    for line in input.lines().skip(1) {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut f = line.split('\t');
        let node = parse(f.next(), "node")?;
        let fwd = parse(f.next(), "forwarded_mean")?;
        let mut specs = [RangeSpec { lower: 0.0, upper: 1.0 }; GENE_COUNT];
        for s in &mut specs {
            *s = RangeSpec::new(parse(f.next(), "lower bound")?, parse(f.next(), "upper bound")?)
                .map_err(|e| Error::Parse(e.to_string()))?;
        }
        out.push((node, fwd, GeneRanges(specs)));
    }
    Ok(out)
}

pub fn write_self_sets<W: Write>(models: &[NodeModel], mut out: W) -> Result<()> {
    writeln!(out, "node\trun\twindow\tbits")?;
    for m in models {
        for a in m.self_set.antigens() {
            writeln!(out, "{}\t{}\t{}\t{}", a.node, a.run, a.window, a.bits)?;
        }
    }
    Ok(())
}

/// Self sets indexed by node id, `nodes` entries.
pub fn read_self_sets<R: BufRead>(input: R, nodes: usize) -> Result<Vec<SelfSet>> {
    let mut sets: Vec<SelfSet> = (0..nodes as u32).map(SelfSet::for_antigens).collect();
    for line in input.lines().skip(1) {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut f = line.split('\t');
        let node: u32 = parse(f.next(), "node")?;
        let run = parse(f.next(), "run")?;
        let window = parse(f.next(), "window")?;
        let bits: BitString = f.next().ok_or_else(|| Error::Parse("missing bits".into()))?.parse()?;
        let set = sets
            .get_mut(node as usize)
            .ok_or_else(|| Error::Parse(format!("node {node} out of range")))?;
        set.push(Antigen { bits, node, window, run })?;
    }
    Ok(sets)
}

pub fn write_model_dir(dir: &Path, models: &[NodeModel], sets: &[DetectorSet]) -> Result<()> {
    fs::create_dir_all(dir.join("detectors"))?;
    write_ranges(models, BufWriter::new(File::create(dir.join("ranges.tsv"))?))?;
    write_self_sets(models, BufWriter::new(File::create(dir.join("self.tsv"))?))?;
    for s in sets {
        s.write_to(BufWriter::new(File::create(dir.join(format!("detectors/node-{}.txt", s.node)))?))?;
    }
    Ok(())
}

pub fn read_model_dir(dir: &Path) -> Result<(Vec<NodeModel>, Vec<DetectorSet>)> {
    let open = |name: &str| -> Result<BufReader<File>> { Ok(BufReader::new(File::open(dir.join(name))?)) };
    let ranges = read_ranges(open("ranges.tsv")?)?;
    let mut self_sets = read_self_sets(open("self.tsv")?, ranges.len())?;
    let mut models = Vec::with_capacity(ranges.len());
    let mut sets = Vec::with_capacity(ranges.len());
    for (i, (node, forwarded_mean, ranges)) in ranges.into_iter().enumerate() {
        if node as usize != i {
            return Err(Error::Parse(format!("ranges.tsv: expected node {i}, found {node}")));
        }
        let self_set = std::mem::replace(&mut self_sets[i], SelfSet::for_antigens(node));
        models.push(NodeModel { node, ranges, self_set, forwarded_mean });
        sets.push(DetectorSet::read_from(open(&format!("detectors/node-{node}.txt"))?)?);
    }
    Ok((models, sets))
}

pub fn write_verdicts<W: Write>(verdicts: &[Vec<NodeVerdict>], mut out: W) -> Result<()> {
    writeln!(
        out,
        "run\tnode\twindows_flagged\tforwarded_normal\tforwarded\teligible\tflagged\tmisbehaving"
    )?;
    for run in verdicts {
        for v in run {
            writeln!(
                out,
                "{}\t{}\t{}\t{:.1}\t{:.1}\t{}\t{}\t{}",
                v.run,
                v.node,
                v.windows_flagged,
                v.packets_forwarded_normal,
                v.packets_forwarded,
                v.eligible as u8,
                v.flagged as u8,
                v.ground_truth_misbehaving as u8
            )?;
        }
    }
    Ok(())
}

/// Every encoded antigen with the detector that matched it, `-` if none.
pub fn write_antigens<W: Write>(detections: &[RunDetection], mut out: W) -> Result<()> {
    writeln!(out, "run\tnode\twindow\tbits\tdetector")?;
    for det in detections {
        for flags in &det.flags {
            for f in flags {
                let d = f.detector.map_or("-".to_string(), |d| d.to_string());
                writeln!(out, "{}\t{}\t{}\t{}\t{d}", f.antigen.run, f.antigen.node, f.antigen.window, f.antigen.bits)?;
            }
        }
    }
    Ok(())
}

fn rows<R: BufRead>(input: R) -> impl Iterator<Item = Result<String>> {
    input.lines().skip(1).filter_map(|l| match l {
        Ok(l) if l.trim().is_empty() => None,
        Ok(l) => Some(Ok(l)),
        Err(e) => Some(Err(e.into())),
    })
}

fn flag(field: Option<&str>, what: &str) -> Result<bool> {
    match field {
        Some("1") => Ok(true),
        Some("0") => Ok(false),
        _ => Err(Error::Parse(format!("bad {what}"))),
    }
}

/// Verdicts grouped by run, in file order.
pub fn read_verdicts<R: BufRead>(input: R) -> Result<Vec<Vec<NodeVerdict>>> {
    let mut out: Vec<Vec<NodeVerdict>> = Vec::new();
    for line in rows(input) {
        let line = line?;
        let mut f = line.split('\t');
        let v = NodeVerdict {
            run: parse(f.next(), "run")?,
            node: parse(f.next(), "node")?,
            windows_flagged: parse(f.next(), "windows_flagged")?,
            packets_forwarded_normal: parse(f.next(), "forwarded_normal")?,
            packets_forwarded: parse(f.next(), "forwarded")?,
            eligible: flag(f.next(), "eligible")?,
            flagged: flag(f.next(), "flagged")?,
            ground_truth_misbehaving: flag(f.next(), "misbehaving")?,
        };
        match out.last_mut() {
            Some(run) if run[0].run == v.run => run.push(v),
            _ => out.push(vec![v]),
        }
    }
    Ok(out)
}

/// Inverse of [`write_antigens`]; `nodes` sizes the per-run tables.
pub fn read_antigens<R: BufRead>(input: R, nodes: usize) -> Result<Vec<RunDetection>> {
    let mut out: Vec<RunDetection> = Vec::new();
    for line in rows(input) {
        let line = line?;
        let mut f = line.split('\t');
        let run: u32 = parse(f.next(), "run")?;
        let node: u32 = parse(f.next(), "node")?;
        let window = parse(f.next(), "window")?;
        let bits: BitString = f.next().ok_or_else(|| Error::Parse("missing bits".into()))?.parse()?;
        let detector = match f.next() {
            Some("-") => None,
            other => Some(parse(other, "detector")?),
        };
        if out.last().is_none_or(|d| d.run != run) {
            out.push(RunDetection { run, flags: vec![Vec::new(); nodes] });
        }
        let det = out.last_mut().unwrap();
        det.flags
            .get_mut(node as usize)
            .ok_or_else(|| Error::Parse(format!("node {node} out of range")))?
            .push(WindowFlag { antigen: Antigen { bits, node, window, run }, detector });
    }
    Ok(out)
}

pub fn write_summaries<W: Write>(runs: &[RunSummary], mut out: W) -> Result<()> {
    writeln!(out, "run\tinjected\tdelivered\tdropped_misbehavior\tdropped_contention\tin_flight\tcontention")?;
    for r in runs {
        let a = &r.accounting;
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.run, a.injected, a.delivered, a.dropped_misbehavior, a.dropped_contention, a.in_flight, r.contention
        )?;
    }
    Ok(())
}

pub fn read_summaries<R: BufRead>(input: R) -> Result<Vec<RunSummary>> {
    rows(input)
        .map(|line| {
            let line = line?;
            let mut f = line.split('\t');
            Ok(RunSummary {
                run: parse(f.next(), "run")?,
                accounting: FlowAccounting {
                    injected: parse(f.next(), "injected")?,
                    delivered: parse(f.next(), "delivered")?,
                    dropped_misbehavior: parse(f.next(), "dropped_misbehavior")?,
                    dropped_contention: parse(f.next(), "dropped_contention")?,
                    in_flight: parse(f.next(), "in_flight")?,
                },
                contention: parse(f.next(), "contention")?,
            })
        })
        .collect()
}

/// A detection directory: `cell.toml`, `runs.tsv`, `verdicts.tsv` and
/// `antigens.tsv`.
pub fn write_detection_dir(
    dir: &Path,
    cell: &Cell,
    runs: &[RunSummary],
    verdicts: &[Vec<NodeVerdict>],
    detections: &[RunDetection],
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let text = toml::to_string(cell).map_err(|e| Error::Parse(e.to_string()))?;
    fs::write(dir.join("cell.toml"), text)?;
    write_summaries(runs, BufWriter::new(File::create(dir.join("runs.tsv"))?))?;
    write_verdicts(verdicts, BufWriter::new(File::create(dir.join("verdicts.tsv"))?))?;
    write_antigens(detections, BufWriter::new(File::create(dir.join("antigens.tsv"))?))?;
    Ok(())
}

pub type DetectionFiles = (Cell, Vec<RunSummary>, Vec<Vec<NodeVerdict>>, Vec<RunDetection>);

pub fn read_detection_dir(dir: &Path, nodes: usize) -> Result<DetectionFiles> {
    let open = |name: &str| -> Result<BufReader<File>> { Ok(BufReader::new(File::open(dir.join(name))?)) };
    let cell: Cell =
        toml::from_str(&fs::read_to_string(dir.join("cell.toml"))?).map_err(|e| Error::Parse(e.to_string()))?;
    Ok((
        cell,
        read_summaries(open("runs.tsv")?)?,
        read_verdicts(open("verdicts.tsv")?)?,
        read_antigens(open("antigens.tsv")?, nodes)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::GeneValue;

    fn model(node: u32) -> NodeModel {
        let ranges = GeneRanges([RangeSpec::new(0.0, 1.1).unwrap(); GENE_COUNT]);
        let mut self_set = SelfSet::for_antigens(node);
        for w in 0..3 {
            let g = [GeneValue::new(0.1 * w as f64).unwrap(); GENE_COUNT];
            self_set.push(Antigen::build(&g, &ranges, node, w, 1).unwrap()).unwrap();
        }
        NodeModel { node, ranges, self_set, forwarded_mean: 612.5 }
    }

    #[test]
    fn model_dir_round_trip() {
        let models = vec![model(0), model(1)];
        let sets: Vec<DetectorSet> = models
            .iter()
            .map(|m| crate::negsel::generate_detectors(&m.self_set, 20, 10, 5, 10_000).unwrap())
            .collect();
        let dir = tempfile::tempdir().unwrap();
        write_model_dir(dir.path(), &models, &sets).unwrap();
        let (m2, s2) = read_model_dir(dir.path()).unwrap();
        assert_eq!(m2.len(), 2);
        for (a, b) in models.iter().zip(&m2) {
            assert_eq!(a.ranges, b.ranges);
            assert_eq!(a.forwarded_mean, b.forwarded_mean);
            assert_eq!(a.self_set.antigens(), b.self_set.antigens());
        }
        for (a, b) in sets.iter().zip(&s2) {
            assert_eq!(
                a.detectors.iter().map(|d| &d.bits).collect::<Vec<_>>(),
                b.detectors.iter().map(|d| &d.bits).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn detection_dir_round_trip() {
        let m = model(0);
        let flags = m
            .self_set
            .antigens()
            .iter()
            .enumerate()
            .map(|(i, a)| WindowFlag { antigen: a.clone(), detector: (i % 2 == 0).then_some(i as u32) })
            .collect();
        let detections = vec![RunDetection { run: 1, flags: vec![flags] }];
        let verdicts = vec![vec![NodeVerdict {
            node: 0,
            run: 1,
            windows_flagged: 2,
            packets_forwarded: 700.0,
            packets_forwarded_normal: 612.5,
            eligible: true,
            flagged: false,
            ground_truth_misbehaving: true,
        }]];
        let runs = vec![RunSummary {
            run: 1,
            accounting: FlowAccounting { injected: 10, delivered: 7, dropped_misbehavior: 2, dropped_contention: 0, in_flight: 1 },
            contention: 1.25,
        }];
        let cell = Cell { traffic: crate::netsim::TrafficModel::Poisson, level: 0.3, r: 10, detectors: 20 };
        let dir = tempfile::tempdir().unwrap();
        write_detection_dir(dir.path(), &cell, &runs, &verdicts, &detections).unwrap();
        let (c2, r2, v2, d2) = read_detection_dir(dir.path(), 1).unwrap();
        assert_eq!(c2, cell);
        assert_eq!(r2, runs);
        assert_eq!(v2, verdicts);
        assert_eq!(d2.len(), 1);
        assert_eq!(d2[0].flags[0].len(), 3);
        assert_eq!(d2[0].flags[0][0].detector, Some(0));
        assert_eq!(d2[0].flags[0][1].detector, None);
        assert_eq!(d2[0].flags[0][2].antigen, detections[0].flags[0][2].antigen);
    }

    #[test]
    fn malformed_ranges_are_rejected() {
        let text = "header\n0\t1\t0\t1\t0\t1\n";
        assert!(read_ranges(text.as_bytes()).is_err());
    }
}
