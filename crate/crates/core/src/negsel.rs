//! Negative selection: random-generate-and-test detector generation,
//! first-match detection, exhaustive span matching and growing detectors.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::time::{Duration, Instant};

use crate::bitmatch::{self, all_match_spans, BitString, MatchSpan};
use crate::encoding::{Antigen, ANTIGEN_BITS};
use crate::error::{Error, Result};
use crate::seed;

/// Default cap on candidates tried per detector set.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

const FILE_MAGIC: &str = "# wsn-ais detector set v1";

/// Antigens observed at one node during misbehavior-free traffic.
/// Duplicates are kept; matching only needs the distinct strings.
#[derive(Clone, Debug)]
pub struct SelfSet {
    pub node: u32,
    bit_len: usize,
    antigens: Vec<Antigen>,
    distinct: Vec<BitString>,
}

impl SelfSet {
    pub fn new(node: u32, bit_len: usize) -> Self {
        SelfSet {
            node,
            bit_len,
            antigens: Vec::new(),
            distinct: Vec::new(),
        }
    }

    /// Empty 50-bit self set.
    pub fn for_antigens(node: u32) -> Self {
        Self::new(node, ANTIGEN_BITS)
    }

    pub fn push(&mut self, antigen: Antigen) -> Result<()> {
        if antigen.bits.len() != self.bit_len {
            return Err(Error::Contract(format!(
                "self antigen has {} bits, set expects {}",
                antigen.bits.len(),
                self.bit_len
            )));
        }
        if !self.distinct.contains(&antigen.bits) {
            self.distinct.push(antigen.bits.clone());
        }
        self.antigens.push(antigen);
        Ok(())
    }

    pub fn bit_len(&self) -> usize {
        self.bit_len
    }

    pub fn len(&self) -> usize {
        self.antigens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.antigens.is_empty()
    }

    pub fn antigens(&self) -> &[Antigen] {
        &self.antigens
    }

    pub fn distinct(&self) -> &[BitString] {
        &self.distinct
    }

    pub fn contains(&self, bits: &BitString) -> bool {
        self.distinct.contains(bits)
    }

    /// True iff `candidate` matches any self string at `r`.
    pub fn matched_by(&self, candidate: &BitString, r: usize) -> bool {
        self.distinct
            .iter()
            .any(|s| bitmatch::matches_unchecked(candidate, s, r))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Detector {
    pub id: u32,
    pub bits: BitString,
    pub match_count: u64,
    /// `(run, window)` pairs in which this detector fired.
    pub windows_matched: BTreeSet<(u32, u32)>,
}

impl Detector {
    fn new(id: u32, bits: BitString) -> Self {
        Detector {
            id,
            bits,
            match_count: 0,
            windows_matched: BTreeSet::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GenerationStats {
    /// Candidates drawn, accepted or not.
    pub iterations: u64,
    /// Candidates rejected because they matched a self string.
    pub non_valid: u64,
    pub wall_time: Duration,
}

impl GenerationStats {
    pub fn non_valid_rate(&self) -> f64 {
        if self.iterations == 0 {
            0.0
        } else {
            self.non_valid as f64 / self.iterations as f64
        }
    }
}

#[derive(Clone, Debug)]
pub struct DetectorSet {
    pub node: u32,
    pub r: usize,
    pub seed: u64,
    pub detectors: Vec<Detector>,
    pub stats: GenerationStats,
}

/// Draw uniform random candidates and keep those matching no self string,
/// until `count` detectors are collected.
pub fn generate_detectors(
    self_set: &SelfSet,
    count: usize,
    r: usize,
    seed: u64,
    budget: u64,
) -> Result<DetectorSet> {
    let len = self_set.bit_len();
    if count == 0 {
        return Err(Error::Contract("detector count must be >= 1".into()));
    }
    if r == 0 || r > len {
        return Err(Error::Contract(format!("r = {r} outside [1, {len}]")));
    }
    let started = Instant::now();
    let mut rng = seed::rng(seed);
    let mut detectors = Vec::with_capacity(count);
    let mut stats = GenerationStats::default();
    while detectors.len() < count {
        if stats.iterations >= budget {
            return Err(Error::GenerationBudget {
                node: self_set.node,
                r,
                requested: count,
                accepted: detectors.len(),
                budget,
            });
        }
        stats.iterations += 1;
        let candidate = BitString::random(len, &mut rng)?;
        if self_set.matched_by(&candidate, r) {
            stats.non_valid += 1;
        } else {
            detectors.push(Detector::new(detectors.len() as u32, candidate));
        }
    }
    stats.wall_time = started.elapsed();
    Ok(DetectorSet {
        node: self_set.node,
        r,
        seed,
        detectors,
        stats,
    })
}

impl DetectorSet {
    /// First detector (in set order) matching `antigen`; its usage counters
    /// are updated.
    pub fn detect(&mut self, antigen: &Antigen) -> Option<u32> {
        let r = self.r;
        let hit = self
            .detectors
            .iter_mut()
            .find(|d| d.bits.len() == antigen.bits.len() && bitmatch::matches_unchecked(&d.bits, &antigen.bits, r))?;
        hit.match_count += 1;
        hit.windows_matched.insert((antigen.run, antigen.window));
        Some(hit.id)
    }

    /// Every matching detector with all of its maximal spans. Counters are
    /// left untouched.
    pub fn match_all(&self, antigen: &Antigen) -> Vec<(u32, Vec<MatchSpan>)> {
        self.detectors
            .iter()
            .filter_map(|d| {
                let spans = all_match_spans(&d.bits, &antigen.bits, self.r).ok()?;
                (!spans.is_empty()).then_some((d.id, spans))
            })
            .collect()
    }

    /// True iff no detector matches any string of `self_set`.
    pub fn audit(&self, self_set: &SelfSet) -> bool {
        self.detectors
            .iter()
            .all(|d| !self_set.matched_by(&d.bits, self.r))
    }

    /// Detectors that fired at least once.
    pub fn used(&self) -> usize {
        self.detectors.iter().filter(|d| d.match_count > 0).count()
    }

    pub fn reset_usage(&mut self) {
        for d in &mut self.detectors {
            d.match_count = 0;
            d.windows_matched.clear();
        }
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        let mut s = String::new();
        writeln!(s, "{FILE_MAGIC}").unwrap();
        writeln!(s, "node\t{}", self.node).unwrap();
        writeln!(s, "r\t{}", self.r).unwrap();
        writeln!(s, "count\t{}", self.detectors.len()).unwrap();
        writeln!(s, "seed\t{}", self.seed).unwrap();
        writeln!(s, "iterations\t{}", self.stats.iterations).unwrap();
        writeln!(s, "non_valid\t{}", self.stats.non_valid).unwrap();
        for d in &self.detectors {
            writeln!(s, "{}", d.bits).unwrap();
        }
        out.write_all(s.as_bytes())?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let magic = lines.next().transpose()?.unwrap_or_default();
        if magic.trim() != FILE_MAGIC {
            return Err(Error::Parse(format!("not a detector file: {magic:?}")));
        }
        let mut header = |key: &str| -> Result<u64> {
            let line = lines
                .next()
                .transpose()?
                .ok_or_else(|| Error::Parse(format!("missing header {key}")))?;
            let (k, v) = line
                .split_once('\t')
                .ok_or_else(|| Error::Parse(format!("malformed header line {line:?}")))?;
            if k != key {
                return Err(Error::Parse(format!("expected header {key}, found {k}")));
            }
            v.trim()
                .parse()
                .map_err(|e| Error::Parse(format!("header {key}: {e}")))
        };
        let node = header("node")? as u32;
        let r = header("r")? as usize;
        let count = header("count")? as usize;
        let seed = header("seed")?;
        let iterations = header("iterations")?;
        let non_valid = header("non_valid")?;
        let detectors = lines
            .filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
            .enumerate()
            .map(|(i, l)| Ok(Detector::new(i as u32, l?.trim().parse()?)))
            .collect::<Result<Vec<_>>>()?;
        if detectors.len() != count {
            return Err(Error::Parse(format!(
                "header announces {count} detectors, file has {}",
                detectors.len()
            )));
        }
        Ok(DetectorSet {
            node,
            r,
            seed,
            detectors,
            stats: GenerationStats {
                iterations,
                non_valid,
                wall_time: Duration::ZERO,
            },
        })
    }
}

/// Smallest `r` at which `candidate` matches no self string, or `None` if
/// it matches some self string even at `r = l`. Binary search starts at
/// `ceil(l / 2)`; matching is monotone in `r`, so the search is exact.
pub fn grow_detector(candidate: &BitString, self_set: &SelfSet) -> Result<Option<usize>> {
    let l = candidate.len();
    if l != self_set.bit_len() {
        return Err(Error::Contract(format!(
            "candidate has {l} bits, self set expects {}",
            self_set.bit_len()
        )));
    }
    let clear = |r: usize| !self_set.matched_by(candidate, r);
    if !clear(l) {
        return Ok(None);
    }
    // invariant: clear(hi); lo - 1 is either 0 or not clear
    let (mut lo, mut hi) = (1, l);
    let mut probe = l.div_ceil(2);
    while lo < hi {
        if clear(probe) {
            hi = probe;
        } else {
            lo = probe + 1;
        }
        probe = lo + (hi - lo) / 2;
    }
    Ok(Some(hi))
}

/// Mean grown `r` over the accepted candidates.
pub fn mean_grown_r(candidates: &[BitString], self_set: &SelfSet) -> Result<f64> {
    let mut total = 0usize;
    let mut accepted = 0usize;
    for c in candidates {
        if let Some(r) = grow_detector(c, self_set)? {
            total += r;
            accepted += 1;
        }
    }
    if accepted == 0 {
        return Err(Error::AllCandidatesRejected);
    }
    Ok(total as f64 / accepted as f64)
}

/// Distinct detector bit strings; two detector sets generated from the same
/// inputs must agree on this exactly.
pub fn fingerprint(set: &DetectorSet) -> HashSet<BitString> {
    set.detectors.iter().map(|d| d.bits.clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitmatch::r_contiguous_match;

    fn antigen(bits: &str) -> Antigen {
        Antigen {
            bits: bits.parse().unwrap(),
            node: 0,
            window: 0,
            run: 0,
        }
    }

    fn self_set_of(strings: &[&str]) -> SelfSet {
        let len = strings[0].len();
        let mut s = SelfSet::new(0, len);
        for b in strings {
            s.push(antigen(b)).unwrap();
        }
        s
    }

    /// Linear scan over r = 1..=l.
    fn minimal_r_oracle(candidate: &BitString, set: &SelfSet) -> Option<usize> {
        (1..=candidate.len()).find(|&r| {
            set.antigens()
                .iter()
                .all(|a| !r_contiguous_match(candidate, &a.bits, r).unwrap())
        })
    }

    #[test]
    fn empty_self_set_accepts_everything() {
        let set = SelfSet::for_antigens(1);
        let ds = generate_detectors(&set, 5, 10, 42, DEFAULT_BUDGET).unwrap();
        assert_eq!(ds.detectors.len(), 5);
        assert_eq!(ds.stats.iterations, 5);
        assert_eq!(ds.stats.non_valid, 0);
    }

    #[test]
    fn saturated_self_set_exhausts_budget() {
        let all: Vec<String> = (0..16).map(|i| format!("{i:04b}")).collect();
        let refs: Vec<&str> = all.iter().map(|s| s.as_str()).collect();
        let set = self_set_of(&refs);
        let err = generate_detectors(&set, 1, 1, 7, 1000).unwrap_err();
        match err {
            Error::GenerationBudget { node, r, accepted, .. } => {
                assert_eq!((node, r, accepted), (0, 1, 0));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn generated_detectors_pass_audit_and_are_deterministic() {
        let set = self_set_of(&[
            "10000000000100000000001000000000010000000000100000",
            "01000000000100000000000100000000010000000000100000",
        ]);
        let a = generate_detectors(&set, 200, 8, 99, DEFAULT_BUDGET).unwrap();
        let b = generate_detectors(&set, 200, 8, 99, DEFAULT_BUDGET).unwrap();
        assert!(a.audit(&set));
        assert_eq!(
            a.detectors.iter().map(|d| &d.bits).collect::<Vec<_>>(),
            b.detectors.iter().map(|d| &d.bits).collect::<Vec<_>>()
        );
        assert_eq!(a.stats.iterations, b.stats.iterations);
        assert!(generate_detectors(&set, 0, 8, 1, 10).is_err());
        assert!(generate_detectors(&set, 1, 51, 1, 10).is_err());
    }

    #[test]
    fn detect_reports_first_match_and_counts() {
        // Built so that only the second detector shares a 3-run with the antigen.
        let mut ds = DetectorSet {
            node: 0,
            r: 3,
            seed: 0,
            detectors: ["000111", "111010", "010101"]
                .iter()
                .enumerate()
                .map(|(i, b)| Detector::new(i as u32, b.parse().unwrap()))
                .collect(),
            stats: GenerationStats::default(),
        };
        let a = antigen("111000");
        // oracle check of the construction
        let hits: Vec<bool> = ds
            .detectors
            .iter()
            .map(|d| r_contiguous_match(&d.bits, &a.bits, 3).unwrap())
            .collect();
        assert_eq!(hits, vec![false, true, false]);
        assert_eq!(ds.detect(&a), Some(1));
        assert_eq!(ds.detectors[1].match_count, 1);
        assert_eq!(ds.used(), 1);
        assert_eq!(ds.match_all(&a).len(), 1);

        let mut empty = DetectorSet { detectors: vec![], ..ds.clone() };
        assert_eq!(empty.detect(&a), None);
    }

    #[test]
    fn detect_identity() {
        let bits = "0011010110";
        let mut ds = DetectorSet {
            node: 0,
            r: 10,
            seed: 0,
            detectors: vec![Detector::new(0, "1111111111".parse().unwrap()), Detector::new(1, bits.parse().unwrap())],
            stats: GenerationStats::default(),
        };
        assert_eq!(ds.detect(&antigen(bits)), Some(1));
    }

    #[test]
    fn grow_detector_examples() {
        let empty = SelfSet::new(0, 8);
        let c: BitString = "11100111".parse().unwrap();
        assert_eq!(grow_detector(&c, &empty).unwrap(), Some(1));

        let set = self_set_of(&["11110000"]);
        assert_eq!(minimal_r_oracle(&c, &set), Some(4));
        assert_eq!(grow_detector(&c, &set).unwrap(), Some(4));

        let same: BitString = "11110000".parse().unwrap();
        assert_eq!(grow_detector(&same, &set).unwrap(), None);
        assert!(grow_detector(&"101".parse().unwrap(), &set).is_err());
    }

    #[test]
    fn grow_detector_matches_linear_scan() {
        let mut rng = seed::rng(5);
        for len in [5usize, 8, 13, 50] {
            let mut set = SelfSet::new(0, len);
            for _ in 0..4 {
                set.push(Antigen {
                    bits: BitString::random(len, &mut rng).unwrap(),
                    node: 0,
                    window: 0,
                    run: 0,
                })
                .unwrap();
            }
            for _ in 0..200 {
                let c = BitString::random(len, &mut rng).unwrap();
                assert_eq!(grow_detector(&c, &set).unwrap(), minimal_r_oracle(&c, &set));
            }
        }
    }

    #[test]
    fn mean_grown_r_examples() {
        // self 0000000000, candidates with longest agreement 9 and 11
        let set = self_set_of(&["000000000000000000000000"]);
        let c1: BitString = "000000000100000000010101".parse().unwrap();
        let c2: BitString = "000000000001000000000101".parse().unwrap();
        assert_eq!(grow_detector(&c1, &set).unwrap(), Some(10));
        assert_eq!(mean_grown_r(std::slice::from_ref(&c1), &set).unwrap(), 10.0);
        // c2: longest zero run 11 -> r = 12; pair with an r = 8 candidate
        assert_eq!(grow_detector(&c2, &set).unwrap(), Some(12));
        let c3: BitString = "000000010000000100000001".parse().unwrap();
        assert_eq!(grow_detector(&c3, &set).unwrap(), Some(8));
        assert_eq!(mean_grown_r(&[c3, c2], &set).unwrap(), 10.0);

        let rejected: BitString = "000000000000000000000000".parse().unwrap();
        assert!(matches!(
            mean_grown_r(&[rejected], &set),
            Err(Error::AllCandidatesRejected)
        ));
    }

    #[test]
    fn detector_file_round_trip() {
        let set = self_set_of(&["10000000000100000000001000000000010000000000100000"]);
        let ds = generate_detectors(&set, 20, 10, 3, DEFAULT_BUDGET).unwrap();
        let mut buf = Vec::new();
        ds.write_to(&mut buf).unwrap();
        let back = DetectorSet::read_from(&buf[..]).unwrap();
        assert_eq!(back.node, ds.node);
        assert_eq!(back.r, ds.r);
        assert_eq!(back.seed, ds.seed);
        assert_eq!(back.stats.iterations, ds.stats.iterations);
        assert_eq!(fingerprint(&back), fingerprint(&ds));
        let mut again = Vec::new();
        back.write_to(&mut again).unwrap();
        assert_eq!(buf, again);

        assert!(DetectorSet::read_from(&b"garbage\n"[..]).is_err());
    }
}
