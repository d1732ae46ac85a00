//! Interval encoding of gene values into one-hot 10-bit signatures, and
//! antigen construction by concatenating the five signatures.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bitmatch::BitString;
use crate::error::{Error, Result};

pub const GENE_COUNT: usize = 5;
pub const GENE_BITS: usize = 10;
pub const ANTIGEN_BITS: usize = GENE_COUNT * GENE_BITS;

/// Smallest admissible width of a calibrated delay range, in seconds.
pub const MIN_DELAY_RANGE: f64 = 1e-3;
const RANGE_INFLATION: f64 = 1.1;

/// A gene measurement: a non-negative real, or the "no traffic" sentinel
/// used by the ratio genes.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct GeneValue(f64);

impl GeneValue {
    pub const INFINITY: GeneValue = GeneValue(f64::INFINITY);
    pub const ZERO: GeneValue = GeneValue(0.0);

    pub fn new(v: f64) -> Result<Self> {
        if v.is_nan() || v < 0.0 {
            return Err(Error::Contract(format!("gene value must be >= 0, got {v}")));
        }
        Ok(GeneValue(v))
    }

    /// `num / den`, or the sentinel when `den == 0`.
    pub fn ratio(num: u64, den: u64) -> Self {
        if den == 0 {
            Self::INFINITY
        } else {
            GeneValue(num as f64 / den as f64)
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }
}

impl fmt::Display for GeneValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// Unit family of a gene; decides the calibration floor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeneKind {
    Ratio,
    Delay,
}

/// Gene order inside an antigen: handshake ratio, data forwarding ratio,
/// data forwarding delay, RERR forwarding ratio, RERR forwarding delay.
pub const GENE_KINDS: [GeneKind; GENE_COUNT] = [
    GeneKind::Ratio,
    GeneKind::Ratio,
    GeneKind::Delay,
    GeneKind::Ratio,
    GeneKind::Delay,
];

/// Value range partitioned into 10 equal bins.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeSpec {
    pub lower: f64,
    pub upper: f64,
}

impl RangeSpec {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(Error::Contract(format!("invalid range [{lower}, {upper}]")));
        }
        Ok(RangeSpec { lower, upper })
    }

    /// Bin index in `0..10`. The infinity sentinel lands in the top bin.
    pub fn bin(&self, v: GeneValue) -> Result<usize> {
        let x = v.value();
        if x.is_nan() {
            return Err(Error::Contract("gene value is NaN".into()));
        }
        if x.is_infinite() {
            return Ok(GENE_BITS - 1);
        }
        let scaled = ((x - self.lower) / (self.upper - self.lower) * GENE_BITS as f64).floor();
        Ok(scaled.clamp(0.0, (GENE_BITS - 1) as f64) as usize)
    }
}

/// One-hot 10-bit signature of `v`.
pub fn encode_gene(v: GeneValue, spec: &RangeSpec) -> Result<BitString> {
    let bin = spec.bin(v)?;
    BitString::with_ones(GENE_BITS, [bin])
}

/// Per-gene ranges of one node.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneRanges(pub [RangeSpec; GENE_COUNT]);

impl GeneRanges {
    /// The bin of every gene, in gene order.
    pub fn bins(&self, genes: &[GeneValue; GENE_COUNT]) -> Result<[usize; GENE_COUNT]> {
        let mut out = [0; GENE_COUNT];
        for (i, (g, spec)) in genes.iter().zip(self.0.iter()).enumerate() {
            out[i] = spec.bin(*g)?;
        }
        Ok(out)
    }
}

/// Concatenate the five one-hot signatures in gene order.
pub fn build_antigen_bits(genes: &[GeneValue; GENE_COUNT], ranges: &GeneRanges) -> Result<BitString> {
    let bins = ranges.bins(genes)?;
    BitString::with_ones(
        ANTIGEN_BITS,
        bins.iter().enumerate().map(|(g, b)| g * GENE_BITS + b),
    )
}

/// A node's encoded behavior in one time window of one run.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Antigen {
    pub bits: BitString,
    pub node: u32,
    pub window: u32,
    pub run: u32,
}

impl Antigen {
    pub fn build(
        genes: &[GeneValue; GENE_COUNT],
        ranges: &GeneRanges,
        node: u32,
        window: u32,
        run: u32,
    ) -> Result<Self> {
        Ok(Antigen {
            bits: build_antigen_bits(genes, ranges)?,
            node,
            window,
            run,
        })
    }
}

/// True iff `bits` is 50 bits long with exactly one set bit per 10-bit field.
pub fn is_well_formed_antigen(bits: &BitString) -> bool {
    bits.len() == ANTIGEN_BITS
        && (0..GENE_COUNT).all(|g| {
            (g * GENE_BITS..(g + 1) * GENE_BITS)
                .filter(|&i| bits.get(i))
                .count()
                == 1
        })
}

/// Range of one gene from its self samples: `[0, 1.1 * max finite]`, with
/// ratio ranges reaching at least 1 and delay ranges at least 1 ms wide.
/// Infinite samples are ignored.
pub fn calibrate_gene(values: &[GeneValue], kind: GeneKind) -> Result<RangeSpec> {
    if values.is_empty() {
        return Err(Error::EmptySamples);
    }
    let max = values
        .iter()
        .map(|v| v.value())
        .filter(|v| v.is_finite())
        .fold(0.0_f64, f64::max);
    let floor = match kind {
        GeneKind::Ratio => 1.0,
        GeneKind::Delay => MIN_DELAY_RANGE,
    };
    RangeSpec::new(0.0, (max * RANGE_INFLATION).max(floor))
}

/// Per-gene ranges from a node's self samples.
pub fn calibrate_ranges(samples: &[[GeneValue; GENE_COUNT]]) -> Result<GeneRanges> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut specs = [RangeSpec { lower: 0.0, upper: 1.0 }; GENE_COUNT];
    for (g, spec) in specs.iter_mut().enumerate() {
        let column: Vec<GeneValue> = samples.iter().map(|s| s[g]).collect();
        *spec = calibrate_gene(&column, GENE_KINDS[g])?;
    }
    Ok(GeneRanges(specs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gv(v: f64) -> GeneValue {
        GeneValue::new(v).unwrap()
    }

    fn unit() -> RangeSpec {
        RangeSpec::new(0.0, 1.0).unwrap()
    }

    #[test]
    fn encode_gene_examples() {
        assert_eq!(encode_gene(gv(0.55), &unit()).unwrap().to_string(), "0000010000");
        assert_eq!(encode_gene(GeneValue::INFINITY, &unit()).unwrap().to_string(), "0000000001");
        assert_eq!(encode_gene(gv(0.0), &unit()).unwrap().to_string(), "1000000000");
        assert_eq!(encode_gene(gv(7.0), &unit()).unwrap().to_string(), "0000000001");
    }

    #[test]
    fn nan_and_negative_rejected() {
        assert!(GeneValue::new(f64::NAN).is_err());
        assert!(GeneValue::new(-0.1).is_err());
        // NaN can only be smuggled in through the raw field; bin() still refuses it.
        assert!(unit().bin(GeneValue(f64::NAN)).is_err());
        assert!(RangeSpec::new(1.0, 1.0).is_err());
    }

    #[test]
    fn antigen_examples() {
        let ranges = GeneRanges([unit(); GENE_COUNT]);
        let low = build_antigen_bits(&[gv(0.0); GENE_COUNT], &ranges).unwrap();
        assert_eq!(low.ones().collect::<Vec<_>>(), vec![0, 10, 20, 30, 40]);
        let high = build_antigen_bits(&[GeneValue::INFINITY; GENE_COUNT], &ranges).unwrap();
        assert_eq!(high.ones().collect::<Vec<_>>(), vec![9, 19, 29, 39, 49]);

        let half = RangeSpec::new(0.0, 0.5).unwrap();
        let ranges = GeneRanges([unit(), unit(), half, unit(), half]);
        let genes = [gv(0.7), gv(0.8), gv(0.05), gv(1.0), gv(0.0)];
        // floor(7.0), floor(8.0), floor(0.05/0.5*10)=1, clamp(10)=9, 0
        assert_eq!(ranges.bins(&genes).unwrap(), [7, 8, 1, 9, 0]);
        let a = Antigen::build(&genes, &ranges, 3, 1, 0).unwrap();
        assert!(is_well_formed_antigen(&a.bits));
        assert_eq!(a.bits.count_ones(), 5);
    }

    #[test]
    fn calibration_examples() {
        let r = calibrate_gene(&[gv(0.4), gv(1.0), gv(0.9)], GeneKind::Ratio).unwrap();
        assert_eq!(r.lower, 0.0);
        assert!((r.upper - 1.1).abs() < 1e-12);

        let r = calibrate_gene(&[gv(0.0), gv(0.0)], GeneKind::Delay).unwrap();
        assert_eq!(r.upper, MIN_DELAY_RANGE);

        let vals = [gv(0.2), gv(0.5), GeneValue::INFINITY];
        let r = calibrate_gene(&vals, GeneKind::Delay).unwrap();
        assert!((r.upper - 0.55).abs() < 1e-12);
        assert_eq!(r.bin(GeneValue::INFINITY).unwrap(), 9);

        // ratios never calibrate below 1
        let r = calibrate_gene(&[gv(0.3)], GeneKind::Ratio).unwrap();
        assert_eq!(r.upper, 1.0);

        assert!(matches!(calibrate_ranges(&[]), Err(Error::EmptySamples)));
        assert!(matches!(calibrate_gene(&[], GeneKind::Delay), Err(Error::EmptySamples)));
    }

    #[test]
    fn calibration_is_order_independent() {
        let a = [[gv(0.1), gv(0.9), gv(0.02), GeneValue::INFINITY, gv(0.0)],
                 [gv(0.8), gv(1.0), gv(0.01), GeneValue::INFINITY, gv(0.0)]];
        let b = [a[1], a[0]];
        assert_eq!(calibrate_ranges(&a).unwrap(), calibrate_ranges(&b).unwrap());
    }

    #[test]
    fn exactly_ten_images_per_gene() {
        let spec = RangeSpec::new(0.0, 2.0).unwrap();
        let images: std::collections::BTreeSet<String> = (0..=400)
            .map(|i| encode_gene(gv(i as f64 * 0.01), &spec).unwrap().to_string())
            .chain(std::iter::once(encode_gene(GeneValue::INFINITY, &spec).unwrap().to_string()))
            .collect();
        assert_eq!(images.len(), GENE_BITS);
    }
}
