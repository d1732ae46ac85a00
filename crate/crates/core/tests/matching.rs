//! Matching against naive oracles written from the definition.

use proptest::prelude::*;
use wsn_ais::bitmatch::{all_match_spans, genes_touched, r_contiguous_match, BitString, MatchSpan};

fn bits_of(x: u64, len: usize) -> Vec<bool> {
    (0..len).map(|i| x >> i & 1 == 1).collect()
}

/// Some offset where r consecutive positions agree.
fn oracle_match(a: &[bool], b: &[bool], r: usize) -> bool {
    (0..=a.len() - r).any(|s| (s..s + r).all(|i| a[i] == b[i]))
}

/// Maximal runs of agreement of length at least r, as (start, len).
fn oracle_spans(a: &[bool], b: &[bool], r: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < a.len() {
        if a[i] != b[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < a.len() && a[i] == b[i] {
            i += 1;
        }
        if i - start >= r {
            out.push((start, i - start));
        }
    }
    out
}

fn check(a: &[bool], b: &[bool], r: usize) {
    let (sa, sb) = (BitString::from_bits(a).unwrap(), BitString::from_bits(b).unwrap());
    assert_eq!(r_contiguous_match(&sa, &sb, r).unwrap(), oracle_match(a, b, r), "{sa} {sb} r={r}");
    let spans: Vec<(usize, usize)> =
        all_match_spans(&sa, &sb, r).unwrap().iter().map(|s| (s.position, s.length)).collect();
    assert_eq!(spans, oracle_spans(a, b, r), "{sa} {sb} r={r}");
}

#[test]
fn exhaustive_up_to_six_bits() {
    for len in 1..=6usize {
        for x in 0..1u64 << len {
            for y in 0..1u64 << len {
                let (a, b) = (bits_of(x, len), bits_of(y, len));
                for r in 1..=len {
                    check(&a, &b, r);
                }
            }
        }
    }
}

#[test]
fn random_pairs_up_to_twelve_bits() {
    let mut rng = wsn_ais::seed::rng(11);
    for _ in 0..100_000 {
        let len = rand::Rng::random_range(&mut rng, 1..=12usize);
        let r = rand::Rng::random_range(&mut rng, 1..=len);
        let (x, y): (u64, u64) = (rand::Rng::random(&mut rng), rand::Rng::random(&mut rng));
        check(&bits_of(x, len), &bits_of(y, len), r);
    }
}

proptest! {
    #[test]
    fn long_strings_agree_with_oracle(a in prop::collection::vec(any::<bool>(), 1..200), seed: u64, r_frac in 0.0..1.0f64) {
        // b is a with a few flipped bits so long agreements are common
        let mut rng = wsn_ais::seed::rng(seed);
        let b: Vec<bool> = a.iter().map(|&x| x ^ (rand::Rng::random::<f64>(&mut rng) < 0.1)).collect();
        let r = 1 + ((a.len() - 1) as f64 * r_frac) as usize;
        check(&a, &b, r);
    }

    #[test]
    fn matching_is_symmetric_and_monotone_in_r(x: u64, y: u64, r in 1usize..64) {
        let (a, b) = (BitString::from_bits(&bits_of(x, 64)).unwrap(), BitString::from_bits(&bits_of(y, 64)).unwrap());
        let m = r_contiguous_match(&a, &b, r).unwrap();
        prop_assert_eq!(m, r_contiguous_match(&b, &a, r).unwrap());
        if m {
            prop_assert!(r_contiguous_match(&a, &b, r - 1).unwrap_or(true) || r == 1);
        } else {
            prop_assert!(!r_contiguous_match(&a, &b, r + 1).unwrap_or(false));
        }
        prop_assert_eq!(m, !all_match_spans(&a, &b, r).unwrap().is_empty());
    }

    #[test]
    fn spans_touch_the_genes_they_cover(position in 0usize..50, length in 1usize..50) {
        let length = length.min(50 - position);
        let genes = genes_touched(MatchSpan { position, length }, 10);
        let expected: std::collections::BTreeSet<usize> = (position..position + length).map(|i| i / 10).collect();
        prop_assert_eq!(genes, expected);
    }
}
