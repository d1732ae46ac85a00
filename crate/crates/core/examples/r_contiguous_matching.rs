//! r-contiguous matching between two antigen-sized strings, first-match and
//! exhaustive.

use wsn_ais::bitmatch::{all_match_spans, genes_touched, r_contiguous_match, BitString};
use wsn_ais::encoding::{ANTIGEN_BITS, GENE_BITS};

fn main() -> wsn_ais::Result<()> {
    // one set bit per 10-bit gene
    let a = BitString::with_ones(ANTIGEN_BITS, [3, 12, 25, 31, 48])?;
    let b = BitString::with_ones(ANTIGEN_BITS, [3, 12, 27, 31, 40])?;
    println!("a = {a}\nb = {b}");

    for r in [4, 10, 13, 20] {
        let hit = r_contiguous_match(&a, &b, r)?;
        let spans = all_match_spans(&a, &b, r)?;
        println!("r={r:2} match={hit:5} spans={}", spans.len());
        for s in spans {
            println!("    bits {}..{} genes {:?}", s.position, s.end(), genes_touched(s, GENE_BITS));
        }
    }
    Ok(())
}
