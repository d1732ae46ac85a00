//! Censoring random candidates against a self set; non-valid rate by r.

use std::time::Instant;

use wsn_ais::bitmatch::BitString;
use wsn_ais::encoding::{is_well_formed_antigen, Antigen, ANTIGEN_BITS, GENE_BITS, GENE_COUNT};
use wsn_ais::negsel::{generate_detectors, mean_grown_r, SelfSet, DEFAULT_BUDGET};
use wsn_ais::seed;

fn main() -> wsn_ais::Result<()> {
    // a self set clustered in the low bins, as a quiet node's would be
    let mut rng = seed::rng(42);
    let mut self_set = SelfSet::for_antigens(0);
    for w in 0..200 {
        let ones: Vec<usize> = (0..GENE_COUNT)
            .map(|g| g * GENE_BITS + rand::Rng::random_range(&mut rng, 0..3))
            .collect();
        let bits = BitString::with_ones(ANTIGEN_BITS, ones)?;
        assert!(is_well_formed_antigen(&bits));
        self_set.push(Antigen { bits, node: 0, window: w, run: 0 })?;
    }
    println!("{} self antigens, {} distinct", self_set.len(), self_set.distinct().len());

    for r in [7, 10, 13] {
        let t = Instant::now();
        let set = generate_detectors(&self_set, 1000, r, seed::derive(7, &[r as u64]), DEFAULT_BUDGET)?;
        println!(
            "r={r:2} {} detectors from {} candidates, non-valid {:.4}, audit {}, {:?}",
            set.detectors.len(),
            set.stats.iterations,
            set.stats.non_valid_rate(),
            set.audit(&self_set),
            t.elapsed()
        );
    }

    let candidates: Vec<BitString> =
        (0..500).map(|_| BitString::random(ANTIGEN_BITS, &mut rng)).collect::<Result<_, _>>()?;
    println!("grown detectors: mean r {:.2}", mean_grown_r(&candidates, &self_set)?);
    Ok(())
}
