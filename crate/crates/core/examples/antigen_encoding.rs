//! Calibrating per-gene ranges and encoding gene vectors as 50-bit antigens.

use wsn_ais::encoding::{calibrate_ranges, Antigen, GeneValue, GENE_COUNT};

const INF: f64 = f64::INFINITY;

fn genes(v: [f64; GENE_COUNT]) -> [GeneValue; GENE_COUNT] {
    v.map(|x| GeneValue::new(x).unwrap())
}

fn main() -> wsn_ais::Result<()> {
    // handshakes per RTS, forwarded fraction, forward delay (s), RERR forwarded fraction, RERR delay (s)
    let normal = [
        genes([0.94, 0.91, 0.0038, INF, 0.0]),
        genes([0.95, 0.90, 0.0032, INF, 0.0]),
        genes([0.93, 0.92, 0.0036, INF, 0.0]),
        genes([0.88, 0.89, 0.0041, INF, 0.0]),
    ];
    let ranges = calibrate_ranges(&normal)?;
    for (g, spec) in ranges.0.iter().enumerate() {
        println!("gene{} range [{:.4}, {:.4}]", g + 1, spec.lower, spec.upper);
    }

    let dropping = genes([0.90, 0.45, 0.0035, INF, 0.0]);
    let mut silent = dropping;
    silent[1] = GeneValue::new(0.0)?;
    for (name, g) in [("normal", normal[0]), ("dropping", dropping), ("silent", silent)] {
        let a = Antigen::build(&g, &ranges, 0, 0, 0)?;
        println!("{name:9} bins {:?}\n{:9} {}", ranges.bins(&g)?, "", a.bits);
    }
    Ok(())
}
