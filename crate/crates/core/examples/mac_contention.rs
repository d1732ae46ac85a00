//! Handshake success and RTS cost as the contender count grows.

use wsn_ais::netsim::{mac_handshake, MacParams};
use wsn_ais::seed;

fn main() {
    let params = MacParams::default();
    let mut rng = seed::rng(3);
    println!("contenders  stage_failure  complete  rts/handshake");
    for c in [0, 1, 2, 4, 8, 16] {
        let trials = 20_000;
        let (mut ok, mut rts) = (0u32, 0u32);
        for _ in 0..trials {
            let h = mac_handshake(&params, c, &mut rng);
            ok += h.complete as u32;
            rts += h.rts_sent;
        }
        println!(
            "{c:10}  {:13.3}  {:8.4}  {:13.3}",
            params.stage_failure(c),
            ok as f64 / trials as f64,
            rts as f64 / ok.max(1) as f64
        );
    }
}
