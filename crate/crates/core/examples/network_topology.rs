//! Random-waypoint snapshot and connection selection.

use wsn_ais::netsim::{random_waypoint_snapshot, select_connections, WaypointParams};

fn main() -> wsn_ais::Result<()> {
    let n = 1718;
    let t = random_waypoint_snapshot(n, 2900.0, 2950.0, 100.0, &WaypointParams::default(), 1)?;
    let comps = t.components();
    let giant = comps.iter().map(Vec::len).max().unwrap_or(0);
    println!(
        "{n} nodes, mean degree {:.2}, {} components, giant {:.1}%",
        t.mean_degree(),
        comps.len(),
        100.0 * giant as f64 / n as f64
    );
    for (s, d) in select_connections(&t, 10, 6, 8, 2)? {
        println!("{s:4} -> {d:4}  {} hops", t.hop_distances(s)[d as usize].unwrap());
    }
    Ok(())
}
