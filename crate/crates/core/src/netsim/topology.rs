//! Static unit-disk topologies taken as snapshots of random-waypoint movement.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::Rng;
use rand::seq::{IndexedRandom, SliceRandom};

use crate::error::{Error, Result};
use crate::seed;

pub type NodeId = u32;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Movement parameters of the random-waypoint burn-in.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaypointParams {
    pub min_speed: f64,
    pub max_speed: f64,
    pub max_pause: f64,
    /// Simulated movement time before the snapshot is taken, seconds.
    pub burn_in: f64,
}

impl Default for WaypointParams {
    fn default() -> Self {
        WaypointParams {
            min_speed: 0.5,
            max_speed: 2.0,
            max_pause: 60.0,
            burn_in: 3600.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Topology {
    pub positions: Vec<Position>,
    pub radius: f64,
    adjacency: Vec<Vec<NodeId>>,
}

impl Topology {
    pub fn new(positions: Vec<Position>, radius: f64) -> Self {
        let adjacency = build_edges(&positions, radius);
        Topology {
            positions,
            radius,
            adjacency,
        }
    }

    pub fn node_count(&self) -> usize {
        self.positions.len()
    }

    pub fn neighbors(&self, n: NodeId) -> &[NodeId] {
        &self.adjacency[n as usize]
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.adjacency[a as usize].binary_search(&b).is_ok()
    }

    pub fn mean_degree(&self) -> f64 {
        let total: usize = self.adjacency.iter().map(Vec::len).sum();
        total as f64 / self.node_count().max(1) as f64
    }

    /// Hop distances from `src`; `None` for unreachable nodes.
    pub fn hop_distances(&self, src: NodeId) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.node_count()];
        let mut queue = VecDeque::from([src]);
        dist[src as usize] = Some(0);
        while let Some(u) = queue.pop_front() {
            let d = dist[u as usize].unwrap();
            for &v in self.neighbors(u) {
                if dist[v as usize].is_none() {
                    dist[v as usize] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Nodes within two hops of `n`, excluding `n`.
    pub fn two_hop(&self, n: NodeId) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = self
            .neighbors(n)
            .iter()
            .flat_map(|&m| std::iter::once(m).chain(self.neighbors(m).iter().copied()))
            .filter(|&m| m != n)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Connected components, largest first.
    pub fn components(&self) -> Vec<Vec<NodeId>> {
        let mut seen = vec![false; self.node_count()];
        let mut comps = Vec::new();
        for start in 0..self.node_count() as NodeId {
            if seen[start as usize] {
                continue;
            }
            let mut comp = Vec::new();
            let mut stack = vec![start];
            seen[start as usize] = true;
            while let Some(u) = stack.pop() {
                comp.push(u);
                for &v in self.neighbors(u) {
                    if !seen[v as usize] {
                        seen[v as usize] = true;
                        stack.push(v);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
        comps
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        let mut s = String::new();
        writeln!(s, "# wsn-ais topology v1").unwrap();
        writeln!(s, "radius\t{}", self.radius).unwrap();
        for (i, p) in self.positions.iter().enumerate() {
            writeln!(s, "{i}\t{:.3}\t{:.3}", p.x, p.y).unwrap();
        }
        out.write_all(s.as_bytes())?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut radius = None;
        let mut positions = Vec::new();
        for line in input.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let num = |s: &str| -> Result<f64> {
                s.parse().map_err(|e| Error::Parse(format!("topology field {s:?}: {e}")))
            };
            match fields.as_slice() {
                ["radius", r] => radius = Some(num(r)?),
                [id, x, y] => {
                    let id: usize = id
                        .parse()
                        .map_err(|e| Error::Parse(format!("node id {id:?}: {e}")))?;
                    if id != positions.len() {
                        return Err(Error::Parse(format!("node ids must be dense, got {id}")));
                    }
                    positions.push(Position { x: num(x)?, y: num(y)? });
                }
                _ => return Err(Error::Parse(format!("malformed topology line {line:?}"))),
            }
        }
        let radius = radius.ok_or_else(|| Error::Parse("topology file lacks radius".into()))?;
        Ok(Topology::new(positions, radius))
    }
}

/// Symmetric unit-disk adjacency: `a ~ b` iff `dist(a, b) <= radius`.
/// Neighbor lists are sorted.
pub fn build_edges(positions: &[Position], radius: f64) -> Vec<Vec<NodeId>> {
    let n = positions.len();
    let mut adj = vec![Vec::new(); n];
    // grid bucketing keeps large snapshots near-linear
    let cell = radius.max(1e-9);
    let key = |p: &Position| ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64);
    let mut grid: std::collections::HashMap<(i64, i64), Vec<usize>> = Default::default();
    for (i, p) in positions.iter().enumerate() {
        grid.entry(key(p)).or_default().push(i);
    }
    for (i, p) in positions.iter().enumerate() {
        let (cx, cy) = key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(bucket) = grid.get(&(cx + dx, cy + dy)) {
                    for &j in bucket {
                        if j != i && p.distance(&positions[j]) <= radius {
                            adj[i].push(j as NodeId);
                        }
                    }
                }
            }
        }
        adj[i].sort_unstable();
    }
    adj
}

/// Positions of `n` nodes after `burn_in` seconds of random-waypoint
/// movement in a `width x height` area.
pub fn random_waypoint_snapshot(
    n: usize,
    width: f64,
    height: f64,
    radius: f64,
    params: &WaypointParams,
    seed: u64,
) -> Result<Topology> {
    if n < 2 {
        return Err(Error::Config("a topology needs at least 2 nodes".into()));
    }
    if !(width > 0.0 && height > 0.0 && radius > 0.0) {
        return Err(Error::Config("area and radius must be positive".into()));
    }
    if !(params.min_speed > 0.0 && params.max_speed >= params.min_speed) {
        return Err(Error::Config("waypoint speeds must satisfy 0 < min <= max".into()));
    }
    let positions = (0..n)
        .map(|i| {
            let mut rng = seed::rng(seed::derive(seed, &[i as u64]));
            let mut pos = random_point(&mut rng, width, height);
            let mut t = 0.0;
            loop {
                let target = random_point(&mut rng, width, height);
                let speed = rng.random_range(params.min_speed..=params.max_speed);
                let leg = pos.distance(&target) / speed;
                if t + leg >= params.burn_in {
                    let f = if leg > 0.0 { (params.burn_in - t) / leg } else { 1.0 };
                    break Position {
                        x: pos.x + (target.x - pos.x) * f,
                        y: pos.y + (target.y - pos.y) * f,
                    };
                }
                t += leg;
                pos = target;
                t += rng.random_range(0.0..=params.max_pause);
                if t >= params.burn_in {
                    break pos;
                }
            }
        })
        .collect();
    Ok(Topology::new(positions, radius))
}

fn random_point<R: Rng>(rng: &mut R, width: f64, height: f64) -> Position {
    Position {
        x: rng.random_range(0.0..width),
        y: rng.random_range(0.0..height),
    }
}

/// Pick `count` distinct source/destination pairs whose shortest path is
/// between `min_hops` and `max_hops` hops. No node is an endpoint twice.
pub fn select_connections(
    topology: &Topology,
    count: usize,
    min_hops: u32,
    max_hops: u32,
    seed: u64,
) -> Result<Vec<(NodeId, NodeId)>> {
    let mut rng = seed::rng(seed);
    let mut sources: Vec<NodeId> = (0..topology.node_count() as NodeId).collect();
    sources.shuffle(&mut rng);
    let mut used = vec![false; topology.node_count()];
    let mut pairs = Vec::with_capacity(count);
    for &s in &sources {
        if pairs.len() == count {
            break;
        }
        if used[s as usize] {
            continue;
        }
        let dist = topology.hop_distances(s);
        let mut candidates: Vec<NodeId> = dist
            .iter()
            .enumerate()
            .filter(|&(d, h)| {
                !used[d] && matches!(h, Some(h) if (min_hops..=max_hops).contains(h))
            })
            .map(|(d, _)| d as NodeId)
            .collect();
        // prefer the longest admissible paths
        let best = candidates
            .iter()
            .map(|&d| dist[d as usize].unwrap())
            .max();
        if let Some(best) = best {
            candidates.retain(|&d| dist[d as usize] == Some(best));
            let d = *candidates.choose(&mut rng).unwrap();
            used[s as usize] = true;
            used[d as usize] = true;
            pairs.push((s, d));
        }
    }
    if pairs.len() < count {
        return Err(Error::Config(format!(
            "only {} of {count} connections with {min_hops}..={max_hops} hops exist",
            pairs.len()
        )));
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> Vec<Position> {
        xs.iter().map(|&x| Position { x, y: 0.0 }).collect()
    }

    #[test]
    fn unit_disk_edges() {
        let adj = build_edges(&line(&[0.0, 99.0]), 100.0);
        assert_eq!(adj[0], vec![1]);
        let adj = build_edges(&line(&[0.0, 101.0]), 100.0);
        assert!(adj[0].is_empty() && adj[1].is_empty());
        let t = Topology::new(line(&[0.0, 100.0, 200.0]), 100.0);
        assert!(t.has_edge(0, 1) && t.has_edge(1, 2) && !t.has_edge(0, 2));
        assert_eq!(t.hop_distances(0), vec![Some(0), Some(1), Some(2)]);
        assert_eq!(t.two_hop(0), vec![1, 2]);
    }

    #[test]
    fn snapshot_bounds_and_determinism() {
        let p = WaypointParams::default();
        let a = random_waypoint_snapshot(2, 300.0, 200.0, 50.0, &p, 9).unwrap();
        for pos in &a.positions {
            assert!((0.0..300.0).contains(&pos.x) && (0.0..200.0).contains(&pos.y));
        }
        let b = random_waypoint_snapshot(2, 300.0, 200.0, 50.0, &p, 9).unwrap();
        assert_eq!(a, b);
        assert!(random_waypoint_snapshot(1, 10.0, 10.0, 5.0, &p, 0).is_err());
    }

    #[test]
    fn edges_are_symmetric() {
        let t = random_waypoint_snapshot(200, 1000.0, 1000.0, 120.0, &WaypointParams::default(), 3)
            .unwrap();
        for a in 0..t.node_count() as NodeId {
            for &b in t.neighbors(a) {
                assert!(t.has_edge(b, a));
                assert!(t.positions[a as usize].distance(&t.positions[b as usize]) <= t.radius);
            }
        }
    }

    #[test]
    fn topology_file_round_trip() {
        let t = Topology::new(line(&[0.0, 50.5, 120.25]), 100.0);
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        let back = Topology::read_from(&buf[..]).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn connections_respect_hop_range() {
        let t = Topology::new(line(&[0.0, 100.0, 200.0, 300.0, 400.0, 500.0]), 100.0);
        let pairs = select_connections(&t, 1, 4, 5, 1).unwrap();
        let (s, d) = pairs[0];
        let h = t.hop_distances(s)[d as usize].unwrap();
        assert!((4..=5).contains(&h));
        assert!(select_connections(&t, 1, 6, 9, 1).is_err());
    }
}
