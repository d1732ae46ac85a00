//! Per-node, per-window gene extraction from a simulation trace.
//!
//! Every node acts as a watchdog for the next hops it hands packets to. A
//! handed-over DATA (or RERR) packet counts as forwarded when the node
//! overhears the next hop retransmitting it within the same window; the
//! forwarding delay runs from the ACK the node received to the overheard
//! retransmission. Counters are summed over all next hops before any ratio
//! is taken.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::encoding::{GeneValue, GENE_COUNT};
use crate::error::{Error, Result};
use crate::netsim::{Action, FrameKind, NodeId, Trace};

pub const DEFAULT_WINDOW_SECS: f64 = 500.0;

/// Watchdog counters toward a single next hop.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinkStats {
    pub data_sent: u64,
    pub data_forwarded: u64,
    pub forward_delays: Vec<f64>,
    pub rerr_sent: u64,
    pub rerr_forwarded: u64,
    pub rerr_delays: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct WindowStats {
    pub node: NodeId,
    pub window: u32,
    pub rts_sent: u64,
    pub handshakes_complete: u64,
    pub data_sent_to_next: u64,
    pub data_forwarded_by_next: u64,
    /// Seconds.
    pub forward_delays: Vec<f64>,
    pub rerr_sent_to_next: u64,
    pub rerr_forwarded_by_next: u64,
    pub rerr_delays: Vec<f64>,
    /// DATA frames this node got acknowledged, whoever originated them.
    pub data_packets_forwarded_by_self: u64,
    pub per_next_hop: BTreeMap<NodeId, LinkStats>,
}

impl WindowStats {
    fn new(node: NodeId, window: u32) -> Self {
        WindowStats { node, window, ..Self::default() }
    }

    /// Recompute the aggregate watchdog counters from the per-next-hop parts.
    pub fn summed_over_next_hops(&self) -> LinkStats {
        let mut s = LinkStats::default();
        for l in self.per_next_hop.values() {
            s.data_sent += l.data_sent;
            s.data_forwarded += l.data_forwarded;
            s.forward_delays.extend(&l.forward_delays);
            s.rerr_sent += l.rerr_sent;
            s.rerr_forwarded += l.rerr_forwarded;
            s.rerr_delays.extend(&l.rerr_delays);
        }
        s
    }

    /// Next hop that was handed the most data packets, lowest id on ties.
    pub fn busiest_next_hop(&self) -> Option<NodeId> {
        self.per_next_hop
            .iter()
            .filter(|(_, l)| l.data_sent > 0)
            .max_by(|a, b| a.1.data_sent.cmp(&b.1.data_sent).then(b.0.cmp(a.0)))
            .map(|(&h, _)| h)
    }
}

/// Window index of a clock value: a window is `(k*W, (k+1)*W]`, with the
/// instant 0 in window 0.
pub fn window_of(clock_us: u64, window_us: u64) -> u64 {
    clock_us.saturating_sub(1) / window_us
}

pub fn complete_windows(duration: f64, window: f64) -> u32 {
    (duration / window + 1e-9).floor() as u32
}

#[derive(Clone, Copy)]
struct Handover {
    kind: FrameKind,
    next: NodeId,
    window: u32,
    at: u64,
}

/// Per-node window statistics, indexed `[node][window]`. Only complete
/// windows are kept.
pub fn accumulate(
    trace: &Trace,
    node_count: usize,
    duration: f64,
    window: f64,
) -> Result<Vec<Vec<WindowStats>>> {
    if !trace.is_clock_ordered() {
        return Err(Error::Contract("trace is not clock-ordered".into()));
    }
    if !(window > 0.0) {
        return Err(Error::Contract("window size must be positive".into()));
    }
    let windows = complete_windows(duration, window);
    let window_us = (window * 1e6).round() as u64;
    let mut out: Vec<Vec<WindowStats>> = (0..node_count as NodeId)
        .map(|v| (0..windows).map(|w| WindowStats::new(v, w)).collect())
        .collect();
    // last payload frame each node transmitted, per packet
    let mut sending: HashMap<(NodeId, u64), (FrameKind, NodeId, NodeId)> = HashMap::new();
    let mut watching: HashMap<(NodeId, u64), Handover> = HashMap::new();

    for e in &trace.events {
        let w = window_of(e.clock_us, window_us);
        if w >= windows as u64 {
            break;
        }
        let w = w as u32;
        let Some(ws) = out.get_mut(e.node as usize).map(|n| &mut n[w as usize]) else {
            return Err(Error::Contract(format!("trace names node {} outside the topology", e.node)));
        };
        match (e.kind, e.action) {
            (FrameKind::Rts, Action::Sent) => ws.rts_sent += 1,
            (FrameKind::Data | FrameKind::Rerr | FrameKind::Rrep, Action::Sent) => {
                if let Some(next) = e.next_hop {
                    // data ends at the flow destination, an RERR at the flow source
                    let end = if e.kind == FrameKind::Rerr { e.flow_src } else { e.flow_dst };
                    sending.insert((e.node, e.packet_id), (e.kind, next, end));
                }
            }
            (FrameKind::Ack, Action::Received) => {
                ws.handshakes_complete += 1;
                let Some((kind, next, end)) = sending.remove(&(e.node, e.packet_id)) else {
                    continue;
                };
                if kind == FrameKind::Data {
                    ws.data_packets_forwarded_by_self += 1;
                }
                // nothing to watch when the next hop is the packet's final stop
                if next == end || kind == FrameKind::Rrep {
                    continue;
                }
                let link = ws.per_next_hop.entry(next).or_default();
                match kind {
                    FrameKind::Data => {
                        ws.data_sent_to_next += 1;
                        link.data_sent += 1;
                    }
                    _ => {
                        ws.rerr_sent_to_next += 1;
                        link.rerr_sent += 1;
                    }
                }
                watching.insert((e.node, e.packet_id), Handover { kind, next, window: w, at: e.clock_us });
            }
            (FrameKind::Data | FrameKind::Rerr, Action::Overheard) => {
                let Some(h) = watching.remove(&(e.node, e.packet_id)) else { continue };
                if h.window != w {
                    continue;
                }
                let delay = (e.clock_us - h.at) as f64 * 1e-6;
                let link = ws.per_next_hop.entry(h.next).or_default();
                if h.kind == FrameKind::Data {
                    ws.data_forwarded_by_next += 1;
                    ws.forward_delays.push(delay);
                    link.data_forwarded += 1;
                    link.forward_delays.push(delay);
                } else {
                    ws.rerr_forwarded_by_next += 1;
                    ws.rerr_delays.push(delay);
                    link.rerr_forwarded += 1;
                    link.rerr_delays.push(delay);
                }
            }
            _ => {}
        }
    }
    Ok(out)
}

fn mean_or_zero(xs: &[f64]) -> GeneValue {
    if xs.is_empty() {
        GeneValue::ZERO
    } else {
        GeneValue::new(xs.iter().sum::<f64>() / xs.len() as f64).expect("delays are non-negative")
    }
}

/// Complete handshakes per RTS sent.
pub fn gene1(ws: &WindowStats) -> GeneValue {
    GeneValue::ratio(ws.handshakes_complete, ws.rts_sent)
}

/// Fraction of handed-over data packets the next hops were heard forwarding.
pub fn gene2(ws: &WindowStats) -> GeneValue {
    GeneValue::ratio(ws.data_forwarded_by_next, ws.data_sent_to_next)
}

/// Mean time a data packet spent at the next hop, seconds.
pub fn gene3(ws: &WindowStats) -> GeneValue {
    mean_or_zero(&ws.forward_delays)
}

pub fn gene4(ws: &WindowStats) -> GeneValue {
    GeneValue::ratio(ws.rerr_forwarded_by_next, ws.rerr_sent_to_next)
}

pub fn gene5(ws: &WindowStats) -> GeneValue {
    mean_or_zero(&ws.rerr_delays)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneVector {
    pub genes: [GeneValue; GENE_COUNT],
    pub node: NodeId,
    pub window: u32,
    pub run: u32,
}

impl GeneVector {
    pub fn from_stats(ws: &WindowStats, run: u32) -> Self {
        GeneVector {
            genes: [gene1(ws), gene2(ws), gene3(ws), gene4(ws), gene5(ws)],
            node: ws.node,
            window: ws.window,
            run,
        }
    }
}

pub const GENE_TABLE_HEADER: &str = "run,node,window,rts_sent,handshakes_complete,\
data_sent_to_next,data_forwarded_by_next,mean_forward_delay,rerr_sent_to_next,\
rerr_forwarded_by_next,mean_rerr_delay,data_forwarded_by_self,g1,g2,g3,g4,g5,next_hops";

/// One CSV row per window; `next_hops` lists `hop:sent/forwarded` pairs.
pub fn gene_table_row(ws: &WindowStats, run: u32) -> String {
    let g = GeneVector::from_stats(ws, run).genes;
    let mut row = format!(
        "{run},{},{},{},{},{},{},{},{},{},{},{}",
        ws.node,
        ws.window,
        ws.rts_sent,
        ws.handshakes_complete,
        ws.data_sent_to_next,
        ws.data_forwarded_by_next,
        g[2],
        ws.rerr_sent_to_next,
        ws.rerr_forwarded_by_next,
        g[4],
        ws.data_packets_forwarded_by_self,
    );
    for v in g {
        write!(row, ",{v}").unwrap();
    }
    row.push(',');
    let hops: Vec<String> = ws
        .per_next_hop
        .iter()
        .map(|(h, l)| format!("{h}:{}/{}", l.data_sent, l.data_forwarded))
        .collect();
    row.push_str(&hops.join(" "));
    row
}
