//! Event-driven simulation run: traffic sources, DSR-style source routing,
//! the handshake MAC of [`super::mac`], promiscuous overhearing and
//! packet-dropping misbehavior.
//!
//! Events are processed from one global queue ordered by
//! `(clock_us, insertion sequence)`, so a run is a pure function of its
//! [`Scenario`].

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashSet, VecDeque};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::mac::{MacParams, ACK_BYTES, CTS_BYTES, MAC_HEADER_BYTES, RTS_BYTES};
use super::topology::{NodeId, Topology};
use super::trace::{Action, FrameKind, PacketEvent, Trace};
use crate::error::{Error, Result};
use crate::seed;

const CONTROL_HEADER_BYTES: u32 = 32;
const REBROADCAST_TAG: u64 = 0x5252_4551;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrafficModel {
    Cbr,
    Poisson,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Connection {
    pub src: NodeId,
    pub dst: NodeId,
    pub model: TrafficModel,
    /// Packets per second (mean rate for Poisson).
    pub rate: f64,
    pub packet_size: u32,
}

/// Nodes that drop a fraction of the packets they should forward.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MisbehaviorPlan {
    pub nodes: BTreeSet<NodeId>,
    pub drop_probability: f64,
}

impl MisbehaviorPlan {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn new(nodes: impl IntoIterator<Item = NodeId>, drop_probability: f64) -> Result<Self> {
        let nodes: BTreeSet<NodeId> = nodes.into_iter().collect();
        if !nodes.is_empty() && !(drop_probability > 0.0 && drop_probability <= 1.0) {
            return Err(Error::Config(format!(
                "drop probability must be in (0, 1], got {drop_probability}"
            )));
        }
        Ok(MisbehaviorPlan { nodes, drop_probability })
    }
}

/// Per-node overrides for scripted scenarios.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NodeScript {
    /// Drop probability applied on top of the plan.
    pub drop_probability: f64,
    /// Seconds a packet is held before it enters the forwarding queue.
    pub hold: f64,
    /// Time at which the node stops operating, seconds.
    pub fail_at: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimConfig {
    pub mac: MacParams,
    pub queue_capacity: usize,
    /// Data packets a source buffers while it has no route.
    pub send_buffer_capacity: usize,
    pub rreq_timeout: f64,
    pub rreq_timeout_max: f64,
    /// Upper bound of the delay before an RREQ is rebroadcast, seconds.
    pub rreq_jitter: f64,
    /// Promiscuous reception fails like a handshake stage would at the
    /// listener's contention level.
    pub overhear_loss: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            mac: MacParams::default(),
            queue_capacity: 50,
            send_buffer_capacity: 50,
            rreq_timeout: 10.0,
            rreq_timeout_max: 40.0,
            rreq_jitter: 1.0,
            overhear_loss: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub topology: Topology,
    pub connections: Vec<Connection>,
    pub plan: MisbehaviorPlan,
    pub scripts: BTreeMap<NodeId, NodeScript>,
    /// Seconds.
    pub duration: f64,
    pub seed: u64,
    pub config: SimConfig,
}

impl Scenario {
    pub fn new(topology: Topology, connections: Vec<Connection>, duration: f64, seed: u64) -> Self {
        Scenario {
            topology,
            connections,
            plan: MisbehaviorPlan::none(),
            scripts: BTreeMap::new(),
            duration,
            seed,
            config: SimConfig::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.topology.node_count() as NodeId;
        if !(self.duration > 0.0) {
            return Err(Error::Config("duration must be positive".into()));
        }
        for c in &self.connections {
            if c.src == c.dst || c.src >= n || c.dst >= n {
                return Err(Error::Config(format!("bad connection {} -> {}", c.src, c.dst)));
            }
            if !(c.rate > 0.0) {
                return Err(Error::Config("connection rate must be positive".into()));
            }
        }
        if let Some(&bad) = self.plan.nodes.iter().find(|&&v| v >= n) {
            return Err(Error::Config(format!("misbehaving node {bad} not in topology")));
        }
        Ok(())
    }
}

/// Fate of the data packets of one flow (or all flows) at the horizon.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FlowAccounting {
    pub injected: u64,
    pub delivered: u64,
    pub dropped_misbehavior: u64,
    pub dropped_contention: u64,
    pub in_flight: u64,
}

impl FlowAccounting {
    pub fn is_conserved(&self) -> bool {
        self.injected
            == self.delivered + self.dropped_misbehavior + self.dropped_contention + self.in_flight
    }

    fn add(&mut self, o: &FlowAccounting) {
        self.injected += o.injected;
        self.delivered += o.delivered;
        self.dropped_misbehavior += o.dropped_misbehavior;
        self.dropped_contention += o.dropped_contention;
        self.in_flight += o.in_flight;
    }
}

#[derive(Clone, Debug)]
pub struct SimOutcome {
    pub trace: Trace,
    pub flows: Vec<FlowAccounting>,
    pub total: FlowAccounting,
    /// Data packets each node received for forwarding.
    pub relayed: Vec<u64>,
    /// Data packets each node dropped on purpose.
    pub dropped_on_purpose: Vec<u64>,
    /// Mean number of backlogged two-hop neighbors seen at channel access.
    pub mean_contenders: Vec<f64>,
}

impl SimOutcome {
    /// Mean over nodes that accessed the channel at least once.
    pub fn network_contention(&self) -> f64 {
        let active: Vec<f64> = self.mean_contenders.iter().copied().filter(|c| !c.is_nan()).collect();
        if active.is_empty() {
            0.0
        } else {
            active.iter().sum::<f64>() / active.len() as f64
        }
    }
}

#[derive(Clone, Debug)]
struct Packet {
    id: u64,
    kind: FrameKind,
    flow: Option<usize>,
    flow_src: NodeId,
    flow_dst: NodeId,
    size: u32,
    /// Source route. For an RREQ, the path travelled so far.
    route: Vec<NodeId>,
    /// Index of the current holder in `route`.
    hop: usize,
    req_id: u32,
    broken: Option<(NodeId, NodeId)>,
    /// Node that handed the packet to its current holder.
    prev_hop: Option<NodeId>,
    overheard: bool,
}

impl Packet {
    fn holder(&self) -> NodeId {
        self.route[self.hop]
    }

    fn next_hop(&self) -> Option<NodeId> {
        match self.kind {
            FrameKind::Rreq => None,
            _ => self.route.get(self.hop + 1).copied(),
        }
    }

    fn uses_link(&self, a: NodeId, b: NodeId) -> bool {
        self.kind != FrameKind::Rreq && self.route.windows(2).any(|w| w[0] == a && w[1] == b)
    }
}

#[derive(Debug)]
enum Ev {
    Inject(usize),
    MacAttempt(NodeId),
    Stage1Done(NodeId, bool),
    Stage2Done(NodeId, bool),
    BroadcastDone(NodeId),
    Enqueue(NodeId, Packet),
    RreqTimeout(NodeId, NodeId, u32),
    Fail(NodeId),
}

struct Scheduled {
    at: u64,
    seq: u64,
    ev: Ev,
}

impl PartialEq for Scheduled {
    fn eq(&self, o: &Self) -> bool {
        (self.at, self.seq) == (o.at, o.seq)
    }
}
impl Eq for Scheduled {}
impl PartialOrd for Scheduled {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Scheduled {
    fn cmp(&self, o: &Self) -> Ordering {
        // min-heap on (at, seq)
        (o.at, o.seq).cmp(&(self.at, self.seq))
    }
}

struct Discovery {
    req_id: u32,
    timeout_us: u64,
}

#[derive(Default)]
struct Node {
    alive: bool,
    queue: VecDeque<Packet>,
    mac_active: bool,
    short_retries: u32,
    long_retries: u32,
    busy_until: u64,
    routes: BTreeMap<NodeId, Vec<NodeId>>,
    send_buffer: VecDeque<Packet>,
    discovery: BTreeMap<NodeId, Discovery>,
    seen_rreq: HashSet<(NodeId, u32)>,
    next_req_id: u32,
    drop_probability: f64,
    hold_us: u64,
    contender_sum: u64,
    contender_samples: u64,
}

struct Sim<'a> {
    sc: &'a Scenario,
    mac: MacParams,
    rng: ChaCha8Rng,
    now: u64,
    seq: u64,
    heap: BinaryHeap<Scheduled>,
    nodes: Vec<Node>,
    two_hop: Vec<Vec<NodeId>>,
    events: Vec<PacketEvent>,
    flows: Vec<FlowAccounting>,
    relayed: Vec<u64>,
    dropped_on_purpose: Vec<u64>,
    next_packet: u64,
}

fn us(secs: f64) -> u64 {
    (secs * 1e6).round() as u64
}

/// Run one simulation to its horizon.
pub fn run_simulation(scenario: &Scenario) -> Result<SimOutcome> {
    scenario.validate()?;
    let topo = &scenario.topology;
    let n = topo.node_count();
    let mut nodes: Vec<Node> = (0..n).map(|_| Node { alive: true, ..Node::default() }).collect();
    for &v in &scenario.plan.nodes {
        nodes[v as usize].drop_probability = scenario.plan.drop_probability;
    }
    for (&v, s) in &scenario.scripts {
        let node = nodes
            .get_mut(v as usize)
            .ok_or_else(|| Error::Config(format!("scripted node {v} not in topology")))?;
        // independent drop chances compose
        node.drop_probability = 1.0 - (1.0 - node.drop_probability) * (1.0 - s.drop_probability);
        node.hold_us = us(s.hold);
    }
    let mut sim = Sim {
        sc: scenario,
        mac: scenario.config.mac,
        rng: seed::rng(scenario.seed),
        now: 0,
        seq: 0,
        heap: BinaryHeap::new(),
        nodes,
        two_hop: (0..n as NodeId).map(|v| topo.two_hop(v)).collect(),
        events: Vec::new(),
        flows: vec![FlowAccounting::default(); scenario.connections.len()],
        relayed: vec![0; n],
        dropped_on_purpose: vec![0; n],
        next_packet: 0,
    };
    for (v, s) in &scenario.scripts {
        if let Some(t) = s.fail_at {
            sim.schedule(us(t), Ev::Fail(*v));
        }
    }
    for (f, c) in scenario.connections.iter().enumerate() {
        let offset = sim.rng.random_range(0.0..1.0 / c.rate);
        sim.schedule(us(offset), Ev::Inject(f));
    }
    let horizon = us(scenario.duration);
    while let Some(s) = sim.heap.peek() {
        if s.at > horizon {
            break;
        }
        let s = sim.heap.pop().unwrap();
        sim.now = s.at;
        sim.dispatch(s.ev);
    }
    Ok(sim.finish(horizon))
}

impl<'a> Sim<'a> {
    fn schedule(&mut self, at: u64, ev: Ev) {
        self.seq += 1;
        self.heap.push(Scheduled { at, seq: self.seq, ev });
    }

    #[allow(clippy::too_many_arguments)]
    fn log(&mut self, at: u64, node: NodeId, kind: FrameKind, action: Action, p: &Packet, next_hop: Option<NodeId>, size: u32) {
        self.events.push(PacketEvent {
            clock_us: at,
            node,
            kind,
            action,
            next_hop,
            flow_src: p.flow_src,
            flow_dst: p.flow_dst,
            packet_id: p.id,
            size,
        });
    }

    fn log_packet(&mut self, node: NodeId, action: Action, p: &Packet) {
        let next = p.next_hop();
        self.log(self.now, node, p.kind, action, p, next, p.size);
    }

    fn dispatch(&mut self, ev: Ev) {
        match ev {
            Ev::Inject(f) => self.inject(f),
            Ev::MacAttempt(v) => self.mac_attempt(v),
            Ev::Stage1Done(v, ok) => self.stage1_done(v, ok),
            Ev::Stage2Done(v, ok) => self.stage2_done(v, ok),
            Ev::BroadcastDone(v) => self.broadcast_done(v),
            Ev::Enqueue(v, p) => self.enqueue(v, p),
            Ev::RreqTimeout(v, dst, req) => self.rreq_timeout(v, dst, req),
            Ev::Fail(v) => self.nodes[v as usize].alive = false,
        }
    }

    fn new_id(&mut self) -> u64 {
        self.next_packet += 1;
        self.next_packet
    }

    fn inject(&mut self, f: usize) {
        let c = self.sc.connections[f];
        let gap = match c.model {
            TrafficModel::Cbr => 1.0 / c.rate,
            TrafficModel::Poisson => Exp::new(c.rate).expect("positive rate").sample(&mut self.rng),
        };
        self.schedule(self.now + us(gap).max(1), Ev::Inject(f));
        if !self.nodes[c.src as usize].alive {
            return;
        }
        self.flows[f].injected += 1;
        let p = Packet {
            id: self.new_id(),
            kind: FrameKind::Data,
            flow: Some(f),
            flow_src: c.src,
            flow_dst: c.dst,
            size: c.packet_size,
            route: vec![c.src],
            hop: 0,
            req_id: 0,
            broken: None,
            prev_hop: None,
            overheard: false,
        };
        self.originate_data(c.src, p);
    }

    /// Hand a data packet to its source's routing layer.
    fn originate_data(&mut self, src: NodeId, mut p: Packet) {
        let dst = p.flow_dst;
        if let Some(route) = self.nodes[src as usize].routes.get(&dst) {
            p.route = route.clone();
            p.hop = 0;
            self.enqueue(src, p);
            return;
        }
        let node = &mut self.nodes[src as usize];
        if node.send_buffer.len() >= self.sc.config.send_buffer_capacity {
            self.drop_contention(src, &p);
        } else {
            node.send_buffer.push_back(p);
        }
        if !self.nodes[src as usize].discovery.contains_key(&dst) {
            let timeout = us(self.sc.config.rreq_timeout);
            self.start_discovery(src, dst, timeout);
        }
    }

    fn start_discovery(&mut self, src: NodeId, dst: NodeId, timeout_us: u64) {
        let node = &mut self.nodes[src as usize];
        node.next_req_id += 1;
        let req_id = node.next_req_id;
        node.seen_rreq.insert((src, req_id));
        node.discovery.insert(dst, Discovery { req_id, timeout_us });
        let p = Packet {
            id: self.new_id(),
            kind: FrameKind::Rreq,
            flow: None,
            flow_src: src,
            flow_dst: dst,
            size: CONTROL_HEADER_BYTES + 4,
            route: vec![src],
            hop: 0,
            req_id,
            broken: None,
            prev_hop: None,
            overheard: false,
        };
        self.enqueue(src, p);
        self.schedule(self.now + timeout_us, Ev::RreqTimeout(src, dst, req_id));
    }

    fn rreq_timeout(&mut self, src: NodeId, dst: NodeId, req_id: u32) {
        let node = &self.nodes[src as usize];
        let Some(d) = node.discovery.get(&dst) else { return };
        if d.req_id != req_id || !node.alive {
            return;
        }
        if node.routes.contains_key(&dst) || !node.send_buffer.iter().any(|p| p.flow_dst == dst) {
            self.nodes[src as usize].discovery.remove(&dst);
            return;
        }
        let next = (d.timeout_us * 2).min(us(self.sc.config.rreq_timeout_max));
        self.start_discovery(src, dst, next);
    }

    /// Insert into the forwarding queue, waking the MAC if it is idle.
    fn enqueue(&mut self, v: NodeId, p: Packet) {
        let cap = self.sc.config.queue_capacity;
        let node = &mut self.nodes[v as usize];
        if !node.alive {
            // a dead node keeps what it holds; the packet stays in flight
            node.queue.push_back(p);
            return;
        }
        if node.queue.len() >= cap {
            self.drop_contention(v, &p);
            return;
        }
        node.queue.push_back(p);
        if !node.mac_active {
            node.mac_active = true;
            let at = self.now + self.mac.access_delay_us(&mut self.rng);
            self.schedule(at, Ev::MacAttempt(v));
        }
    }

    fn drop_contention(&mut self, v: NodeId, p: &Packet) {
        self.log_packet(v, Action::DroppedContention, p);
        if let Some(f) = p.flow {
            self.flows[f].dropped_contention += 1;
        }
    }

    fn contenders(&self, v: NodeId) -> usize {
        self.two_hop[v as usize]
            .iter()
            .filter(|&&u| {
                let n = &self.nodes[u as usize];
                n.alive && !n.queue.is_empty()
            })
            .count()
    }

    fn stage_fails(&mut self, v: NodeId, receiver: NodeId) -> bool {
        if !self.nodes[receiver as usize].alive {
            return true;
        }
        let p = self.mac.stage_failure(self.contenders(v));
        self.rng.random::<f64>() < p
    }

    fn mac_attempt(&mut self, v: NodeId) {
        let node = &self.nodes[v as usize];
        if !node.alive {
            return;
        }
        let Some(head) = node.queue.front() else {
            self.nodes[v as usize].mac_active = false;
            return;
        };
        let next = head.next_hop();
        let mut busy = node.busy_until;
        if let Some(j) = next {
            busy = busy.max(self.nodes[j as usize].busy_until);
        }
        if busy > self.now {
            let at = busy + self.mac.access_delay_us(&mut self.rng);
            self.schedule(at, Ev::MacAttempt(v));
            return;
        }
        let k = self.contenders(v) as u64;
        let node = &mut self.nodes[v as usize];
        node.contender_sum += k;
        node.contender_samples += 1;
        let head = node.queue.front().unwrap().clone();
        match next {
            None => {
                let dur = self.mac.airtime_us(head.size + MAC_HEADER_BYTES);
                self.log_packet(v, Action::Sent, &head);
                self.nodes[v as usize].busy_until = self.now + dur;
                self.schedule(self.now + dur, Ev::BroadcastDone(v));
            }
            Some(j) => {
                let rts = self.mac.airtime_us(RTS_BYTES);
                let cts = self.mac.airtime_us(CTS_BYTES);
                let sifs = self.mac.sifs_us();
                let t = self.now;
                self.log(t, v, FrameKind::Rts, Action::Sent, &head, Some(j), RTS_BYTES);
                let ok = !self.stage_fails(v, j);
                if ok {
                    self.log(t + rts, j, FrameKind::Rts, Action::Received, &head, Some(j), RTS_BYTES);
                    self.log(t + rts + sifs, j, FrameKind::Cts, Action::Sent, &head, Some(v), CTS_BYTES);
                    self.log(t + rts + sifs + cts, v, FrameKind::Cts, Action::Received, &head, Some(v), CTS_BYTES);
                }
                let end = t + rts + sifs + cts;
                self.nodes[v as usize].busy_until = end;
                self.nodes[j as usize].busy_until = self.nodes[j as usize].busy_until.max(end);
                self.schedule(end, Ev::Stage1Done(v, ok));
            }
        }
    }

    fn stage1_done(&mut self, v: NodeId, ok: bool) {
        if !self.nodes[v as usize].alive {
            return;
        }
        if !ok {
            self.retry(v, true);
            return;
        }
        let head = self.nodes[v as usize].queue.front().unwrap().clone();
        let j = head.next_hop().unwrap();
        let sifs = self.mac.sifs_us();
        let data = self.mac.airtime_us(head.size + MAC_HEADER_BYTES);
        let ack = self.mac.airtime_us(ACK_BYTES);
        let t = self.now + sifs;
        self.log(t, v, head.kind, Action::Sent, &head, Some(j), head.size);
        self.overhear(v, &head, t);
        let ok = !self.stage_fails(v, j);
        if ok {
            self.log(t + data, j, head.kind, Action::Received, &head, Some(j), head.size);
            self.log(t + data + sifs, j, FrameKind::Ack, Action::Sent, &head, Some(v), ACK_BYTES);
            self.log(t + data + sifs + ack, v, FrameKind::Ack, Action::Received, &head, Some(v), ACK_BYTES);
        }
        let end = t + data + sifs + ack;
        self.nodes[v as usize].busy_until = end;
        self.nodes[j as usize].busy_until = self.nodes[j as usize].busy_until.max(end);
        self.schedule(end, Ev::Stage2Done(v, ok));
    }

    /// The previous holder listens to `v` passing the packet on.
    fn overhear(&mut self, v: NodeId, p: &Packet, at: u64) {
        let Some(prev) = p.prev_hop else { return };
        if p.overheard || !self.nodes[prev as usize].alive {
            return;
        }
        if self.sc.config.overhear_loss {
            let loss = self.mac.stage_failure(self.contenders(prev));
            if self.rng.random::<f64>() < loss {
                return;
            }
        }
        self.log(at, prev, p.kind, Action::Overheard, p, p.next_hop(), p.size);
        if let Some(h) = self.nodes[v as usize].queue.front_mut() {
            h.overheard = true;
        }
    }

    fn stage2_done(&mut self, v: NodeId, ok: bool) {
        if !self.nodes[v as usize].alive {
            return;
        }
        if !ok {
            self.retry(v, false);
            return;
        }
        let node = &mut self.nodes[v as usize];
        node.short_retries = 0;
        node.long_retries = 0;
        let mut p = node.queue.pop_front().unwrap();
        let j = p.next_hop().unwrap();
        self.next_frame(v);
        p.hop += 1;
        p.prev_hop = Some(v);
        p.overheard = false;
        self.receive(j, p);
    }

    fn next_frame(&mut self, v: NodeId) {
        if self.nodes[v as usize].queue.is_empty() {
            self.nodes[v as usize].mac_active = false;
        } else {
            let at = self.now + self.mac.access_delay_us(&mut self.rng);
            self.schedule(at, Ev::MacAttempt(v));
        }
    }

    fn retry(&mut self, v: NodeId, first_stage: bool) {
        let cap = self.mac.retry_cap;
        let node = &mut self.nodes[v as usize];
        let counter = if first_stage { &mut node.short_retries } else { &mut node.long_retries };
        *counter += 1;
        let retries = *counter;
        if retries > cap {
            node.short_retries = 0;
            node.long_retries = 0;
            let p = node.queue.pop_front().unwrap();
            self.link_failed(v, p);
            self.next_frame(v);
            return;
        }
        let at = self.now + self.mac.backoff_us(retries, &mut self.rng);
        self.schedule(at.max(self.now + 1), Ev::MacAttempt(v));
    }

    /// `v` gave up on `p`: drop it, forget routes over the dead link and tell
    /// the originator.
    fn link_failed(&mut self, v: NodeId, p: Packet) {
        let j = p.next_hop().unwrap();
        self.nodes[v as usize].routes.retain(|_, r| !r.windows(2).any(|w| w == [v, j]));
        let mut notify: BTreeMap<NodeId, Packet> = BTreeMap::new();
        let mut failed = vec![p];
        let queue = std::mem::take(&mut self.nodes[v as usize].queue);
        let (hit, keep): (VecDeque<Packet>, VecDeque<Packet>) =
            queue.into_iter().partition(|q| q.next_hop() == Some(j) && q.kind != FrameKind::Rreq);
        self.nodes[v as usize].queue = keep;
        failed.extend(hit);
        for q in failed {
            if q.kind == FrameKind::Data && q.hop == 0 {
                // the source salvages its own packets through a fresh route
                self.originate_data(v, q);
                continue;
            }
            self.drop_contention(v, &q);
            if q.kind == FrameKind::Data && q.hop > 0 {
                notify.entry(q.route[0]).or_insert(q);
            }
        }
        for (_, q) in notify {
            let mut back: Vec<NodeId> = q.route[..=q.hop].to_vec();
            back.reverse();
            let rerr = Packet {
                id: self.new_id(),
                kind: FrameKind::Rerr,
                flow: None,
                flow_src: q.flow_src,
                flow_dst: q.flow_dst,
                size: CONTROL_HEADER_BYTES + 8,
                route: back,
                hop: 0,
                req_id: 0,
                broken: Some((v, j)),
                prev_hop: None,
                overheard: false,
            };
            self.enqueue(v, rerr);
        }
    }

    fn broadcast_done(&mut self, v: NodeId) {
        if !self.nodes[v as usize].alive {
            return;
        }
        let p = self.nodes[v as usize].queue.pop_front().unwrap();
        let k = self.contenders(v);
        let loss = self.mac.stage_failure(k);
        let neighbors = self.sc.topology.neighbors(v).to_vec();
        for u in neighbors {
            if !self.nodes[u as usize].alive || self.rng.random::<f64>() < loss {
                continue;
            }
            let mut q = p.clone();
            q.prev_hop = Some(v);
            self.receive_rreq(u, q);
        }
        self.next_frame(v);
    }

    /// Misbehavior is applied before queue insertion.
    fn drops_on_purpose(&mut self, v: NodeId, p: &Packet) -> bool {
        let prob = self.nodes[v as usize].drop_probability;
        if prob > 0.0 && self.rng.random::<f64>() < prob {
            self.log_packet(v, Action::DroppedMisbehavior, p);
            if let Some(f) = p.flow {
                self.flows[f].dropped_misbehavior += 1;
                self.dropped_on_purpose[v as usize] += 1;
            }
            return true;
        }
        false
    }

    /// Queue `p` for forwarding at `v`, after the node's scripted hold.
    fn forward(&mut self, v: NodeId, p: Packet) {
        if self.drops_on_purpose(v, &p) {
            return;
        }
        let hold = self.nodes[v as usize].hold_us;
        if hold > 0 {
            self.schedule(self.now + hold, Ev::Enqueue(v, p));
        } else {
            self.enqueue(v, p);
        }
    }

    fn receive_rreq(&mut self, v: NodeId, mut p: Packet) {
        self.log(self.now, v, FrameKind::Rreq, Action::Received, &p, None, p.size);
        let key = (p.flow_src, p.req_id);
        if !self.nodes[v as usize].seen_rreq.insert(key) || p.route.contains(&v) {
            return;
        }
        p.route.push(v);
        p.hop = p.route.len() - 1;
        if v == p.flow_dst {
            // reply along the reversed path, to the first copy only
            let mut back = p.route.clone();
            back.reverse();
            let rrep = Packet {
                id: self.new_id(),
                kind: FrameKind::Rrep,
                flow: None,
                flow_src: p.flow_src,
                flow_dst: p.flow_dst,
                size: CONTROL_HEADER_BYTES + 4 * back.len() as u32,
                route: back,
                hop: 0,
                req_id: p.req_id,
                broken: None,
                prev_hop: None,
                overheard: false,
            };
            self.enqueue(v, rrep);
            return;
        }
        p.size = CONTROL_HEADER_BYTES + 4 * p.route.len() as u32;
        if self.drops_on_purpose(v, &p) {
            return;
        }
        let at = self.now + self.rebroadcast_delay_us(v, p.flow_src, p.flow_dst) + self.nodes[v as usize].hold_us;
        self.schedule(at, Ev::Enqueue(v, p));
    }

    /// Fixed per-(node, origin, target) rebroadcast delay. Keying it on the
    /// request instead of the run's stream makes floods over a static
    /// topology find the same routes from run to run.
    fn rebroadcast_delay_us(&self, v: NodeId, origin: NodeId, target: NodeId) -> u64 {
        let h = seed::derive(REBROADCAST_TAG, &[v as u64, origin as u64, target as u64]);
        let unit = (h >> 11) as f64 / (1u64 << 53) as f64;
        us(unit * self.sc.config.rreq_jitter)
    }

    /// Unicast reception at `v`, which is now `p.route[p.hop]`.
    fn receive(&mut self, v: NodeId, p: Packet) {
        debug_assert_eq!(p.holder(), v);
        let last = p.hop + 1 == p.route.len();
        match p.kind {
            FrameKind::Data => {
                if last {
                    if let Some(f) = p.flow {
                        self.flows[f].delivered += 1;
                    }
                    return;
                }
                self.relayed[v as usize] += 1;
                self.forward(v, p);
            }
            FrameKind::Rrep => {
                // route[..=hop] reversed is the path from v to the replier
                let mut to_dst: Vec<NodeId> = p.route[..=p.hop].to_vec();
                to_dst.reverse();
                self.nodes[v as usize].routes.insert(p.flow_dst, to_dst);
                if last {
                    self.route_ready(v, p.flow_dst);
                } else {
                    self.forward(v, p);
                }
            }
            FrameKind::Rerr => {
                let (a, b) = p.broken.unwrap();
                let node = &mut self.nodes[v as usize];
                node.routes.retain(|_, r| !r.windows(2).any(|w| w == [a, b]));
                if last {
                    self.salvage(v, a, b);
                } else {
                    self.forward(v, p);
                }
            }
            _ => unreachable!("only payload frames are routed"),
        }
    }

    /// A source learns that link `a -> b` is broken: pull its own queued
    /// packets that would cross it back into the send buffer.
    fn salvage(&mut self, v: NodeId, a: NodeId, b: NodeId) {
        let queue = std::mem::take(&mut self.nodes[v as usize].queue);
        let mut keep = VecDeque::with_capacity(queue.len());
        let mut back = Vec::new();
        let mut first = true;
        for q in queue {
            // never pull a frame the MAC is working on
            let in_service = first && self.nodes[v as usize].mac_active;
            first = false;
            if !in_service && q.kind == FrameKind::Data && q.hop == 0 && q.uses_link(a, b) {
                back.push(q);
            } else {
                keep.push_back(q);
            }
        }
        self.nodes[v as usize].queue = keep;
        for q in back {
            self.originate_data(v, q);
        }
    }

    fn route_ready(&mut self, v: NodeId, dst: NodeId) {
        self.nodes[v as usize].discovery.remove(&dst);
        let buffered = std::mem::take(&mut self.nodes[v as usize].send_buffer);
        let (ready, wait): (VecDeque<Packet>, VecDeque<Packet>) =
            buffered.into_iter().partition(|p| p.flow_dst == dst);
        self.nodes[v as usize].send_buffer = wait;
        for p in ready {
            self.originate_data(v, p);
        }
    }

    fn finish(mut self, horizon: u64) -> SimOutcome {
        let mut in_flight = vec![0u64; self.flows.len()];
        let mut count = |p: &Packet| {
            if let Some(f) = p.flow {
                in_flight[f] += 1;
            }
        };
        for node in &self.nodes {
            node.queue.iter().for_each(&mut count);
            node.send_buffer.iter().for_each(&mut count);
        }
        for s in self.heap.iter() {
            if let Ev::Enqueue(_, p) = &s.ev {
                count(p);
            }
        }
        for (f, n) in in_flight.into_iter().enumerate() {
            self.flows[f].in_flight = n;
        }
        let mut total = FlowAccounting::default();
        for f in &self.flows {
            total.add(f);
        }
        // stage events are logged ahead of time; keep only what happened
        self.events.retain(|e| e.clock_us <= horizon);
        self.events.sort_by_key(|e| e.clock_us);
        let mean_contenders = self
            .nodes
            .iter()
            .map(|n| {
                if n.contender_samples == 0 {
                    f64::NAN
                } else {
                    n.contender_sum as f64 / n.contender_samples as f64
                }
            })
            .collect();
        SimOutcome {
            trace: Trace { events: self.events },
            flows: self.flows,
            total,
            relayed: self.relayed,
            dropped_on_purpose: self.dropped_on_purpose,
            mean_contenders,
        }
    }
}
