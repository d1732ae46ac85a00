//! Discrete-event simulation of a static multihop sensor network.

pub mod mac;
pub mod sim;
pub mod topology;
pub mod trace;

pub use mac::{mac_handshake, HandshakeOutcome, MacParams};
pub use sim::{
    run_simulation, Connection, FlowAccounting, MisbehaviorPlan, NodeScript, Scenario, SimConfig,
    SimOutcome, TrafficModel,
};
pub use topology::{
    build_edges, random_waypoint_snapshot, select_connections, NodeId, Position, Topology,
    WaypointParams,
};
pub use trace::{Action, FrameKind, PacketEvent, Trace};
