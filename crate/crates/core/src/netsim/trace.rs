//! Per-packet observation records and their tab-separated file format.
//!
//! One line per event:
//! `clock_us  node  kind  action  next_hop  flow_src  flow_dst  packet_id  size`
//! with `-` for a missing next hop (broadcast frames).

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::netsim::topology::NodeId;

/// Frame or payload type. `Data`, `Rreq`, `Rrep` and `Rerr` label the frame
/// that carries that payload; `Rts`, `Cts`, `Ack` are MAC control frames.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FrameKind {
    Rts,
    Cts,
    Data,
    Ack,
    Rreq,
    Rrep,
    Rerr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Sent,
    Received,
    /// Heard in promiscuous mode by the node that handed the packet over.
    Overheard,
    DroppedMisbehavior,
    /// Retry exhaustion or queue overflow.
    DroppedContention,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PacketEvent {
    pub clock_us: u64,
    pub node: NodeId,
    pub kind: FrameKind,
    pub action: Action,
    pub next_hop: Option<NodeId>,
    pub flow_src: NodeId,
    pub flow_dst: NodeId,
    pub packet_id: u64,
    pub size: u32,
}

impl PacketEvent {
    pub fn clock_secs(&self) -> f64 {
        self.clock_us as f64 * 1e-6
    }
}

macro_rules! text_enum {
    ($ty:ty { $($variant:ident => $text:literal),* $(,)? }) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $(Self::$variant => $text),* })
            }
        }
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok(Self::$variant),)*
                    other => Err(Error::Parse(format!(concat!("unknown ", stringify!($ty), " {:?}"), other))),
                }
            }
        }
    };
}

text_enum!(FrameKind {
    Rts => "RTS", Cts => "CTS", Data => "DATA", Ack => "ACK",
    Rreq => "RREQ", Rrep => "RREP", Rerr => "RERR",
});

text_enum!(Action {
    Sent => "sent", Received => "received", Overheard => "overheard",
    DroppedMisbehavior => "dropped_misbehavior", DroppedContention => "dropped_contention",
});

impl fmt::Display for PacketEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{}\t{}\t", self.clock_us, self.node, self.kind, self.action)?;
        match self.next_hop {
            Some(h) => write!(f, "{h}")?,
            None => f.write_str("-")?,
        }
        write!(
            f,
            "\t{}\t{}\t{}\t{}",
            self.flow_src, self.flow_dst, self.packet_id, self.size
        )
    }
}

impl FromStr for PacketEvent {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.trim_end().split('\t').collect();
        if f.len() != 9 {
            return Err(Error::Parse(format!("trace line needs 9 fields: {line:?}")));
        }
        fn num<T: FromStr>(s: &str) -> Result<T>
        where
            T::Err: fmt::Display,
        {
            s.parse().map_err(|e| Error::Parse(format!("trace field {s:?}: {e}")))
        }
        Ok(PacketEvent {
            clock_us: num(f[0])?,
            node: num(f[1])?,
            kind: f[2].parse()?,
            action: f[3].parse()?,
            next_hop: if f[4] == "-" { None } else { Some(num(f[4])?) },
            flow_src: num(f[5])?,
            flow_dst: num(f[6])?,
            packet_id: num(f[7])?,
            size: num(f[8])?,
        })
    }
}

/// A clock-ordered event log of one run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub events: Vec<PacketEvent>,
}

impl Trace {
    pub fn is_clock_ordered(&self) -> bool {
        self.events.windows(2).all(|w| w[0].clock_us <= w[1].clock_us)
    }

    pub fn write_to<W: Write>(&self, out: W) -> Result<()> {
        let mut out = std::io::BufWriter::new(out);
        for e in &self.events {
            writeln!(out, "{e}")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let events = input
            .lines()
            .filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty() && !l.starts_with('#')))
            .map(|l| l?.parse())
            .collect::<Result<Vec<_>>>()?;
        Ok(Trace { events })
    }

    pub fn count(&self, kind: FrameKind, action: Action) -> usize {
        self.events
            .iter()
            .filter(|e| e.kind == kind && e.action == action)
            .count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_round_trip() {
        let e = PacketEvent {
            clock_us: 499_900_000,
            node: 3,
            kind: FrameKind::Data,
            action: Action::Overheard,
            next_hop: Some(7),
            flow_src: 1,
            flow_dst: 9,
            packet_id: 42,
            size: 512,
        };
        let line = e.to_string();
        assert_eq!(line, "499900000\t3\tDATA\toverheard\t7\t1\t9\t42\t512");
        assert_eq!(line.parse::<PacketEvent>().unwrap(), e);
        let b = PacketEvent { next_hop: None, kind: FrameKind::Rreq, action: Action::Sent, ..e };
        assert_eq!(b.to_string().parse::<PacketEvent>().unwrap(), b);
        assert!("1\t2\tXYZ\tsent\t-\t1\t2\t3\t4".parse::<PacketEvent>().is_err());
        assert!("1\t2".parse::<PacketEvent>().is_err());
    }
}
