//! Message transport between teams: the seven-message protocol, its wire
//! frame, and two interchangeable backends — an in-process hub for
//! deterministic tests and threaded runs, and TCP sockets for one process
//! per team.

pub mod frame;
pub mod hub;
pub mod socket;

use crate::store::Store;
use std::time::Duration;

pub type NodeId = u16;

/// Reserved node id of the main controller (a pure coordinator; it joins no
/// team's search).
pub const MAIN_CONTROLLER: NodeId = u16::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProtocolMessage {
    /// A fully idle team asks for work.
    RequestWork { from: NodeId },
    /// Exactly one store moves between teams per supply.
    SupplyWork { store: Store },
    NoWork,
    Solution { tuple: Vec<u8> },
    /// Sent to the main controller when a team gives up and terminates, and
    /// as the acknowledgement of a STOP.
    TeamIdle { team: NodeId },
    /// First-solution mode: halt all searching.
    Stop,
    /// Final release; also used to abort on timeout.
    Terminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MessageKind {
    RequestWork = 1,
    SupplyWork = 2,
    NoWork = 3,
    Solution = 4,
    TeamIdle = 5,
    Stop = 6,
    Terminate = 7,
}

impl ProtocolMessage {
    pub fn kind(&self) -> MessageKind {
        match self {
            ProtocolMessage::RequestWork { .. } => MessageKind::RequestWork,
            ProtocolMessage::SupplyWork { .. } => MessageKind::SupplyWork,
            ProtocolMessage::NoWork => MessageKind::NoWork,
            ProtocolMessage::Solution { .. } => MessageKind::Solution,
            ProtocolMessage::TeamIdle { .. } => MessageKind::TeamIdle,
            ProtocolMessage::Stop => MessageKind::Stop,
            ProtocolMessage::Terminate => MessageKind::Terminate,
        }
    }
}

/// One routed message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    pub src: NodeId,
    pub dst: NodeId,
    pub msg: ProtocolMessage,
}

#[derive(Debug, thiserror::Error)]
pub enum TransportError {
    #[error("peer {0} unreachable or terminated")]
    Unreachable(NodeId),
    #[error("receive timed out")]
    Timeout,
    #[error("transport shut down")]
    Closed,
    #[error("codec: {0}")]
    Codec(#[from] frame::FrameError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Point-to-point messaging with reliable, ordered delivery per (src, dst)
/// pair. `send` is called from the controller thread only; `receive` blocks
/// with a timeout.
pub trait Transport: Send + Sync {
    fn local_id(&self) -> NodeId;
    fn send(&self, dst: NodeId, msg: ProtocolMessage) -> Result<(), TransportError>;
    fn receive(&self, timeout: Duration) -> Result<(NodeId, ProtocolMessage), TransportError>;
    /// Leave the network: later sends to this node fail at the sender.
    fn close(&self);
}
