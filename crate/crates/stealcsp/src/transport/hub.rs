//! In-process transport: per-destination mailboxes behind one mutex, FIFO in
//! global arrival order (which preserves per-pair order), with a full
//! message trace for protocol tests and drain assertions at shutdown.

use super::{Envelope, MessageKind, NodeId, ProtocolMessage, Transport, TransportError};
use std::collections::{HashMap, VecDeque};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceEntry {
    pub src: NodeId,
    pub dst: NodeId,
    pub kind: MessageKind,
}

#[derive(Default)]
struct HubState {
    queues: HashMap<NodeId, VecDeque<(NodeId, ProtocolMessage)>>,
    closed: Vec<NodeId>,
    trace: Vec<TraceEntry>,
    /// Messages addressed to a node that closed before reading them.
    dropped: Vec<TraceEntry>,
}

/// Shared in-process message hub. Every node registers before the run
/// starts; a node that terminates deregisters, after which sends to it fail
/// with `Unreachable`.
pub struct Hub {
    state: Mutex<HubState>,
    wakeup: Condvar,
}

impl Hub {
    pub fn new() -> Arc<Hub> {
        Arc::new(Hub { state: Mutex::new(HubState::default()), wakeup: Condvar::new() })
    }

    pub fn register(self: &Arc<Hub>, id: NodeId) -> HubEndpoint {
        let mut st = self.state.lock().unwrap();
        let prev = st.queues.insert(id, VecDeque::new());
        assert!(prev.is_none(), "node {id} registered twice");
        HubEndpoint { hub: Arc::clone(self), id }
    }

    fn send(&self, env: Envelope) -> Result<(), TransportError> {
        let mut st = self.state.lock().unwrap();
        let entry = TraceEntry { src: env.src, dst: env.dst, kind: env.msg.kind() };
        match st.queues.get_mut(&env.dst) {
            Some(q) => {
                q.push_back((env.src, env.msg));
                st.trace.push(entry);
                drop(st);
                self.wakeup.notify_all();
                Ok(())
            }
            None => Err(TransportError::Unreachable(env.dst)),
        }
    }

    fn receive(
        &self,
        id: NodeId,
        timeout: Duration,
    ) -> Result<(NodeId, ProtocolMessage), TransportError> {
        let deadline = Instant::now() + timeout;
        let mut st = self.state.lock().unwrap();
        loop {
            match st.queues.get_mut(&id) {
                None => return Err(TransportError::Closed),
                Some(q) => {
                    if let Some(m) = q.pop_front() {
                        return Ok(m);
                    }
                }
            }
            let now = Instant::now();
            if now >= deadline {
                return Err(TransportError::Timeout);
            }
            let (next, timed_out) = self
                .wakeup
                .wait_timeout(st, deadline - now)
                .unwrap();
            st = next;
            if timed_out.timed_out() && st.queues.get(&id).map_or(true, |q| q.is_empty()) {
                return Err(TransportError::Timeout);
            }
        }
    }

    fn close(&self, id: NodeId) {
        let mut st = self.state.lock().unwrap();
        if let Some(q) = st.queues.remove(&id) {
            for (src, msg) in q {
                st.dropped.push(TraceEntry { src, dst: id, kind: msg.kind() });
            }
            st.closed.push(id);
        }
        drop(st);
        self.wakeup.notify_all();
    }

    /// Full send trace so far, in delivery order.
    pub fn trace(&self) -> Vec<TraceEntry> {
        self.state.lock().unwrap().trace.clone()
    }

    /// Messages that were queued at a node when it closed. Only sends that
    /// raced a receiver's termination may legitimately end up here, and
    /// never a work supply in all-solutions mode.
    pub fn dropped(&self) -> Vec<TraceEntry> {
        self.state.lock().unwrap().dropped.clone()
    }

    /// Shutdown assertion: no message sits unread in a live mailbox, and no
    /// work was silently lost.
    pub fn assert_drained(&self, supply_loss_ok: bool) {
        let st = self.state.lock().unwrap();
        for (id, q) in &st.queues {
            assert!(q.is_empty(), "node {id} left {} unread messages", q.len());
        }
        if !supply_loss_ok {
            assert!(
                !st.dropped.iter().any(|t| t.kind == MessageKind::SupplyWork),
                "a supplied store was dropped at a terminated node"
            );
        }
    }
}

/// A node's handle onto the hub.
pub struct HubEndpoint {
    hub: Arc<Hub>,
    id: NodeId,
}

impl HubEndpoint {
    /// Deregister: later sends to this node fail, pending messages are
    /// recorded as dropped.
    pub fn close(&self) {
        self.hub.close(self.id);
    }
}

impl Transport for HubEndpoint {
    fn local_id(&self) -> NodeId {
        self.id
    }

    fn send(&self, dst: NodeId, msg: ProtocolMessage) -> Result<(), TransportError> {
        self.hub.send(Envelope { src: self.id, dst, msg })
    }

    fn receive(&self, timeout: Duration) -> Result<(NodeId, ProtocolMessage), TransportError> {
        self.hub.receive(self.id, timeout)
    }

    fn close(&self) {
        self.hub.close(self.id);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn per_pair_fifo_order() {
        let hub = Hub::new();
        let a = hub.register(0);
        let b = hub.register(1);
        a.send(1, ProtocolMessage::NoWork).unwrap();
        a.send(1, ProtocolMessage::Stop).unwrap();
        let t = Duration::from_millis(100);
        assert_eq!(b.receive(t).unwrap(), (0, ProtocolMessage::NoWork));
        assert_eq!(b.receive(t).unwrap(), (0, ProtocolMessage::Stop));
        assert!(matches!(b.receive(Duration::from_millis(10)), Err(TransportError::Timeout)));
        hub.assert_drained(false);
    }

    #[test]
    fn send_to_closed_node_is_unreachable() {
        let hub = Hub::new();
        let a = hub.register(0);
        let b = hub.register(1);
        b.close();
        assert!(matches!(
            a.send(1, ProtocolMessage::NoWork),
            Err(TransportError::Unreachable(1))
        ));
        hub.assert_drained(false);
    }

    #[test]
    fn close_records_dropped_messages() {
        let hub = Hub::new();
        let a = hub.register(0);
        let b = hub.register(1);
        a.send(1, ProtocolMessage::RequestWork { from: 0 }).unwrap();
        b.close();
        let dropped = hub.dropped();
        assert_eq!(dropped.len(), 1);
        assert_eq!(dropped[0].kind, MessageKind::RequestWork);
        hub.assert_drained(false);
    }

    #[test]
    fn trace_captures_all_sends() {
        let hub = Hub::new();
        let a = hub.register(0);
        let b = hub.register(1);
        a.send(1, ProtocolMessage::RequestWork { from: 0 }).unwrap();
        b.send(0, ProtocolMessage::NoWork).unwrap();
        b.receive(Duration::from_millis(50)).unwrap();
        a.receive(Duration::from_millis(50)).unwrap();
        let kinds: Vec<MessageKind> = hub.trace().iter().map(|t| t.kind).collect();
        assert_eq!(kinds, vec![MessageKind::RequestWork, MessageKind::NoWork]);
    }
}
