//! TCP transport: one duplex stream per team pair, established lazily by the
//! first sender, with a 4-byte handshake carrying the dialer's team id.
//!
//! Session setup around the framed protocol:
//! - handshake: `b"SC"` then the dialer's 2-byte little-endian node id;
//! - hello (dialer to acceptor): 1 flag byte, then the dialer's own
//!   listener as 4 ipv4 bytes and a 2-byte little-endian port when the flag
//!   is 1;
//! - children dial the coordinator first and block for the address map:
//!   a 2-byte little-endian count, then per team 2-byte id, 4 ipv4 bytes,
//!   2-byte port.
//!
//! Everything after that is the bit-exact frame format of [`frame`].

use super::{frame, Envelope, NodeId, ProtocolMessage, Transport, TransportError};
use std::collections::HashMap;
use std::io::{Read, Write};
use std::net::{Ipv4Addr, SocketAddr, SocketAddrV4, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

const HANDSHAKE_MAGIC: [u8; 2] = *b"SC";

fn write_handshake(stream: &mut TcpStream, id: NodeId) -> std::io::Result<()> {
    let mut buf = [0u8; 4];
    buf[..2].copy_from_slice(&HANDSHAKE_MAGIC);
    buf[2..].copy_from_slice(&id.to_le_bytes());
    stream.write_all(&buf)
}

fn read_handshake(stream: &mut TcpStream) -> std::io::Result<NodeId> {
    let mut buf = [0u8; 4];
    stream.read_exact(&mut buf)?;
    if buf[..2] != HANDSHAKE_MAGIC {
        return Err(std::io::Error::new(std::io::ErrorKind::InvalidData, "bad handshake"));
    }
    Ok(NodeId::from_le_bytes([buf[2], buf[3]]))
}

fn write_hello(stream: &mut TcpStream, listener: Option<SocketAddrV4>) -> std::io::Result<()> {
    match listener {
        Some(addr) => {
            let mut buf = [0u8; 7];
            buf[0] = 1;
            buf[1..5].copy_from_slice(&addr.ip().octets());
            buf[5..7].copy_from_slice(&addr.port().to_le_bytes());
            stream.write_all(&buf)
        }
        None => stream.write_all(&[0u8]),
    }
}

fn read_hello(stream: &mut TcpStream) -> std::io::Result<Option<SocketAddrV4>> {
    let mut flag = [0u8; 1];
    stream.read_exact(&mut flag)?;
    if flag[0] == 0 {
        return Ok(None);
    }
    let mut buf = [0u8; 6];
    stream.read_exact(&mut buf)?;
    let ip = Ipv4Addr::new(buf[0], buf[1], buf[2], buf[3]);
    let port = u16::from_le_bytes([buf[4], buf[5]]);
    Ok(Some(SocketAddrV4::new(ip, port)))
}

fn write_address_map(stream: &mut TcpStream, map: &[(NodeId, SocketAddrV4)]) -> std::io::Result<()> {
    let mut buf = Vec::with_capacity(2 + 8 * map.len());
    buf.extend_from_slice(&(map.len() as u16).to_le_bytes());
    for (id, addr) in map {
        buf.extend_from_slice(&id.to_le_bytes());
        buf.extend_from_slice(&addr.ip().octets());
        buf.extend_from_slice(&addr.port().to_le_bytes());
    }
    stream.write_all(&buf)
}

fn read_address_map(stream: &mut TcpStream) -> std::io::Result<Vec<(NodeId, SocketAddrV4)>> {
    let mut count = [0u8; 2];
    stream.read_exact(&mut count)?;
    let count = u16::from_le_bytes(count) as usize;
    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        let mut e = [0u8; 8];
        stream.read_exact(&mut e)?;
        let id = NodeId::from_le_bytes([e[0], e[1]]);
        let ip = Ipv4Addr::new(e[2], e[3], e[4], e[5]);
        let port = u16::from_le_bytes([e[6], e[7]]);
        entries.push((id, SocketAddrV4::new(ip, port)));
    }
    Ok(entries)
}

struct Registry {
    /// Write side per peer; a peer is `None` once its connection died.
    conns: HashMap<NodeId, Arc<Mutex<TcpStream>>>,
    dead: Vec<NodeId>,
    /// Listener addresses learned from hellos or the coordinator's map.
    addrs: HashMap<NodeId, SocketAddrV4>,
}

/// Socket-backed [`Transport`]. Reader threads decode incoming frames into a
/// single inbox channel consumed by `receive`.
pub struct SocketTransport {
    id: NodeId,
    inbox_rx: Mutex<Receiver<(NodeId, ProtocolMessage)>>,
    inbox_tx: Sender<(NodeId, ProtocolMessage)>,
    registry: Arc<Mutex<Registry>>,
    registry_changed: Arc<Condvar>,
    listener_addr: SocketAddrV4,
    shutdown: Arc<AtomicBool>,
}

impl SocketTransport {
    /// Bind a loopback listener and start accepting handshakes.
    pub fn bind(id: NodeId) -> std::io::Result<SocketTransport> {
        let listener = TcpListener::bind((Ipv4Addr::LOCALHOST, 0))?;
        let listener_addr = match listener.local_addr()? {
            SocketAddr::V4(a) => a,
            SocketAddr::V6(_) => unreachable!("bound v4"),
        };
        let (inbox_tx, inbox_rx) = mpsc::channel();
        let transport = SocketTransport {
            id,
            inbox_rx: Mutex::new(inbox_rx),
            inbox_tx,
            registry: Arc::new(Mutex::new(Registry {
                conns: HashMap::new(),
                dead: Vec::new(),
                addrs: HashMap::new(),
            })),
            registry_changed: Arc::new(Condvar::new()),
            listener_addr,
            shutdown: Arc::new(AtomicBool::new(false)),
        };
        transport.spawn_acceptor(listener);
        Ok(transport)
    }

    pub fn listener_addr(&self) -> SocketAddrV4 {
        self.listener_addr
    }

    fn spawn_acceptor(&self, listener: TcpListener) {
        let registry = Arc::clone(&self.registry);
        let changed = Arc::clone(&self.registry_changed);
        let inbox = self.inbox_tx.clone();
        let shutdown = Arc::clone(&self.shutdown);
        std::thread::spawn(move || {
            for incoming in listener.incoming() {
                if shutdown.load(Ordering::Acquire) {
                    break;
                }
                let Ok(mut stream) = incoming else { break };
                let Ok(peer) = read_handshake(&mut stream) else { continue };
                let Ok(hello) = read_hello(&mut stream) else { continue };
                let mut reg = registry.lock().unwrap();
                if let Some(addr) = hello {
                    reg.addrs.insert(peer, addr);
                }
                reg.conns
                    .entry(peer)
                    .or_insert_with(|| Arc::new(Mutex::new(stream.try_clone().expect("clone stream"))));
                drop(reg);
                changed.notify_all();
                spawn_reader(peer, stream, inbox.clone(), Arc::clone(&registry));
            }
        });
    }

    /// Record listener addresses for peers (from the coordinator's map).
    pub fn learn_addresses(&self, map: &[(NodeId, SocketAddrV4)]) {
        let mut reg = self.registry.lock().unwrap();
        for &(id, addr) in map {
            reg.addrs.insert(id, addr);
        }
    }

    /// Adopt an already-established stream (the child's coordinator link).
    pub fn adopt_stream(&self, peer: NodeId, stream: TcpStream) {
        let clone = stream.try_clone().expect("clone stream");
        self.registry
            .lock()
            .unwrap()
            .conns
            .insert(peer, Arc::new(Mutex::new(clone)));
        spawn_reader(peer, stream, self.inbox_tx.clone(), Arc::clone(&self.registry));
    }

    /// Wait until `expected` distinct peers have handshaken in.
    pub fn wait_for_peers(&self, expected: usize, timeout: Duration) -> Result<(), TransportError> {
        let deadline = Instant::now() + timeout;
        let mut reg = self.registry.lock().unwrap();
        while reg.conns.len() < expected {
            let now = Instant::now();
            if now >= deadline {
                return Err(TransportError::Timeout);
            }
            let (next, _) = self
                .registry_changed
                .wait_timeout(reg, deadline - now)
                .unwrap();
            reg = next;
        }
        Ok(())
    }

    /// Learned listener addresses of all connected peers.
    pub fn peer_addresses(&self) -> Vec<(NodeId, SocketAddrV4)> {
        let reg = self.registry.lock().unwrap();
        let mut out: Vec<_> = reg.addrs.iter().map(|(&id, &a)| (id, a)).collect();
        out.sort_by_key(|&(id, _)| id);
        out
    }

    /// Push the address map to every connected peer, raw on the stream ahead
    /// of any frame.
    pub fn broadcast_address_map(&self, map: &[(NodeId, SocketAddrV4)]) -> Result<(), TransportError> {
        let conns: Vec<Arc<Mutex<TcpStream>>> = {
            let reg = self.registry.lock().unwrap();
            reg.conns.values().cloned().collect()
        };
        for conn in conns {
            write_address_map(&mut conn.lock().unwrap(), map)?;
        }
        Ok(())
    }

    fn connection(&self, dst: NodeId) -> Result<Arc<Mutex<TcpStream>>, TransportError> {
        let addr = {
            let reg = self.registry.lock().unwrap();
            if let Some(conn) = reg.conns.get(&dst) {
                return Ok(Arc::clone(conn));
            }
            if reg.dead.contains(&dst) {
                return Err(TransportError::Unreachable(dst));
            }
            *reg.addrs.get(&dst).ok_or(TransportError::Unreachable(dst))?
        };
        let mut stream = TcpStream::connect_timeout(&SocketAddr::V4(addr), Duration::from_secs(5))
            .map_err(|_| TransportError::Unreachable(dst))?;
        stream.set_nodelay(true).ok();
        write_handshake(&mut stream, self.id).map_err(|_| TransportError::Unreachable(dst))?;
        write_hello(&mut stream, Some(self.listener_addr)).map_err(|_| TransportError::Unreachable(dst))?;
        let conn = Arc::new(Mutex::new(stream.try_clone().expect("clone stream")));
        self.registry.lock().unwrap().conns.insert(dst, Arc::clone(&conn));
        spawn_reader(dst, stream, self.inbox_tx.clone(), Arc::clone(&self.registry));
        Ok(conn)
    }

    /// Stop accepting; existing streams keep flowing until dropped.
    pub fn shutdown(&self) {
        self.shutdown.store(true, Ordering::Release);
        // Poke the listener loose from accept().
        let _ = TcpStream::connect_timeout(
            &SocketAddr::V4(self.listener_addr),
            Duration::from_millis(100),
        );
    }
}

fn spawn_reader(
    peer: NodeId,
    mut stream: TcpStream,
    inbox: Sender<(NodeId, ProtocolMessage)>,
    registry: Arc<Mutex<Registry>>,
) {
    std::thread::spawn(move || {
        loop {
            match frame::read_from(&mut stream) {
                Ok(Envelope { src, msg, .. }) => {
                    if inbox.send((src, msg)).is_err() {
                        break;
                    }
                }
                Err(_) => break,
            }
        }
        let mut reg = registry.lock().unwrap();
        reg.conns.remove(&peer);
        if !reg.dead.contains(&peer) {
            reg.dead.push(peer);
        }
    });
}

impl Transport for SocketTransport {
    fn local_id(&self) -> NodeId {
        self.id
    }

    fn send(&self, dst: NodeId, msg: ProtocolMessage) -> Result<(), TransportError> {
        let conn = self.connection(dst)?;
        let bytes = frame::encode(&Envelope { src: self.id, dst, msg });
        let mut stream = conn.lock().unwrap();
        match stream.write_all(&bytes) {
            Ok(()) => Ok(()),
            Err(_) => {
                drop(stream);
                let mut reg = self.registry.lock().unwrap();
                reg.conns.remove(&dst);
                if !reg.dead.contains(&dst) {
                    reg.dead.push(dst);
                }
                Err(TransportError::Unreachable(dst))
            }
        }
    }

    fn receive(&self, timeout: Duration) -> Result<(NodeId, ProtocolMessage), TransportError> {
        let rx = self.inbox_rx.lock().unwrap();
        rx.recv_timeout(timeout).map_err(|e| match e {
            RecvTimeoutError::Timeout => TransportError::Timeout,
            RecvTimeoutError::Disconnected => TransportError::Closed,
        })
    }

    fn close(&self) {
        self.shutdown();
        let mut reg = self.registry.lock().unwrap();
        // Shut the sockets down at the OS level so every clone (ours and the
        // reader threads') sees EOF; peers then mark us dead.
        for conn in reg.conns.values() {
            let _ = conn.lock().unwrap().shutdown(std::net::Shutdown::Both);
        }
        reg.conns.clear();
    }
}

/// Child-side session setup: dial the coordinator, handshake, report our
/// listener, and block for the address map of all teams.
pub fn team_connect(
    coordinator: SocketAddrV4,
    my_id: NodeId,
    my_listener: SocketAddrV4,
    timeout: Duration,
) -> std::io::Result<(TcpStream, Vec<(NodeId, SocketAddrV4)>)> {
    let deadline = Instant::now() + timeout;
    let mut stream = loop {
        match TcpStream::connect_timeout(&SocketAddr::V4(coordinator), Duration::from_millis(500)) {
            Ok(s) => break s,
            Err(e) if Instant::now() >= deadline => return Err(e),
            Err(_) => std::thread::sleep(Duration::from_millis(20)),
        }
    };
    stream.set_nodelay(true).ok();
    write_handshake(&mut stream, my_id)?;
    write_hello(&mut stream, Some(my_listener))?;
    let map = read_address_map(&mut stream)?;
    Ok((stream, map))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lazy_dial_and_frames_both_ways() {
        let a = SocketTransport::bind(0).unwrap();
        let b = SocketTransport::bind(1).unwrap();
        a.learn_addresses(&[(1, b.listener_addr())]);
        a.send(1, ProtocolMessage::RequestWork { from: 0 }).unwrap();
        let t = Duration::from_secs(2);
        assert_eq!(b.receive(t).unwrap(), (0, ProtocolMessage::RequestWork { from: 0 }));
        // Reply flows back without b ever learning a's address explicitly:
        // the hello carried it.
        b.send(0, ProtocolMessage::NoWork).unwrap();
        assert_eq!(a.receive(t).unwrap(), (1, ProtocolMessage::NoWork));
        a.shutdown();
        b.shutdown();
    }

    #[test]
    fn send_to_unknown_peer_is_unreachable() {
        let a = SocketTransport::bind(0).unwrap();
        assert!(matches!(
            a.send(9, ProtocolMessage::NoWork),
            Err(TransportError::Unreachable(9))
        ));
        a.shutdown();
    }
}
