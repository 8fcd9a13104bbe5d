//! Reliable, per-pair ordered byte transports between ranks.

use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::Path;
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use super::frame::{decode_header, HEADER_LEN};
use crate::error::{Error, Result};

/// What a receive call produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Received {
    /// Raw bytes of one frame, not yet validated beyond its length.
    Frame(Vec<u8>),
    /// A peer closed its endpoint.
    Disconnected(usize),
    Timeout,
}

pub trait Transport: Send {
    fn rank(&self) -> usize;
    fn ranks(&self) -> usize;
    fn send(&mut self, to: usize, frame: Vec<u8>) -> Result<()>;
    fn receive(&mut self, timeout: Duration) -> Result<Received>;
}

enum Message {
    Frame(Vec<u8>),
    Closed(usize),
}

/// Loopback queues between ranks living in one process.
pub struct InMemoryTransport {
    rank: usize,
    peers: Vec<Option<Sender<Message>>>,
    inbox: Receiver<Message>,
}

impl InMemoryTransport {
    /// Fully connected endpoints for `ranks` ranks.
    pub fn mesh(ranks: usize) -> Vec<InMemoryTransport> {
        let (senders, receivers): (Vec<_>, Vec<_>) = (0..ranks).map(|_| mpsc::channel()).unzip();
        receivers
            .into_iter()
            .enumerate()
            .map(|(rank, inbox)| InMemoryTransport {
                rank,
                peers: senders
                    .iter()
                    .enumerate()
                    .map(|(r, s)| (r != rank).then(|| s.clone()))
                    .collect(),
                inbox,
            })
            .collect()
    }
}

impl Transport for InMemoryTransport {
    fn rank(&self) -> usize {
        self.rank
    }

    fn ranks(&self) -> usize {
        self.peers.len()
    }

    fn send(&mut self, to: usize, frame: Vec<u8>) -> Result<()> {
        let peer = self
            .peers
            .get(to)
            .and_then(Option::as_ref)
            .ok_or_else(|| Error::ProtocolViolation(format!("rank {} cannot send to {to}", self.rank)))?;
        peer.send(Message::Frame(frame)).map_err(|_| Error::ExchangeFailure {
            rank: to,
            step: 0,
            reason: "endpoint closed".into(),
        })
    }

    fn receive(&mut self, timeout: Duration) -> Result<Received> {
        Ok(match self.inbox.recv_timeout(timeout) {
            Ok(Message::Frame(f)) => Received::Frame(f),
            Ok(Message::Closed(r)) => Received::Disconnected(r),
            Err(RecvTimeoutError::Timeout) => Received::Timeout,
            // Every peer is gone; nothing more can arrive.
            Err(RecvTimeoutError::Disconnected) => Received::Disconnected(usize::MAX),
        })
    }
}

impl Drop for InMemoryTransport {
    fn drop(&mut self) {
        for peer in self.peers.iter().flatten() {
            let _ = peer.send(Message::Closed(self.rank));
        }
    }
}

/// Parse a cluster file of `rank host:port` lines. Blank lines and `#`
/// comments are ignored; ranks must be exactly `0..n`.
pub fn parse_cluster(text: &str) -> Result<Vec<SocketAddr>> {
    let mut entries: Vec<(usize, SocketAddr)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: &str| Error::Config(vec![format!("cluster line {}: {msg}: {line:?}", lineno + 1)]);
        let mut parts = line.split_whitespace();
        let (Some(rank), Some(addr), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(bad("expected `rank host:port`"));
        };
        let rank: usize = rank.parse().map_err(|_| bad("rank is not an integer"))?;
        let addr = addr
            .to_socket_addrs()
            .map_err(|_| bad("cannot resolve address"))?
            .next()
            .ok_or_else(|| bad("address resolved to nothing"))?;
        entries.push((rank, addr));
    }
    entries.sort_by_key(|e| e.0);
    for (i, (rank, _)) in entries.iter().enumerate() {
        if *rank != i {
            return Err(Error::Config(vec![format!(
                "cluster ranks must be 0..{} without gaps or duplicates",
                entries.len()
            )]));
        }
    }
    if entries.is_empty() {
        return Err(Error::Config(vec!["cluster file lists no ranks".into()]));
    }
    Ok(entries.into_iter().map(|e| e.1).collect())
}

pub fn read_cluster_file(path: &Path) -> Result<Vec<SocketAddr>> {
    parse_cluster(&std::fs::read_to_string(path)?)
}

/// One duplex TCP stream per rank pair. Rank `i` dials every lower rank and
/// accepts from every higher one; the dialer announces itself with its rank
/// as a little-endian `u16`.
pub struct TcpTransport {
    rank: usize,
    writers: Vec<Option<TcpStream>>,
    inbox: Receiver<Message>,
    readers: Vec<JoinHandle<()>>,
}

fn spawn_reader(peer: usize, stream: TcpStream, tx: Sender<Message>) -> JoinHandle<()> {
    thread::spawn(move || {
        let mut reader = BufReader::new(stream);
        loop {
            match reader.fill_buf() {
                Ok([]) | Err(_) => break,
                Ok(_) => {}
            }
            let mut frame = vec![0u8; HEADER_LEN];
            if reader.read_exact(&mut frame).is_err() {
                // Partial header: hand it up so the decoder reports truncation.
                let _ = tx.send(Message::Frame(frame));
                break;
            }
            let count = match decode_header(&frame) {
                Ok((_, _, count)) => count as usize,
                Err(_) => {
                    let _ = tx.send(Message::Frame(frame));
                    break;
                }
            };
            frame.resize(HEADER_LEN + 4 * count, 0);
            if reader.read_exact(&mut frame[HEADER_LEN..]).is_err() {
                break;
            }
            if tx.send(Message::Frame(frame)).is_err() {
                return;
            }
        }
        let _ = tx.send(Message::Closed(peer));
    })
}

impl TcpTransport {
    /// Join the mesh described by `addrs` as `rank`, listening on `listener`
    /// (which must be bound to `addrs[rank]`).
    pub fn connect(rank: usize, addrs: &[SocketAddr], listener: TcpListener, timeout: Duration) -> Result<Self> {
        let ranks = addrs.len();
        let deadline = Instant::now() + timeout;
        let mut streams: Vec<Option<TcpStream>> = (0..ranks).map(|_| None).collect();
        for (peer, addr) in addrs.iter().enumerate().take(rank) {
            let mut stream = loop {
                match TcpStream::connect_timeout(addr, Duration::from_millis(500)) {
                    Ok(s) => break s,
                    Err(e) if Instant::now() < deadline => {
                        log::debug!("rank {rank}: dialing rank {peer} at {addr}: {e}");
                        thread::sleep(Duration::from_millis(20));
                    }
                    Err(e) => {
                        return Err(Error::ExchangeFailure {
                            rank: peer,
                            step: 0,
                            reason: format!("unreachable at {addr}: {e}"),
                        })
                    }
                }
            };
            stream.write_all(&(rank as u16).to_le_bytes())?;
            streams[peer] = Some(stream);
        }
        listener.set_nonblocking(true)?;
        let mut missing = ranks - rank - 1;
        while missing > 0 {
            match listener.accept() {
                Ok((mut stream, _)) => {
                    stream.set_nonblocking(false)?;
                    stream.set_read_timeout(Some(timeout))?;
                    let mut hello = [0u8; 2];
                    stream.read_exact(&mut hello)?;
                    stream.set_read_timeout(None)?;
                    let peer = u16::from_le_bytes(hello) as usize;
                    if peer <= rank || peer >= ranks || streams[peer].is_some() {
                        return Err(Error::ProtocolViolation(format!(
                            "rank {rank} got unexpected handshake from rank {peer}"
                        )));
                    }
                    streams[peer] = Some(stream);
                    missing -= 1;
                }
                Err(e) if e.kind() == io::ErrorKind::WouldBlock => {
                    if Instant::now() >= deadline {
                        let peer = (rank + 1..ranks).find(|&p| streams[p].is_none()).unwrap_or(rank);
                        return Err(Error::ExchangeFailure {
                            rank: peer,
                            step: 0,
                            reason: "never connected".into(),
                        });
                    }
                    thread::sleep(Duration::from_millis(5));
                }
                Err(e) => return Err(e.into()),
            }
        }
        let (tx, inbox) = mpsc::channel();
        let mut readers = Vec::new();
        let mut writers = Vec::with_capacity(ranks);
        for (peer, stream) in streams.into_iter().enumerate() {
            match stream {
                Some(s) => {
                    s.set_nodelay(true)?;
                    readers.push(spawn_reader(peer, s.try_clone()?, tx.clone()));
                    writers.push(Some(s));
                }
                None => writers.push(None),
            }
        }
        Ok(Self {
            rank,
            writers,
            inbox,
            readers,
        })
    }
}

impl Transport for TcpTransport {
    fn rank(&self) -> usize {
        self.rank
    }

    fn ranks(&self) -> usize {
        self.writers.len()
    }

    fn send(&mut self, to: usize, frame: Vec<u8>) -> Result<()> {
        let stream = self
            .writers
            .get_mut(to)
            .and_then(Option::as_mut)
            .ok_or_else(|| Error::ProtocolViolation(format!("rank {} has no link to {to}", self.rank)))?;
        stream.write_all(&frame).map_err(|e| Error::ExchangeFailure {
            rank: to,
            step: 0,
            reason: format!("send failed: {e}"),
        })
    }

    fn receive(&mut self, timeout: Duration) -> Result<Received> {
        Ok(match self.inbox.recv_timeout(timeout) {
            Ok(Message::Frame(f)) => Received::Frame(f),
            Ok(Message::Closed(r)) => Received::Disconnected(r),
            Err(RecvTimeoutError::Timeout) => Received::Timeout,
            Err(RecvTimeoutError::Disconnected) => Received::Disconnected(usize::MAX),
        })
    }
}

impl Drop for TcpTransport {
    fn drop(&mut self) {
        for s in self.writers.iter().flatten() {
            let _ = s.shutdown(std::net::Shutdown::Write);
        }
        // Readers exit once the peers shut down their side.
        self.readers.clear();
    }
}

/// Bind `count` loopback listeners on ephemeral ports.
pub fn loopback_listeners(count: usize) -> Result<(Vec<TcpListener>, Vec<SocketAddr>)> {
    let listeners: Vec<TcpListener> = (0..count)
        .map(|_| TcpListener::bind("127.0.0.1:0"))
        .collect::<io::Result<_>>()?;
    let addrs = listeners.iter().map(TcpListener::local_addr).collect::<io::Result<_>>()?;
    Ok((listeners, addrs))
}
