//! Round-based message exchange among the three parties.
//!
//! Both backends deliver into a [`Mailbox`] keyed by `(session, sender)`, so
//! several sessions can share one connection pair. Each message carries its
//! round number and a receiver that sees the wrong round fails with
//! [`Error::RoundMismatch`].

use std::collections::{HashMap, VecDeque};
use std::io::{Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::{Arc, Condvar, Mutex};
use std::thread;
use std::time::Duration;

use crate::error::{Error, Result};

/// A party index in `{1, 2, 3}` with arithmetic mod 3.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartyId(u8);

impl PartyId {
    pub const P1: PartyId = PartyId(1);
    pub const P2: PartyId = PartyId(2);
    pub const P3: PartyId = PartyId(3);
    pub const ALL: [PartyId; 3] = [PartyId::P1, PartyId::P2, PartyId::P3];

    pub fn new(i: u8) -> Option<PartyId> {
        (1..=3).contains(&i).then_some(PartyId(i))
    }

    #[inline]
    pub fn get(self) -> u8 {
        self.0
    }

    /// Zero-based index.
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    #[inline]
    pub fn next(self) -> PartyId {
        PartyId(self.0 % 3 + 1)
    }

    #[inline]
    pub fn prev(self) -> PartyId {
        PartyId((self.0 + 1) % 3 + 1)
    }
}

impl std::fmt::Display for PartyId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "P{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Message {
    pub session: u64,
    pub round: u32,
    pub sender: PartyId,
    pub payload: Vec<u64>,
}

const HEADER_BYTES: usize = 8 + 4 + 1;

impl Message {
    /// Header plus payload as 8-byte little-endian words.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_BYTES + 8 * self.payload.len());
        out.extend_from_slice(&self.session.to_le_bytes());
        out.extend_from_slice(&self.round.to_le_bytes());
        out.push(self.sender.get());
        for w in &self.payload {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Message> {
        if bytes.len() < HEADER_BYTES || !(bytes.len() - HEADER_BYTES).is_multiple_of(8) {
            return Err(Error::Format("bad frame length".into()));
        }
        let session = u64::from_le_bytes(bytes[0..8].try_into().unwrap());
        let round = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        let sender = PartyId::new(bytes[12]).ok_or_else(|| Error::Format("bad sender".into()))?;
        let payload = bytes[HEADER_BYTES..].chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(Message { session, round, sender, payload })
    }
}

#[derive(Default)]
struct MailState {
    queues: HashMap<(u64, PartyId), VecDeque<Message>>,
    closed: [bool; 3],
}

/// Incoming messages of one party.
#[derive(Default)]
pub struct Mailbox {
    state: Mutex<MailState>,
    cv: Condvar,
}

impl Mailbox {
    pub fn deliver(&self, msg: Message) {
        let mut s = self.state.lock().unwrap();
        s.queues.entry((msg.session, msg.sender)).or_default().push_back(msg);
        self.cv.notify_all();
    }

    pub fn close(&self, from: PartyId) {
        let mut s = self.state.lock().unwrap();
        s.closed[from.index()] = true;
        self.cv.notify_all();
    }

    /// Next message of `session` from `from`, blocking.
    pub fn take(&self, session: u64, from: PartyId) -> Result<Message> {
        let mut s = self.state.lock().unwrap();
        loop {
            if let Some(q) = s.queues.get_mut(&(session, from)) {
                if let Some(m) = q.pop_front() {
                    if q.is_empty() {
                        s.queues.remove(&(session, from));
                    }
                    return Ok(m);
                }
            }
            if s.closed[from.index()] {
                return Err(Error::PeerDisconnected(from.get()));
            }
            s = self.cv.wait(s).unwrap();
        }
    }
}

/// One party's connection to the other two.
pub trait Endpoint: Send + Sync {
    fn id(&self) -> PartyId;
    fn send(&self, to: PartyId, msg: &Message) -> Result<()>;
    fn recv(&self, session: u64, from: PartyId) -> Result<Message>;

    /// Receives the message for `round`, failing on any other round.
    fn recv_round(&self, session: u64, from: PartyId, round: u32) -> Result<Vec<u64>> {
        let m = self.recv(session, from)?;
        if m.round != round {
            return Err(Error::RoundMismatch { expected: round, got: m.round, from: from.get() });
        }
        Ok(m.payload)
    }
}

/// In-process backend: three endpoints sharing each other's mailboxes.
pub struct LocalEndpoint {
    id: PartyId,
    boxes: [Arc<Mailbox>; 3],
}

/// Creates connected in-process endpoints for parties 1, 2, 3.
pub fn local_network() -> [Arc<LocalEndpoint>; 3] {
    let boxes: [Arc<Mailbox>; 3] = Default::default();
    PartyId::ALL.map(|id| Arc::new(LocalEndpoint { id, boxes: boxes.clone() }))
}

impl Endpoint for LocalEndpoint {
    fn id(&self) -> PartyId {
        self.id
    }

    fn send(&self, to: PartyId, msg: &Message) -> Result<()> {
        self.boxes[to.index()].deliver(msg.clone());
        Ok(())
    }

    fn recv(&self, session: u64, from: PartyId) -> Result<Message> {
        self.boxes[self.id.index()].take(session, from)
    }
}

impl Drop for LocalEndpoint {
    fn drop(&mut self) {
        for p in PartyId::ALL {
            if p != self.id {
                self.boxes[p.index()].close(self.id);
            }
        }
    }
}

/// TCP backend. Frames are a 4-byte little-endian length, then the encoded
/// message. A reader thread per peer feeds the local mailbox.
pub struct TcpEndpoint {
    id: PartyId,
    writers: [Option<Mutex<TcpStream>>; 3],
    mailbox: Arc<Mailbox>,
}

fn write_frame(w: &mut impl Write, body: &[u8]) -> std::io::Result<()> {
    w.write_all(&(body.len() as u32).to_le_bytes())?;
    w.write_all(body)?;
    w.flush()
}

fn read_frame(r: &mut impl Read) -> std::io::Result<Vec<u8>> {
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let mut body = vec![0u8; u32::from_le_bytes(len) as usize];
    r.read_exact(&mut body)?;
    Ok(body)
}

impl TcpEndpoint {
    /// Connects party `id` to its peers. Each party accepts connections from
    /// higher-numbered parties and dials lower-numbered ones.
    pub fn connect(id: PartyId, listen: SocketAddr, peers: &[(PartyId, SocketAddr)], timeout: Duration) -> Result<Self> {
        let mut streams: [Option<TcpStream>; 3] = Default::default();
        let listener = TcpListener::bind(listen)?;
        let expected_inbound = PartyId::ALL.iter().filter(|p| p.get() > id.get()).count();
        for &(pid, addr) in peers.iter().filter(|(p, _)| p.get() < id.get()) {
            let deadline = std::time::Instant::now() + timeout;
            let mut s = loop {
                match TcpStream::connect(addr) {
                    Ok(s) => break s,
                    Err(e) if std::time::Instant::now() >= deadline => return Err(e.into()),
                    Err(_) => thread::sleep(Duration::from_millis(50)),
                }
            };
            s.write_all(&[id.get()])?;
            s.set_nodelay(true)?;
            streams[pid.index()] = Some(s);
        }
        for _ in 0..expected_inbound {
            let (mut s, _) = listener.accept()?;
            let mut who = [0u8; 1];
            s.read_exact(&mut who)?;
            let pid = PartyId::new(who[0]).filter(|p| p.get() > id.get()).ok_or_else(|| Error::Format("bad handshake".into()))?;
            s.set_nodelay(true)?;
            streams[pid.index()] = Some(s);
        }
        let mailbox = Arc::new(Mailbox::default());
        let mut writers: [Option<Mutex<TcpStream>>; 3] = Default::default();
        for (i, s) in streams.into_iter().enumerate() {
            let Some(s) = s else { continue };
            let peer = PartyId::ALL[i];
            let mut reader = s.try_clone()?;
            let mb = mailbox.clone();
            thread::spawn(move || {
                while let Ok(frame) = read_frame(&mut reader) {
                    match Message::decode(&frame) {
                        Ok(m) if m.sender == peer => mb.deliver(m),
                        _ => break,
                    }
                }
                mb.close(peer);
            });
            writers[i] = Some(Mutex::new(s));
        }
        if writers.iter().filter(|w| w.is_some()).count() != 2 {
            return Err(Error::Config("missing peer address".into()));
        }
        Ok(TcpEndpoint { id, writers, mailbox })
    }
}

impl Endpoint for TcpEndpoint {
    fn id(&self) -> PartyId {
        self.id
    }

    fn send(&self, to: PartyId, msg: &Message) -> Result<()> {
        let w = self.writers[to.index()].as_ref().ok_or(Error::PeerDisconnected(to.get()))?;
        let mut s = w.lock().unwrap();
        write_frame(&mut *s, &msg.encode()).map_err(|_| Error::PeerDisconnected(to.get()))
    }

    fn recv(&self, session: u64, from: PartyId) -> Result<Message> {
        self.mailbox.take(session, from)
    }
}

impl Drop for TcpEndpoint {
    fn drop(&mut self) {
        for w in self.writers.iter().flatten() {
            if let Ok(s) = w.lock() {
                let _ = s.shutdown(std::net::Shutdown::Write);
            }
        }
    }
}

/// Communication counters of one party in one session.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Metrics {
    pub rounds: u32,
    /// Logical bits: `|p|` per field element, 1 per bit.
    pub bits_sent: u64,
    /// Payload bytes on the wire.
    pub bytes_sent: u64,
    pub messages_sent: u64,
}

impl Metrics {
    /// Totals over several parties; rounds is the maximum.
    pub fn total(all: &[Metrics]) -> Metrics {
        Metrics {
            rounds: all.iter().map(|m| m.rounds).max().unwrap_or(0),
            bits_sent: all.iter().map(|m| m.bits_sent).sum(),
            bytes_sent: all.iter().map(|m| m.bytes_sent).sum(),
            messages_sent: all.iter().map(|m| m.messages_sent).sum(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn party_index_arithmetic() {
        assert_eq!(PartyId::P3.next(), PartyId::P1);
        assert_eq!(PartyId::P1.prev(), PartyId::P3);
        assert_eq!(PartyId::P2.next(), PartyId::P3);
        assert_eq!(PartyId::P2.prev(), PartyId::P1);
        assert!(PartyId::new(0).is_none() && PartyId::new(4).is_none());
    }

    #[test]
    fn message_codec_roundtrip() {
        let m = Message { session: 9, round: 4, sender: PartyId::P2, payload: vec![1, u64::MAX, 0] };
        assert_eq!(Message::decode(&m.encode()).unwrap(), m);
        assert!(Message::decode(&[0; 5]).is_err());
    }

    #[test]
    fn echo_and_ring() {
        let net = local_network();
        for p in PartyId::ALL {
            let m = Message { session: 1, round: 0, sender: p, payload: vec![p.get() as u64] };
            net[p.index()].send(p.next(), &m).unwrap();
            net[p.index()].send(p.prev(), &m).unwrap();
        }
        for p in PartyId::ALL {
            let a = net[p.index()].recv_round(1, p.prev(), 0).unwrap();
            let b = net[p.index()].recv_round(1, p.next(), 0).unwrap();
            assert_eq!(a, vec![p.prev().get() as u64]);
            assert_eq!(b, vec![p.next().get() as u64]);
        }
    }

    #[test]
    fn round_mismatch_detected() {
        let net = local_network();
        let m = Message { session: 1, round: 5, sender: PartyId::P1, payload: vec![] };
        net[0].send(PartyId::P2, &m).unwrap();
        assert!(matches!(net[1].recv_round(1, PartyId::P1, 4), Err(Error::RoundMismatch { expected: 4, got: 5, from: 1 })));
    }

    #[test]
    fn disconnect_after_drop() {
        let [a, b, _c] = local_network();
        let m = Message { session: 2, round: 0, sender: PartyId::P1, payload: vec![7] };
        a.send(PartyId::P2, &m).unwrap();
        drop(a);
        // Queued messages survive the sender's departure.
        assert_eq!(b.recv_round(2, PartyId::P1, 0).unwrap(), vec![7]);
        assert!(matches!(b.recv(2, PartyId::P1), Err(Error::PeerDisconnected(1))));
    }

    #[test]
    fn soak_preserves_per_sender_order() {
        let net = local_network();
        let sender = net[0].clone();
        let other = net[2].clone();
        let t1 = thread::spawn(move || {
            let mut rng = ChaCha20Rng::seed_from_u64(1);
            for i in 0..10_000u32 {
                let session = rng.gen_range(0..4u64);
                sender.send(PartyId::P2, &Message { session, round: i, sender: PartyId::P1, payload: vec![i as u64] }).unwrap();
            }
        });
        let t3 = thread::spawn(move || {
            for i in 0..10_000u32 {
                other.send(PartyId::P2, &Message { session: 0, round: i, sender: PartyId::P3, payload: vec![] }).unwrap();
            }
        });
        t1.join().unwrap();
        t3.join().unwrap();
        let mut seen = 0;
        for session in 0..4 {
            let mut last = None;
            loop {
                let s = net[1].boxes[1].state.lock().unwrap();
                let empty = !s.queues.contains_key(&(session, PartyId::P1));
                drop(s);
                if empty {
                    break;
                }
                let m = net[1].recv(session, PartyId::P1).unwrap();
                assert!(last.is_none_or(|l| m.round > l));
                last = Some(m.round);
                seen += 1;
            }
        }
        assert_eq!(seen, 10_000);
        for i in 0..10_000 {
            assert_eq!(net[1].recv(0, PartyId::P3).unwrap().round, i);
        }
    }

    #[test]
    fn tcp_backend_exchanges_frames() {
        let ports: Vec<SocketAddr> = (0..3)
            .map(|_| {
                let l = TcpListener::bind("127.0.0.1:0").unwrap();
                l.local_addr().unwrap()
            })
            .collect();
        let handles: Vec<_> = PartyId::ALL
            .iter()
            .map(|&id| {
                let ports = ports.clone();
                thread::spawn(move || {
                    let peers: Vec<(PartyId, SocketAddr)> = PartyId::ALL.iter().filter(|&&p| p != id).map(|&p| (p, ports[p.index()])).collect();
                    let ep = TcpEndpoint::connect(id, ports[id.index()], &peers, Duration::from_secs(10)).unwrap();
                    for s in 0..3u64 {
                        let m = Message { session: s, round: 0, sender: id, payload: vec![id.get() as u64 * 100 + s] };
                        ep.send(id.next(), &m).unwrap();
                    }
                    let got: Vec<u64> = (0..3u64).rev().map(|s| ep.recv_round(s, id.prev(), 0).unwrap()[0]).collect();
                    (id, got)
                })
            })
            .collect();
        for h in handles {
            let (id, got) = h.join().unwrap();
            let p = id.prev().get() as u64 * 100;
            assert_eq!(got, vec![p + 2, p + 1, p]);
        }
    }
}
