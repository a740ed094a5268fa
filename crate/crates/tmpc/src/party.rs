//! One party's runtime: identity, correlated randomness, the round clock and
//! the in-process three-party runner.
//!
//! Protocol code is written SPMD style: all three parties execute the same
//! function and meet in [`Party::round`].

use std::collections::HashMap;
use std::sync::{Arc, Condvar, Mutex};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::sharing::{Bits, Correlated, Security, SeedSet};
use crate::transport::{local_network, Endpoint, Message, Metrics, PartyId};

/// Whether sub-protocols with an ideal counterpart run for real or through
/// the trusted hub.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Real,
    Ideal,
}

/// A message payload with its logical size.
#[derive(Clone, Debug)]
pub struct Payload {
    pub words: Vec<u64>,
    pub bits: u64,
}

impl Payload {
    pub fn elems(field: &Field, v: Vec<u64>) -> Payload {
        let bits = v.len() as u64 * field.bits() as u64;
        Payload { words: v, bits }
    }

    pub fn bits(b: Bits) -> Payload {
        let bits = b.len() as u64;
        Payload { words: b.into_words(), bits }
    }

    pub fn empty() -> Payload {
        Payload { words: Vec::new(), bits: 0 }
    }
}

pub struct Party {
    pub id: PartyId,
    pub field: Field,
    pub mode: Mode,
    pub security: Security,
    prg: Correlated,
    net: Arc<dyn Endpoint>,
    session: u64,
    round: u32,
    metrics: Metrics,
    hub: Option<Arc<IdealHub>>,
    hub_calls: u64,
}

impl Party {
    pub fn new(field: Field, seeds: &SeedSet, session: u64, net: Arc<dyn Endpoint>) -> Party {
        Party {
            id: net.id(),
            field,
            mode: Mode::Real,
            security: Security::Passive,
            prg: Correlated::new(seeds, session),
            net,
            session,
            round: 0,
            metrics: Metrics::default(),
            hub: None,
            hub_calls: 0,
        }
    }

    pub fn session(&self) -> u64 {
        self.session
    }

    pub fn metrics(&self) -> Metrics {
        self.metrics
    }

    pub fn prg(&mut self) -> &mut Correlated {
        &mut self.prg
    }

    /// One communication round. `out` lists at most one payload per peer;
    /// `from` lists the peers this party expects to hear from. Every party
    /// calls this in lockstep, even with nothing to send.
    pub fn round(&mut self, out: Vec<(PartyId, Payload)>, from: &[PartyId]) -> Result<HashMap<PartyId, Vec<u64>>> {
        let r = self.round;
        self.round += 1;
        self.metrics.rounds = self.round;
        for (to, p) in out {
            let msg = Message { session: self.session, round: r, sender: self.id, payload: p.words };
            self.metrics.bits_sent += p.bits;
            self.metrics.bytes_sent += 8 * msg.payload.len() as u64;
            self.metrics.messages_sent += 1;
            self.net.send(to, &msg)?;
        }
        let mut got = HashMap::new();
        for &f in from {
            got.insert(f, self.net.recv_round(self.session, f, r)?);
        }
        Ok(got)
    }

    /// Sends one payload and receives one, in the same round.
    pub fn exchange(&mut self, to: Option<(PartyId, Payload)>, from: Option<PartyId>) -> Result<Option<Vec<u64>>> {
        let from_list: Vec<PartyId> = from.into_iter().collect();
        let mut got = self.round(to.into_iter().collect(), &from_list)?;
        Ok(from.and_then(|f| got.remove(&f)))
    }

    /// Advances the round clock without traffic, for ideal sub-protocols.
    pub fn skip_rounds(&mut self, n: u32) {
        self.round += n;
        self.metrics.rounds = self.round;
    }

    pub fn ideal_hub(&self) -> Result<Arc<IdealHub>> {
        self.hub.clone().ok_or_else(|| Error::Config("ideal mode needs the in-process hub".into()))
    }

    /// Submits this party's views to the trusted hub and returns its view of
    /// the outputs. `f` maps cleartext inputs to cleartext outputs.
    pub fn ideal_call(&mut self, inputs: Vec<HubShare>, f: &dyn Fn(&Field, &[Vec<u64>]) -> Vec<(Kind, Vec<u64>)>) -> Result<Vec<HubShare>> {
        let hub = self.ideal_hub()?;
        let idx = self.hub_calls;
        self.hub_calls += 1;
        Ok(hub.call(self.id, idx, inputs, f))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Arith,
    Bool,
}

/// One party's `(x, y)` view of a batch, bits unpacked to `0/1` words.
#[derive(Clone, Debug)]
pub struct HubShare {
    pub kind: Kind,
    pub x: Vec<u64>,
    pub y: Vec<u64>,
}

struct Slot {
    inputs: [Option<Vec<HubShare>>; 3],
    outputs: Option<[Option<Vec<HubShare>>; 3]>,
}

/// Test-only trusted party: reconstructs, evaluates and reshares.
pub struct IdealHub {
    field: Field,
    slots: Mutex<HashMap<u64, Slot>>,
    cv: Condvar,
    rng: Mutex<ChaCha20Rng>,
}

impl IdealHub {
    pub fn new(field: Field, seed: u64) -> IdealHub {
        IdealHub { field, slots: Mutex::new(HashMap::new()), cv: Condvar::new(), rng: Mutex::new(ChaCha20Rng::seed_from_u64(seed ^ 0x1dea1)) }
    }

    fn call(&self, party: PartyId, idx: u64, inputs: Vec<HubShare>, f: &dyn Fn(&Field, &[Vec<u64>]) -> Vec<(Kind, Vec<u64>)>) -> Vec<HubShare> {
        let mut slots = self.slots.lock().unwrap();
        let slot = slots.entry(idx).or_insert_with(|| Slot { inputs: [None, None, None], outputs: None });
        slot.inputs[party.index()] = Some(inputs);
        if slot.inputs.iter().all(|i| i.is_some()) {
            let views: Vec<Vec<HubShare>> = slot.inputs.iter_mut().map(|i| i.take().unwrap()).collect();
            let secrets = self.open(&views);
            let outs = f(&self.field, &secrets);
            slot.outputs = Some(self.reshare(outs));
            self.cv.notify_all();
        }
        loop {
            let slot = slots.get_mut(&idx).unwrap();
            if let Some(outs) = slot.outputs.as_mut() {
                let mine = outs[party.index()].take().unwrap();
                if outs.iter().all(|o| o.is_none()) {
                    slots.remove(&idx);
                }
                return mine;
            }
            slots = self.cv.wait(slots).unwrap();
        }
    }

    fn open(&self, views: &[Vec<HubShare>]) -> Vec<Vec<u64>> {
        let f = &self.field;
        (0..views[0].len())
            .map(|k| {
                let n = views[0][k].x.len();
                (0..n)
                    .map(|e| {
                        let [a, b, c] = [views[0][k].x[e], views[1][k].x[e], views[2][k].x[e]];
                        match views[0][k].kind {
                            Kind::Arith => f.add(f.add(a, b), c),
                            Kind::Bool => a ^ b ^ c,
                        }
                    })
                    .collect()
            })
            .collect()
    }

    fn reshare(&self, outs: Vec<(Kind, Vec<u64>)>) -> [Option<Vec<HubShare>>; 3] {
        let f = &self.field;
        let mut rng = self.rng.lock().unwrap();
        let mut per: [Vec<HubShare>; 3] = Default::default();
        for (kind, v) in outs {
            let mut subs: [Vec<u64>; 3] = Default::default();
            for &s in &v {
                let (a1, a2, a3) = match kind {
                    Kind::Arith => {
                        let a1 = f.random(&mut *rng);
                        let a2 = f.random(&mut *rng);
                        (a1, a2, f.sub(f.sub(s, a1), a2))
                    }
                    Kind::Bool => {
                        let a1 = rand::Rng::gen::<bool>(&mut *rng) as u64;
                        let a2 = rand::Rng::gen::<bool>(&mut *rng) as u64;
                        (a1, a2, s ^ a1 ^ a2)
                    }
                };
                subs[0].push(a1);
                subs[1].push(a2);
                subs[2].push(a3);
            }
            for i in 0..3 {
                per[i].push(HubShare { kind, x: subs[i].clone(), y: subs[(i + 1) % 3].clone() });
            }
        }
        per.map(Some)
    }
}

/// Parameters of an in-process three-party run.
#[derive(Clone, Debug)]
pub struct LocalConfig {
    pub field: Field,
    pub seed: u64,
    pub session: u64,
    pub mode: Mode,
    pub security: Security,
}

impl LocalConfig {
    pub fn new(field: Field, seed: u64) -> LocalConfig {
        LocalConfig { field, seed, session: 0, mode: Mode::Real, security: Security::Passive }
    }

    pub fn ideal(mut self) -> Self {
        self.mode = Mode::Ideal;
        self
    }

    pub fn active(mut self) -> Self {
        self.security = Security::Active;
        self
    }
}

/// Outputs and counters of the three parties.
#[derive(Debug)]
pub struct LocalRun<T> {
    pub outputs: [T; 3],
    pub metrics: [Metrics; 3],
}

impl<T> LocalRun<T> {
    pub fn total(&self) -> Metrics {
        Metrics::total(&self.metrics)
    }
}

/// Runs `f` as all three parties on threads over the channel backend.
pub fn run_local<T, F>(cfg: &LocalConfig, f: F) -> Result<LocalRun<T>>
where
    T: Send,
    F: Fn(&mut Party) -> Result<T> + Sync,
{
    let seeds = SeedSet::derive_all(cfg.seed);
    let hub = Arc::new(IdealHub::new(cfg.field, cfg.seed));
    let net = local_network();
    let results: Vec<Result<(T, Metrics)>> = std::thread::scope(|s| {
        let handles: Vec<_> = net
            .into_iter()
            .zip(seeds.iter())
            .map(|(ep, seeds)| {
                let f = &f;
                let hub = hub.clone();
                s.spawn(move || {
                    let mut p = Party::new(cfg.field, seeds, cfg.session, ep);
                    p.mode = cfg.mode;
                    p.security = cfg.security;
                    p.hub = Some(hub);
                    let out = f(&mut p)?;
                    Ok((out, p.metrics()))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("party thread panicked")).collect()
    });
    // Report the root cause rather than a peer's disconnect.
    if let Some(e) = results.iter().position(|r| matches!(r, Err(e) if !matches!(e, Error::PeerDisconnected(_)))) {
        return Err(results.into_iter().nth(e).unwrap().err().unwrap());
    }
    let mut outs = Vec::new();
    let mut metrics = [Metrics::default(); 3];
    for (i, r) in results.into_iter().enumerate() {
        let (o, m) = r?;
        outs.push(o);
        metrics[i] = m;
    }
    let outputs: [T; 3] = outs.try_into().ok().expect("three outputs");
    Ok(LocalRun { outputs, metrics })
}
