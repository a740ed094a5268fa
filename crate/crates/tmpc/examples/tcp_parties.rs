//! Three parties talking over loopback TCP, one thread each, computing a
//! truncation of a shared vector.

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use tmpc::division::truncate;
use tmpc::protocols::open;
use tmpc::sharing::{share_rep, SeedSet};
use tmpc::transport::TcpEndpoint;
use tmpc::{Field, Party, PartyId};

fn main() -> tmpc::Result<()> {
    let f = Field::M61;
    let addrs: Vec<(PartyId, SocketAddr)> = PartyId::ALL.iter().zip(7401..).map(|(&id, port)| (id, format!("127.0.0.1:{port}").parse().unwrap())).collect();
    let shares = share_rep(&f, &[1 << 20, 3 << 20, 12345], &mut ChaCha20Rng::seed_from_u64(1));
    let seeds = SeedSet::derive_all(42);

    let outs: Vec<tmpc::Result<(Vec<u64>, u32)>> = std::thread::scope(|s| {
        let handles: Vec<_> = PartyId::ALL
            .iter()
            .map(|&id| {
                let (addrs, shares, seeds) = (&addrs, &shares, &seeds);
                s.spawn(move || {
                    let net = TcpEndpoint::connect(id, addrs[id.index()].1, addrs, Duration::from_secs(10))?;
                    let mut p = Party::new(f, &seeds[id.index()], 0, Arc::new(net));
                    let t = truncate(&mut p, &shares[id.index()], 10)?;
                    Ok((open(&mut p, &t)?, p.metrics().rounds))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    for (id, o) in PartyId::ALL.iter().zip(outs) {
        let (v, rounds) = o?;
        println!("{id}: a / 2^10 = {v:?} after {rounds} rounds");
    }
    Ok(())
}
