//! Inverse, private division, square root, inverse square root and
//! exponential on inputs 1..=n at offset 10, with their accuracy in bits.
//!
//! cargo run --release --example elementary_functions [n]

use tmpc::bench::{bench_elem, ElemFn};
use tmpc::{Field, LocalConfig};

fn main() -> tmpc::Result<()> {
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let cfg = LocalConfig::new(Field::M61, 1);
    for f in ElemFn::ALL {
        let b = bench_elem(&cfg, f, n, 10)?;
        println!(
            "{:<8} delta={:<2} avg {:.2} bits, worst {:.2} bits, {} rounds",
            f.name(),
            b.delta,
            b.accuracy.avg_bits,
            b.accuracy.worst_bits,
            b.metrics.rounds
        );
    }
    Ok(())
}
