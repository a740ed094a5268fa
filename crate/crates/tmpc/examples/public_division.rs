//! Division by a public value: outputs land on floor(a/d) + {0, 1, 2}.
//! Compares the one-round additive division's output distribution with the
//! closed form, then runs the two-round replicated version at 61 bits.

use tmpc::bench::{bench_div, verify_dist};
use tmpc::{Field, LocalConfig};

fn main() -> tmpc::Result<()> {
    let small = LocalConfig::new(Field::M31, 1);
    for row in verify_dist(&small, 3, &[0, 4, 10])? {
        println!("p=31 d=3 a={:>2} predicted={:?} enumerated={:?}", row.a, row.predicted, row.empirical);
    }

    let big = LocalConfig::new(Field::M61, 2);
    let inputs: Vec<u64> = (1..=10000).collect();
    for d in [1u64 << 12, 17] {
        let b = bench_div(&big, d, &inputs)?;
        println!("d={d:<5} avg |c - a/d| = {:.4}  worst = {:.4}  rounds = {}", b.avg_l1, b.worst_l1, b.metrics.rounds);
    }
    Ok(())
}
