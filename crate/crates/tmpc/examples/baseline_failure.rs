//! Why the quotient has to be transferred: the mask-open-divide division
//! is off by about p/d whenever the masked value wraps. The exact-quotient
//! division on the same inputs stays within 2.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use tmpc::bench::bench_div;
use tmpc::oracle::baseline_masked_division;
use tmpc::{Field, LocalConfig};

fn main() -> tmpc::Result<()> {
    let f = Field::M8191;
    let d = 16;
    let inputs: Vec<u64> = (0..100_000).map(|i| 2 * (i % 2048)).collect();
    let st = baseline_masked_division(&f, d, &inputs, &mut ChaCha20Rng::seed_from_u64(5));
    println!(
        "baseline: {} large errors in {} trials (expected {:.1} +- {:.1}), magnitude {:?}, p/d = {}",
        st.large_errors,
        st.trials,
        st.expected,
        st.sigma(&inputs, f.p()),
        st.large_magnitude,
        f.p() / d
    );
    let b = bench_div(&LocalConfig::new(f, 6), d, &inputs)?;
    println!("exact-quotient division: worst |c - a/d| = {:.3}", b.worst_l1);
    Ok(())
}
