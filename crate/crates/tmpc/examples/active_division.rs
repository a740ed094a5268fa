//! The rounding division used under active security: each sub-share is
//! rounded by both of its holders, the copies are cross-checked on opening.

use tmpc::bench::bench_div;
use tmpc::{Field, LocalConfig};

fn main() -> tmpc::Result<()> {
    let cfg = LocalConfig::new(Field::M61, 3).active();
    let inputs: Vec<u64> = (1..=10000).collect();
    for d in [1u64 << 12, 17] {
        let b = bench_div(&cfg, d, &inputs)?;
        println!("active d={d:<5} avg {:.4} worst {:.4}", b.avg_l1, b.worst_l1);
    }
    Ok(())
}
