//! Round and bit counters: the two-round replicated division against
//! the `5|p| + 5` bits per element bound, an idle session, and the ideal
//! mode that replaces sub-protocols by trusted evaluation.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use tmpc::division::div_pub_rep;
use tmpc::sharing::share_rep;
use tmpc::{run_local, Field, LocalConfig};

fn main() -> tmpc::Result<()> {
    for f in [Field::M31, Field::M8191, Field::M61] {
        let sh = share_rep(&f, &[8], &mut ChaCha20Rng::seed_from_u64(1));
        let run = run_local(&LocalConfig::new(f, 2), |p| div_pub_rep(p, &sh[p.id.index()], 4))?;
        let m = run.total();
        println!("|p|={:<2} rounds={} bits={} bound={}", f.bits(), m.rounds, m.bits_sent, 5 * f.bits() + 5);
        let ideal = run_local(&LocalConfig::new(f, 2).ideal(), |p| div_pub_rep(p, &sh[p.id.index()], 4))?;
        println!("      ideal mode: rounds={}", ideal.total().rounds);
    }
    let idle = run_local(&LocalConfig::new(Field::M61, 3), |_| Ok(()))?;
    println!("idle session: rounds={} bits={}", idle.total().rounds, idle.total().bits_sent);
    Ok(())
}
