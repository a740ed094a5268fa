//! Replicated sharing of a few values, local arithmetic, one multiplication
//! and the opening.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use tmpc::protocols::{mult, open};
use tmpc::sharing::share_rep;
use tmpc::{run_local, Field, LocalConfig};

fn main() -> tmpc::Result<()> {
    let f = Field::M61;
    let a = [7u64, 1_000_000, 3];
    let b = [6u64, 1_000_000, 0];
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let sa = share_rep(&f, &a, &mut rng);
    let sb = share_rep(&f, &b, &mut rng);
    println!("party 1 holds x={:?} y={:?}", sa[0].x, sa[0].y);

    let run = run_local(&LocalConfig::new(f, 2), |p| {
        let (x, y) = (&sa[p.id.index()], &sb[p.id.index()]);
        let sum = x.add(&p.field, y);
        let prod = mult(p, x, y)?;
        Ok((open(p, &sum)?, open(p, &prod)?))
    })?;
    let (sum, prod) = &run.outputs[0];
    println!("a + b = {sum:?}");
    println!("a * b = {prod:?}");
    println!("rounds={} bits={}", run.total().rounds, run.total().bits_sent);
    Ok(())
}
