//! Bit decomposition and composition, and the additive/replicated
//! conversions, checked on every value of the 5-bit field.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use tmpc::protocols::{bit_compose, bit_decompose, convert_to_add, convert_to_rep, open, open_bits};
use tmpc::sharing::share_rep;
use tmpc::{run_local, Field, LocalConfig};

fn main() -> tmpc::Result<()> {
    let f = Field::M31;
    let all: Vec<u64> = (0..31).collect();
    let sh = share_rep(&f, &all, &mut ChaCha20Rng::seed_from_u64(3));
    let run = run_local(&LocalConfig::new(f, 4), |p| {
        let a = &sh[p.id.index()];
        let bits = bit_decompose(p, a, 5)?;
        let mut low = Vec::new();
        for b in &bits[..2] {
            low.push(open_bits(p, b)?);
        }
        let back = bit_compose(p, &bits)?;
        let add = convert_to_add(&p.field, a);
        let rep = convert_to_rep(p, &add, all.len())?;
        Ok((low, open(p, &back)?, open(p, &rep)?))
    })?;
    let (low, composed, converted) = &run.outputs[0];
    println!("bit 0 of 0..31: {:?}", (0..31).map(|i| low[0].get(i) as u8).collect::<Vec<_>>());
    println!("bit 1 of 0..31: {:?}", (0..31).map(|i| low[1].get(i) as u8).collect::<Vec<_>>());
    println!("compose(decompose(a)) == a: {}", *composed == all);
    println!("to_rep(to_add(a)) == a:     {}", *converted == all);
    Ok(())
}
