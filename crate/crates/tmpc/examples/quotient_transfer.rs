//! Quotient transfer: shares of `q` with `sum of sub-shares = a + q p`,
//! for every even `a` and every first share at p = 31.

use tmpc::protocols::qt_add;
use tmpc::sharing::{add_from_first, reconstruct_add};
use tmpc::{run_local, Field, LocalConfig};

fn main() -> tmpc::Result<()> {
    let f = Field::M31;
    let p = f.p();
    let mut secrets = Vec::new();
    let mut first = Vec::new();
    for a in (0..p).step_by(2) {
        for a1 in 0..p {
            secrets.push(a);
            first.push(a1);
        }
    }
    let sh = add_from_first(&f, &secrets, &first);
    let n = secrets.len();
    let run = run_local(&LocalConfig::new(f, 1), |pt| qt_add(pt, &sh[pt.id.index()], n))?;
    let q = reconstruct_add(&f, &[&run.outputs[0], &run.outputs[1]])?;
    let mut bad = 0;
    for i in 0..n {
        let (a1, a2) = (sh[0].v[i], sh[1].v[i]);
        if a1 + a2 != secrets[i] + q[i] * p {
            bad += 1;
        }
    }
    println!("{n} cases, {bad} identity failures, {} rounds", run.total().rounds);
    println!("q histogram: {:?}", [0, 1].map(|v| q.iter().filter(|&&x| x == v).count()));
    Ok(())
}
