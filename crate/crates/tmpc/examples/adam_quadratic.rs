//! Secure Adam on `(w - 3)^2`, next to the cleartext fixed-point reference.

use tmpc::nn::reference::{self, Mat};
use tmpc::nn::{adam_update, AdamConfig, AdamState, SecureMatrix};
use tmpc::protocols::open;
use tmpc::{run_local, Field, LocalConfig};

const FRAC: u32 = 20;
const GRAD_FRAC: u32 = 24;

fn grad(w: f64) -> i64 {
    (2.0 * (w - 3.0) * 2f64.powi(GRAD_FRAC as i32)).round() as i64
}

fn main() -> tmpc::Result<()> {
    let f = Field::M61;
    let mut cfg = AdamConfig::default();
    cfg.lr_shift = 4;
    let steps = 40;
    let w0 = 1i64 << FRAC;

    let run = run_local(&LocalConfig::new(f, 1), |p| {
        let mut w = SecureMatrix::dealt(&p.field, p.id, &Mat::new(1, 1, vec![w0]), FRAC as i32, 1).data;
        let mut st = AdamState::zeros(p.id, 1);
        let mut path = Vec::new();
        for s in 0..steps {
            // The gradient is public here: it is computed from the opened weight.
            let opened = open(p, &w)?[0];
            let cur = p.field.to_i64(opened) as f64 / 2f64.powi(FRAC as i32);
            path.push(cur);
            let g = SecureMatrix::dealt(&p.field, p.id, &Mat::new(1, 1, vec![grad(cur)]), GRAD_FRAC as i32, 100 + s).data;
            w = adam_update(p, &w, &g, &mut st, &cfg, GRAD_FRAC, FRAC)?.0;
        }
        Ok(path)
    })?;

    let (mut w, mut m, mut v) = (w0, 0i64, 0i64);
    for (t, secure) in run.outputs[0].iter().enumerate() {
        if t % 5 == 0 {
            println!("step {t:>2}: secure w = {secure:.6}  reference w = {:.6}", w as f64 / 2f64.powi(FRAC as i32));
        }
        let g = grad(w as f64 / 2f64.powi(FRAC as i32));
        let (_, m2, v2) = reference::adam_moments(&[g], &[m], &[v], &cfg, GRAD_FRAC);
        (m, v) = (m2[0], v2[0]);
        let h = reference::adam_root(&[v], &cfg);
        let (_, step) = reference::adam_step(&h, &[m], t as u64 + 1, &cfg, GRAD_FRAC, FRAC);
        w -= step[0];
    }
    Ok(())
}
