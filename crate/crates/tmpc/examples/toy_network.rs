//! One secure training step of a 2-2-2 network next to the cleartext
//! fixed-point reference.

use tmpc::nn::reference::{self, Mat, RefNet};
use tmpc::nn::{one_hot, train_step, NnConfig, SecureMatrix, SecureNet};
use tmpc::protocols::open;
use tmpc::{run_local, Field, LocalConfig};

fn main() -> tmpc::Result<()> {
    let cfg = NnConfig::new(vec![2, 2, 2], 4);
    let w = vec![Mat::from_f64(2, 2, &[0.8, -0.5, 0.3, 0.9], cfg.frac), Mat::from_f64(2, 2, &[1.0, -0.7, -0.4, 0.6], cfg.frac)];
    let x = Mat::from_f64(4, 2, &[0.5, 0.2, 0.1, 0.9, 0.7, 0.6, 0.3, 0.4], cfg.frac);
    let t = one_hot(&[0, 1, 1, 0], 2, cfg.softmax.out_offset as u32);

    let f = Field::M61;
    let run = run_local(&LocalConfig::new(f, 1), |p| {
        let mut net = SecureNet::dealt(&p.field, p.id, &w, cfg.frac, 2);
        let xs = SecureMatrix::dealt(&p.field, p.id, &x, cfg.frac as i32, 3);
        let ts = SecureMatrix::dealt(&p.field, p.id, &t, cfg.softmax.out_offset, 4);
        let tr = train_step(p, &mut net, &xs, &ts, &cfg)?;
        let probs = open(p, &tr.softmax.probs.data)?;
        let mut after = Vec::new();
        for m in &net.weights {
            after.push(open(p, &m.data)?);
        }
        Ok((probs, after))
    })?;

    let mut rnet = RefNet::new(w.clone());
    let rt = reference::train_step(&mut rnet, &x, &t, &cfg);
    let (probs, after) = &run.outputs[0];
    let unit = |v: u64| f.to_i64(v);
    println!("softmax (secure):    {:?}", probs.iter().map(|&v| unit(v)).collect::<Vec<_>>());
    println!("softmax (reference): {:?}", rt.probs.v);
    for (l, (s, r)) in after.iter().zip(&rnet.weights).enumerate() {
        let diff: Vec<i64> = s.iter().zip(&r.v).map(|(&a, b)| unit(a) - b).collect();
        println!("layer {l} weights, secure - reference in units of 2^-{}: {diff:?}", cfg.frac);
    }
    Ok(())
}
