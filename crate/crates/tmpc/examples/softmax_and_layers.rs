//! ReLU, row maximum, softmax and batch normalisation on one small matrix.

use tmpc::nn::reference::Mat;
use tmpc::nn::{batch_norm, max_flag, relu, softmax, SecureMatrix, SoftmaxParams};
use tmpc::protocols::open;
use tmpc::{run_local, Field, LocalConfig, Party, RepShare};

const FRAC: u32 = 20;

fn show(p: &mut Party, name: &str, s: &RepShare, cols: usize, offset: i32) -> tmpc::Result<()> {
    let v = open(p, s)?;
    if p.id.get() == 1 {
        let vals: Vec<String> = v.iter().map(|&x| format!("{:7.4}", p.field.to_i64(x) as f64 / 2f64.powi(offset))).collect();
        for row in vals.chunks(cols) {
            println!("{name:<8} {}", row.join(" "));
        }
    }
    Ok(())
}

fn main() -> tmpc::Result<()> {
    let u = Mat::from_f64(2, 4, &[1.0, -2.0, 0.5, 3.0, -1.0, -0.25, 2.0, 0.0], FRAC);
    let f = Field::M61;
    run_local(&LocalConfig::new(f, 1), |p| {
        let x = SecureMatrix::dealt(&p.field, p.id, &u, FRAC as i32, 9);
        let (y, _) = relu(p, &x, 40)?;
        show(p, "relu", &y.data, 4, FRAC as i32)?;
        let (m, flags) = max_flag(p, &x, 40)?;
        show(p, "max", &m.data, 1, FRAC as i32)?;
        show(p, "argmax", &flags.data, 4, 0)?;
        let prm = SoftmaxParams::default();
        let sm = softmax(p, &x, &prm)?;
        show(p, "softmax", &sm.probs.data, 4, prm.out_offset)?;
        let bn = batch_norm(p, &x, 1e-3)?;
        show(p, "bnorm", &bn.data, 4, bn.offset())?;
        Ok(())
    })?;
    Ok(())
}
