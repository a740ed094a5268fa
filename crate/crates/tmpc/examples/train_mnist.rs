//! One epoch of the three-layer network on the bundled MNIST subset, secure
//! and in cleartext, side by side.
//!
//! cargo run --release --example train_mnist [data-dir] [epochs]

use std::path::PathBuf;
use std::time::Instant;

use tmpc::nn::NnConfig;
use tmpc::{mnist, training, Field};

fn main() -> tmpc::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = args.next().map(PathBuf::from).unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist-subset"));
    let epochs: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let data = mnist::load_dir(&dir, None, None)?;
    let cfg = NnConfig::mnist_3dnn();

    let t = Instant::now();
    let reference = training::train_reference(&cfg, &data, epochs)?;
    println!("reference  test_acc={:.4} secs={:.1}", reference.test_accuracy, t.elapsed().as_secs_f64());

    let t = Instant::now();
    let secure = training::train_local(&cfg, &data, epochs, Field::mersenne(61).unwrap(), 1)?;
    let m = secure.metrics.unwrap_or_default();
    println!("secure     test_acc={:.4} secs={:.1} rounds={} bytes={}", secure.test_accuracy, t.elapsed().as_secs_f64(), m.rounds, m.bytes_sent);
    for s in secure.steps.iter().step_by(8) {
        println!("step={} loss={:.4} acc={:.3}", s.step, s.loss, s.accuracy);
    }
    Ok(())
}
