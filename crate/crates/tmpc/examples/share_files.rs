//! Writing each party's shares to a TMPC share file and reading them back.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use tmpc::sharefile::ShareFile;
use tmpc::sharing::{reconstruct_rep, share_rep};
use tmpc::{Field, Security};

fn main() -> tmpc::Result<()> {
    let f = Field::M61;
    let dir = std::env::temp_dir().join("tmpc-share-files");
    std::fs::create_dir_all(&dir)?;
    let values = [5u64 << 20, 1 << 19, 0];
    let mut views = Vec::new();
    for s in share_rep(&f, &values, &mut ChaCha20Rng::seed_from_u64(8)) {
        let path = dir.join(format!("v-{}.tmpc", s.party));
        let file = ShareFile::rep(&f, s.clone(), 20, 1);
        file.write(&path)?;
        let bytes = std::fs::read(&path)?;
        println!("{}: {} bytes, header {:02x?}", path.display(), bytes.len(), &bytes[..8]);
        views.push(ShareFile::read(&path)?.expect(&f, s.party)?.into_rep()?);
    }
    let back = reconstruct_rep(&f, &[&views[0], &views[1], &views[2]], Security::Active)?;
    println!("reconstructed {back:?} at offset 20 = {:?}", back.iter().map(|&v| v as f64 / 2f64.powi(20)).collect::<Vec<_>>());
    Ok(())
}
