//! Epoch drivers for the secure network and its cleartext reference.
//!
//! Both follow the same batch schedule: a seeded shuffle per epoch, then
//! consecutive full batches (a short tail is dropped).

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::Result;
use crate::field::Field;
use crate::mnist::Mnist;
use crate::nn::reference::{self, Mat, RefNet};
use crate::nn::{one_hot, pixels_to_fixed, train_step, NnConfig, SecureMatrix, SecureNet, StepTrace};
use crate::party::{run_local, LocalConfig, Party};
use crate::protocols::open;
use crate::sharefile::ShareFile;
use crate::sharing::{reconstruct_rep, share_rep, RepShare, Security};
use crate::transport::{Metrics, PartyId};

pub const CLASSES: usize = 10;

/// Per-batch figures: mean cross-entropy of the output probabilities and
/// the batch accuracy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepMetrics {
    pub step: usize,
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub steps: Vec<StepMetrics>,
    pub weights: Vec<Mat>,
    pub test_accuracy: f64,
    /// Summed over the three parties; absent for the reference.
    pub metrics: Option<Metrics>,
}

/// Batch index lists for `epochs` passes over `n` examples.
pub fn schedule(n: usize, batch: usize, epochs: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for e in 0..epochs {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut ChaCha20Rng::seed_from_u64(seed ^ (0x5eed_0000 + e as u64)));
        out.extend(idx.chunks_exact(batch).map(|c| c.to_vec()));
    }
    out
}

/// Inputs at the activation offset and one-hot targets at the softmax
/// output offset.
pub fn batch_mats(data: &Mnist, idx: &[usize], cfg: &NnConfig) -> (Mat, Mat, Vec<u8>) {
    let k = data.train_images.pixels_per_image();
    let x = pixels_to_fixed(&data.train_images.gather(idx), idx.len(), k, cfg.frac);
    let labels: Vec<u8> = idx.iter().map(|&i| data.train_labels[i]).collect();
    let t = one_hot(&labels, CLASSES, cfg.softmax.out_offset as u32);
    (x, t, labels)
}

pub fn test_mats(data: &Mnist, cfg: &NnConfig) -> Mat {
    let img = &data.test_images;
    pixels_to_fixed(&img.pixels, img.count, img.pixels_per_image(), cfg.frac)
}

fn step_metrics(step: usize, probs: &Mat, labels: &[u8], offset: i32) -> StepMetrics {
    let pred = reference::argmax_rows(probs);
    let hits = pred.iter().zip(labels).filter(|(p, l)| **p == **l as usize).count();
    StepMetrics { step, loss: reference::cross_entropy_probs(probs, labels, offset), accuracy: hits as f64 / labels.len().max(1) as f64 }
}

pub fn train_reference(cfg: &NnConfig, data: &Mnist, epochs: usize) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mut net = RefNet::new(reference::init_weights(&cfg.dims, cfg.frac, cfg.seed));
    let mut steps = Vec::new();
    for (s, idx) in schedule(data.train_images.count, cfg.batch, epochs, cfg.seed).iter().enumerate() {
        let (x, t, labels) = batch_mats(data, idx, cfg);
        let tr = reference::train_step(&mut net, &x, &t, cfg);
        steps.push(step_metrics(s, &tr.probs, &labels, cfg.softmax.out_offset));
    }
    let test_accuracy = reference::accuracy(&net.weights, &test_mats(data, cfg), &data.test_labels, cfg.frac);
    Ok(TrainOutcome { steps, weights: net.weights, test_accuracy, metrics: None })
}

/// Runs the secure epochs for one party. `batch` supplies this party's
/// shares of each batch; `on_step` sees every step's trace.
pub fn secure_epochs<B, S>(p: &mut Party, cfg: &NnConfig, plan: &[Vec<usize>], mut batch: B, mut on_step: S) -> Result<SecureNet>
where
    B: FnMut(&Party, usize, &[usize]) -> Result<(SecureMatrix, SecureMatrix)>,
    S: FnMut(usize, &StepTrace),
{
    cfg.validate()?;
    let init = reference::init_weights(&cfg.dims, cfg.frac, cfg.seed);
    let mut net = SecureNet::dealt(&p.field, p.id, &init, cfg.frac, cfg.seed ^ 0xdea1);
    for (s, idx) in plan.iter().enumerate() {
        let (x, t) = batch(p, s, idx)?;
        let tr = train_step(p, &mut net, &x, &t, cfg)?;
        on_step(s, &tr);
    }
    Ok(net)
}

/// Secure training with all three parties in this process. Batches are
/// dealt on the fly from the cleartext data; the final model and the
/// per-step probabilities are opened to the caller.
pub fn train_local(cfg: &NnConfig, data: &Mnist, epochs: usize, field: Field, seed: u64) -> Result<TrainOutcome> {
    cfg.validate()?;
    let plan = schedule(data.train_images.count, cfg.batch, epochs, cfg.seed);
    let run = run_local(&LocalConfig::new(field, seed), |p| {
        let mut probs: Vec<RepShare> = Vec::with_capacity(plan.len());
        let net = secure_epochs(
            p,
            cfg,
            &plan,
            |p, s, idx| {
                let (x, t, _) = batch_mats(data, idx, cfg);
                let dealer = seed ^ ((s as u64 + 1) << 20);
                Ok((
                    SecureMatrix::dealt(&p.field, p.id, &x, cfg.frac as i32, dealer),
                    SecureMatrix::dealt(&p.field, p.id, &t, cfg.softmax.out_offset, dealer + 1),
                ))
            },
            |_, tr| probs.push(tr.softmax.probs.data.clone()),
        )?;
        Ok((net.weights.into_iter().map(|w| w.data).collect::<Vec<_>>(), probs))
    })?;
    let open =
        |views: [&RepShare; 3]| -> Result<Vec<i64>> { Ok(reconstruct_rep(&field, &views, Security::Active)?.into_iter().map(|v| field.to_i64(v)).collect()) };
    let [a, b, c] = &run.outputs;
    let mut steps = Vec::with_capacity(plan.len());
    for (s, idx) in plan.iter().enumerate() {
        let probs = Mat::new(idx.len(), CLASSES, open([&a.1[s], &b.1[s], &c.1[s]])?);
        let labels: Vec<u8> = idx.iter().map(|&i| data.train_labels[i]).collect();
        steps.push(step_metrics(s, &probs, &labels, cfg.softmax.out_offset));
    }
    let mut weights = Vec::new();
    for (l, d) in cfg.dims.windows(2).enumerate() {
        weights.push(Mat::new(d[0], d[1], open([&a.0[l], &b.0[l], &c.0[l]])?));
    }
    let test_accuracy = reference::accuracy(&weights, &test_mats(data, cfg), &data.test_labels, cfg.frac);
    Ok(TrainOutcome { steps, weights, test_accuracy, metrics: Some(run.total()) })
}

/// Names of party `id`'s shares of the training inputs and targets.
pub fn share_paths(dir: &Path, id: PartyId) -> (PathBuf, PathBuf) {
    (dir.join(format!("train-x-{id}.tmpc")), dir.join(format!("train-t-{id}.tmpc")))
}

fn deal(field: &Field, m: &Mat, seed: u64) -> [RepShare; 3] {
    let v: Vec<u64> = m.v.iter().map(|&x| field.from_i64(x)).collect();
    share_rep(field, &v, &mut ChaCha20Rng::seed_from_u64(seed))
}

/// Shares the training images (at the activation offset) and one-hot labels
/// (at the softmax output offset) and writes one file pair per party.
pub fn ingest(data: &Mnist, cfg: &NnConfig, field: Field, seed: u64, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| crate::Error::Config(format!("cannot create {}: {e}", dir.display())))?;
    let img = &data.train_images;
    let x = pixels_to_fixed(&img.pixels, img.count, img.pixels_per_image(), cfg.frac);
    let t = one_hot(&data.train_labels, CLASSES, cfg.softmax.out_offset as u32);
    let xs = deal(&field, &x, seed);
    let ts = deal(&field, &t, seed ^ 0x1abe1);
    let mut out = Vec::new();
    for (id, (xs, ts)) in PartyId::ALL.into_iter().zip(xs.into_iter().zip(ts)) {
        let (px, pt) = share_paths(dir, id);
        ShareFile::rep(&field, xs, cfg.frac as i32, x.cols as u32).write(&px)?;
        ShareFile::rep(&field, ts, cfg.softmax.out_offset, CLASSES as u32).write(&pt)?;
        out.extend([px, pt]);
    }
    Ok(out)
}

/// Loads party `p`'s training shares written by [`ingest`].
pub fn load_shares(p: &Party, dir: &Path) -> Result<(SecureMatrix, SecureMatrix)> {
    let (px, pt) = share_paths(dir, p.id);
    let load = |path: &Path| -> Result<SecureMatrix> {
        let f = ShareFile::read(path)?.expect(&p.field, p.id)?;
        let (rows, cols, offset) = (f.rows(), f.cols as usize, f.offset);
        SecureMatrix::new(rows, cols, f.into_rep()?, offset)
    };
    let (x, t) = (load(&px)?, load(&pt)?);
    if x.rows != t.rows {
        return Err(crate::Error::Format("input and target share files disagree on the example count".into()));
    }
    Ok((x, t))
}

/// One party's side of secure training on pre-shared data. The trained
/// model is opened to every party at the end.
pub fn train_party(p: &mut Party, cfg: &NnConfig, x: &SecureMatrix, t: &SecureMatrix, epochs: usize) -> Result<(Vec<Mat>, usize)> {
    if x.cols != cfg.dims[0] || t.cols != *cfg.dims.last().unwrap() {
        return Err(crate::Error::Config(format!(
            "shares are {}x{} / {}x{}, network expects {} inputs and {} classes",
            x.rows,
            x.cols,
            t.rows,
            t.cols,
            cfg.dims[0],
            cfg.dims.last().unwrap()
        )));
    }
    let plan = schedule(x.rows, cfg.batch, epochs, cfg.seed);
    let rows_of = |m: &SecureMatrix, idx: &[usize]| -> Result<SecureMatrix> {
        let flat: Vec<usize> = idx.iter().flat_map(|&i| i * m.cols..(i + 1) * m.cols).collect();
        SecureMatrix::new(idx.len(), m.cols, m.data.select(&flat), m.offset())
    };
    let net = secure_epochs(p, cfg, &plan, |_, _, idx| Ok((rows_of(x, idx)?, rows_of(t, idx)?)), |_, _| {})?;
    let mut weights = Vec::new();
    for w in &net.weights {
        let v = open(p, &w.data)?;
        weights.push(Mat::new(w.rows, w.cols, v.into_iter().map(|e| p.field.to_i64(e)).collect()));
    }
    Ok((weights, plan.len()))
}
