//! Cleartext fixed-point simulator of the secure network.
//!
//! Same offsets, clamps and quantized constants as the secure pipeline, with
//! every truncation rounded to nearest. The elementary functions are taken
//! from `f64` and rounded once, so each stage is the value the secure stage
//! aims for.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::{AdamConfig, NnConfig, SoftmaxParams};

/// Row-major integer matrix holding fixed-point values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub v: Vec<i64>,
}

impl Mat {
    pub fn new(rows: usize, cols: usize, v: Vec<i64>) -> Mat {
        assert_eq!(v.len(), rows * cols, "matrix size");
        Mat { rows, cols, v }
    }

    pub fn zeros(rows: usize, cols: usize) -> Mat {
        Mat { rows, cols, v: vec![0; rows * cols] }
    }

    pub fn from_f64(rows: usize, cols: usize, x: &[f64], offset: u32) -> Mat {
        let s = 2f64.powi(offset as i32);
        Mat::new(rows, cols, x.iter().map(|v| (v * s).round() as i64).collect())
    }

    pub fn to_f64(&self, offset: u32) -> Vec<f64> {
        let s = 2f64.powi(-(offset as i32));
        self.v.iter().map(|&v| v as f64 * s).collect()
    }

    pub fn at(&self, i: usize, j: usize) -> i64 {
        self.v[i * self.cols + j]
    }

    pub fn transpose(&self) -> Mat {
        let mut v = Vec::with_capacity(self.v.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                v.push(self.at(i, j));
            }
        }
        Mat::new(self.cols, self.rows, v)
    }

    pub fn sub(&self, o: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Mat::new(self.rows, self.cols, self.v.iter().zip(&o.v).map(|(a, b)| a - b).collect())
    }

    pub fn hadamard(&self, o: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Mat::new(self.rows, self.cols, self.v.iter().zip(&o.v).map(|(a, b)| a * b).collect())
    }
}

/// `a / d` rounded to nearest, halves up.
pub fn round_div(a: i128, d: i128) -> i64 {
    (a + d / 2).div_euclid(d) as i64
}

/// `a b / d`, rounded.
pub fn matmul_div(a: &Mat, b: &Mat, d: i128) -> Mat {
    assert_eq!(a.cols, b.rows, "inner dimension");
    let mut v = vec![0i64; a.rows * b.cols];
    let mut acc = vec![0i128; b.cols];
    for i in 0..a.rows {
        acc.iter_mut().for_each(|x| *x = 0);
        for k in 0..a.cols {
            let x = a.at(i, k) as i128;
            for (j, s) in acc.iter_mut().enumerate() {
                *s += x * b.v[k * b.cols + j] as i128;
            }
        }
        for j in 0..b.cols {
            v[i * b.cols + j] = round_div(acc[j], d);
        }
    }
    Mat::new(a.rows, b.cols, v)
}

pub fn relu_prime(u: &Mat) -> Mat {
    Mat::new(u.rows, u.cols, u.v.iter().map(|&x| (x >= 0) as i64).collect())
}

/// Exponentials of clamped logit differences, element `(i, j, k)` holding
/// `exp(u_ik - u_ij)` at the sum offset.
pub fn softmax_exps(u: &Mat, sm: &SoftmaxParams, frac: u32) -> Vec<i64> {
    let k = u.cols;
    let r = sm.clamp_fixed(frac);
    let (s_in, s_out) = (2f64.powi(-(frac as i32)), 2f64.powi(sm.sum_offset));
    let mut out = Vec::with_capacity(u.rows * k * k);
    for i in 0..u.rows {
        for j in 0..k {
            for kk in 0..k {
                let d = (u.at(i, kk) - u.at(i, j)).clamp(-r, r);
                out.push(((d as f64 * s_in).exp() * s_out).round() as i64);
            }
        }
    }
    out
}

pub fn softmax_sums(exps: &[i64], k: usize) -> Vec<i64> {
    exps.chunks(k).map(|c| c.iter().sum()).collect()
}

/// `1 / s` at the output offset for sums at the sum offset.
pub fn softmax_probs(sums: &[i64], sm: &SoftmaxParams) -> Vec<i64> {
    let num = 2f64.powi(sm.sum_offset + sm.out_offset);
    sums.iter().map(|&s| (num / s as f64).round() as i64).collect()
}

pub fn softmax(u: &Mat, sm: &SoftmaxParams, frac: u32) -> Mat {
    let e = softmax_exps(u, sm, frac);
    Mat::new(u.rows, u.cols, softmax_probs(&softmax_sums(&e, u.cols), sm))
}

/// Moment updates: `(G^2, M, V)` from the gradient and the previous moments.
pub fn adam_moments(g: &[i64], m: &[i64], v: &[i64], cfg: &AdamConfig, grad_frac: u32) -> (Vec<i64>, Vec<i64>, Vec<i64>) {
    let one = 1i128 << cfg.const_frac;
    let (b1, b2) = (cfg.beta1_q() as i128, cfg.beta2_q() as i128);
    let sq_div = 1i128 << (2 * grad_frac - cfg.moment_offset);
    let g2: Vec<i64> = g.iter().map(|&x| round_div(x as i128 * x as i128, sq_div)).collect();
    let m2 = g.iter().zip(m).map(|(&x, &mm)| mm + round_div((one - b1) * (x - mm) as i128, one)).collect();
    let v2 = g2.iter().zip(v).map(|(&x, &vv)| vv + round_div((one - b2) * (x - vv) as i128, one)).collect();
    (g2, m2, v2)
}

/// Learning rate over the root of `V` plus the floor, at the root offset.
pub fn adam_root(v: &[i64], cfg: &AdamConfig) -> Vec<i64> {
    let floor = cfg.floor_units() as f64;
    let s = 2f64.powi(-(cfg.moment_offset as i32));
    let num = 2f64.powi(cfg.root_offset as i32 - cfg.lr_shift as i32);
    v.iter().map(|&x| (num / ((x as f64 + floor) * s).sqrt()).round() as i64).collect()
}

/// `(H M, step)` where the step is at the weight offset.
pub fn adam_step(h: &[i64], m: &[i64], t: u64, cfg: &AdamConfig, grad_frac: u32, frac: u32) -> (Vec<i64>, Vec<i64>) {
    let d1 = 1i128 << (cfg.root_offset + grad_frac - cfg.step_offset);
    let hm: Vec<i64> = h.iter().zip(m).map(|(&a, &b)| round_div(a as i128 * b as i128, d1)).collect();
    let k = cfg.kappa_q(t) as i128;
    let d2 = 1i128 << (cfg.step_offset + cfg.const_frac - frac);
    let step = hm.iter().map(|&x| round_div(x as i128 * k, d2)).collect();
    (hm, step)
}

/// Network weights and optimizer state.
#[derive(Clone, Debug)]
pub struct RefNet {
    pub weights: Vec<Mat>,
    pub m: Vec<i64>,
    pub v: Vec<i64>,
    pub t: u64,
}

impl RefNet {
    pub fn new(weights: Vec<Mat>) -> RefNet {
        let n = weights.iter().map(|w| w.v.len()).sum();
        RefNet { weights, m: vec![0; n], v: vec![0; n], t: 0 }
    }

    pub fn flat_weights(&self) -> Vec<i64> {
        self.weights.iter().flat_map(|w| w.v.iter().copied()).collect()
    }
}

/// Every intermediate of one training step.
#[derive(Clone, Debug)]
pub struct RefTrace {
    /// Layer inputs, starting with the batch.
    pub inputs: Vec<Mat>,
    pub pre: Vec<Mat>,
    pub masks: Vec<Mat>,
    pub exps: Vec<i64>,
    pub sums: Vec<i64>,
    pub probs: Mat,
    /// Error terms; `deltas[l]` belongs to the output of layer `l`.
    pub deltas: Vec<Mat>,
    pub grads: Vec<Mat>,
    pub g2: Vec<i64>,
    pub m: Vec<i64>,
    pub v: Vec<i64>,
    pub h: Vec<i64>,
    pub hm: Vec<i64>,
    pub step: Vec<i64>,
}

/// Divisor folding the batch mean into the gradient truncation.
pub fn grad_divisor(batch: usize, offset: u32, grad_frac: u32) -> i128 {
    (batch as i128) << (offset - grad_frac)
}

/// Hidden layers: dense, then ReLU. Returns `(pre-activations, masks,
/// layer inputs)` and the logits.
pub fn forward(weights: &[Mat], x: &Mat, frac: u32) -> (Vec<Mat>, Vec<Mat>, Vec<Mat>) {
    let mut inputs = vec![x.clone()];
    let mut pre = Vec::new();
    let mut masks = Vec::new();
    for (l, w) in weights.iter().enumerate() {
        let u = matmul_div(inputs.last().unwrap(), w, 1 << frac);
        if l + 1 < weights.len() {
            let mask = relu_prime(&u);
            inputs.push(mask.hadamard(&u));
            masks.push(mask);
        }
        pre.push(u);
    }
    (pre, masks, inputs)
}

/// One step of training on a batch: `x` at the activation offset and
/// one-hot `t` at the softmax output offset.
pub fn train_step(net: &mut RefNet, x: &Mat, t: &Mat, cfg: &NnConfig) -> RefTrace {
    let f = cfg.frac;
    let sm = &cfg.softmax;
    let layers = net.weights.len();
    let (pre, masks, inputs) = forward(&net.weights, x, f);
    let logits = pre.last().unwrap();
    let exps = softmax_exps(logits, sm, f);
    let sums = softmax_sums(&exps, logits.cols);
    let probs = Mat::new(logits.rows, logits.cols, softmax_probs(&sums, sm));

    let mut deltas = vec![Mat::zeros(0, 0); layers];
    deltas[layers - 1] = probs.sub(t);
    for l in (0..layers - 1).rev() {
        let z_off = if l + 1 == layers - 1 { sm.out_offset as u32 } else { f };
        let back = matmul_div(&deltas[l + 1], &net.weights[l + 1].transpose(), 1 << z_off);
        deltas[l] = masks[l].hadamard(&back);
    }
    let grads: Vec<Mat> = (0..layers)
        .map(|l| {
            let z_off = if l == layers - 1 { sm.out_offset as u32 } else { f };
            matmul_div(&inputs[l].transpose(), &deltas[l], grad_divisor(x.rows, f + z_off, cfg.grad_frac))
        })
        .collect();

    let g: Vec<i64> = grads.iter().flat_map(|m| m.v.iter().copied()).collect();
    net.t += 1;
    let (g2, m, v) = adam_moments(&g, &net.m, &net.v, &cfg.adam, cfg.grad_frac);
    let h = adam_root(&v, &cfg.adam);
    let (hm, step) = adam_step(&h, &m, net.t, &cfg.adam, cfg.grad_frac, f);
    let mut off = 0;
    for w in net.weights.iter_mut() {
        for (x, s) in w.v.iter_mut().zip(&step[off..]) {
            *x -= s;
        }
        off += w.v.len();
    }
    net.m = m.clone();
    net.v = v.clone();
    RefTrace { inputs, pre, masks, exps, sums, probs, deltas, grads, g2, m, v, h, hm, step }
}

/// Seeded uniform initialization in `+-sqrt(6 / (fan_in + fan_out))`.
pub fn init_weights(dims: &[usize], frac: u32, seed: u64) -> Vec<Mat> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    dims.windows(2)
        .map(|d| {
            let lim = (6.0 / (d[0] + d[1]) as f64).sqrt();
            let dist = Uniform::new_inclusive(-lim, lim);
            let x: Vec<f64> = (0..d[0] * d[1]).map(|_| dist.sample(&mut rng)).collect();
            Mat::from_f64(d[0], d[1], &x, frac)
        })
        .collect()
}

/// Logits of a batch.
pub fn logits(weights: &[Mat], x: &Mat, frac: u32) -> Mat {
    forward(weights, x, frac).0.pop().unwrap()
}

pub fn argmax_rows(m: &Mat) -> Vec<usize> {
    (0..m.rows)
        .map(|i| {
            let row = &m.v[i * m.cols..(i + 1) * m.cols];
            // First maximal entry.
            row.iter().enumerate().fold(0, |best, (j, &x)| if x > row[best] { j } else { best })
        })
        .collect()
}

/// Fraction of rows whose argmax matches the label.
pub fn accuracy(weights: &[Mat], x: &Mat, labels: &[u8], frac: u32) -> f64 {
    let pred = argmax_rows(&logits(weights, x, frac));
    let hits = pred.iter().zip(labels).filter(|(p, l)| **p == **l as usize).count();
    hits as f64 / labels.len().max(1) as f64
}

/// Mean cross-entropy of the fixed-point logits, evaluated in `f64`.
pub fn cross_entropy(weights: &[Mat], x: &Mat, labels: &[u8], frac: u32) -> f64 {
    let z = logits(weights, x, frac);
    let s = 2f64.powi(-(frac as i32));
    let mut total = 0.0;
    for (i, &l) in labels.iter().enumerate() {
        let row: Vec<f64> = z.v[i * z.cols..(i + 1) * z.cols].iter().map(|&v| v as f64 * s).collect();
        let mx = row.iter().cloned().fold(f64::MIN, f64::max);
        let lse = mx + row.iter().map(|v| (v - mx).exp()).sum::<f64>().ln();
        total += lse - row[l as usize];
    }
    total / labels.len() as f64
}

/// Mean cross-entropy of probabilities at `offset`, floored at `2^-offset`.
pub fn cross_entropy_probs(probs: &Mat, labels: &[u8], offset: i32) -> f64 {
    let s = 2f64.powi(-offset);
    let total: f64 = labels.iter().enumerate().map(|(i, &l)| -((probs.at(i, l as usize).max(1) as f64) * s).ln()).sum();
    total / labels.len().max(1) as f64
}
