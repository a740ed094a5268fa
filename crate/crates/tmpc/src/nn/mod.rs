//! Secure feedforward networks on shared matrices: ReLU, softmax,
//! max-pooling flags, batch normalization and training with Adam.
//!
//! Matrices are row-major. A product of two shared matrices is computed
//! locally as this party's share of the cross terms and reshared in one
//! round, whatever the inner dimension.

pub mod reference;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::division::{div_pub_signed, truncate_signed};
use crate::elementary::{exponent, inv, inv_sqrt, nonneg_flag, ElemParams, ExpParams};
use crate::error::{Error, Result};
use crate::field::{Field, FixedPointMeta};
use crate::party::Party;
use crate::protocols::{mult, mult_many, reshare};
use crate::sharing::{share_rep, RepShare};
use crate::transport::PartyId;

use reference::Mat;

/// A matrix of replicated shares with one fixed-point format.
#[derive(Clone, Debug)]
pub struct SecureMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: RepShare,
    pub meta: FixedPointMeta,
}

fn meta(offset: i32) -> FixedPointMeta {
    FixedPointMeta { bit_len: FixedPointMeta::MAX_BITS, offset }
}

impl SecureMatrix {
    pub fn new(rows: usize, cols: usize, data: RepShare, offset: i32) -> Result<SecureMatrix> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch);
        }
        Ok(SecureMatrix { rows, cols, data, meta: meta(offset) })
    }

    pub fn offset(&self) -> i32 {
        self.meta.offset
    }

    /// A public matrix of integers, as a sharing.
    pub fn public(field: &Field, party: PartyId, m: &Mat, offset: i32) -> SecureMatrix {
        let v: Vec<u64> = m.v.iter().map(|&x| field.from_i64(x)).collect();
        SecureMatrix { rows: m.rows, cols: m.cols, data: RepShare::public(field, party, &v), meta: meta(offset) }
    }

    /// This party's view of a dealer sharing of `m`; all parties must use
    /// the same seed.
    pub fn dealt(field: &Field, party: PartyId, m: &Mat, offset: i32, seed: u64) -> SecureMatrix {
        let v: Vec<u64> = m.v.iter().map(|&x| field.from_i64(x)).collect();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let [a, b, c] = share_rep(field, &v, &mut rng);
        let data = [a, b, c].into_iter().nth(party.index()).unwrap();
        SecureMatrix { rows: m.rows, cols: m.cols, data, meta: meta(offset) }
    }

    pub fn transpose(&self) -> SecureMatrix {
        let idx: Vec<usize> = (0..self.cols).flat_map(|j| (0..self.rows).map(move |i| i * self.cols + j)).collect();
        SecureMatrix { rows: self.cols, cols: self.rows, data: self.data.select(&idx), meta: self.meta }
    }

    fn same_shape(&self, o: &SecureMatrix) -> Result<()> {
        if (self.rows, self.cols) != (o.rows, o.cols) {
            return Err(Error::LengthMismatch);
        }
        if self.offset() != o.offset() {
            return Err(Error::InvalidInput(format!("offsets differ: {} vs {}", self.offset(), o.offset())));
        }
        Ok(())
    }

    pub fn sub(&self, field: &Field, o: &SecureMatrix) -> Result<SecureMatrix> {
        self.same_shape(o)?;
        Ok(SecureMatrix { data: self.data.sub(field, &o.data), ..self.clone() })
    }

    pub fn add(&self, field: &Field, o: &SecureMatrix) -> Result<SecureMatrix> {
        self.same_shape(o)?;
        Ok(SecureMatrix { data: self.data.add(field, &o.data), ..self.clone() })
    }

    fn with(&self, data: RepShare, offset: i32) -> SecureMatrix {
        SecureMatrix { rows: self.rows, cols: self.cols, data, meta: meta(offset) }
    }
}

/// This party's additive share of `a b` for row-major `a` (m x k) and `b`
/// (k x n).
fn cross_matmul(f: &Field, a: &RepShare, b: &RepShare, m: usize, k: usize, n: usize) -> Vec<u64> {
    let bs: Vec<u64> = b.x.iter().zip(&b.y).map(|(x, y)| f.add(*x, *y)).collect();
    let mut out = vec![0u64; m * n];
    let mut acc = vec![0u128; n];
    for i in 0..m {
        acc.iter_mut().for_each(|v| *v = 0);
        for kk in 0..k {
            let (ax, ay) = (a.x[i * k + kk] as u128, a.y[i * k + kk] as u128);
            let (bx, bsum) = (&b.x[kk * n..(kk + 1) * n], &bs[kk * n..(kk + 1) * n]);
            for j in 0..n {
                acc[j] += ax * bsum[j] as u128 + ay * bx[j] as u128;
            }
            // 32 products below 2^122 each still fit after a reduction.
            if kk % 16 == 15 {
                acc.iter_mut().for_each(|v| *v = f.reduce(*v) as u128);
            }
        }
        for j in 0..n {
            out[i * n + j] = f.reduce(acc[j]);
        }
    }
    out
}

/// Exact product; the offset is the sum of the operand offsets.
pub fn matmul(p: &mut Party, a: &SecureMatrix, b: &SecureMatrix) -> Result<SecureMatrix> {
    if a.cols != b.rows {
        return Err(Error::LengthMismatch);
    }
    let f = p.field;
    let z = cross_matmul(&f, &a.data, &b.data, a.rows, a.cols, b.cols);
    let data = reshare(p, z)?;
    SecureMatrix::new(a.rows, b.cols, data, a.offset() + b.offset())
}

/// Signed division by `d`, relabelled to `offset`.
pub fn divide(p: &mut Party, a: &SecureMatrix, d: u64, offset: i32) -> Result<SecureMatrix> {
    let data = div_pub_signed(p, &a.data, d)?;
    Ok(a.with(data, offset))
}

/// Signed truncation to a smaller offset.
pub fn rescale_to(p: &mut Party, a: &SecureMatrix, offset: i32) -> Result<SecureMatrix> {
    let s = a.offset() - offset;
    if s < 0 {
        return Err(Error::InvalidInput(format!("cannot raise offset {} to {offset}", a.offset())));
    }
    let data = truncate_signed(p, &a.data, s as u32)?;
    Ok(a.with(data, offset))
}

/// Elementwise product; offsets add.
pub fn hadamard(p: &mut Party, a: &SecureMatrix, b: &SecureMatrix) -> Result<SecureMatrix> {
    if (a.rows, a.cols) != (b.rows, b.cols) {
        return Err(Error::LengthMismatch);
    }
    let data = mult(p, &a.data, &b.data)?;
    Ok(a.with(data, a.offset() + b.offset()))
}

/// `1` where `u >= 0`, else `0`, for `|u| < 2^bits`.
pub fn relu_prime(p: &mut Party, u: &SecureMatrix, bits: u32) -> Result<SecureMatrix> {
    let z = nonneg_flag(p, &u.data, bits)?;
    Ok(u.with(z, 0))
}

/// `(ReLU(u), ReLU'(u))`.
pub fn relu(p: &mut Party, u: &SecureMatrix, bits: u32) -> Result<(SecureMatrix, SecureMatrix)> {
    let mask = relu_prime(p, u, bits)?;
    let y = mult(p, &mask.data, &u.data)?;
    Ok((u.with(y, u.offset()), mask))
}

/// Softmax settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SoftmaxParams {
    /// Logit differences are clamped to `[-clamp, clamp]`. Rows are exact
    /// only while their spread stays within it; up to about 11 the
    /// exponential's internal products fit the field.
    pub clamp: f64,
    /// Offset of the exponentials and their sums.
    pub sum_offset: i32,
    /// Offset of the probabilities.
    pub out_offset: i32,
    /// Bound on `|u_i - u_j| + clamp`, in bits, for the clamp comparisons.
    pub cmp_bits: u32,
}

impl Default for SoftmaxParams {
    fn default() -> Self {
        SoftmaxParams { clamp: 10.0, sum_offset: 24, out_offset: 24, cmp_bits: 42 }
    }
}

impl SoftmaxParams {
    pub fn clamp_fixed(&self, frac: u32) -> i64 {
        (self.clamp * 2f64.powi(frac as i32)).round() as i64
    }

    pub fn exp_params(&self, frac: u32) -> ExpParams {
        let r = self.clamp_fixed(frac);
        let bits = 64 - (2 * r as u64).leading_zeros();
        ExpParams { mu: -(r as f64) * 2f64.powi(-(frac as i32)), ..ExpParams::new(bits, frac as i32, self.sum_offset) }
    }

    /// Bit length of a sum of `k` exponentials.
    pub fn sum_bits(&self, k: usize) -> u32 {
        let top = (k as f64 * self.clamp.exp()).log2().ceil() as i32;
        (top + self.sum_offset + 1).max(1) as u32
    }

    pub fn inv_params(&self, k: usize) -> ElemParams {
        // Every sum contains exp(0) = 1.
        ElemParams::inv(self.sum_offset, self.out_offset).with_input_bits(self.sum_bits(k)).with_floor_bits((self.sum_offset - 1).max(0) as u32)
    }
}

/// Softmax output with its intermediates.
#[derive(Clone, Debug)]
pub struct SoftmaxOut {
    /// `exp(u_ik - u_ij)` at index `(i k + j) k + k'`.
    pub exps: RepShare,
    /// Row-wise sums, one per output element.
    pub sums: RepShare,
    pub probs: SecureMatrix,
}

/// Row-wise softmax `y_ij = 1 / sum_k exp(u_ik - u_ij)`.
pub fn softmax(p: &mut Party, u: &SecureMatrix, prm: &SoftmaxParams) -> Result<SoftmaxOut> {
    let f = p.field;
    if u.offset() < 0 {
        return Err(Error::InvalidInput("softmax needs a nonnegative input offset".into()));
    }
    let frac = u.offset() as u32;
    let (m, k) = (u.rows, u.cols);
    let mut hi = Vec::with_capacity(m * k * k);
    let mut lo = Vec::with_capacity(m * k * k);
    for i in 0..m {
        for j in 0..k {
            for kk in 0..k {
                hi.push(i * k + kk);
                lo.push(i * k + j);
            }
        }
    }
    let d = u.data.select(&hi).sub(&f, &u.data.select(&lo));
    let n = d.len();
    // Clamp: -R + [d + R >= 0](d + R) - [d - R >= 0](d - R).
    let r = f.from_i64(prm.clamp_fixed(frac));
    let up = d.add_const(&f, r);
    let down = d.add_const(&f, f.neg(r));
    let flags = nonneg_flag(p, &RepShare::concat(&[&up, &down]), prm.cmp_bits)?;
    let (s_lo, s_hi) = (flags.slice(0, n), flags.slice(n, n));
    let pr = mult_many(p, &[(&s_lo, &up), (&s_hi, &down)])?;
    let clamped = pr[0].sub(&f, &pr[1]).add_const(&f, f.neg(r));

    let exps = exponent(p, &clamped, &prm.exp_params(frac))?;
    let mut sx = vec![0u64; m * k];
    let mut sy = vec![0u64; m * k];
    for (o, c) in exps.x.chunks(k).zip(sx.iter_mut()) {
        *c = o.iter().fold(0, |acc, v| f.add(acc, *v));
    }
    for (o, c) in exps.y.chunks(k).zip(sy.iter_mut()) {
        *c = o.iter().fold(0, |acc, v| f.add(acc, *v));
    }
    let sums = RepShare { party: p.id, x: sx, y: sy };
    let y = inv(p, &sums, &prm.inv_params(k))?;
    Ok(SoftmaxOut { exps, sums, probs: u.with(y, prm.out_offset) })
}

/// Row-wise maximum and a one-hot flag of one maximal position, by
/// recursive halving. Comparisons are the sign of the difference, so
/// `|x_i - x_j| < 2^bits` is required.
pub fn max_flag(p: &mut Party, x: &SecureMatrix, bits: u32) -> Result<(SecureMatrix, SecureMatrix)> {
    let f = p.field;
    let rows = x.rows;
    if x.cols == 0 {
        return Err(Error::InvalidInput("max of an empty vector".into()));
    }
    // Column-major working copy: entry c of the current level is cur[c].
    let mut cur: Vec<RepShare> = (0..x.cols).map(|j| x.data.select(&(0..rows).map(|i| i * x.cols + j).collect::<Vec<_>>())).collect();
    let mut levels: Vec<(usize, Vec<RepShare>)> = Vec::new();
    while cur.len() > 1 {
        let half = cur.len() / 2;
        let diffs: Vec<RepShare> = (0..half).map(|i| cur[2 * i].sub(&f, &cur[2 * i + 1])).collect();
        let all = RepShare::concat(&diffs.iter().collect::<Vec<_>>());
        let c = nonneg_flag(p, &all, bits)?;
        let picked = mult(p, &c, &all)?;
        let mut next = Vec::with_capacity(cur.len().div_ceil(2));
        let mut cs = Vec::with_capacity(half);
        for i in 0..half {
            // b + c (a - b)
            next.push(cur[2 * i + 1].add(&f, &picked.slice(i * rows, rows)));
            cs.push(c.slice(i * rows, rows));
        }
        if cur.len() % 2 == 1 {
            next.push(cur.last().unwrap().clone());
        }
        levels.push((cur.len(), cs));
        cur = next;
    }
    // Walk back down: a winner's flag splits into c e and e - c e.
    let mut flags = vec![RepShare::public(&f, p.id, &vec![1; rows])];
    for (len, cs) in levels.into_iter().rev() {
        let pairs: Vec<(&RepShare, &RepShare)> = cs.iter().zip(&flags).collect();
        let left = mult_many(p, &pairs)?;
        let mut next = Vec::with_capacity(len);
        for (i, z) in left.into_iter().enumerate() {
            let e = &flags[i];
            let right = e.sub(&f, &z);
            next.push(z);
            next.push(right);
        }
        if len % 2 == 1 {
            next.push(flags.last().unwrap().clone());
        }
        flags = next;
    }
    let idx: Vec<usize> = (0..rows).flat_map(|i| (0..x.cols).map(move |j| j * rows + i)).collect();
    let flat = RepShare::concat(&flags.iter().collect::<Vec<_>>()).select(&idx);
    let y = SecureMatrix::new(rows, 1, cur.pop().unwrap(), x.offset())?;
    Ok((y, x.with(flat, 0)))
}

/// Column-wise normalization over the rows: `(x - mean) / sqrt(var + eps)`.
///
/// The variance is formed at twice the input offset and must stay below
/// `2^8`.
pub fn batch_norm(p: &mut Party, x: &SecureMatrix, eps: f64) -> Result<SecureMatrix> {
    let f = p.field;
    let (n, c) = (x.rows, x.cols);
    let off = x.offset();
    if n < 2 {
        return Err(Error::InvalidInput("batch normalization needs at least two rows".into()));
    }
    if off < 1 || 2 * off + 8 > 58 {
        return Err(Error::InvalidInput(format!("offset {off} out of range for batch normalization")));
    }
    let eps_fixed = (eps * 2f64.powi(2 * off)).round();
    if !(eps_fixed >= 1.0) {
        return Err(Error::InvalidInput("epsilon must be positive at the variance offset".into()));
    }
    let col_sums = |s: &RepShare| -> RepShare {
        let mut x_ = vec![0u64; c];
        let mut y_ = vec![0u64; c];
        for i in 0..n {
            for j in 0..c {
                x_[j] = f.add(x_[j], s.x[i * c + j]);
                y_[j] = f.add(y_[j], s.y[i * c + j]);
            }
        }
        RepShare { party: s.party, x: x_, y: y_ }
    };
    let mean = div_pub_signed(p, &col_sums(&x.data), n as u64)?;
    let bcast: Vec<usize> = (0..n).flat_map(|_| 0..c).collect();
    let diff = x.data.sub(&f, &mean.select(&bcast));
    let sq = mult(p, &diff, &diff)?;
    let var = div_pub_signed(p, &col_sums(&sq), n as u64)?;
    let var = var.add_const(&f, eps_fixed as u64);
    let prm = ElemParams::inv_sqrt(2 * off, off).with_input_bits(2 * off as u32 + 8);
    let r = inv_sqrt(p, &var, &prm)?;
    let out = mult(p, &diff, &r.select(&bcast))?;
    let out = truncate_signed(p, &out, off as u32)?;
    Ok(x.with(out, off))
}

/// Adam hyperparameters and fixed-point formats.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    /// Learning rate `2^-lr_shift`.
    pub lr_shift: u32,
    /// Fraction bits of the public constants.
    pub const_frac: u32,
    /// Offset of the second moment.
    pub moment_offset: u32,
    /// Bit length of the second moment.
    pub moment_bits: u32,
    /// Offset of the scaled inverse root.
    pub root_offset: u32,
    /// Offset of the step before the bias correction.
    pub step_offset: u32,
    /// The second moment is floored by `2^floor_exp`.
    pub floor_exp: i32,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            lr_shift: 8,
            const_frac: 20,
            moment_offset: 40,
            moment_bits: 48,
            root_offset: 30,
            step_offset: 28,
            floor_exp: -32,
        }
    }
}

impl AdamConfig {
    fn q(&self, x: f64) -> u64 {
        (x * 2f64.powi(self.const_frac as i32)).round() as u64
    }

    pub fn beta1_q(&self) -> u64 {
        self.q(self.beta1)
    }

    pub fn beta2_q(&self) -> u64 {
        self.q(self.beta2)
    }

    /// Bias correction `sqrt(1 - beta2^t) / (1 - beta1^t)`, quantized.
    pub fn kappa_q(&self, t: u64) -> u64 {
        let t = t.max(1).min(i32::MAX as u64) as i32;
        self.q((1.0 - self.beta2.powi(t)).sqrt() / (1.0 - self.beta1.powi(t)))
    }

    pub fn floor_units(&self) -> u64 {
        1u64 << (self.moment_offset as i32 + self.floor_exp).max(0)
    }

    pub fn validate(&self, grad_frac: u32, frac: u32) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("adam: {m}")));
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("betas must lie in [0, 1)");
        }
        if !(self.moment_bits - self.moment_offset.min(self.moment_bits)).is_multiple_of(2) || self.moment_bits < self.moment_offset {
            return bad("moment bits and offset must have equal parity, bits >= offset");
        }
        if 2 * grad_frac < self.moment_offset || self.root_offset < self.lr_shift {
            return bad("moment offset above twice the gradient offset, or learning shift above root offset");
        }
        if self.root_offset + grad_frac < self.step_offset || self.step_offset + self.const_frac < frac {
            return bad("step offset out of range");
        }
        if self.moment_bits > 58 || self.const_frac > 30 {
            return bad("formats too wide");
        }
        Ok(())
    }
}

/// First and second moments, flattened over all layers.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub m: RepShare,
    pub v: RepShare,
    pub t: u64,
}

impl AdamState {
    pub fn zeros(party: PartyId, n: usize) -> AdamState {
        AdamState { m: RepShare::zeros(party, n), v: RepShare::zeros(party, n), t: 0 }
    }
}

/// Intermediates of one Adam update.
#[derive(Clone, Debug)]
pub struct AdamTrace {
    pub g2: RepShare,
    pub h: RepShare,
    pub hm: RepShare,
    pub step: RepShare,
}

/// `W - lr kappa_t M / sqrt(V + floor)` after the moment updates. `w` is at
/// offset `frac`, `g` at `grad_frac`.
pub fn adam_update(
    p: &mut Party,
    w: &RepShare,
    g: &RepShare,
    st: &mut AdamState,
    cfg: &AdamConfig,
    grad_frac: u32,
    frac: u32,
) -> Result<(RepShare, AdamTrace)> {
    let f = p.field;
    let n = w.len();
    if g.len() != n || st.m.len() != n || st.v.len() != n {
        return Err(Error::LengthMismatch);
    }
    st.t += 1;
    let one = 1u64 << cfg.const_frac;
    let (b1, b2) = (cfg.beta1_q(), cfg.beta2_q());
    let sq = mult(p, g, g)?;
    let g2 = truncate_signed(p, &sq, 2 * grad_frac - cfg.moment_offset)?;
    // M + (1 - beta1)(G - M), keeping the scaled terms small.
    let dm = g.sub(&f, &st.m).scale(&f, one - b1);
    let dv = g2.sub(&f, &st.v).scale(&f, one - b2);
    let both = truncate_signed(p, &RepShare::concat(&[&dm, &dv]), cfg.const_frac)?;
    st.m = st.m.add(&f, &both.slice(0, n));
    st.v = st.v.add(&f, &both.slice(n, n));

    let prm = ElemParams::inv_sqrt(cfg.moment_offset as i32, cfg.root_offset as i32 - cfg.lr_shift as i32).with_input_bits(cfg.moment_bits);
    let h = inv_sqrt(p, &st.v.add_const(&f, cfg.floor_units()), &prm)?;
    let hm = mult(p, &h, &st.m)?;
    let hm = truncate_signed(p, &hm, cfg.root_offset + grad_frac - cfg.step_offset)?;
    let step = truncate_signed(p, &hm.scale(&f, cfg.kappa_q(st.t)), cfg.step_offset + cfg.const_frac - frac)?;
    Ok((w.sub(&f, &step), AdamTrace { g2, h, hm, step }))
}

/// Network shape, fixed-point formats and optimizer settings.
#[derive(Clone, Debug, PartialEq)]
pub struct NnConfig {
    /// Layer widths, input first.
    pub dims: Vec<usize>,
    pub batch: usize,
    /// Offset of activations and weights.
    pub frac: u32,
    /// Offset of gradients and the first moment.
    pub grad_frac: u32,
    /// Bound on pre-activations, in bits, for ReLU.
    pub relu_bits: u32,
    pub softmax: SoftmaxParams,
    pub adam: AdamConfig,
    /// Weight initialization seed.
    pub seed: u64,
}

impl NnConfig {
    pub fn new(dims: Vec<usize>, batch: usize) -> NnConfig {
        NnConfig { dims, batch, frac: 20, grad_frac: 24, relu_bits: 40, softmax: SoftmaxParams::default(), adam: AdamConfig::default(), seed: 1 }
    }

    /// 784-128-128-10 with batch 128.
    pub fn mnist_3dnn() -> NnConfig {
        NnConfig::new(vec![784, 128, 128, 10], 128)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.dims.len() < 2 || self.dims.contains(&0) || self.batch == 0 {
            return bad(format!("bad network shape {:?} / batch {}", self.dims, self.batch));
        }
        if self.frac == 0 || 2 * self.frac < self.grad_frac || self.relu_bits + 2 > 59 || self.softmax.cmp_bits + 2 > 59 {
            return bad("offsets out of range".into());
        }
        let sm = &self.softmax;
        if sm.clamp <= 0.0 || sm.out_offset < 1 || sm.sum_offset < 1 {
            return bad("softmax clamp and offsets must be positive".into());
        }
        if self.grad_frac > self.frac + sm.out_offset as u32 {
            return bad("gradient offset above the output error offset".into());
        }
        let ip = sm.inv_params(*self.dims.last().unwrap());
        if ip.bits + ip.input_bits > 59 + ip.floor_bits {
            return bad(format!("softmax sums too wide: {} bits", ip.input_bits));
        }
        self.adam.validate(self.grad_frac, self.frac)
    }

    fn delta_offset(&self, layer: usize) -> u32 {
        if layer + 1 == self.dims.len() - 1 {
            self.softmax.out_offset as u32
        } else {
            self.frac
        }
    }
}

/// Shared weights and optimizer state.
#[derive(Clone, Debug)]
pub struct SecureNet {
    pub weights: Vec<SecureMatrix>,
    pub adam: AdamState,
}

impl SecureNet {
    /// Dealer sharing of cleartext initial weights.
    pub fn dealt(field: &Field, party: PartyId, weights: &[Mat], frac: u32, seed: u64) -> SecureNet {
        let ws: Vec<SecureMatrix> =
            weights.iter().enumerate().map(|(l, w)| SecureMatrix::dealt(field, party, w, frac as i32, seed.wrapping_add(l as u64))).collect();
        let n = ws.iter().map(|w| w.data.len()).sum();
        SecureNet { weights: ws, adam: AdamState::zeros(party, n) }
    }

    pub fn from_parts(weights: Vec<SecureMatrix>, adam: AdamState) -> SecureNet {
        SecureNet { weights, adam }
    }
}

/// Every intermediate of one secure training step.
#[derive(Clone, Debug)]
pub struct StepTrace {
    pub inputs: Vec<SecureMatrix>,
    pub pre: Vec<SecureMatrix>,
    pub masks: Vec<SecureMatrix>,
    pub softmax: SoftmaxOut,
    pub deltas: Vec<SecureMatrix>,
    pub grads: Vec<SecureMatrix>,
    pub m: RepShare,
    pub v: RepShare,
    pub adam: AdamTrace,
}

/// One training step on a batch: `x` at offset `frac`, one-hot `t` at the
/// softmax output offset.
pub fn train_step(p: &mut Party, net: &mut SecureNet, x: &SecureMatrix, t: &SecureMatrix, cfg: &NnConfig) -> Result<StepTrace> {
    let f = p.field;
    let frac = cfg.frac as i32;
    let layers = net.weights.len();
    if layers != cfg.dims.len() - 1 || x.cols != cfg.dims[0] || t.cols != *cfg.dims.last().unwrap() || t.rows != x.rows {
        return Err(Error::LengthMismatch);
    }
    let mut inputs = vec![x.clone()];
    let mut pre = Vec::with_capacity(layers);
    let mut masks = Vec::with_capacity(layers);
    for l in 0..layers {
        let u = matmul(p, inputs.last().unwrap(), &net.weights[l])?;
        let u = rescale_to(p, &u, frac)?;
        if l + 1 < layers {
            let (y, mask) = relu(p, &u, cfg.relu_bits)?;
            inputs.push(y);
            masks.push(mask);
        }
        pre.push(u);
    }
    let sm = softmax(p, pre.last().unwrap(), &cfg.softmax)?;

    let mut deltas: Vec<Option<SecureMatrix>> = vec![None; layers];
    deltas[layers - 1] = Some(sm.probs.sub(&f, t)?);
    for l in (0..layers - 1).rev() {
        let back = matmul(p, deltas[l + 1].as_ref().unwrap(), &net.weights[l + 1].transpose())?;
        let back = rescale_to(p, &back, frac)?;
        let z = hadamard(p, &masks[l], &back)?;
        deltas[l] = Some(z);
    }
    let deltas: Vec<SecureMatrix> = deltas.into_iter().map(Option::unwrap).collect();
    let mut grads = Vec::with_capacity(layers);
    for l in 0..layers {
        let raw = matmul(p, &inputs[l].transpose(), &deltas[l])?;
        let d = reference::grad_divisor(x.rows, cfg.frac + cfg.delta_offset(l), cfg.grad_frac);
        grads.push(divide(p, &raw, d as u64, cfg.grad_frac as i32)?);
    }

    let w_all = RepShare::concat(&net.weights.iter().map(|w| &w.data).collect::<Vec<_>>());
    let g_all = RepShare::concat(&grads.iter().map(|g| &g.data).collect::<Vec<_>>());
    let (w_new, adam) = adam_update(p, &w_all, &g_all, &mut net.adam, &cfg.adam, cfg.grad_frac, cfg.frac)?;
    let mut off = 0;
    for w in net.weights.iter_mut() {
        let n = w.data.len();
        w.data = w_new.slice(off, n);
        off += n;
    }
    Ok(StepTrace { inputs, pre, masks, softmax: sm, deltas, grads, m: net.adam.m.clone(), v: net.adam.v.clone(), adam })
}

/// One-hot labels at `offset`.
pub fn one_hot(labels: &[u8], classes: usize, offset: u32) -> Mat {
    let mut v = vec![0i64; labels.len() * classes];
    for (i, &l) in labels.iter().enumerate() {
        v[i * classes + l as usize] = 1 << offset;
    }
    Mat::new(labels.len(), classes, v)
}

/// Pixels in `0..=255` scaled to `[0, 1]` at `offset`.
pub fn pixels_to_fixed(pixels: &[u8], rows: usize, cols: usize, offset: u32) -> Mat {
    let s = 2f64.powi(offset as i32) / 255.0;
    Mat::new(rows, cols, pixels.iter().map(|&x| (x as f64 * s).round() as i64).collect())
}
