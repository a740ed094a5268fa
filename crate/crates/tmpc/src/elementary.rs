//! Fixed-point elementary functions on shared values.
//!
//! A fixed-point value `x` with offset `alpha` is stored as `x * 2^alpha`.
//! Every function takes its input and output offsets separately, and works
//! internally at its own precision `bits`.

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use crate::division::{truncate, truncate_signed};
use crate::error::{Error, Result};
use crate::oracle::{exp_fixed, REF_BITS};
use crate::party::Party;
use crate::protocols::{and_many, bit_compose, bit_decompose, cond_assign, mod_convert, mult, mult_many};
use crate::sharing::{BinShare, RepShare};

/// Parameters of the inversion and square-root family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ElemParams {
    /// Working bit length.
    pub bits: u32,
    /// Bit length of the input; at least `bits`. Wider inputs are fitted
    /// and then cut down to `bits`.
    pub input_bits: u32,
    /// Public lower bound: the input is at least `2^floor_bits`.
    pub floor_bits: u32,
    /// Iteration count.
    pub iters: u32,
    /// Input offset.
    pub alpha: i32,
    /// Output offset.
    pub delta: i32,
}

impl ElemParams {
    pub fn new(bits: u32, iters: u32, alpha: i32, delta: i32) -> Result<ElemParams> {
        if !(2..=30).contains(&bits) || iters == 0 {
            return Err(Error::InvalidInput(format!("bits {bits} / iterations {iters} out of range")));
        }
        Ok(ElemParams { bits, input_bits: bits, floor_bits: 0, iters, alpha, delta })
    }

    pub fn with_input_bits(self, input_bits: u32) -> ElemParams {
        ElemParams { input_bits: input_bits.max(self.bits), ..self }
    }

    pub fn with_floor_bits(self, floor_bits: u32) -> ElemParams {
        ElemParams { floor_bits, ..self }
    }

    /// 29 working bits and five product factors.
    pub fn inv(alpha: i32, delta: i32) -> ElemParams {
        ElemParams { bits: 29, input_bits: 29, floor_bits: 0, iters: 5, alpha, delta }
    }

    /// 28 working bits and six Newton steps.
    pub fn inv_sqrt(alpha: i32, delta: i32) -> ElemParams {
        ElemParams { bits: 28, input_bits: 28, floor_bits: 0, iters: 6, alpha, delta }
    }
}

/// Parameters of the exponential.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpParams {
    /// Bit length of `a - mu` at offset `alpha`.
    pub bits: u32,
    /// Number of series terms.
    pub iters: u32,
    pub alpha: i32,
    /// Offset of table values and of the series.
    pub beta: u32,
    pub delta: i32,
    /// Public lower bound of the input.
    pub mu: f64,
    /// Low bits evaluated by the series; the rest use the table.
    pub t: u32,
}

impl ExpParams {
    pub fn new(bits: u32, alpha: i32, delta: i32) -> ExpParams {
        ExpParams { bits, iters: 4, alpha, beta: 25, delta, mu: 0.0, t: 4 }
    }

    fn check(&self) -> Result<()> {
        if self.t >= self.bits || self.bits > 58 || self.iters == 0 || self.beta > 40 {
            return Err(Error::InvalidInput(format!("exponent parameters out of range: {self:?}")));
        }
        Ok(())
    }
}

/// A signed value as a sign in `{-1, +1}` and a magnitude.
#[derive(Clone, Debug)]
pub struct SignedView {
    pub sign: RepShare,
    pub abs: RepShare,
}

/// Multiplies by `2^shift`; a negative shift truncates.
fn rescale(p: &mut Party, a: &RepShare, shift: i32, signed: bool) -> Result<RepShare> {
    let f = p.field;
    match shift {
        0 => Ok(a.clone()),
        s if s > 0 => Ok(a.scale(&f, f.pow2(s as u32))),
        s if signed => truncate_signed(p, a, (-s) as u32),
        s => truncate(p, a, (-s) as u32),
    }
}

fn or_bits(p: &mut Party, pairs: &[(&BinShare, &BinShare)]) -> Result<Vec<BinShare>> {
    let and = and_many(p, pairs)?;
    Ok(pairs.iter().zip(and).map(|((a, b), ab)| a.xor(b).xor(&ab)).collect())
}

/// One-hot flags of the most significant set bit, index 0 = least significant.
fn msb_flags(p: &mut Party, a: &RepShare, bits: u32) -> Result<Vec<BinShare>> {
    let a_bits = bit_decompose(p, a, bits)?;
    let l = a_bits.len();
    // Suffix OR in log depth: f[i] = a[i] | a[i+1] | ... .
    let mut f = a_bits;
    let mut s = 1;
    while s < l {
        let pairs: Vec<(&BinShare, &BinShare)> = (0..l - s).map(|i| (&f[i], &f[i + s])).collect();
        let low = or_bits(p, &pairs)?;
        for (i, v) in low.into_iter().enumerate() {
            f[i] = v;
        }
        s *= 2;
    }
    Ok((0..l).map(|i| if i + 1 < l { f[i].xor(&f[i + 1]) } else { f[i].clone() }).collect())
}

/// `(b, c)` with `c = 2^(bits - 1 - floor(log2 a))` and `b = a c` in
/// `[2^(bits-1), 2^bits)`. Zero maps to `(0, 0)`.
pub fn msnzb_fit(p: &mut Party, a: &RepShare, bits: u32) -> Result<(RepShare, RepShare)> {
    msnzb_fit_wide(p, a, bits, bits)
}

/// [`msnzb_fit`] for an input of `input_bits` bits: `c` shifts the top bit to
/// position `input_bits - 1` and `b` keeps the top `bits` bits of `a c`.
pub fn msnzb_fit_wide(p: &mut Party, a: &RepShare, input_bits: u32, bits: u32) -> Result<(RepShare, RepShare)> {
    let x = msb_flags(p, a, input_bits)?;
    let rev: Vec<BinShare> = x.into_iter().rev().collect();
    let c = bit_compose(p, &rev)?;
    let b = mult(p, a, &c)?;
    let b = rescale(p, &b, bits as i32 - input_bits as i32, false)?;
    Ok((b, c))
}

/// As [`msnzb_fit`], plus `c'` and `r` with `c = c'^2 2^r`, `r` in `{0, 1}`.
pub fn msnzb_fit_ext(p: &mut Party, a: &RepShare, bits: u32) -> Result<(RepShare, RepShare, RepShare)> {
    msnzb_fit_ext_wide(p, a, bits, bits)
}

/// [`msnzb_fit_ext`] for an input of `input_bits` bits, as in [`msnzb_fit_wide`].
pub fn msnzb_fit_ext_wide(p: &mut Party, a: &RepShare, input_bits: u32, bits: u32) -> Result<(RepShare, RepShare, RepShare)> {
    let n = a.len();
    let x = msb_flags(p, a, input_bits)?;
    let l = input_bits as usize;
    // Shift exponent e = l - 1 - m for a top bit at m.
    let at = |e: usize| &x[l - 1 - e];
    let zero = BinShare::zeros(p.id, n);
    let mut parity = zero.clone();
    let mut half: Vec<BinShare> = vec![zero.clone(); l.div_ceil(2)];
    for e in 0..l {
        if e % 2 == 1 {
            parity = parity.xor(at(e));
        }
        half[e / 2] = half[e / 2].xor(at(e));
    }
    // Compose c and c' in one pass.
    let cols: Vec<BinShare> = (0..l).map(|e| BinShare::concat(&[at(e), half.get(e).unwrap_or(&zero)])).collect();
    let both = bit_compose(p, &cols)?;
    let (c, c_half) = (both.slice(0, n), both.slice(n, n));
    let r = mod_convert(p, &parity)?;
    let b = mult(p, a, &c)?;
    let b = rescale(p, &b, bits as i32 - input_bits as i32, false)?;
    Ok((b, c_half, r))
}

/// `(1/a') 2^delta` for `a = a' 2^alpha > 0`.
///
/// The fitted `b` in `[1/2, 1)` is inverted with the product
/// `(1 + x)(1 + x^2)(1 + x^4)...` where `x = 1 - b`.
pub fn inv(p: &mut Party, a: &RepShare, prm: &ElemParams) -> Result<RepShare> {
    let f = p.field;
    let l = prm.bits;
    let wide = prm.input_bits.max(l);
    if l + wide > 59 + prm.floor_bits.min(wide - 1) {
        return Err(Error::InvalidInput("input too wide for the working precision".into()));
    }
    let one = f.pow2(l);
    let (b, c) = msnzb_fit_wide(p, a, wide, l)?;
    let mut x = b.rsub_const(&f, one);
    let mut y = x.add_const(&f, one);
    for _ in 1..prm.iters {
        let sq = mult(p, &x, &x)?;
        x = truncate(p, &sq, l)?;
        let prod = mult(p, &y, &x.add_const(&f, one))?;
        y = truncate(p, &prod, l)?;
    }
    let out = mult(p, &y, &c)?;
    rescale(p, &out, prm.alpha + prm.delta - (l + wide) as i32, false)
}

/// `(a'/d') 2^delta` for `a = a' 2^alpha` (any sign) and `d = d' 2^beta > 0`.
pub fn div_priv(p: &mut Party, a: &RepShare, d: &RepShare, alpha: i32, prm: &ElemParams) -> Result<RepShare> {
    let z = inv(p, d, prm)?;
    let out = mult(p, &z, a)?;
    rescale(p, &out, -alpha, true)
}

/// Extra fraction bits kept when applying the odd-exponent factor.
const GUARD: u32 = 4;

/// `(1/sqrt(a')) 2^delta` for `a = a' 2^alpha > 0`. Requires `alpha` and
/// the input bit length to have equal parity.
///
/// Newton steps `y <- y (3 - b y^2) / 2` from `y = 1` on the fitted `b`.
pub fn inv_sqrt(p: &mut Party, a: &RepShare, prm: &ElemParams) -> Result<RepShare> {
    let f = p.field;
    let l = prm.bits;
    let wide = prm.input_bits.max(l);
    if (prm.alpha - wide as i32) % 2 != 0 {
        return Err(Error::InvalidInput("input offset and bit length must have equal parity".into()));
    }
    // Keep y * c' below 2^58.
    let guard = (57 - l as i32 - wide.div_ceil(2) as i32).clamp(0, GUARD as i32) as u32;
    if l + 1 + guard + wide.div_ceil(2) > 59 {
        return Err(Error::InvalidInput("input too wide for the working precision".into()));
    }
    let three = f.reduce(3u128 << l);
    let (b, c_half, r) = msnzb_fit_ext_wide(p, a, wide, l)?;
    let x = b.rsub_const(&f, three);
    let mut y = truncate(p, &x, 1)?;
    for _ in 1..prm.iters {
        let y2 = mult(p, &y, &y)?;
        let y2 = truncate(p, &y2, l)?;
        let t = mult(p, &y2, &b)?;
        let t = truncate(p, &t, l)?;
        let x = t.rsub_const(&f, three);
        let xy = mult(p, &x, &y)?;
        y = truncate(p, &xy, l + 1)?;
    }
    // sqrt(2) on odd exponents.
    let k = ((std::f64::consts::SQRT_2 - 1.0) * (1u64 << l) as f64).round() as u64;
    let w = r.scale(&f, k).add_const(&f, f.pow2(l));
    let yw = mult(p, &y, &w)?;
    let yw = truncate(p, &yw, l - guard)?;
    let out = mult(p, &yw, &c_half)?;
    let shift = prm.delta + (prm.alpha - wide as i32) / 2 - (l + guard) as i32;
    rescale(p, &out, shift, false)
}

/// `sqrt(a') 2^delta` as `a * inv_sqrt(a) * 2^-alpha`.
///
/// The inverse root is taken at the widest output offset for which the
/// product with `a` still fits, so its rounding is not magnified by `a`.
pub fn sqrt(p: &mut Party, a: &RepShare, prm: &ElemParams) -> Result<RepShare> {
    let bits = prm.input_bits.max(prm.bits) as i32;
    let wide = (58 - (bits + prm.alpha + 1) / 2).max(prm.delta);
    let z = inv_sqrt(p, a, &ElemParams { delta: wide, ..*prm })?;
    let out = mult(p, &z, a)?;
    rescale(p, &out, prm.delta - wide - prm.alpha, false)
}

/// `exp(x) = m 2^e` with `m` in `[1, 2)` rounded to `frac` bits.
fn split_exp(x: &BigInt, frac: u32) -> (u64, i32) {
    let v = exp_fixed(x);
    let e = v.bits() as i32 - 1 - REF_BITS as i32;
    let sh = (REF_BITS as i32 + e - frac as i32) as u32;
    let m = crate::oracle::round_shift(&v, sh).to_u64().expect("mantissa fits");
    // Rounding up to 2.0 moves to the next exponent.
    if m >> frac == 2 {
        (m >> 1, e + 1)
    } else {
        (m, e)
    }
}

/// `x 2^REF_BITS` for `x = k 2^-s`.
fn ref_scaled(k: i64, s: i32) -> BigInt {
    let v = BigInt::from(k);
    let sh = REF_BITS as i32 - s;
    if sh >= 0 {
        v << sh as u32
    } else {
        v >> (-sh) as u32
    }
}

/// `exp(a') 2^delta` for `a = a' 2^alpha >= mu 2^alpha`.
///
/// The high bits of `a - mu` select table factors, each a mantissa and a
/// power of two kept apart until the end; the low `t` bits go through the
/// series.
pub fn exponent(p: &mut Party, a: &RepShare, prm: &ExpParams) -> Result<RepShare> {
    prm.check()?;
    let f = p.field;
    let n = a.len();
    let beta = prm.beta;
    let one = f.pow2(beta);
    let mu_fixed = (prm.mu * 2f64.powi(prm.alpha)).round() as i64;
    let b = a.add_const(&f, f.from_i64(-mu_fixed));
    let bits = bit_decompose(p, &b, prm.bits)?;
    let t = prm.t as usize;
    let high: Vec<&BinShare> = bits[t..].iter().collect();
    let both = mod_convert(p, &BinShare::concat(&high))?;
    let mut low = b.clone();
    for (k, j) in (t..bits.len()).enumerate() {
        low = low.sub(&f, &both.slice(k * n, n).scale(&f, f.pow2(j as u32)));
    }

    // Table factors, selected with cond_assign.
    let mut mant = Vec::new();
    let mut pow = Vec::new();
    for (j, bit) in bits.iter().enumerate().skip(t) {
        let (m, e) = split_exp(&ref_scaled(1, prm.alpha - j as i32), beta);
        mant.push(cond_assign(p, &vec![one; n], &vec![m; n], bit)?);
        pow.push(cond_assign(p, &vec![1; n], &vec![f.pow2(e as u32); n], bit)?);
    }
    let m = product(p, mant, Some(beta))?;
    let e = product(p, pow, None)?;

    // Series on the low part, at offset beta.
    let s = rescale(p, &low, beta as i32 - prm.alpha, false)?;
    let mut series = s.add_const(&f, one);
    if prm.iters > 2 {
        let fact: u64 = (1..prm.iters as u64).product();
        let mut power = s.clone();
        let mut acc = RepShare::zeros(p.id, n);
        for i in 2..prm.iters as u64 {
            let sq = mult(p, &power, &s)?;
            power = truncate(p, &sq, beta)?;
            let w: u64 = (i + 1..prm.iters as u64).product();
            acc = acc.add(&f, &power.scale(&f, w));
        }
        series = series.add(&f, &crate::division::div_pub_rep(p, &acc, fact)?);
    }

    let g = mult(p, &m, &series)?;
    let mut g = truncate(p, &g, beta)?;
    let mut mu_exp = 0;
    if mu_fixed != 0 {
        let (mm, me) = split_exp(&ref_scaled(mu_fixed, prm.alpha), beta);
        g = truncate(p, &g.scale(&f, mm), beta)?;
        mu_exp = me;
    }
    let out = mult(p, &g, &e)?;
    rescale(p, &out, prm.delta - beta as i32 + mu_exp, false)
}

/// Balanced product tree; `trunc` divides each product by `2^trunc`.
fn product(p: &mut Party, mut xs: Vec<RepShare>, trunc: Option<u32>) -> Result<RepShare> {
    let f = p.field;
    if xs.is_empty() {
        return Err(Error::InvalidInput("empty product".into()));
    }
    while xs.len() > 1 {
        let odd = (xs.len() % 2 == 1).then(|| xs.pop().unwrap());
        let pairs: Vec<(&RepShare, &RepShare)> = xs.chunks(2).map(|c| (&c[0], &c[1])).collect();
        let prods = mult_many(p, &pairs)?;
        let n = prods[0].len();
        let joined = RepShare::concat(&prods.iter().collect::<Vec<_>>());
        let joined = match trunc {
            Some(s) => truncate(p, &joined, s)?,
            None => joined,
        };
        xs = (0..prods.len()).map(|k| joined.slice(k * n, n)).collect();
        if let Some(o) = odd {
            xs.push(o);
        }
    }
    let _ = f;
    Ok(xs.pop().unwrap())
}

/// `1` where `a >= 0` and `0` where `a < 0`, for `-2^bits < a < 2^bits`:
/// the top bit of `2^(bits+1) + a`.
pub fn nonneg_flag(p: &mut Party, a: &RepShare, bits: u32) -> Result<RepShare> {
    let f = p.field;
    if bits + 2 > f.bits() {
        return Err(Error::InvalidInput(format!("bit length {bits} too large for the field")));
    }
    let shifted = a.add_const(&f, f.pow2(bits + 1));
    let all = bit_decompose(p, &shifted, bits + 2)?;
    mod_convert(p, &all[bits as usize + 1])
}

/// Sign and magnitude of `-2^bits < a < 2^bits`; zero counts as positive.
pub fn ext_sign_abs(p: &mut Party, a: &RepShare, bits: u32) -> Result<SignedView> {
    let f = p.field;
    let s = nonneg_flag(p, a, bits)?;
    let sign = s.scale(&f, 2).add_const(&f, f.neg(1));
    let abs = mult(p, &sign, a)?;
    Ok(SignedView { sign, abs })
}

/// Functions that accept a signed input through [`signed_wrap`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignedOp {
    Inv,
    InvSqrt,
    Sqrt,
}

/// Runs `op` on `|a|` and multiplies the result by the sign of `a`.
///
/// Only the inversion is meaningful on negative inputs; the square-root
/// family gives an undefined result there since the sign cannot be branched on.
pub fn signed_wrap(p: &mut Party, op: SignedOp, a: &RepShare, prm: &ElemParams) -> Result<RepShare> {
    let v = ext_sign_abs(p, a, prm.input_bits)?;
    let z = match op {
        SignedOp::Inv => inv(p, &v.abs, prm)?,
        SignedOp::InvSqrt => inv_sqrt(p, &v.abs, prm)?,
        SignedOp::Sqrt => sqrt(p, &v.abs, prm)?,
    };
    mult(p, &v.sign, &z)
}

/// Private-divisor division for a divisor of either sign.
pub fn div_priv_signed(p: &mut Party, a: &RepShare, d: &RepShare, alpha: i32, prm: &ElemParams) -> Result<RepShare> {
    let v = ext_sign_abs(p, d, prm.input_bits)?;
    let z = div_priv(p, a, &v.abs, alpha, prm)?;
    mult(p, &v.sign, &z)
}

/// `floor(log2 x)` exponent table entry, exposed for tests and tools.
pub fn exp_table(alpha: i32, beta: u32, bits: u32, t: u32) -> Vec<(u32, u64, i32)> {
    (t..bits)
        .map(|j| {
            let (m, e) = split_exp(&ref_scaled(1, alpha - j as i32), beta);
            (j, m, e)
        })
        .collect()
}
