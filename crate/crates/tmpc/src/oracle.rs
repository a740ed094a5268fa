//! Ground truth for tests and reports: the division functionality, closed
//! form output distributions, the masked-open baseline division and high
//! precision references for the elementary functions.
//!
//! The fixed-point network reference lives in [`crate::nn::reference`].

use num_bigint::{BigInt, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;

use crate::field::Field;

/// `floor(a/d)` plus the rounding term the additive division produces for
/// first share `a1`, read off the case analysis rather than the protocol.
pub fn div_functionality(p: u64, d: u64, a: u64, a1: u64) -> u64 {
    let (r_a, r_p, r1) = (a % d, p % d, a1 % d);
    let base = a / d;
    if a1 <= a {
        if r_a < r1 && r1 <= r_p {
            base
        } else if r_p < r1 && r1 <= r_a {
            base + 2
        } else {
            base + 1
        }
    } else {
        let (ra, rp, d, r1) = (r_a as i64, r_p as i64, d as i64, r1 as i64);
        if ra + rp < r1 || (ra + rp - d < r1 && r1 <= rp) {
            base
        } else {
            base + 1
        }
    }
}

/// The same function for a Mersenne prime and a power-of-two divisor.
pub fn div_functionality_specific(d: u64, a: u64, a1: u64) -> u64 {
    let (r_a, r1) = (a % d, a1 % d);
    let exact = if a1 <= a { r_a < r1 } else { r_a <= r1 };
    a / d + (!exact) as u64
}

/// The additive division evaluated in the clear for one first share.
pub fn protocol1_clear(p: u64, d: u64, a: u64, a1: u64) -> u64 {
    let (alpha_p, r_p) = (p / d, p % d);
    let a2 = (a + p - a1) % p;
    let q = (a1 + a2 - a) / p;
    let b = (a1 + d - 1 - r_p) / d + a2 / d;
    b + 1 - (alpha_p + 1) * q
}

/// Output distribution of the additive division over a uniform first share,
/// as counts out of `p` for outputs `floor(a/d) + {0, 1, 2}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistributionSpec {
    pub p: u64,
    pub d: u64,
    pub a: u64,
    pub alpha_a: u64,
    pub r_a: u64,
    pub alpha_p: u64,
    pub r_p: u64,
    pub counts: [u64; 3],
}

impl DistributionSpec {
    pub fn probabilities(&self) -> [f64; 3] {
        self.counts.map(|c| c as f64 / self.p as f64)
    }
}

/// Closed-form distribution; `a` even with `2a < p`.
pub fn predict_distribution(p: u64, d: u64, a: u64) -> DistributionSpec {
    let (alpha_p, r_p) = (p / d, p % d);
    let (alpha_a, r_a) = (a / d, a % d);
    let (ap, rp, aa, ra, di, pi, ai) = (alpha_p as i128, r_p as i128, alpha_a as i128, r_a as i128, d as i128, p as i128, a as i128);
    let counts = if r_p < r_a {
        [(ap - aa) * (di - ra) - 1, (di - 2 * ra + rp) * aa + 2 * rp + (ap - 1) * ra + 1, (ra - rp) * (aa + 1)]
    } else {
        [pi - ai + rp * aa - ap * ra - 1, ai - rp * aa + ra * ap + 1, 0]
    };
    DistributionSpec { p, d, a, alpha_a, r_a, alpha_p, r_p, counts: counts.map(|c| c as u64) }
}

/// Count of first shares giving exactly `a/d` for a Mersenne `p` and a
/// power-of-two `d`: `p - r_a (alpha_p + 1) - alpha_a - 1`.
pub fn specific_exact_count(p: u64, d: u64, a: u64) -> u64 {
    let (alpha_p, r_a, alpha_a) = (p / d, a % d, a / d);
    p - r_a * (alpha_p + 1) - alpha_a - 1
}

/// Histogram of the clear additive division over every first share.
pub fn enumerate_division(p: u64, d: u64, a: u64) -> [u64; 3] {
    let mut h = [0u64; 3];
    for a1 in 0..p {
        let c = protocol1_clear(p, d, a, a1);
        h[(c - a / d) as usize] += 1;
    }
    h
}

/// Outcome of the masked-open baseline on a batch of inputs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BaselineStats {
    pub trials: u64,
    /// Outputs off by roughly `floor(p/d)`.
    pub large_errors: u64,
    /// Expected number of large errors: the sum of `a/p`.
    pub expected: f64,
    /// Largest deviation among the remaining outputs.
    pub max_small_error: f64,
    /// Size of the large errors seen, as `floor(a/d) - output`.
    pub large_magnitude: Option<u64>,
}

impl BaselineStats {
    /// Standard deviation of the large-error count under the Bernoulli model.
    pub fn sigma(&self, inputs: &[u64], p: u64) -> f64 {
        inputs
            .iter()
            .map(|&a| {
                let r = a as f64 / p as f64;
                r * (1.0 - r)
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Division by opening `a + s'` for a random mask `s'` and subtracting
/// `floor(s'/d)`. When `a + s'` wraps past `p` the output drops by about
/// `floor(p/d)`.
pub fn baseline_masked_division<R: Rng + ?Sized>(field: &Field, d: u64, inputs: &[u64], rng: &mut R) -> BaselineStats {
    let p = field.p();
    let mut st = BaselineStats { trials: inputs.len() as u64, ..Default::default() };
    for &a in inputs {
        let s_prime = field.random(rng);
        let s = s_prime / d;
        let opened = field.add(a, s_prime);
        let out = field.sub(opened / d, s);
        let err = field.to_i64(out) as f64 - a as f64 / d as f64;
        st.expected += a as f64 / p as f64;
        if err.abs() > 2.0 {
            st.large_errors += 1;
            st.large_magnitude = Some(field.sub(a / d, out));
        } else {
            st.max_small_error = st.max_small_error.max(err.abs());
        }
    }
    st
}

/// Fractional bits of the high-precision references.
pub const REF_BITS: u32 = 192;

/// Functions with a high-precision reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RefFn {
    Inv,
    Sqrt,
    InvSqrt,
    Exp,
}

/// `f(a * 2^-alpha)` scaled by `2^REF_BITS`, in exact integer arithmetic.
pub fn reference(fun: RefFn, a: i64, alpha: i32) -> BigInt {
    let one = BigInt::one() << REF_BITS;
    let x = scaled(a, alpha);
    match fun {
        RefFn::Inv => (&one << REF_BITS) / &x,
        RefFn::Sqrt => (&x << REF_BITS).sqrt(),
        RefFn::InvSqrt => (&one << REF_BITS) / (&x << REF_BITS).sqrt(),
        RefFn::Exp => exp_fixed(&x),
    }
}

/// `a * 2^-alpha` scaled by `2^REF_BITS`.
fn scaled(a: i64, alpha: i32) -> BigInt {
    let a = BigInt::from(a);
    let sh = REF_BITS as i64 - alpha as i64;
    if sh >= 0 {
        a << sh as u32
    } else {
        a >> (-sh) as u32
    }
}

/// `exp(x)` for `x` scaled by `2^REF_BITS`: halve the argument, Taylor, square back.
pub fn exp_fixed(x: &BigInt) -> BigInt {
    const HALVINGS: u32 = 16;
    let extra = 64;
    let bits = REF_BITS + extra;
    let one = BigInt::one() << bits;
    let y = (x << extra) >> HALVINGS;
    let mut term = one.clone();
    let mut sum = one.clone();
    for k in 1..60u32 {
        term = ((&term * &y) >> bits) / k;
        if term.is_zero() {
            break;
        }
        sum += &term;
    }
    for _ in 0..HALVINGS {
        sum = (&sum * &sum) >> bits;
    }
    sum >> extra
}

/// `|out * 2^-delta - r| / |r|` for a reference `r` scaled by `2^REF_BITS`.
pub fn relative_error(out: i64, delta: i32, r: &BigInt) -> f64 {
    let o = scaled(out, delta);
    let diff = (o - r).abs();
    ratio(&diff, &r.abs())
}

/// `|out - r| / |r|` for plain integers.
pub fn relative_error_int(out: i64, r: f64) -> f64 {
    ((out as f64) - r).abs() / r.abs()
}

fn ratio(n: &BigInt, d: &BigInt) -> f64 {
    if d.is_zero() {
        return f64::INFINITY;
    }
    // Align to about 60 significant bits before converting.
    let shift = d.bits().saturating_sub(60);
    let nn = n >> shift;
    let dd = d >> shift;
    nn.to_f64().unwrap_or(f64::INFINITY) / dd.to_f64().unwrap()
}

/// Reference rounded to `frac` fractional bits.
pub fn reference_fixed(fun: RefFn, a: i64, alpha: i32, frac: u32) -> i64 {
    let r = reference(fun, a, alpha);
    round_shift(&r, REF_BITS - frac).to_i64().expect("reference fits in 64 bits")
}

/// Rounds `v / 2^s` to nearest.
pub fn round_shift(v: &BigInt, s: u32) -> BigInt {
    if s == 0 {
        return v.clone();
    }
    let half = BigInt::one() << (s - 1);
    if v.sign() == Sign::Minus {
        -((-v + half) >> s)
    } else {
        (v + half) >> s
    }
}

/// Accuracy in bits: `-log2` of the mean and of the worst relative error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Accuracy {
    pub avg_bits: f64,
    pub worst_bits: f64,
    pub avg_err: f64,
    pub worst_err: f64,
}

impl Accuracy {
    pub fn from_errors(errs: &[f64]) -> Accuracy {
        let avg = errs.iter().sum::<f64>() / errs.len() as f64;
        let worst = errs.iter().cloned().fold(0.0, f64::max);
        Accuracy { avg_bits: -avg.log2(), worst_bits: -worst.log2(), avg_err: avg, worst_err: worst }
    }
}
