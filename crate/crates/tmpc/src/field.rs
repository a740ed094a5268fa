//! Arithmetic modulo a Mersenne prime `p = 2^k - 1`.
//!
//! Elements are plain `u64` values kept in canonical form `[0, p)`. The
//! [`Field`] value carries the modulus so the same protocol code runs over
//! the small test primes and over `2^61 - 1`.

use rand::Rng;

/// A Mersenne prime field `Z_p` with `p = 2^bits - 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Field {
    bits: u32,
    p: u64,
}

const MERSENNE_EXPONENTS: [u32; 9] = [2, 3, 5, 7, 13, 17, 19, 31, 61];

impl Field {
    pub const M31: Field = Field { bits: 5, p: 31 };
    pub const M8191: Field = Field { bits: 13, p: 8191 };
    pub const M61: Field = Field { bits: 61, p: (1u64 << 61) - 1 };

    /// Returns the field for `2^bits - 1` if that number is a prime that fits in 64 bits.
    pub fn mersenne(bits: u32) -> Option<Field> {
        MERSENNE_EXPONENTS.contains(&bits).then(|| Field { bits, p: (1u64 << bits) - 1 })
    }

    /// Parses `31`, `8191`, `mersenne61` or a decimal Mersenne prime.
    pub fn parse(s: &str) -> Option<Field> {
        match s.trim() {
            "mersenne61" | "m61" => Some(Field::M61),
            other => {
                let p: u64 = other.parse().ok()?;
                let bits = 64 - p.leading_zeros();
                Field::mersenne(bits).filter(|f| f.p == p)
            }
        }
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    /// The bit length `|p|`.
    #[inline]
    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// `x mod p` by repeated folding `x0 * 2^k + x1 -> x0 + x1`.
    #[inline]
    pub fn reduce(&self, mut x: u128) -> u64 {
        let k = self.bits;
        let mask = self.p as u128;
        while x >> k != 0 {
            x = (x & mask) + (x >> k);
        }
        let x = x as u64;
        if x == self.p {
            0
        } else {
            x
        }
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        self.reduce(a as u128 * b as u128)
    }

    pub fn pow(&self, mut base: u64, mut e: u64) -> u64 {
        let mut acc = 1 % self.p;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse; `a` must be nonzero.
    pub fn inv(&self, a: u64) -> u64 {
        debug_assert!(a != 0);
        self.pow(a, self.p - 2)
    }

    /// Encodes a signed integer, negative values as `p - |v|`.
    #[inline]
    pub fn from_i64(&self, v: i64) -> u64 {
        if v >= 0 {
            self.reduce(v as u128)
        } else {
            self.neg(self.reduce(v.unsigned_abs() as u128))
        }
    }

    /// Encodes a wide signed integer.
    #[inline]
    pub fn from_i128(&self, v: i128) -> u64 {
        if v >= 0 {
            self.reduce(v as u128)
        } else {
            self.neg(self.reduce(v.unsigned_abs()))
        }
    }

    /// Decodes with the upper half of the field read as negative.
    #[inline]
    pub fn to_i64(&self, v: u64) -> i64 {
        if v > self.p / 2 {
            -((self.p - v) as i64)
        } else {
            v as i64
        }
    }

    /// `2^e mod p`.
    #[inline]
    pub fn pow2(&self, e: u32) -> u64 {
        self.reduce(1u128 << (e % self.bits))
    }

    /// Uniform element by rejection sampling on `bits` random bits.
    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        loop {
            let v = rng.gen::<u64>() & self.p;
            if v != self.p {
                return v;
            }
        }
    }
}

/// The bit length and offset that give a stored integer `a` its rational
/// value `a * 2^-offset`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FixedPointMeta {
    pub bit_len: u32,
    pub offset: i32,
}

impl FixedPointMeta {
    pub const MAX_BITS: u32 = 60;

    pub fn new(bit_len: u32, offset: i32) -> Option<Self> {
        (1..=Self::MAX_BITS).contains(&bit_len).then_some(Self { bit_len, offset })
    }

    /// Quantizes a real value, rounding to nearest.
    pub fn encode(&self, field: &Field, x: f64) -> u64 {
        field.from_i64((x * 2f64.powi(self.offset)).round() as i64)
    }

    pub fn decode(&self, field: &Field, v: u64) -> f64 {
        field.to_i64(v) as f64 * 2f64.powi(-self.offset)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    const FIELDS: [Field; 3] = [Field::M31, Field::M8191, Field::M61];

    #[test]
    fn reduce_trivial_cases() {
        assert_eq!(Field::M61.reduce(0), 0);
        assert_eq!(Field::M61.reduce(1u128 << 61), 1);
        assert_eq!(Field::M61.reduce(Field::M61.p() as u128), 0);
        assert_eq!(Field::M31.reduce(u128::MAX), (u128::MAX % 31) as u64);
    }

    #[test]
    fn reduce_matches_wide_remainder() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for f in FIELDS {
            let n = if f == Field::M61 { 1_000_000 } else { 100_000 };
            for _ in 0..n {
                let x: u128 = rng.gen();
                assert_eq!(f.reduce(x) as u128, x % f.p() as u128);
            }
        }
    }

    #[test]
    fn arithmetic_matches_wide_oracle() {
        let f = Field::M61;
        let p = f.p() as u128;
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for _ in 0..1_000_000 {
            let a = f.random(&mut rng);
            let b = f.random(&mut rng);
            assert_eq!(f.mul(a, b) as u128, a as u128 * b as u128 % p);
            assert_eq!(f.add(a, b) as u128, (a as u128 + b as u128) % p);
            assert_eq!(f.sub(a, b) as u128, (a as u128 + p - b as u128) % p);
        }
        assert_eq!(f.add(f.p() - 1, 1), 0);
        assert_eq!(f.mul(1, 12345), 12345);
    }

    #[test]
    fn small_field_exhaustive() {
        for f in [Field::M31, Field::M8191] {
            let p = f.p();
            let step = if p > 100 { 37 } else { 1 };
            for a in (0..p).step_by(step) {
                for b in 0..p {
                    assert_eq!(f.mul(a, b), a * b % p);
                    assert_eq!(f.sub(a, b), (a + p - b) % p);
                }
                if a != 0 {
                    assert_eq!(f.mul(a, f.inv(a)), 1);
                }
            }
        }
    }

    #[test]
    fn signed_encoding() {
        let f = Field::M31;
        assert_eq!(f.from_i64(-5), 26);
        assert_eq!(f.to_i64(26), -5);
        assert_eq!(f.to_i64(15), 15);
        assert_eq!(Field::M61.to_i64(Field::M61.from_i64(-1 << 40)), -1 << 40);
    }

    #[test]
    fn parse_primes() {
        assert_eq!(Field::parse("31"), Some(Field::M31));
        assert_eq!(Field::parse("8191"), Some(Field::M8191));
        assert_eq!(Field::parse("mersenne61"), Some(Field::M61));
        assert_eq!(Field::parse("33"), None);
        assert_eq!(Field::parse("63"), None);
    }

    #[test]
    fn meta_bounds() {
        assert!(FixedPointMeta::new(60, 10).is_some());
        assert!(FixedPointMeta::new(61, 10).is_none());
        let m = FixedPointMeta::new(30, 10).unwrap();
        assert_eq!(m.decode(&Field::M61, m.encode(&Field::M61, -1.5)), -1.5);
    }

    proptest! {
        #[test]
        fn ring_axioms(a in 0u64..Field::M61.p(), b in 0u64..Field::M61.p(), c in 0u64..Field::M61.p()) {
            let f = Field::M61;
            prop_assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
            prop_assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
            prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
            prop_assert_eq!(f.add(a, f.neg(a)), 0);
        }

        #[test]
        fn reduce_idempotent(x in any::<u128>()) {
            for f in FIELDS {
                let r = f.reduce(x);
                prop_assert!(r < f.p());
                prop_assert_eq!(f.reduce(r as u128), r);
            }
        }
    }
}
