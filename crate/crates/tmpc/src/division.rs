//! Division by a public value with the quotient term cancelled exactly.
//!
//! Dividing each additive share by `d` leaves an error of `q * floor(p/d)`
//! where `q` is the quotient of the share sum. Quotient transfer gives a
//! sharing of `q`, so that term is subtracted instead of risked. The output
//! is `a/d` plus a share-dependent rounding term in `{0, 1, 2}`.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::party::Party;
use crate::protocols::{convert_to_add, convert_to_rep, input_private_bits, mod_convert, qt_add, qt_rep};
use crate::sharing::{AddShare, Bits, RepShare};
use crate::transport::PartyId;

/// `p = alpha_p * d + r_p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DivParams {
    pub d: u64,
    pub alpha_p: u64,
    pub r_p: u64,
}

impl DivParams {
    pub fn new(field: &Field, d: u64) -> Result<DivParams> {
        if d == 0 || d >= field.p() {
            return Err(Error::InvalidInput(format!("divisor {d} out of range")));
        }
        Ok(DivParams { d, alpha_p: field.p() / d, r_p: field.p() % d })
    }
}

/// How the replicated-share division schedules its quotient transfer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Schedule {
    /// Quotient transfer on additive shares, then one conversion back: 2 rounds.
    #[default]
    Parallel,
    /// Quotient as a shared bit, converted with the modulus conversion.
    Naive,
}

/// Which constant the actively secure division adds before rounding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ActiveOffset {
    /// `z*d - r_p` on one sub-share and no final correction: the bias of the
    /// three rounded sub-shares cancels.
    #[default]
    Centred,
    /// `(d - r_p) + floor((d - r_p)/2)` on one sub-share and `-1` at the end.
    Literal,
}

/// Division of an additive sharing of an even `a`. One round.
pub fn div_pub_add(p: &mut Party, a: &AddShare, n: usize, d: u64) -> Result<AddShare> {
    let f = p.field;
    let prm = DivParams::new(&f, d)?;
    let q = qt_add(p, a, n)?;
    Ok(div_local(&f, &prm, a, &q))
}

/// The local step: per-share integer division, minus `(alpha_p + 1) q`, plus one.
fn div_local(f: &Field, prm: &DivParams, a: &AddShare, q: &AddShare) -> AddShare {
    let d = prm.d as u128;
    let b: Vec<u64> = match a.party.get() {
        1 => a.v.iter().map(|&v| ((v as u128 + d - 1 - prm.r_p as u128) / d) as u64).collect(),
        2 => a.v.iter().map(|&v| (v as u128 / d) as u64).collect(),
        _ => Vec::new(),
    };
    let k = f.reduce(prm.alpha_p as u128 + 1);
    let v = b.iter().zip(&q.v).map(|(b, q)| f.sub(f.reduce(*b as u128), f.mul(k, *q))).collect();
    AddShare { party: a.party, v }.add_const(f, 1)
}

/// Division of a replicated sharing of `0 <= a < 2^(|p|-1)`.
///
/// The input is doubled along with the divisor so the additive protocol's
/// evenness holds; the result is identical to dividing `a` by `d`.
pub fn div_pub_rep(p: &mut Party, a: &RepShare, d: u64) -> Result<RepShare> {
    div_pub_rep_with(p, a, d, Schedule::Parallel)
}

pub fn div_pub_rep_with(p: &mut Party, a: &RepShare, d: u64, schedule: Schedule) -> Result<RepShare> {
    let f = p.field;
    let n = a.len();
    let d2 = d.checked_mul(2).ok_or_else(|| Error::InvalidInput("divisor too large".into()))?;
    let prm = DivParams::new(&f, d2)?;
    let a2 = convert_to_add(&f, a).scale(&f, 2);
    match schedule {
        Schedule::Parallel => {
            let q = qt_add(p, &a2, n)?;
            let c = div_local(&f, &prm, &a2, &q);
            convert_to_rep(p, &c, n)
        }
        Schedule::Naive => {
            // Each of parties 1 and 2 inputs the low bit of its share; q is their XOR.
            let lsb = |s: &AddShare| Bits::from_fn(s.v.len(), |i| s.v[i] & 1 == 1);
            let mine = (p.id != PartyId::P3).then(|| lsb(&a2));
            let x = input_private_bits(p, PartyId::P1, mine.as_ref().filter(|_| p.id == PartyId::P1), n)?;
            let y = input_private_bits(p, PartyId::P2, mine.as_ref().filter(|_| p.id == PartyId::P2), n)?;
            let q = mod_convert(p, &x.xor(&y))?;
            let zero = AddShare { party: p.id, v: if p.id == PartyId::P3 { Vec::new() } else { vec![0; n] } };
            let b = div_local(&f, &prm, &a2, &zero);
            let b = convert_to_rep(p, &b, n)?;
            let k = f.reduce(prm.alpha_p as u128 + 1);
            Ok(b.sub(&f, &q.scale(&f, k)))
        }
    }
}

/// Truncation by `2^delta`.
pub fn truncate(p: &mut Party, a: &RepShare, delta: u32) -> Result<RepShare> {
    div_pub_rep(p, a, 1u64 << delta)
}

/// `omega = ceil(2^(|p|-2) / d)`, the shift that makes signed inputs nonnegative.
pub fn signed_shift(field: &Field, d: u64) -> u64 {
    (1u64 << (field.bits() - 2)).div_ceil(d)
}

/// Division of a signed value `-2^(|p|-2) - r <= a <= 2^(|p|-2) - r - 1`
/// (with `omega * d = 2^(|p|-2) + r`): `Div(omega*d + a, d) - omega`.
pub fn div_pub_signed(p: &mut Party, a: &RepShare, d: u64) -> Result<RepShare> {
    let f = p.field;
    let w = signed_shift(&f, d);
    let shifted = a.add_const(&f, f.reduce(w as u128 * d as u128));
    let c = div_pub_rep(p, &shifted, d)?;
    Ok(c.add_const(&f, f.neg(w)))
}

/// Signed truncation by `2^delta`.
pub fn truncate_signed(p: &mut Party, a: &RepShare, delta: u32) -> Result<RepShare> {
    if delta == 0 {
        return Ok(a.clone());
    }
    div_pub_signed(p, a, 1u64 << delta)
}

/// Division for the actively secure setting, on a multiple of 4 by a
/// multiple of 4.
///
/// Each sub-share is divided and rounded to nearest by both of its holders,
/// so the result is a consistent replicated sharing without communication
/// beyond the quotient transfer. The error is at most 2.
pub fn div_pub_active(p: &mut Party, a: &RepShare, d: u64, offset: ActiveOffset) -> Result<RepShare> {
    let f = p.field;
    let prm = DivParams::new(&f, d)?;
    debug_assert!(d.is_multiple_of(4), "divisor must be a multiple of 4");
    let q = qt_rep(p, a)?;
    let z = (2 * prm.r_p >= d) as i128;
    let (d_i, r_p) = (d as i128, prm.r_p as i128);
    let (k, c) = match offset {
        ActiveOffset::Centred => (z * d_i - r_p, 0i128),
        ActiveOffset::Literal => ((d_i - r_p) + (d_i - r_p) / 2, -1),
    };
    // The constant goes on sub-share 1: party 1's first and party 3's second.
    let round = |b: i128| -> u64 {
        let (fl, r) = (b.div_euclid(d_i), b.rem_euclid(d_i));
        f.from_i128(fl + (2 * r >= d_i) as i128)
    };
    let (kx, ky) = match p.id.get() {
        1 => (k, 0),
        3 => (0, k),
        _ => (0, 0),
    };
    let b = RepShare { party: p.id, x: a.x.iter().map(|&v| round(v as i128 + kx)).collect(), y: a.y.iter().map(|&v| round(v as i128 + ky)).collect() };
    let m = f.reduce(prm.alpha_p as u128 + z as u128);
    Ok(b.sub(&f, &q.scale(&f, m)).add_const(&f, f.from_i128(c)))
}

/// [`div_pub_active`] for any `a` with `16a < p` and any `d`: both are scaled by 4.
pub fn div_pub_active_scaled(p: &mut Party, a: &RepShare, d: u64, offset: ActiveOffset) -> Result<RepShare> {
    let f = p.field;
    div_pub_active(p, &a.scale(&f, 4), d * 4, offset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::party::{run_local, LocalConfig};
    use crate::sharing::{add_from_first, reconstruct_add, reconstruct_rep, rep_from_subshares, share_rep, Security};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn rec(f: &Field, v: &[RepShare; 3]) -> Vec<u64> {
        reconstruct_rep(f, &[&v[0], &v[1], &v[2]], Security::Active).unwrap()
    }

    fn run_add(f: Field, d: u64, secrets: &[u64], first: &[u64]) -> Vec<u64> {
        let sh = add_from_first(&f, secrets, first);
        let run = run_local(&LocalConfig::new(f, 1), |p| div_pub_add(p, &sh[p.id.index()], secrets.len(), d)).unwrap();
        reconstruct_add(&f, &[&run.outputs[0], &run.outputs[1]]).unwrap()
    }

    #[test]
    fn hand_traced_examples() {
        // p = 31, d = 2, a = 10.
        assert_eq!(run_add(Field::M31, 2, &[10, 10, 10], &[7, 28, 8]), vec![5, 5, 6]);
    }

    #[test]
    fn params() {
        let prm = DivParams::new(&Field::M31, 4).unwrap();
        assert_eq!((prm.alpha_p, prm.r_p), (7, 3));
        assert!(DivParams::new(&Field::M31, 0).is_err());
        assert_eq!(signed_shift(&Field::M61, 4096), 1 << 47);
    }

    #[test]
    fn rep_division_small_field_range() {
        let f = Field::M31;
        // All a < 16 with every first sub-share, d in {1, 2, 4, 8}.
        let mut subs = Vec::new();
        for a in 0..16u64 {
            for a1 in 0..31 {
                subs.push([a1, (a1 * 7 + 3) % 31, f.sub(f.sub(a, a1), (a1 * 7 + 3) % 31)]);
            }
        }
        let v = rep_from_subshares(&subs);
        for d in [1u64, 2, 4, 8] {
            for schedule in [Schedule::Parallel, Schedule::Naive] {
                let run = run_local(&LocalConfig::new(f, 2), |p| div_pub_rep_with(p, &v[p.id.index()], d, schedule)).unwrap();
                for (i, c) in rec(&f, &run.outputs).iter().enumerate() {
                    let a = i as u64 / 31;
                    assert!(*c == a / d || *c == a / d + 1, "a={a} d={d} c={c}");
                }
                if schedule == Schedule::Parallel {
                    assert_eq!(run.total().rounds, 2);
                    assert!(run.total().bits_sent <= (5 * 5 + 5) * subs.len() as u64);
                }
            }
        }
    }

    #[test]
    fn ideal_mode_gives_same_outputs() {
        let f = Field::M8191;
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let secrets: Vec<u64> = (0..2000).collect();
        let v = share_rep(&f, &secrets, &mut rng);
        let real = run_local(&LocalConfig::new(f, 4), |p| div_pub_rep(p, &v[p.id.index()], 16)).unwrap();
        let ideal = run_local(&LocalConfig::new(f, 4).ideal(), |p| div_pub_rep(p, &v[p.id.index()], 16)).unwrap();
        assert_eq!(rec(&f, &real.outputs), rec(&f, &ideal.outputs));
        assert_eq!(ideal.total().rounds, 2);
    }

    #[test]
    fn signed_division() {
        let f = Field::M61;
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let vals: Vec<i64> = (-1000..=1000).collect();
        let enc: Vec<u64> = vals.iter().map(|&v| f.from_i64(v)).collect();
        let v = share_rep(&f, &enc, &mut rng);
        for d in [2u64, 3, 7, 64] {
            let run = run_local(&LocalConfig::new(f, 6), |p| div_pub_signed(p, &v[p.id.index()], d)).unwrap();
            for (a, c) in vals.iter().zip(rec(&f, &run.outputs)) {
                let c = f.to_i64(c);
                let fl = a.div_euclid(d as i64);
                assert!((0..=2).contains(&(c - fl)), "a={a} d={d} c={c}");
            }
        }
        // -10 / 2 lands on -5 or -4.
        let v = share_rep(&f, &[f.from_i64(-10), 0], &mut rng);
        let run = run_local(&LocalConfig::new(f, 7), |p| div_pub_signed(p, &v[p.id.index()], 2)).unwrap();
        let out = rec(&f, &run.outputs);
        assert!([-5, -4].contains(&f.to_i64(out[0])));
        assert!([0, 1].contains(&f.to_i64(out[1])));
    }

    #[test]
    fn active_division_exhaustive_small_field() {
        let f = Field::M31;
        let mut subs = Vec::new();
        let mut secret = Vec::new();
        for a in [0u64, 4] {
            for a1 in 0..31 {
                for a2 in 0..31 {
                    subs.push([a1, a2, f.sub(f.sub(a, a1), a2)]);
                    secret.push(a);
                }
            }
        }
        let v = rep_from_subshares(&subs);
        let run = run_local(&LocalConfig::new(f, 1).active(), |p| div_pub_active(p, &v[p.id.index()], 4, ActiveOffset::Centred)).unwrap();
        for (c, a) in rec(&f, &run.outputs).iter().zip(&secret) {
            let err = (f.to_i64(*c) as f64 - *a as f64 / 4.0).abs();
            assert!(err <= 2.0, "a={a} c={c}");
        }
    }
}
