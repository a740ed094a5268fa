//! Multiplication, share conversions, bit decomposition and composition,
//! conditional assignment and quotient transfer.
//!
//! Every function is called by all three parties with their own views. In
//! [`Mode::Ideal`] the sub-protocols that have an ideal counterpart go
//! through the trusted hub instead and charge their nominal round count.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::party::{HubShare, Kind, Mode, Party, Payload};
use crate::sharing::{AddShare, BinShare, Bits, RepShare, Security};
use crate::transport::PartyId;

/// A bit-decomposed batch: entry `j` holds bit `j` (least significant
/// first) of every element.
pub type BitVector = Vec<BinShare>;

fn expect_len(v: Vec<u64>, n: usize) -> Result<Vec<u64>> {
    if v.len() == n {
        Ok(v)
    } else {
        Err(Error::LengthMismatch)
    }
}

fn expect_bits(words: Vec<u64>, n: usize) -> Result<Bits> {
    if words.len() == n.div_ceil(64) {
        Ok(Bits::from_words(words, n))
    } else {
        Err(Error::LengthMismatch)
    }
}

fn hub_rep(s: &RepShare) -> HubShare {
    HubShare { kind: Kind::Arith, x: s.x.clone(), y: s.y.clone() }
}

fn hub_bin(s: &BinShare) -> HubShare {
    HubShare { kind: Kind::Bool, x: s.x.to_u64s(), y: s.y.to_u64s() }
}

fn from_hub_rep(party: PartyId, h: HubShare) -> RepShare {
    RepShare { party, x: h.x, y: h.y }
}

fn from_hub_bin(party: PartyId, h: HubShare) -> BinShare {
    let n = h.x.len();
    BinShare { party, x: Bits::from_fn(n, |i| h.x[i] == 1), y: Bits::from_fn(n, |i| h.y[i] == 1) }
}

/// Draws `n` elements from the stream shared by `a` and `b`; the third party gets `None`.
pub fn pair_elems(p: &mut Party, a: PartyId, b: PartyId, n: usize) -> Option<Vec<u64>> {
    let other = if p.id == a {
        b
    } else if p.id == b {
        a
    } else {
        return None;
    };
    let f = p.field;
    Some(if other == p.id.next() { p.prg().next_elems(&f, n) } else { p.prg().prev_elems(&f, n) })
}

pub fn pair_bits(p: &mut Party, a: PartyId, b: PartyId, n: usize) -> Option<Bits> {
    let other = if p.id == a {
        b
    } else if p.id == b {
        a
    } else {
        return None;
    };
    Some(if other == p.id.next() { Bits::random(p.prg().next_rng(), n) } else { Bits::random(p.prg().prev_rng(), n) })
}

/// Sharing of a vector known to `lo` and `lo.next()`: it sits in their
/// common sub-share, the others are zero. No communication.
pub fn share_known_by_pair(p: &Party, lo: PartyId, v: Option<&[u64]>, n: usize) -> RepShare {
    let mut s = RepShare::zeros(p.id, n);
    if p.id == lo {
        s.y = v.expect("pair member must know the value").to_vec();
    } else if p.id == lo.next() {
        s.x = v.expect("pair member must know the value").to_vec();
    }
    s
}

pub fn share_bits_known_by_pair(p: &Party, lo: PartyId, v: Option<&Bits>, n: usize) -> BinShare {
    let mut s = BinShare::zeros(p.id, n);
    if p.id == lo {
        s.y = v.expect("pair member must know the value").clone();
    } else if p.id == lo.next() {
        s.x = v.expect("pair member must know the value").clone();
    }
    s
}

/// Sharing of a vector private to `owner`: a mask from the stream with
/// `owner.prev()` fills the owner's first sub-share and the masked value is
/// sent to `owner.next()`. One round, `n` elements.
pub fn input_private(p: &mut Party, owner: PartyId, v: Option<&[u64]>, n: usize) -> Result<RepShare> {
    let f = p.field;
    let mask = pair_elems(p, owner.prev(), owner, n);
    let mut s = RepShare::zeros(p.id, n);
    if p.id == owner {
        let m = mask.unwrap();
        let v = v.expect("owner must supply the value");
        let t: Vec<u64> = v.iter().zip(&m).map(|(v, m)| f.sub(*v, *m)).collect();
        p.exchange(Some((owner.next(), Payload::elems(&f, t.clone()))), None)?;
        s.x = m;
        s.y = t;
    } else if p.id == owner.next() {
        s.x = expect_len(p.exchange(None, Some(owner))?.unwrap(), n)?;
    } else {
        p.exchange(None, None)?;
        s.y = mask.unwrap();
    }
    Ok(s)
}

/// Binary analogue of [`input_private`].
pub fn input_private_bits(p: &mut Party, owner: PartyId, v: Option<&Bits>, n: usize) -> Result<BinShare> {
    let mask = pair_bits(p, owner.prev(), owner, n);
    let mut s = BinShare::zeros(p.id, n);
    if p.id == owner {
        let m = mask.unwrap();
        let t = v.expect("owner must supply the value").xor(&m);
        p.exchange(Some((owner.next(), Payload::bits(t.clone()))), None)?;
        s.x = m;
        s.y = t;
    } else if p.id == owner.next() {
        s.x = expect_bits(p.exchange(None, Some(owner))?.unwrap(), n)?;
    } else {
        p.exchange(None, None)?;
        s.y = mask.unwrap();
    }
    Ok(s)
}

/// Turns this party's piece of a three-party additive sharing into a
/// replicated sharing: re-randomize with a zero share, send to the previous
/// party. One round, one element per party and value.
pub fn reshare(p: &mut Party, z: Vec<u64>) -> Result<RepShare> {
    let f = p.field;
    let n = z.len();
    let zero = p.prg().zero_share(&f, n);
    let z: Vec<u64> = z.iter().zip(&zero).map(|(a, b)| f.add(*a, *b)).collect();
    let got = p.exchange(Some((p.id.prev(), Payload::elems(&f, z.clone()))), Some(p.id.next()))?.unwrap();
    Ok(RepShare { party: p.id, x: z, y: expect_len(got, n)? })
}

pub fn reshare_bits(p: &mut Party, z: Bits) -> Result<BinShare> {
    let n = z.len();
    let zero = p.prg().zero_bits(n);
    let z = z.xor(&zero);
    let got = p.exchange(Some((p.id.prev(), Payload::bits(z.clone()))), Some(p.id.next()))?.unwrap();
    Ok(BinShare { party: p.id, x: z, y: expect_bits(got, n)? })
}

/// This party's additive piece of `a * b`.
#[inline]
pub fn cross_term(field: &Field, ax: u64, ay: u64, bx: u64, by: u64) -> u64 {
    let s = ax as u128 * bx as u128 + ax as u128 * by as u128 + ay as u128 * bx as u128;
    field.reduce(s)
}

/// Elementwise product.
pub fn mult(p: &mut Party, a: &RepShare, b: &RepShare) -> Result<RepShare> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch);
    }
    if p.mode == Mode::Ideal {
        p.skip_rounds(1);
        let out = p.ideal_call(vec![hub_rep(a), hub_rep(b)], &|f, s| vec![(Kind::Arith, s[0].iter().zip(&s[1]).map(|(x, y)| f.mul(*x, *y)).collect())])?;
        return Ok(from_hub_rep(p.id, out.into_iter().next().unwrap()));
    }
    let f = p.field;
    let z = (0..a.len()).map(|i| cross_term(&f, a.x[i], a.y[i], b.x[i], b.y[i])).collect();
    reshare(p, z)
}

/// Inner products of consecutive chunks of length `chunk`, at the cost of one
/// multiplication per output.
pub fn inner_products(p: &mut Party, a: &RepShare, b: &RepShare, chunk: usize) -> Result<RepShare> {
    if a.len() != b.len() || chunk == 0 || !a.len().is_multiple_of(chunk) {
        return Err(Error::LengthMismatch);
    }
    let f = p.field;
    if p.mode == Mode::Ideal {
        p.skip_rounds(1);
        let out = p.ideal_call(vec![hub_rep(a), hub_rep(b)], &|f, s| {
            let v = s[0].chunks(chunk).zip(s[1].chunks(chunk)).map(|(x, y)| x.iter().zip(y).fold(0, |acc, (x, y)| f.add(acc, f.mul(*x, *y)))).collect();
            vec![(Kind::Arith, v)]
        })?;
        return Ok(from_hub_rep(p.id, out.into_iter().next().unwrap()));
    }
    let z = (0..a.len() / chunk).map(|c| (c * chunk..(c + 1) * chunk).fold(0, |acc, i| f.add(acc, cross_term(&f, a.x[i], a.y[i], b.x[i], b.y[i])))).collect();
    reshare(p, z)
}

pub fn inner_product(p: &mut Party, a: &RepShare, b: &RepShare) -> Result<RepShare> {
    inner_products(p, a, b, a.len().max(1))
}

/// Elementwise AND.
pub fn and_bits(p: &mut Party, a: &BinShare, b: &BinShare) -> Result<BinShare> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch);
    }
    if p.mode == Mode::Ideal {
        p.skip_rounds(1);
        let out = p.ideal_call(vec![hub_bin(a), hub_bin(b)], &|_, s| vec![(Kind::Bool, s[0].iter().zip(&s[1]).map(|(x, y)| x & y).collect())])?;
        return Ok(from_hub_bin(p.id, out.into_iter().next().unwrap()));
    }
    let z = a.x.and(&b.x).xor(&a.x.and(&b.y)).xor(&a.y.and(&b.x));
    reshare_bits(p, z)
}

/// Several AND batches in one round.
pub fn and_many(p: &mut Party, pairs: &[(&BinShare, &BinShare)]) -> Result<Vec<BinShare>> {
    let lefts: Vec<&BinShare> = pairs.iter().map(|(a, _)| *a).collect();
    let rights: Vec<&BinShare> = pairs.iter().map(|(_, b)| *b).collect();
    let z = and_bits(p, &BinShare::concat(&lefts), &BinShare::concat(&rights))?;
    let mut out = Vec::with_capacity(pairs.len());
    let mut at = 0;
    for (a, _) in pairs {
        out.push(z.slice(at, a.len()));
        at += a.len();
    }
    Ok(out)
}

/// Several multiplication batches in one round.
pub fn mult_many(p: &mut Party, pairs: &[(&RepShare, &RepShare)]) -> Result<Vec<RepShare>> {
    let lefts: Vec<&RepShare> = pairs.iter().map(|(a, _)| *a).collect();
    let rights: Vec<&RepShare> = pairs.iter().map(|(_, b)| *b).collect();
    let z = mult(p, &RepShare::concat(&lefts), &RepShare::concat(&rights))?;
    let mut out = Vec::with_capacity(pairs.len());
    let mut at = 0;
    for (a, _) in pairs {
        out.push(z.slice(at, a.len()));
        at += a.len();
    }
    Ok(out)
}

/// Local: party 1 keeps `a_1`, party 2 takes `a_2 + a_3`, party 3 drops out.
pub fn convert_to_add(field: &Field, a: &RepShare) -> AddShare {
    let v = match a.party.get() {
        1 => a.x.clone(),
        2 => a.x.iter().zip(&a.y).map(|(x, y)| field.add(*x, *y)).collect(),
        _ => Vec::new(),
    };
    AddShare { party: a.party, v }
}

/// One round, two elements per value: the first and third sub-shares come
/// from the streams party 3 shares with parties 1 and 2.
pub fn convert_to_rep(p: &mut Party, a: &AddShare, n: usize) -> Result<RepShare> {
    let f = p.field;
    let r13 = pair_elems(p, PartyId::P3, PartyId::P1, n);
    let r23 = pair_elems(p, PartyId::P2, PartyId::P3, n);
    match p.id.get() {
        1 => {
            let r = r13.unwrap();
            let c1: Vec<u64> = a.v.iter().zip(&r).map(|(v, r)| f.sub(*v, *r)).collect();
            let c2 = expect_len(p.exchange(Some((PartyId::P2, Payload::elems(&f, c1.clone()))), Some(PartyId::P2))?.unwrap(), n)?;
            Ok(RepShare { party: p.id, x: r, y: c1.iter().zip(&c2).map(|(a, b)| f.add(*a, *b)).collect() })
        }
        2 => {
            let r = r23.unwrap();
            let c2: Vec<u64> = a.v.iter().zip(&r).map(|(v, r)| f.sub(*v, *r)).collect();
            let c1 = expect_len(p.exchange(Some((PartyId::P1, Payload::elems(&f, c2.clone()))), Some(PartyId::P1))?.unwrap(), n)?;
            Ok(RepShare { party: p.id, x: c1.iter().zip(&c2).map(|(a, b)| f.add(*a, *b)).collect(), y: r })
        }
        _ => {
            p.exchange(None, None)?;
            Ok(RepShare { party: p.id, x: r23.unwrap(), y: r13.unwrap() })
        }
    }
}

/// Arithmetic sharing of a shared bit.
///
/// With `u = s_1 ^ s_2` known to party 1 and `v = s_3` known to parties 2
/// and 3, the bit is `u + v - 2uv`. Party 1 inputs `u`; the product has one
/// additive piece at party 2 and one at party 3. Two rounds.
pub fn mod_convert(p: &mut Party, b: &BinShare) -> Result<RepShare> {
    let n = b.len();
    if p.mode == Mode::Ideal {
        p.skip_rounds(1);
        let out = p.ideal_call(vec![hub_bin(b)], &|_, s| vec![(Kind::Arith, s[0].clone())])?;
        return Ok(from_hub_rep(p.id, out.into_iter().next().unwrap()));
    }
    let f = p.field;
    let u = (p.id == PartyId::P1).then(|| b.x.xor(&b.y).to_u64s());
    let su = input_private(p, PartyId::P1, u.as_deref(), n)?;
    let v = match p.id.get() {
        2 => Some(b.y.to_u64s()),
        3 => Some(b.x.to_u64s()),
        _ => None,
    };
    let sv = share_known_by_pair(p, PartyId::P2, v.as_deref(), n);
    let z = match (p.id.get(), &v) {
        (2, Some(v)) => su.x.iter().zip(v).map(|(t, v)| f.mul(*t, *v)).collect(),
        (3, Some(v)) => su.y.iter().zip(v).map(|(m, v)| f.mul(*m, *v)).collect(),
        _ => vec![0; n],
    };
    let uv = reshare(p, z)?;
    Ok(su.add(&f, &sv).sub(&f, &uv.scale(&f, 2)))
}

/// `z = a` where the bit is 0 and `z = b` where it is 1, for public `a`, `b`.
pub fn cond_assign(p: &mut Party, a: &[u64], b: &[u64], c: &BinShare) -> Result<RepShare> {
    if a.len() != c.len() || b.len() != c.len() {
        return Err(Error::LengthMismatch);
    }
    let f = p.field;
    let cm = mod_convert(p, c)?;
    let diff: Vec<u64> = a.iter().zip(b).map(|(a, b)| f.sub(*b, *a)).collect();
    let mut z = cm.scale_vec(&f, &diff);
    z.add_const_vec(&f, a);
    Ok(z)
}

/// Carry of the three sub-share bits: `s_1 + s_2 + s_3 = a + 2q`. One round.
pub fn qt_bin(p: &mut Party, a: &BinShare) -> Result<BinShare> {
    let s3 = a.lift_subshare(3);
    let l = a.lift_subshare(1).xor(&s3);
    let r = a.lift_subshare(2).xor(&s3);
    Ok(and_bits(p, &l, &r)?.xor(&s3))
}

/// Quotient of an additive sharing of an even `a` with `2a < p`:
/// `<a>_1 + <a>_2 = a + qp` over the integers.
///
/// Since `a` is even and `p` odd, `q` is the XOR of the two low bits `x`, `y`.
/// Party 3 helps compute `xy` with masks it shares with parties 1 and 2.
/// One round, three elements.
pub fn qt_add(p: &mut Party, a: &AddShare, n: usize) -> Result<AddShare> {
    if p.mode == Mode::Ideal {
        p.skip_rounds(1);
        let f = p.field;
        // The hub works on replicated views; view the additive pair as (a_1, a_2, 0).
        let lsb = match p.id.get() {
            1 => HubShare { kind: Kind::Bool, x: a.v.iter().map(|v| v & 1).collect(), y: vec![0; n] },
            2 => HubShare { kind: Kind::Bool, x: a.v.iter().map(|v| v & 1).collect(), y: vec![0; n] },
            _ => HubShare { kind: Kind::Bool, x: vec![0; n], y: vec![0; n] },
        };
        let out = p.ideal_call(vec![lsb], &|_, s| vec![(Kind::Arith, s[0].clone())])?;
        let q = from_hub_rep(p.id, out.into_iter().next().unwrap());
        // Fold the replicated result into an additive one for parties 1 and 2: needs no traffic
        // because the hub already handed party 2 both `a_2` and `a_3`.
        return Ok(convert_to_add(&f, &q));
    }
    let f = p.field;
    let r13 = pair_elems(p, PartyId::P3, PartyId::P1, n);
    let m = pair_elems(p, PartyId::P3, PartyId::P1, n);
    let r23 = pair_elems(p, PartyId::P2, PartyId::P3, n);
    match p.id.get() {
        1 => {
            let (r, m) = (r13.unwrap(), m.unwrap());
            let x: Vec<u64> = a.v.iter().map(|v| v & 1).collect();
            let xm: Vec<u64> = x.iter().zip(&r).map(|(x, r)| f.sub(*x, *r)).collect();
            let ym = expect_len(p.exchange(Some((PartyId::P2, Payload::elems(&f, xm))), Some(PartyId::P2))?.unwrap(), n)?;
            let v = (0..n)
                .map(|i| {
                    let z1 = f.mul(r[i], ym[i]);
                    f.add(f.sub(x[i], f.add(z1, z1)), f.add(m[i], m[i]))
                })
                .collect();
            Ok(AddShare { party: p.id, v })
        }
        2 => {
            let r = r23.unwrap();
            let y: Vec<u64> = a.v.iter().map(|v| v & 1).collect();
            let ym: Vec<u64> = y.iter().zip(&r).map(|(y, r)| f.sub(*y, *r)).collect();
            let got = p.round(vec![(PartyId::P1, Payload::elems(&f, ym))], &[PartyId::P1, PartyId::P3])?;
            let xm = expect_len(got[&PartyId::P1].clone(), n)?;
            let z3 = expect_len(got[&PartyId::P3].clone(), n)?;
            let v = (0..n)
                .map(|i| {
                    let z2 = f.mul(xm[i], y[i]);
                    let t = f.add(z2, z3[i]);
                    f.sub(y[i], f.add(t, t))
                })
                .collect();
            Ok(AddShare { party: p.id, v })
        }
        _ => {
            let (r1, r2, m) = (r13.unwrap(), r23.unwrap(), m.unwrap());
            let w = (0..n).map(|i| f.add(f.mul(r1[i], r2[i]), m[i])).collect();
            p.exchange(Some((PartyId::P2, Payload::elems(&f, w))), None)?;
            Ok(AddShare { party: p.id, v: Vec::new() })
        }
    }
}

/// Quotient of a replicated sharing of a multiple of 4 with `4a < p`:
/// `a_1 + a_2 + a_3 = a + qp`, `q` in `{0, 1, 2}`.
///
/// `p = 3 mod 4`, so the two low bits of the sub-share sum are `00`, `11`
/// or `10` for `q = 0, 1, 2`: `q = 2 q_2 - q_1`.
pub fn qt_rep(p: &mut Party, a: &RepShare) -> Result<RepShare> {
    let n = a.len();
    if p.mode == Mode::Ideal {
        p.skip_rounds(2);
        let bits: Vec<HubShare> = (0..2)
            .map(|k| HubShare { kind: Kind::Arith, x: a.x.iter().map(|v| (v >> k) & 1).collect(), y: a.y.iter().map(|v| (v >> k) & 1).collect() })
            .collect();
        // Sums of the sub-share bits give the integer sum mod 4.
        let out = p.ideal_call(bits, &|f, s| {
            let q = (0..s[0].len())
                .map(|i| {
                    let low = s[0][i] + 2 * s[1][i];
                    f.reduce(match low % 4 {
                        0 => 0,
                        3 => 1,
                        _ => 2,
                    } as u128)
                })
                .collect();
            vec![(Kind::Arith, q)]
        })?;
        return Ok(from_hub_rep(p.id, out.into_iter().next().unwrap()));
    }
    let f = p.field;
    let lsb = BinShare { party: p.id, x: Bits::bit_of(&a.x, 0), y: Bits::bit_of(&a.y, 0) };
    let second = BinShare { party: p.id, x: Bits::bit_of(&a.x, 1), y: Bits::bit_of(&a.y, 1) };
    let carry = qt_bin(p, &lsb)?;
    let q2 = second.xor(&carry);
    let both = mod_convert(p, &BinShare::concat(&[&lsb, &q2]))?;
    let q1 = both.slice(0, n);
    let q2 = both.slice(n, n);
    Ok(q2.scale(&f, 2).sub(&f, &q1))
}

/// Low `l` bits of each shared value.
///
/// Party 2 learns `u = a - r` for a mask `r` that parties 1 and 3 share and
/// inputs its bits; the bits of `r` sit in the sub-share of parties 1 and 3.
/// Then `a = u + r - pq` with `q = [u + r >= p]`, the carry out of
/// `u + r + 1` over `|p|` bits, and the result is a bitwise choice between
/// `u + r` and `u + r + 1`. Ripple-carry chains, about `|p| + 3` rounds.
pub fn bit_decompose(p: &mut Party, a: &RepShare, l: u32) -> Result<BitVector> {
    let f = p.field;
    let k = f.bits();
    if l == 0 || l > k {
        return Err(Error::InvalidInput(format!("bit length {l} out of range")));
    }
    let n = a.len();
    if p.mode == Mode::Ideal {
        p.skip_rounds(l + 1);
        let out = p.ideal_call(vec![hub_rep(a)], &|_, s| (0..l).map(|j| (Kind::Bool, s[0].iter().map(|v| (v >> j) & 1).collect())).collect())?;
        return Ok(out.into_iter().map(|h| from_hub_bin(p.id, h)).collect());
    }
    let r = pair_elems(p, PartyId::P3, PartyId::P1, n);
    // Party 1 sends a_1 - r to party 2.
    let u = match p.id.get() {
        1 => {
            let t = a.x.iter().zip(r.as_ref().unwrap()).map(|(a, r)| f.sub(*a, *r)).collect();
            p.exchange(Some((PartyId::P2, Payload::elems(&f, t))), None)?;
            None
        }
        2 => {
            let t = expect_len(p.exchange(None, Some(PartyId::P1))?.unwrap(), n)?;
            Some((0..n).map(|i| f.add(f.add(t[i], a.x[i]), a.y[i])).collect::<Vec<u64>>())
        }
        _ => {
            p.exchange(None, None)?;
            None
        }
    };
    let k = k as usize;
    let u_bits: Vec<Bits> = u.as_ref().map(|u| (0..k).map(|j| Bits::bit_of(u, j as u32)).collect()).unwrap_or_default();
    let u_all = u.as_ref().map(|_| Bits::concat(&u_bits.iter().collect::<Vec<_>>()));
    let su = input_private_bits(p, PartyId::P2, u_all.as_ref(), n * k)?;
    let ub: Vec<BinShare> = (0..k).map(|j| su.slice(j * n, n)).collect();
    let rb: Vec<BinShare> = (0..k)
        .map(|j| {
            let bits = r.as_ref().map(|r| Bits::bit_of(r, j as u32));
            share_bits_known_by_pair(p, PartyId::P3, bits.as_ref(), n)
        })
        .collect();
    let pairs: Vec<(&BinShare, &BinShare)> = ub.iter().zip(&rb).collect();
    let g = and_many(p, &pairs)?;
    let prop: Vec<BinShare> = ub.iter().zip(&rb).map(|(u, r)| u.xor(r)).collect();
    let l = l as usize;
    // Carries into each position: c0 for u + r, c1 for u + r + 1.
    let mut c0 = vec![BinShare::zeros(p.id, n)];
    let mut c1 = vec![BinShare::zeros(p.id, n).not()];
    c0.push(g[0].clone());
    c1.push(g[0].xor(&prop[0]));
    for j in 1..k {
        let need0 = j + 1 < l;
        let mut pairs = vec![(&prop[j], &c1[j])];
        if need0 {
            pairs.push((&prop[j], &c0[j]));
        }
        let t = and_many(p, &pairs)?;
        c1.push(g[j].xor(&t[0]));
        if need0 {
            c0.push(g[j].xor(&t[1]));
        }
    }
    let q = c1[k].clone();
    let diffs: Vec<BinShare> = (0..l).map(|j| c0[j].xor(&c1[j])).collect();
    let pairs: Vec<(&BinShare, &BinShare)> = diffs.iter().map(|d| (&q, d)).collect();
    let sel = and_many(p, &pairs)?;
    Ok((0..l).map(|j| prop[j].xor(&c0[j]).xor(&sel[j])).collect())
}

/// Shared value from its shared bits.
///
/// Works on `a'`, the bits minus the running sub-share carries, whose
/// sub-share bits can be read as field elements directly. The borrow and the
/// final carry are corrected at the end. `l + 2` rounds.
pub fn bit_compose(p: &mut Party, bits: &[BinShare]) -> Result<RepShare> {
    let f = p.field;
    let l = bits.len();
    if l == 0 || l > f.bits() as usize {
        return Err(Error::InvalidInput(format!("bit length {l} out of range")));
    }
    let n = bits[0].len();
    if p.mode == Mode::Ideal {
        p.skip_rounds(l as u32 + 1);
        let views = bits.iter().map(hub_bin).collect();
        let out = p.ideal_call(views, &|f, s| {
            let v = (0..n).map(|i| (0..l).fold(0, |acc, j| f.add(acc, f.mul(s[j][i], f.pow2(j as u32))))).collect();
            vec![(Kind::Arith, v)]
        })?;
        return Ok(from_hub_rep(p.id, out.into_iter().next().unwrap()));
    }
    let mut acc = RepShare::zeros(p.id, n);
    let mut borrow = BinShare::zeros(p.id, n);
    let mut carry = BinShare::zeros(p.id, n);
    for (j, a) in bits.iter().enumerate() {
        let ap = a.xor(&carry).xor(&borrow);
        acc = acc.add(&f, &ap.lift_to_field().scale(&f, f.pow2(j as u32)));
        let s3 = ap.lift_subshare(3);
        let l1 = ap.lift_subshare(1).xor(&s3);
        let l2 = ap.lift_subshare(2).xor(&s3);
        let bl = a.not().xor(&borrow);
        let br = carry.xor(&borrow);
        let t = and_many(p, &[(&l1, &l2), (&bl, &br)])?;
        carry = t[0].xor(&s3);
        borrow = t[1].xor(&borrow);
    }
    let fix = mod_convert(p, &BinShare::concat(&[&borrow, &carry]))?;
    let fix = fix.slice(0, n).add(&f, &fix.slice(n, n));
    Ok(acc.sub(&f, &fix.scale(&f, f.pow2(l as u32))))
}

/// Opens a sharing to every party. Each party sends its second sub-share to
/// the previous party; in active mode the first sub-share also goes to the
/// next party and the two copies are compared.
pub fn open(p: &mut Party, a: &RepShare) -> Result<Vec<u64>> {
    let f = p.field;
    let n = a.len();
    let active = p.security == Security::Active;
    let mut out = vec![(p.id.prev(), Payload::elems(&f, a.y.clone()))];
    let mut from = vec![p.id.next()];
    if active {
        out.push((p.id.next(), Payload::elems(&f, a.x.clone())));
        from.push(p.id.prev());
    }
    let got = p.round(out, &from)?;
    let missing = expect_len(got[&p.id.next()].clone(), n)?;
    if active && expect_len(got[&p.id.prev()].clone(), n)? != missing {
        return Err(Error::InconsistentShares);
    }
    Ok((0..n).map(|i| f.add(f.add(a.x[i], a.y[i]), missing[i])).collect())
}

/// Opens a binary sharing to every party.
pub fn open_bits(p: &mut Party, a: &BinShare) -> Result<Bits> {
    let n = a.len();
    let got = p.exchange(Some((p.id.prev(), Payload::bits(a.y.clone()))), Some(p.id.next()))?.unwrap();
    Ok(a.x.xor(&a.y).xor(&expect_bits(got, n)?))
}
