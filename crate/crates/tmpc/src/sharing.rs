//! Per-party share views, dealer-side sharing and reconstruction, local
//! linear operations and the pairwise correlated randomness.
//!
//! Party `i` holds sub-shares `(a_i, a_{i+1})` of a replicated sharing,
//! stored as `x` and `y`. Everything is vectorized: one view holds a whole
//! batch of secrets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::transport::PartyId;

/// Passive reconstruction ignores the redundant copy, active reconstruction
/// checks it and aborts on mismatch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Security {
    Passive,
    Active,
}

/// One party's view of a batch of replicated `Z_p` shares.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RepShare {
    pub party: PartyId,
    pub x: Vec<u64>,
    pub y: Vec<u64>,
}

/// One party's view of a batch of replicated `Z_2` shares, bit-packed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinShare {
    pub party: PartyId,
    pub x: Bits,
    pub y: Bits,
}

/// One party's view of a batch of additive shares held by parties 1 and 2.
/// Party 3's view is empty.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AddShare {
    pub party: PartyId,
    pub v: Vec<u64>,
}

/// A packed bit vector.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Bits {
    words: Vec<u64>,
    len: usize,
}

impl Bits {
    pub fn zeros(len: usize) -> Self {
        Bits { words: vec![0; len.div_ceil(64)], len }
    }

    pub fn ones(len: usize) -> Self {
        let mut b = Bits { words: vec![u64::MAX; len.div_ceil(64)], len };
        b.trim();
        b
    }

    pub fn from_words(words: Vec<u64>, len: usize) -> Self {
        assert!(words.len() == len.div_ceil(64), "word count does not match bit length");
        let mut b = Bits { words, len };
        b.trim();
        b
    }

    pub fn from_fn(len: usize, mut f: impl FnMut(usize) -> bool) -> Self {
        let mut b = Bits::zeros(len);
        for i in 0..len {
            if f(i) {
                b.words[i / 64] |= 1 << (i % 64);
            }
        }
        b
    }

    /// Bit `k` of each value.
    pub fn bit_of(values: &[u64], k: u32) -> Self {
        Bits::from_fn(values.len(), |i| (values[i] >> k) & 1 == 1)
    }

    /// Random bits from a stream.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Self {
        let words = (0..len.div_ceil(64)).map(|_| rng.gen()).collect();
        Bits::from_words(words, len)
    }

    fn trim(&mut self) {
        if !self.len.is_multiple_of(64) {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << (self.len % 64)) - 1;
            }
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn into_words(self) -> Vec<u64> {
        self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, v: bool) {
        if v {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn xor(&self, o: &Bits) -> Bits {
        assert_eq!(self.len, o.len);
        Bits { words: self.words.iter().zip(&o.words).map(|(a, b)| a ^ b).collect(), len: self.len }
    }

    pub fn and(&self, o: &Bits) -> Bits {
        assert_eq!(self.len, o.len);
        Bits { words: self.words.iter().zip(&o.words).map(|(a, b)| a & b).collect(), len: self.len }
    }

    pub fn not(&self) -> Bits {
        let mut b = Bits { words: self.words.iter().map(|w| !w).collect(), len: self.len };
        b.trim();
        b
    }

    pub fn xor_assign(&mut self, o: &Bits) {
        assert_eq!(self.len, o.len);
        for (a, b) in self.words.iter_mut().zip(&o.words) {
            *a ^= b;
        }
    }

    /// Bits as `0/1` values.
    pub fn to_u64s(&self) -> Vec<u64> {
        (0..self.len).map(|i| self.get(i) as u64).collect()
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Concatenation.
    pub fn concat(parts: &[&Bits]) -> Bits {
        let len = parts.iter().map(|b| b.len).sum();
        let mut out = Bits::zeros(len);
        let mut at = 0;
        for b in parts {
            for i in 0..b.len {
                if b.get(i) {
                    out.set(at + i, true);
                }
            }
            at += b.len;
        }
        out
    }

    pub fn slice(&self, start: usize, len: usize) -> Bits {
        Bits::from_fn(len, |i| self.get(start + i))
    }
}

impl RepShare {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn zeros(party: PartyId, n: usize) -> Self {
        RepShare { party, x: vec![0; n], y: vec![0; n] }
    }

    /// Sharing of a public vector with no communication: party 1 holds the
    /// constant in `a_1`.
    pub fn public(field: &Field, party: PartyId, values: &[u64]) -> Self {
        let mut s = RepShare::zeros(party, values.len());
        s.add_const_vec(field, values);
        s
    }

    pub fn add(&self, field: &Field, o: &RepShare) -> RepShare {
        assert_eq!(self.len(), o.len(), "share length mismatch");
        RepShare {
            party: self.party,
            x: self.x.iter().zip(&o.x).map(|(a, b)| field.add(*a, *b)).collect(),
            y: self.y.iter().zip(&o.y).map(|(a, b)| field.add(*a, *b)).collect(),
        }
    }

    pub fn sub(&self, field: &Field, o: &RepShare) -> RepShare {
        assert_eq!(self.len(), o.len(), "share length mismatch");
        RepShare {
            party: self.party,
            x: self.x.iter().zip(&o.x).map(|(a, b)| field.sub(*a, *b)).collect(),
            y: self.y.iter().zip(&o.y).map(|(a, b)| field.sub(*a, *b)).collect(),
        }
    }

    pub fn neg(&self, field: &Field) -> RepShare {
        RepShare { party: self.party, x: self.x.iter().map(|a| field.neg(*a)).collect(), y: self.y.iter().map(|a| field.neg(*a)).collect() }
    }

    pub fn scale(&self, field: &Field, c: u64) -> RepShare {
        RepShare { party: self.party, x: self.x.iter().map(|a| field.mul(*a, c)).collect(), y: self.y.iter().map(|a| field.mul(*a, c)).collect() }
    }

    pub fn scale_vec(&self, field: &Field, c: &[u64]) -> RepShare {
        assert_eq!(self.len(), c.len(), "share length mismatch");
        RepShare {
            party: self.party,
            x: self.x.iter().zip(c).map(|(a, c)| field.mul(*a, *c)).collect(),
            y: self.y.iter().zip(c).map(|(a, c)| field.mul(*a, *c)).collect(),
        }
    }

    /// Adds a public constant. Sub-share `a_1` absorbs it: party 1 holds it
    /// as `x`, party 3 as `y`.
    pub fn add_const(&self, field: &Field, c: u64) -> RepShare {
        let mut s = self.clone();
        s.add_const_vec(field, &vec![c; self.len()]);
        s
    }

    pub fn add_const_vec(&mut self, field: &Field, c: &[u64]) {
        assert_eq!(self.len(), c.len(), "share length mismatch");
        match self.party.get() {
            1 => self.x.iter_mut().zip(c).for_each(|(a, c)| *a = field.add(*a, *c)),
            3 => self.y.iter_mut().zip(c).for_each(|(a, c)| *a = field.add(*a, *c)),
            _ => {}
        }
    }

    /// `c - self` for a public `c`.
    pub fn rsub_const(&self, field: &Field, c: u64) -> RepShare {
        self.neg(field).add_const(field, c)
    }

    pub fn select(&self, idx: &[usize]) -> RepShare {
        RepShare { party: self.party, x: idx.iter().map(|&i| self.x[i]).collect(), y: idx.iter().map(|&i| self.y[i]).collect() }
    }

    pub fn slice(&self, start: usize, len: usize) -> RepShare {
        RepShare { party: self.party, x: self.x[start..start + len].to_vec(), y: self.y[start..start + len].to_vec() }
    }

    pub fn concat(parts: &[&RepShare]) -> RepShare {
        let party = parts.first().map(|s| s.party).unwrap_or(PartyId::P1);
        RepShare { party, x: parts.iter().flat_map(|s| s.x.iter().copied()).collect(), y: parts.iter().flat_map(|s| s.y.iter().copied()).collect() }
    }

    /// Each element repeated `k` times in place.
    pub fn repeat_each(&self, k: usize) -> RepShare {
        RepShare {
            party: self.party,
            x: self.x.iter().flat_map(|&v| std::iter::repeat_n(v, k)).collect(),
            y: self.y.iter().flat_map(|&v| std::iter::repeat_n(v, k)).collect(),
        }
    }

    /// Sub-share `k` (1-based) lifted to a sharing of its own: `(a_k)` in
    /// slot `k`, zeros elsewhere. Free because both holders of slot `k` know it.
    pub fn lift_subshare(&self, k: u8) -> RepShare {
        let n = self.len();
        let i = self.party.get();
        let x = if i == k { self.x.clone() } else { vec![0; n] };
        let y = if self.party.next().get() == k { self.y.clone() } else { vec![0; n] };
        RepShare { party: self.party, x, y }
    }
}

impl BinShare {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn zeros(party: PartyId, n: usize) -> Self {
        BinShare { party, x: Bits::zeros(n), y: Bits::zeros(n) }
    }

    pub fn public(party: PartyId, bits: &Bits) -> Self {
        let mut s = BinShare::zeros(party, bits.len());
        s.xor_const_assign(bits);
        s
    }

    pub fn xor(&self, o: &BinShare) -> BinShare {
        BinShare { party: self.party, x: self.x.xor(&o.x), y: self.y.xor(&o.y) }
    }

    pub fn xor_const_assign(&mut self, c: &Bits) {
        match self.party.get() {
            1 => self.x.xor_assign(c),
            3 => self.y.xor_assign(c),
            _ => {}
        }
    }

    pub fn not(&self) -> BinShare {
        let mut s = self.clone();
        s.xor_const_assign(&Bits::ones(self.len()));
        s
    }

    pub fn and_const(&self, c: &Bits) -> BinShare {
        BinShare { party: self.party, x: self.x.and(c), y: self.y.and(c) }
    }

    pub fn lift_subshare(&self, k: u8) -> BinShare {
        let n = self.len();
        let i = self.party.get();
        let x = if i == k { self.x.clone() } else { Bits::zeros(n) };
        let y = if self.party.next().get() == k { self.y.clone() } else { Bits::zeros(n) };
        BinShare { party: self.party, x, y }
    }

    /// Reads the sub-share bits as `Z_p` sub-shares: a valid sharing of
    /// `s_1 + s_2 + s_3` over the integers.
    pub fn lift_to_field(&self) -> RepShare {
        RepShare { party: self.party, x: self.x.to_u64s(), y: self.y.to_u64s() }
    }

    pub fn slice(&self, start: usize, len: usize) -> BinShare {
        BinShare { party: self.party, x: self.x.slice(start, len), y: self.y.slice(start, len) }
    }

    pub fn concat(parts: &[&BinShare]) -> BinShare {
        let party = parts.first().map(|s| s.party).unwrap_or(PartyId::P1);
        let xs: Vec<&Bits> = parts.iter().map(|s| &s.x).collect();
        let ys: Vec<&Bits> = parts.iter().map(|s| &s.y).collect();
        BinShare { party, x: Bits::concat(&xs), y: Bits::concat(&ys) }
    }
}

impl AddShare {
    pub fn add(&self, field: &Field, o: &AddShare) -> AddShare {
        AddShare { party: self.party, v: self.v.iter().zip(&o.v).map(|(a, b)| field.add(*a, *b)).collect() }
    }

    pub fn scale(&self, field: &Field, c: u64) -> AddShare {
        AddShare { party: self.party, v: self.v.iter().map(|a| field.mul(*a, c)).collect() }
    }

    /// Party 1 absorbs the constant.
    pub fn add_const(&self, field: &Field, c: u64) -> AddShare {
        let v = if self.party == PartyId::P1 { self.v.iter().map(|a| field.add(*a, c)).collect() } else { self.v.clone() };
        AddShare { party: self.party, v }
    }
}

/// Dealer: replicated sharing of each secret with fresh random sub-shares.
pub fn share_rep<R: Rng + ?Sized>(field: &Field, secrets: &[u64], rng: &mut R) -> [RepShare; 3] {
    let subs: Vec<[u64; 3]> = secrets
        .iter()
        .map(|&s| {
            let a1 = field.random(rng);
            let a2 = field.random(rng);
            [a1, a2, field.sub(field.sub(s, a1), a2)]
        })
        .collect();
    rep_from_subshares(&subs)
}

/// Dealer: replicated views for explicitly chosen sub-share triples.
pub fn rep_from_subshares(subs: &[[u64; 3]]) -> [RepShare; 3] {
    PartyId::ALL.map(|p| {
        let i = p.index();
        RepShare { party: p, x: subs.iter().map(|s| s[i]).collect(), y: subs.iter().map(|s| s[(i + 1) % 3]).collect() }
    })
}

/// Dealer: binary replicated sharing.
pub fn share_bin<R: Rng + ?Sized>(secrets: &Bits, rng: &mut R) -> [BinShare; 3] {
    let s1 = Bits::random(rng, secrets.len());
    let s2 = Bits::random(rng, secrets.len());
    let s3 = secrets.xor(&s1).xor(&s2);
    bin_from_subshares([s1, s2, s3])
}

pub fn bin_from_subshares(subs: [Bits; 3]) -> [BinShare; 3] {
    PartyId::ALL.map(|p| {
        let i = p.index();
        BinShare { party: p, x: subs[i].clone(), y: subs[(i + 1) % 3].clone() }
    })
}

/// Dealer: additive sharing between parties 1 and 2.
pub fn share_add<R: Rng + ?Sized>(field: &Field, secrets: &[u64], rng: &mut R) -> [AddShare; 3] {
    let first: Vec<u64> = secrets.iter().map(|_| field.random(rng)).collect();
    add_from_first(field, secrets, &first)
}

/// Dealer: additive sharing with the given first share.
pub fn add_from_first(field: &Field, secrets: &[u64], first: &[u64]) -> [AddShare; 3] {
    let second = secrets.iter().zip(first).map(|(s, a)| field.sub(*s, *a)).collect();
    [AddShare { party: PartyId::P1, v: first.to_vec() }, AddShare { party: PartyId::P2, v: second }, AddShare { party: PartyId::P3, v: Vec::new() }]
}

fn check_views<T>(views: &[&T], party: impl Fn(&T) -> PartyId) -> Result<[Option<usize>; 3]> {
    let mut slot = [None; 3];
    for (k, v) in views.iter().enumerate() {
        let i = party(v).index();
        if slot[i].is_some() {
            return Err(Error::InvalidInput("duplicate party view".into()));
        }
        slot[i] = Some(k);
    }
    if views.len() < 2 {
        return Err(Error::InvalidInput("reconstruction needs two views".into()));
    }
    Ok(slot)
}

/// Recovers all three sub-shares from at least two views; in active mode
/// every replicated copy must agree.
fn recover<T: Copy + PartialEq>(n: usize, views: &[(usize, &[T], &[T])], security: Security) -> Result<Vec<[T; 3]>> {
    let mut out = Vec::with_capacity(n);
    for e in 0..n {
        let mut sub: [Option<T>; 3] = [None; 3];
        for &(i, x, y) in views {
            for (k, v) in [(i, x[e]), ((i + 1) % 3, y[e])] {
                match sub[k] {
                    None => sub[k] = Some(v),
                    Some(prev) if prev != v && security == Security::Active => return Err(Error::InconsistentShares),
                    Some(_) => {}
                }
            }
        }
        match sub {
            [Some(a), Some(b), Some(c)] => out.push([a, b, c]),
            _ => return Err(Error::InvalidInput("views do not cover all sub-shares".into())),
        }
    }
    Ok(out)
}

pub fn reconstruct_rep(field: &Field, views: &[&RepShare], security: Security) -> Result<Vec<u64>> {
    check_views(views, |v| v.party)?;
    let n = views[0].len();
    if views.iter().any(|v| v.len() != n || v.y.len() != n) {
        return Err(Error::LengthMismatch);
    }
    let vs: Vec<(usize, &[u64], &[u64])> = views.iter().map(|v| (v.party.index(), &v.x[..], &v.y[..])).collect();
    Ok(recover(n, &vs, security)?.into_iter().map(|[a, b, c]| field.add(field.add(a, b), c)).collect())
}

pub fn reconstruct_bin(views: &[&BinShare], security: Security) -> Result<Bits> {
    check_views(views, |v| v.party)?;
    let n = views[0].len();
    if views.iter().any(|v| v.len() != n) {
        return Err(Error::LengthMismatch);
    }
    let xs: Vec<Vec<u64>> = views.iter().map(|v| v.x.to_u64s()).collect();
    let ys: Vec<Vec<u64>> = views.iter().map(|v| v.y.to_u64s()).collect();
    let vs: Vec<(usize, &[u64], &[u64])> = views.iter().enumerate().map(|(k, v)| (v.party.index(), &xs[k][..], &ys[k][..])).collect();
    let subs = recover(n, &vs, security)?;
    Ok(Bits::from_fn(n, |e| (subs[e][0] ^ subs[e][1] ^ subs[e][2]) == 1))
}

pub fn reconstruct_add(field: &Field, views: &[&AddShare]) -> Result<Vec<u64>> {
    let v1 = views.iter().find(|v| v.party == PartyId::P1);
    let v2 = views.iter().find(|v| v.party == PartyId::P2);
    match (v1, v2) {
        (Some(a), Some(b)) if a.v.len() == b.v.len() => Ok(a.v.iter().zip(&b.v).map(|(x, y)| field.add(*x, *y)).collect()),
        (Some(_), Some(_)) => Err(Error::LengthMismatch),
        _ => Err(Error::InvalidInput("additive reconstruction needs parties 1 and 2".into())),
    }
}

/// Pairwise seeds of one party: `next` is shared with party `i+1`, `prev`
/// with party `i-1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeedSet {
    pub next: [u8; 32],
    pub prev: [u8; 32],
}

impl SeedSet {
    /// Derives consistent seed sets for all three parties from a master seed.
    pub fn derive_all(master: u64) -> [SeedSet; 3] {
        let mut rng = ChaCha20Rng::seed_from_u64(master);
        // k[i] is shared by party i+1 and party i+2 (1-based ids).
        let k: [[u8; 32]; 3] = [rng.gen(), rng.gen(), rng.gen()];
        [0, 1, 2].map(|i| SeedSet { next: k[i], prev: k[(i + 2) % 3] })
    }
}

/// The two keyed streams of one party for one session.
pub struct Correlated {
    next: ChaCha20Rng,
    prev: ChaCha20Rng,
}

impl Correlated {
    pub fn new(seeds: &SeedSet, session: u64) -> Self {
        let mut next = ChaCha20Rng::from_seed(seeds.next);
        let mut prev = ChaCha20Rng::from_seed(seeds.prev);
        next.set_stream(session);
        prev.set_stream(session);
        Correlated { next, prev }
    }

    /// Stream shared with party `i+1`.
    pub fn next_rng(&mut self) -> &mut ChaCha20Rng {
        &mut self.next
    }

    /// Stream shared with party `i-1`.
    pub fn prev_rng(&mut self) -> &mut ChaCha20Rng {
        &mut self.prev
    }

    pub fn next_elems(&mut self, field: &Field, n: usize) -> Vec<u64> {
        (0..n).map(|_| field.random(&mut self.next)).collect()
    }

    pub fn prev_elems(&mut self, field: &Field, n: usize) -> Vec<u64> {
        (0..n).map(|_| field.random(&mut self.prev)).collect()
    }

    /// This party's part of a sharing of zero: the three parts sum to 0.
    pub fn zero_share(&mut self, field: &Field, n: usize) -> Vec<u64> {
        (0..n)
            .map(|_| {
                let a = field.random(&mut self.next);
                let b = field.random(&mut self.prev);
                field.sub(a, b)
            })
            .collect()
    }

    /// Binary analogue of [`Correlated::zero_share`].
    pub fn zero_bits(&mut self, n: usize) -> Bits {
        let a = Bits::random(&mut self.next, n);
        let b = Bits::random(&mut self.prev, n);
        a.xor(&b)
    }
}
