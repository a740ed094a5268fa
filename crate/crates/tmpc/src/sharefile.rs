//! Share files: one party's view of a shared tensor.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "TMPC" | version u16 | party u8 | kind u8 | prime u64 | offset i32 | cols u32 | count u64
//! then count elements, each as 8-byte components (two for replicated, one for additive)
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::sharing::{AddShare, RepShare};
use crate::transport::PartyId;

pub const MAGIC: &[u8; 4] = b"TMPC";
pub const VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 1 + 1 + 8 + 4 + 4 + 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Replicated = 1,
    Additive = 2,
}

impl Kind {
    fn components(self) -> usize {
        match self {
            Kind::Replicated => 2,
            Kind::Additive => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Payload {
    Rep(RepShare),
    Add(AddShare),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShareFile {
    pub prime: u64,
    /// Fixed-point offset of the values; 0 for plain integers.
    pub offset: i32,
    /// Row width for matrices, 1 for vectors.
    pub cols: u32,
    pub payload: Payload,
}

impl ShareFile {
    pub fn rep(field: &Field, share: RepShare, offset: i32, cols: u32) -> ShareFile {
        ShareFile { prime: field.p(), offset, cols, payload: Payload::Rep(share) }
    }

    pub fn party(&self) -> PartyId {
        match &self.payload {
            Payload::Rep(s) => s.party,
            Payload::Add(s) => s.party,
        }
    }

    pub fn kind(&self) -> Kind {
        match self.payload {
            Payload::Rep(_) => Kind::Replicated,
            Payload::Add(_) => Kind::Additive,
        }
    }

    pub fn count(&self) -> usize {
        match &self.payload {
            Payload::Rep(s) => s.len(),
            Payload::Add(s) => s.v.len(),
        }
    }

    pub fn rows(&self) -> usize {
        self.count() / self.cols.max(1) as usize
    }

    pub fn into_rep(self) -> Result<RepShare> {
        match self.payload {
            Payload::Rep(s) => Ok(s),
            Payload::Add(_) => Err(Error::Format("expected a replicated share file".into())),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let n = self.count();
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * n * self.kind().components());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(self.party().get());
        out.push(self.kind() as u8);
        out.extend_from_slice(&self.prime.to_le_bytes());
        out.extend_from_slice(&self.offset.to_le_bytes());
        out.extend_from_slice(&self.cols.to_le_bytes());
        out.extend_from_slice(&(n as u64).to_le_bytes());
        match &self.payload {
            Payload::Rep(s) => {
                for (x, y) in s.x.iter().zip(&s.y) {
                    out.extend_from_slice(&x.to_le_bytes());
                    out.extend_from_slice(&y.to_le_bytes());
                }
            }
            Payload::Add(s) => s.v.iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes())),
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<ShareFile> {
        let bad = |m: &str| Error::Format(format!("share file: {m}"));
        if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
            return Err(bad("missing TMPC header"));
        }
        let u16_at = |i: usize| u16::from_le_bytes(bytes[i..i + 2].try_into().unwrap());
        let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        let u64_at = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().unwrap());
        if u16_at(4) != VERSION {
            return Err(bad(&format!("unsupported version {}", u16_at(4))));
        }
        let party = PartyId::new(bytes[6]).ok_or_else(|| bad("party id out of range"))?;
        let kind = match bytes[7] {
            1 => Kind::Replicated,
            2 => Kind::Additive,
            t => return Err(bad(&format!("unknown sharing tag {t}"))),
        };
        let prime = u64_at(8);
        let offset = u32_at(16) as i32;
        let cols = u32_at(20);
        let n = u64_at(24) as usize;
        let body = &bytes[HEADER_LEN..];
        if body.len() != n.checked_mul(8 * kind.components()).ok_or_else(|| bad("count overflows"))? {
            return Err(bad(&format!("body has {} bytes for {n} elements", body.len())));
        }
        let words: Vec<u64> = body.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().unwrap())).collect();
        if words.iter().any(|&w| w >= prime) {
            return Err(bad("component not reduced modulo the prime"));
        }
        let payload = match kind {
            Kind::Replicated => {
                Payload::Rep(RepShare { party, x: words.iter().step_by(2).copied().collect(), y: words.iter().skip(1).step_by(2).copied().collect() })
            }
            Kind::Additive => Payload::Add(AddShare { party, v: words }),
        };
        Ok(ShareFile { prime, offset, cols, payload })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path).map_err(|e| Error::Config(format!("cannot create {}: {e}", path.display())))?;
        f.write_all(&self.encode()).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
    }

    pub fn read(path: &Path) -> Result<ShareFile> {
        let mut buf = Vec::new();
        fs::File::open(path).and_then(|mut f| f.read_to_end(&mut buf)).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        ShareFile::decode(&buf)
    }

    /// Checks that the file belongs to `party` and was made for `field`.
    pub fn expect(self, field: &Field, party: PartyId) -> Result<ShareFile> {
        if self.prime != field.p() {
            return Err(Error::Config(format!("share file is for p={}, run uses p={}", self.prime, field.p())));
        }
        if self.party() != party {
            return Err(Error::Config(format!("share file belongs to party {}, not {}", self.party(), party)));
        }
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sharing::{reconstruct_rep, share_rep, Security};
    use rand::SeedableRng;

    #[test]
    fn round_trip_reconstructs() {
        let f = Field::M61;
        let vals: Vec<u64> = (0..10).map(|i| i * 12345).collect();
        let shares = share_rep(&f, &vals, &mut rand_chacha::ChaCha20Rng::seed_from_u64(3));
        let back: Vec<RepShare> = shares
            .iter()
            .map(|s| {
                let bytes = ShareFile::rep(&f, s.clone(), 20, 5).encode();
                let file = ShareFile::decode(&bytes).unwrap().expect(&f, s.party).unwrap();
                assert_eq!((file.offset, file.cols, file.rows()), (20, 5, 2));
                file.into_rep().unwrap()
            })
            .collect();
        assert_eq!(reconstruct_rep(&f, &[&back[0], &back[1], &back[2]], Security::Active).unwrap(), vals);
    }

    #[test]
    fn additive_round_trip() {
        let s = AddShare { party: PartyId::P2, v: vec![1, 2, 3] };
        let file = ShareFile { prime: 31, offset: 0, cols: 1, payload: Payload::Add(s) };
        assert_eq!(ShareFile::decode(&file.encode()).unwrap(), file);
    }

    #[test]
    fn rejects_damage() {
        let f = Field::M31;
        let good = ShareFile::rep(&f, RepShare { party: PartyId::P1, x: vec![1, 2], y: vec![3, 4] }, 0, 1).encode();
        assert!(ShareFile::decode(&good[..good.len() - 1]).is_err());
        let mut b = good.clone();
        b[0] = b'X';
        assert!(ShareFile::decode(&b).is_err());
        let mut b = good.clone();
        b[7] = 9;
        assert!(ShareFile::decode(&b).is_err());
        let mut b = good.clone();
        b[HEADER_LEN] = 31;
        assert!(ShareFile::decode(&b).is_err());
        let file = ShareFile::decode(&good).unwrap();
        assert!(file.clone().expect(&Field::M61, PartyId::P1).is_err());
        assert!(file.expect(&f, PartyId::P2).is_err());
    }
}
