//! The TOML run configuration. Every key is optional; command-line flags
//! and their environment variables take precedence.
//!
//! ```toml
//! prime = "mersenne61"
//! seed = 7
//! security = "passive"
//! ideal = false
//! report = "out/report.txt"
//!
//! [party]
//! id = 1
//! listen = "127.0.0.1:7101"
//! peers = ["127.0.0.1:7101", "127.0.0.1:7102", "127.0.0.1:7103"]
//! timeout_secs = 30
//!
//! [fixed]
//! frac = 20
//! grad_frac = 24
//!
//! [train]
//! dataset = "data/mnist-subset"
//! shares = "out/shares"
//! batch = 128
//! epochs = 1
//! lr_shift = 8
//! softmax_clamp = 10.0
//! ```

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::sharing::Security;
use crate::transport::PartyId;

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub prime: Option<String>,
    pub seed: Option<u64>,
    pub security: Option<String>,
    pub ideal: Option<bool>,
    pub report: Option<PathBuf>,
    pub party: PartyConfig,
    pub fixed: FixedConfig,
    pub train: TrainConfig,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct PartyConfig {
    pub id: Option<u8>,
    pub listen: Option<String>,
    /// Addresses of parties 1, 2 and 3 in order.
    pub peers: Option<Vec<String>>,
    pub timeout_secs: Option<u64>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct FixedConfig {
    pub frac: Option<u32>,
    pub grad_frac: Option<u32>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub dataset: Option<PathBuf>,
    pub shares: Option<PathBuf>,
    pub train_limit: Option<usize>,
    pub test_limit: Option<usize>,
    pub batch: Option<usize>,
    pub epochs: Option<usize>,
    pub lr_shift: Option<u32>,
    pub softmax_clamp: Option<f64>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig> {
        toml::from_str(text).map_err(|e| Error::Config(format!("config: {}", e.message())))
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::parse(&text)
    }
}

/// `31`, `8191`, `mersenne61`, `m61` or any `2^k - 1` written out.
pub fn parse_prime(s: &str) -> Result<Field> {
    Field::parse(s).ok_or_else(|| Error::Config(format!("unsupported prime {s:?}; use 31, 8191 or mersenne61")))
}

pub fn parse_security(s: &str) -> Result<Security> {
    match s {
        "passive" => Ok(Security::Passive),
        "active" => Ok(Security::Active),
        _ => Err(Error::Config(format!("security must be passive or active, got {s:?}"))),
    }
}

pub fn parse_party(id: u8) -> Result<PartyId> {
    PartyId::new(id).ok_or_else(|| Error::Config(format!("party id must be 1, 2 or 3, got {id}")))
}

pub fn parse_addr(s: &str) -> Result<SocketAddr> {
    s.parse().map_err(|_| Error::Config(format!("bad socket address {s:?}")))
}

/// Three peer addresses, in party order.
pub fn parse_peers(list: &[String]) -> Result<Vec<(PartyId, SocketAddr)>> {
    if list.len() != 3 {
        return Err(Error::Config(format!("need 3 peer addresses, got {}", list.len())));
    }
    list.iter().zip(PartyId::ALL).map(|(s, id)| Ok((id, parse_addr(s)?))).collect()
}

/// `all`, a comma list, or `start:end[:step]` (end exclusive).
pub fn parse_grid(s: &str, p: u64) -> Result<Vec<u64>> {
    let bad = || Error::Config(format!("bad grid {s:?}"));
    if s == "all" {
        return Ok(crate::bench::full_grid(p));
    }
    if s.contains(':') {
        let parts: Vec<u64> = s.split(':').map(|t| t.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?;
        let (a, b, step) = match parts[..] {
            [a, b] => (a, b, 2),
            [a, b, c] if c > 0 => (a, b, c),
            _ => return Err(bad()),
        };
        return Ok((a..b).step_by(step as usize).collect());
    }
    s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}
