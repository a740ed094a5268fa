//! Three-party computation over replicated secret sharing modulo a Mersenne
//! prime: share conversions, quotient transfer, division by public and
//! private values, fixed-point elementary functions and secure training of
//! small feedforward networks.

pub mod bench;
pub mod cli;
pub mod config;
pub mod division;
pub mod elementary;
pub mod error;
pub mod field;
pub mod mnist;
pub mod nn;
pub mod oracle;
pub mod party;
pub mod protocols;
pub mod report;
pub mod sharefile;
pub mod sharing;
pub mod training;
pub mod transport;

pub use error::{Error, Result};
pub use field::{Field, FixedPointMeta};
pub use party::{run_local, LocalConfig, LocalRun, Mode, Party};
pub use sharing::{AddShare, BinShare, Bits, RepShare, Security};
pub use transport::PartyId;
