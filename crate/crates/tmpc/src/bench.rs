//! Accuracy drivers behind `bench div`, `bench elem` and `verify dist`.

use num_bigint::BigInt;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::division::{div_pub_active_scaled, div_pub_add, div_pub_rep, ActiveOffset};
use crate::elementary::{div_priv, exponent, inv, inv_sqrt, sqrt, ElemParams, ExpParams};
use crate::error::{Error, Result};
use crate::oracle::{self, relative_error, Accuracy, RefFn};
use crate::party::{run_local, LocalConfig};
use crate::sharing::{add_from_first, reconstruct_add, reconstruct_rep, share_rep, RepShare, Security};
use crate::transport::Metrics;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DivRow {
    pub a: u64,
    pub out: i64,
}

#[derive(Clone, Debug)]
pub struct DivBench {
    pub d: u64,
    pub security: Security,
    pub rows: Vec<DivRow>,
    /// Mean and largest `|out - a/d|`.
    pub avg_l1: f64,
    pub worst_l1: f64,
    pub metrics: Metrics,
}

impl DivRow {
    pub fn error(&self, d: u64) -> f64 {
        (self.out as f64 - self.a as f64 / d as f64).abs()
    }
}

fn dealer(cfg: &LocalConfig) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(cfg.seed ^ 0xdea1_e500)
}

/// Shares `inputs` once and divides them by `d`: the two-round replicated
/// division when passive, the rounding division (inputs and divisor scaled
/// by 4) when active.
pub fn bench_div(cfg: &LocalConfig, d: u64, inputs: &[u64]) -> Result<DivBench> {
    let (field, security) = (cfg.field, cfg.security);
    let sh = share_rep(&field, inputs, &mut dealer(cfg));
    let run = run_local(cfg, |p| {
        let a = &sh[p.id.index()];
        match security {
            Security::Passive => div_pub_rep(p, a, d),
            Security::Active => div_pub_active_scaled(p, a, d, ActiveOffset::Centred),
        }
    })?;
    let o = &run.outputs;
    let out = reconstruct_rep(&field, &[&o[0], &o[1], &o[2]], Security::Active)?;
    let rows: Vec<DivRow> = inputs.iter().zip(out).map(|(&a, c)| DivRow { a, out: field.to_i64(c) }).collect();
    let errs: Vec<f64> = rows.iter().map(|r| r.error(d)).collect();
    Ok(DivBench {
        d,
        security,
        avg_l1: errs.iter().sum::<f64>() / errs.len().max(1) as f64,
        worst_l1: errs.iter().cloned().fold(0.0, f64::max),
        rows,
        metrics: run.total(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElemFn {
    Inv,
    DivPriv,
    Sqrt,
    InvSqrt,
    Exp,
}

impl ElemFn {
    pub const ALL: [ElemFn; 5] = [ElemFn::Inv, ElemFn::DivPriv, ElemFn::Sqrt, ElemFn::InvSqrt, ElemFn::Exp];

    pub fn name(self) -> &'static str {
        match self {
            ElemFn::Inv => "inv",
            ElemFn::DivPriv => "divpriv",
            ElemFn::Sqrt => "sqrt",
            ElemFn::InvSqrt => "invsqrt",
            ElemFn::Exp => "exp",
        }
    }
}

impl std::str::FromStr for ElemFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<ElemFn> {
        ElemFn::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| Error::Config(format!("unknown function {s:?} (inv, divpriv, sqrt, invsqrt, exp)")))
    }
}

#[derive(Clone, Debug)]
pub struct ElemBench {
    pub fun: ElemFn,
    pub n: u64,
    pub offset: i32,
    /// Output offset chosen for the input range.
    pub delta: i32,
    pub accuracy: Accuracy,
    pub metrics: Metrics,
}

/// Numerators for the private-divisor benchmark: a fixed permutation of `1..=n`.
fn numerators(n: u64) -> Vec<u64> {
    (1..=n).map(|i| (i * 7919) % n + 1).collect()
}

fn bit_len(n: u64) -> i32 {
    64 - n.leading_zeros() as i32
}

/// Evaluates `fun` on `1..=n` at fixed-point offset `offset` with the default
/// working precisions and measures the relative error in bits.
pub fn bench_elem(cfg: &LocalConfig, fun: ElemFn, n: u64, offset: i32) -> Result<ElemBench> {
    let field = cfg.field;
    if n == 0 || !(0..=30).contains(&offset) {
        return Err(Error::Config(format!("need n >= 1 and offset in 0..=30, got n={n} offset={offset}")));
    }
    let inputs: Vec<u64> = (1..=n).collect();
    let nums = numerators(n);
    // Largest output offsets that keep every intermediate below 2^59.
    let delta = match fun {
        ElemFn::Inv => 58 - offset,
        ElemFn::DivPriv => 58 - offset - bit_len(n),
        ElemFn::Sqrt | ElemFn::InvSqrt => 50 - offset,
        ElemFn::Exp => {
            let top = n as f64 / 2f64.powi(offset) * std::f64::consts::LOG2_E;
            48 - top.floor() as i32
        }
    };
    if delta < 8 {
        return Err(Error::Config(format!("n={n} at offset {offset} leaves too little output precision")));
    }
    let mut rng = dealer(cfg);
    let sh = share_rep(&field, &inputs, &mut rng);
    let num_sh = share_rep(&field, &nums, &mut rng);
    let run = run_local(cfg, |p| -> Result<RepShare> {
        let a = &sh[p.id.index()];
        match fun {
            ElemFn::Inv => inv(p, a, &ElemParams::inv(offset, delta)),
            ElemFn::DivPriv => div_priv(p, &num_sh[p.id.index()], a, offset, &ElemParams::inv(offset, delta)),
            ElemFn::Sqrt => sqrt(p, a, &ElemParams::inv_sqrt(offset, delta)),
            ElemFn::InvSqrt => inv_sqrt(p, a, &ElemParams::inv_sqrt(offset, delta)),
            ElemFn::Exp => exponent(p, a, &ExpParams::new(bit_len(n) as u32, offset, delta)),
        }
    })?;
    let o = &run.outputs;
    let out = reconstruct_rep(&field, &[&o[0], &o[1], &o[2]], Security::Active)?;
    let errs: Vec<f64> = out
        .iter()
        .zip(&inputs)
        .zip(&nums)
        .map(|((&c, &a), &num)| {
            let r = match fun {
                ElemFn::Inv => oracle::reference(RefFn::Inv, a as i64, offset),
                ElemFn::DivPriv => (oracle::reference(RefFn::Inv, a as i64, offset) * BigInt::from(num)) >> offset as usize,
                ElemFn::Sqrt => oracle::reference(RefFn::Sqrt, a as i64, offset),
                ElemFn::InvSqrt => oracle::reference(RefFn::InvSqrt, a as i64, offset),
                ElemFn::Exp => oracle::reference(RefFn::Exp, a as i64, offset),
            };
            relative_error(field.to_i64(c), delta, &r)
        })
        .collect();
    Ok(ElemBench { fun, n, offset, delta, accuracy: Accuracy::from_errors(&errs), metrics: run.total() })
}

/// Predicted and enumerated output counts for one `(p, d, a)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistRow {
    pub p: u64,
    pub d: u64,
    pub a: u64,
    pub predicted: [u64; 3],
    pub empirical: [u64; 3],
}

impl DistRow {
    pub fn matches(&self) -> bool {
        self.predicted == self.empirical
    }
}

/// Every even `a` with `2a < p`.
pub fn full_grid(p: u64) -> Vec<u64> {
    (0..p.div_ceil(2)).step_by(2).collect()
}

/// Runs the one-round additive division on every first share of every `a`
/// and compares the output histogram with the closed form.
pub fn verify_dist(cfg: &LocalConfig, d: u64, grid: &[u64]) -> Result<Vec<DistRow>> {
    let field = cfg.field;
    let p = field.p();
    if p > 8191 {
        return Err(Error::Config(format!("exhaustive enumeration needs p <= 8191, got {p}")));
    }
    if let Some(&a) = grid.iter().find(|&&a| a % 2 == 1 || 2 * a >= p) {
        return Err(Error::Config(format!("grid value {a} is not even with 2a < p")));
    }
    let mut rows = Vec::with_capacity(grid.len());
    // Batches of whole share ranges, about 2^19 elements each.
    let per = ((1usize << 19) / p as usize).max(1);
    for chunk in grid.chunks(per) {
        let secrets: Vec<u64> = chunk.iter().flat_map(|&a| std::iter::repeat_n(a, p as usize)).collect();
        let first: Vec<u64> = chunk.iter().flat_map(|_| 0..p).collect();
        let sh = add_from_first(&field, &secrets, &first);
        let n = secrets.len();
        let run = run_local(cfg, |pt| div_pub_add(pt, &sh[pt.id.index()], n, d))?;
        let out = reconstruct_add(&field, &[&run.outputs[0], &run.outputs[1]])?;
        for (k, &a) in chunk.iter().enumerate() {
            let mut empirical = [0u64; 3];
            for &c in &out[k * p as usize..(k + 1) * p as usize] {
                let dev = c.wrapping_sub(a / d);
                if dev > 2 {
                    return Err(Error::Verification(format!("p={p} d={d} a={a}: output {c} outside a/d + {{0,1,2}}")));
                }
                empirical[dev as usize] += 1;
            }
            rows.push(DistRow { p, d, a, predicted: oracle::predict_distribution(p, d, a).counts, empirical });
        }
    }
    Ok(rows)
}
