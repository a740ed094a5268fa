//! The `tmpc` command line. Every flag can also be set through the
//! environment variable named in its help text, and most through the TOML
//! file given with `--config`. Flags win over the environment, which wins
//! over the file.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{self, ElemFn};
use crate::config::{self, RunConfig};
use crate::division::{div_pub_active_scaled, div_pub_signed, ActiveOffset};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::mnist;
use crate::nn::reference;
use crate::nn::NnConfig;
use crate::party::{LocalConfig, Mode, Party};
use crate::report::Report;
use crate::sharefile::ShareFile;
use crate::sharing::{reconstruct_rep, share_rep, RepShare, Security, SeedSet};
use crate::training::{self, TrainOutcome};
use crate::transport::{Metrics, PartyId, TcpEndpoint};

#[derive(Debug, Parser)]
#[command(name = "tmpc", version, about = "Three-party computation: division, elementary functions, secure training")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, env = "TMPC_CONFIG")]
    pub config: Option<PathBuf>,
    /// Where to write the report; stdout when absent.
    #[arg(long, global = true, env = "TMPC_REPORT")]
    pub report: Option<PathBuf>,
    /// Master seed for dealing and correlated randomness.
    #[arg(long, global = true, env = "TMPC_SEED")]
    pub seed: Option<u64>,
    /// Replace sub-protocols by trusted evaluation (in-process runs only).
    #[arg(long, global = true, env = "TMPC_IDEAL")]
    pub ideal: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one party over TCP.
    RunParty(RunPartyArgs),
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Train the three-layer network on MNIST.
    Train(TrainArgs),
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Share MNIST training data into per-party share files.
    Ingest(IngestArgs),
    /// Share integers into per-party share files.
    Share(ShareArgs),
    /// Reconstruct values from three share files.
    Reconstruct(ReconstructArgs),
}

#[derive(Debug, Subcommand)]
pub enum BenchCommand {
    /// Division by a public value on inputs 1..=n.
    Div(BenchDivArgs),
    /// Accuracy of the elementary functions on inputs 1..=n.
    Elem(BenchElemArgs),
}

#[derive(Debug, Subcommand)]
pub enum VerifyCommand {
    /// Exhaustive output distribution of the one-round division against the closed form.
    Dist(VerifyDistArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SecurityArg {
    Passive,
    Active,
}

impl From<SecurityArg> for Security {
    fn from(s: SecurityArg) -> Security {
        match s {
            SecurityArg::Passive => Security::Passive,
            SecurityArg::Active => Security::Active,
        }
    }
}

#[derive(Debug, Args)]
pub struct BenchDivArgs {
    /// 31, 8191 or mersenne61.
    #[arg(long, env = "TMPC_PRIME")]
    pub prime: Option<String>,
    /// Divisor; the default 4096 is a 12-bit truncation.
    #[arg(long, env = "TMPC_D", default_value_t = 4096)]
    pub d: u64,
    #[arg(long, env = "TMPC_N", default_value_t = 10000)]
    pub n: u64,
    #[arg(long, env = "TMPC_MODE", value_enum)]
    pub mode: Option<SecurityArg>,
}

#[derive(Debug, Args)]
pub struct BenchElemArgs {
    /// inv, divpriv, sqrt, invsqrt or exp; all five when absent.
    #[arg(long = "fn", env = "TMPC_FN")]
    pub fun: Option<String>,
    #[arg(long, env = "TMPC_N", default_value_t = 10000)]
    pub n: u64,
    /// Fixed-point offset of the inputs.
    #[arg(long, env = "TMPC_OFFSET", default_value_t = 10)]
    pub offset: i32,
    /// Only passive is supported.
    #[arg(long, env = "TMPC_MODE", value_enum)]
    pub mode: Option<SecurityArg>,
    #[arg(long, env = "TMPC_PRIME")]
    pub prime: Option<String>,
}

#[derive(Debug, Args)]
pub struct VerifyDistArgs {
    /// Field size, at most 8191.
    #[arg(long = "p", env = "TMPC_P", default_value = "31")]
    pub p: String,
    /// Divisors.
    #[arg(long, env = "TMPC_D", value_delimiter = ',', default_value = "2,3,4,8")]
    pub d: Vec<u64>,
    /// `all`, a comma list, or `start:end[:step]`.
    #[arg(long, env = "TMPC_A_GRID", default_value = "all")]
    pub a_grid: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TrainMode {
    /// Three in-process parties, passively secure.
    Passive,
    /// The cleartext fixed-point reference.
    CleartextRef,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Only 3dnn (784-128-128-10).
    #[arg(long, env = "TMPC_ARCH", default_value = "3dnn")]
    pub arch: String,
    /// Directory with the four IDX files.
    #[arg(long, env = "TMPC_DATASET")]
    pub dataset: Option<PathBuf>,
    #[arg(long, env = "TMPC_TRAIN_LIMIT")]
    pub train_limit: Option<usize>,
    #[arg(long, env = "TMPC_TEST_LIMIT")]
    pub test_limit: Option<usize>,
    #[arg(long, env = "TMPC_BATCH")]
    pub batch: Option<usize>,
    #[arg(long, env = "TMPC_EPOCHS")]
    pub epochs: Option<usize>,
    #[arg(long, env = "TMPC_MODE", value_enum, default_value = "passive")]
    pub mode: TrainMode,
    /// Learning rate 2^-lr_shift.
    #[arg(long, env = "TMPC_LR_SHIFT")]
    pub lr_shift: Option<u32>,
    #[arg(long, env = "TMPC_PRIME")]
    pub prime: Option<String>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long, env = "TMPC_DATASET")]
    pub dataset: Option<PathBuf>,
    /// Output directory for the share files.
    #[arg(long, env = "TMPC_SHARES")]
    pub shares: Option<PathBuf>,
    #[arg(long, env = "TMPC_TRAIN_LIMIT")]
    pub train_limit: Option<usize>,
    #[arg(long, env = "TMPC_PRIME")]
    pub prime: Option<String>,
}

#[derive(Debug, Args)]
pub struct ShareArgs {
    /// Signed integers.
    #[arg(long, env = "TMPC_VALUES", value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub values: Vec<i64>,
    /// Fixed-point offset recorded in the files.
    #[arg(long, env = "TMPC_OFFSET", default_value_t = 0)]
    pub offset: i32,
    /// Output path prefix; files are `<prefix>-P1.tmpc` and so on.
    #[arg(long, env = "TMPC_OUT")]
    pub out: PathBuf,
    #[arg(long, env = "TMPC_PRIME")]
    pub prime: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// Three share files.
    #[arg(required = true, num_args = 3)]
    pub files: Vec<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Job {
    /// Divide the shares in `--input` by `--d`.
    Div,
    /// Train on the shares written by `ingest`.
    Train,
}

#[derive(Debug, Args)]
pub struct RunPartyArgs {
    #[arg(long, env = "TMPC_PARTY")]
    pub party: Option<u8>,
    #[arg(long, env = "TMPC_LISTEN")]
    pub listen: Option<String>,
    /// Addresses of parties 1, 2, 3.
    #[arg(long, env = "TMPC_PEERS", value_delimiter = ',')]
    pub peers: Option<Vec<String>>,
    #[arg(long, env = "TMPC_TIMEOUT_SECS")]
    pub timeout_secs: Option<u64>,
    #[arg(long, env = "TMPC_JOB", value_enum)]
    pub job: Job,
    #[arg(long, env = "TMPC_PRIME")]
    pub prime: Option<String>,
    #[arg(long, env = "TMPC_SECURITY", value_enum)]
    pub security: Option<SecurityArg>,
    /// div: this party's input share file.
    #[arg(long, env = "TMPC_INPUT")]
    pub input: Option<PathBuf>,
    /// div: where to write this party's output shares.
    #[arg(long, env = "TMPC_OUTPUT")]
    pub output: Option<PathBuf>,
    #[arg(long, env = "TMPC_D")]
    pub d: Option<u64>,
    /// train: directory written by `ingest`.
    #[arg(long, env = "TMPC_SHARES")]
    pub shares: Option<PathBuf>,
    /// train: cleartext test set for evaluating the opened model.
    #[arg(long, env = "TMPC_DATASET")]
    pub dataset: Option<PathBuf>,
    #[arg(long, env = "TMPC_BATCH")]
    pub batch: Option<usize>,
    #[arg(long, env = "TMPC_EPOCHS")]
    pub epochs: Option<usize>,
}

/// Settings shared by every command after merging flags and the file.
struct Ctx {
    file: RunConfig,
    seed: u64,
    ideal: bool,
}

impl Ctx {
    fn field(&self, flag: &Option<String>, default: &str) -> Result<Field> {
        config::parse_prime(flag.as_deref().or(self.file.prime.as_deref()).unwrap_or(default))
    }

    fn security(&self, flag: Option<SecurityArg>) -> Result<Security> {
        match (flag, &self.file.security) {
            (Some(s), _) => Ok(s.into()),
            (None, Some(s)) => config::parse_security(s),
            (None, None) => Ok(Security::Passive),
        }
    }

    fn local(&self, field: Field, security: Security) -> LocalConfig {
        let mut cfg = LocalConfig::new(field, self.seed);
        cfg.security = security;
        if self.ideal {
            cfg = cfg.ideal();
        }
        cfg
    }

    fn dataset(&self, flag: &Option<PathBuf>) -> PathBuf {
        flag.clone().or_else(|| self.file.train.dataset.clone()).unwrap_or_else(|| PathBuf::from("data/mnist-subset"))
    }

    fn nn(&self, batch: Option<usize>, lr_shift: Option<u32>) -> Result<NnConfig> {
        let mut cfg = NnConfig::mnist_3dnn();
        cfg.seed = self.seed;
        cfg.batch = batch.or(self.file.train.batch).unwrap_or(cfg.batch);
        cfg.adam.lr_shift = lr_shift.or(self.file.train.lr_shift).unwrap_or(cfg.adam.lr_shift);
        if let Some(c) = self.file.train.softmax_clamp {
            cfg.softmax.clamp = c;
        }
        cfg.frac = self.file.fixed.frac.unwrap_or(cfg.frac);
        cfg.grad_frac = self.file.fixed.grad_frac.unwrap_or(cfg.grad_frac);
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("tmpc: {}", e.to_string().replace('\n', " "));
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let ctx = Ctx { seed: cli.seed.or(file.seed).unwrap_or(1), ideal: cli.ideal || file.ideal.unwrap_or(false), file };
    let report_path = cli.report.clone().or_else(|| ctx.file.report.clone());
    let (report, outcome) = match &cli.command {
        Command::Bench(BenchCommand::Div(a)) => bench_div(&ctx, a),
        Command::Bench(BenchCommand::Elem(a)) => bench_elem(&ctx, a),
        Command::Verify(VerifyCommand::Dist(a)) => verify_dist(&ctx, a),
        Command::Train(a) => train(&ctx, a),
        Command::Ingest(a) => ingest(&ctx, a),
        Command::Share(a) => share(&ctx, a),
        Command::Reconstruct(a) => reconstruct(a),
        Command::RunParty(a) => run_party(&ctx, a),
    }?;
    report.emit(report_path.as_deref())?;
    outcome
}

/// A finished report plus the command's verdict; a failed verification
/// still writes its report.
type Outcome = (Report, Result<()>);

fn prime_name(f: &Field) -> String {
    if *f == Field::M61 {
        "mersenne61".into()
    } else {
        f.p().to_string()
    }
}

fn bench_div(ctx: &Ctx, a: &BenchDivArgs) -> Result<Outcome> {
    let field = ctx.field(&a.prime, "mersenne61")?;
    let security = ctx.security(a.mode)?;
    if a.n == 0 || a.d == 0 {
        return Err(Error::Config("n and d must be positive".into()));
    }
    let bound = match security {
        Security::Passive => field.p() / 4,
        Security::Active => field.p() / 16,
    };
    if a.n >= bound || a.d >= bound {
        return Err(Error::Config(format!("n and d must stay below {bound} for this prime and mode")));
    }
    let inputs: Vec<u64> = (1..=a.n).collect();
    let b = bench::bench_div(&ctx.local(field, security), a.d, &inputs)?;
    let mut r = Report::new("bench-div");
    let kind = if a.d.is_power_of_two() { "truncation" } else { "division" };
    r.line("param")
        .kv("prime", prime_name(&field))
        .kv("d", a.d)
        .kv("n", a.n)
        .kv("mode", format!("{security:?}").to_lowercase())
        .kv("kind", kind)
        .kv("seed", ctx.seed)
        .kv("ideal", ctx.ideal);
    for row in &b.rows {
        r.line("row").kv("a", row.a).kv("out", row.out).f("err", row.error(a.d), 6);
    }
    r.line("summary").kv("kind", kind).f("avg_l1", b.avg_l1, 4).f("worst_l1", b.worst_l1, 4);
    r.metrics(&b.metrics);
    Ok((r, Ok(())))
}

fn bench_elem(ctx: &Ctx, a: &BenchElemArgs) -> Result<Outcome> {
    if ctx.security(a.mode)? != Security::Passive {
        return Err(Error::Config("bench elem supports passive mode only".into()));
    }
    let field = ctx.field(&a.prime, "mersenne61")?;
    if field != Field::M61 {
        return Err(Error::Config("bench elem needs the 61-bit prime".into()));
    }
    let funs: Vec<ElemFn> = match &a.fun {
        Some(s) => vec![s.parse()?],
        None => ElemFn::ALL.to_vec(),
    };
    let mut r = Report::new("bench-elem");
    r.line("param").kv("prime", prime_name(&field)).kv("n", a.n).kv("offset", a.offset).kv("mode", "passive").kv("seed", ctx.seed);
    let mut total = Metrics::default();
    for f in funs {
        let b = bench::bench_elem(&ctx.local(field, Security::Passive), f, a.n, a.offset)?;
        r.line("summary")
            .kv("fn", f.name())
            .kv("delta", b.delta)
            .f("avg_bits", b.accuracy.avg_bits, 2)
            .f("worst_bits", b.accuracy.worst_bits, 2)
            .kv("rounds", b.metrics.rounds);
        // Sequential runs: rounds add up too.
        total = Metrics { rounds: total.rounds + b.metrics.rounds, ..Metrics::total(&[total, b.metrics]) };
    }
    r.metrics(&total);
    Ok((r, Ok(())))
}

fn verify_dist(ctx: &Ctx, a: &VerifyDistArgs) -> Result<Outcome> {
    let field = config::parse_prime(&a.p)?;
    let grid = config::parse_grid(&a.a_grid, field.p())?;
    let mut r = Report::new("verify-dist");
    r.line("param").kv("p", field.p()).kv("d", a.d.iter().map(u64::to_string).collect::<Vec<_>>().join(",")).kv("a_grid", &a.a_grid).kv("points", grid.len());
    let mut bad = 0usize;
    for &d in &a.d {
        if d < 2 || d >= field.p() {
            return Err(Error::Config(format!("divisor {d} out of range")));
        }
        let rows = bench::verify_dist(&ctx.local(field, Security::Passive), d, &grid)?;
        let mut d_bad = 0;
        for row in &rows {
            let ok = row.matches();
            d_bad += !ok as usize;
            r.line("dist")
                .kv("d", d)
                .kv("a", row.a)
                .kv("pred", format!("{}/{}/{}", row.predicted[0], row.predicted[1], row.predicted[2]))
                .kv("emp", format!("{}/{}/{}", row.empirical[0], row.empirical[1], row.empirical[2]))
                .kv("ok", ok);
        }
        r.line("summary").kv("d", d).kv("points", rows.len()).kv("mismatches", d_bad);
        bad += d_bad;
    }
    let verdict = if bad == 0 { Ok(()) } else { Err(Error::Verification(format!("{bad} distribution mismatches"))) };
    r.line("result").kv("mismatches", bad).kv("status", if bad == 0 { "pass" } else { "fail" });
    Ok((r, verdict))
}

fn train(ctx: &Ctx, a: &TrainArgs) -> Result<Outcome> {
    if a.arch != "3dnn" {
        return Err(Error::Config(format!("unknown architecture {:?}; only 3dnn", a.arch)));
    }
    let cfg = ctx.nn(a.batch, a.lr_shift)?;
    let epochs = a.epochs.or(ctx.file.train.epochs).unwrap_or(1);
    let dir = ctx.dataset(&a.dataset);
    let data = mnist::load_dir(&dir, a.train_limit.or(ctx.file.train.train_limit), a.test_limit.or(ctx.file.train.test_limit))?;
    if data.train_images.count < cfg.batch {
        return Err(Error::Config(format!("{} training examples is less than one batch of {}", data.train_images.count, cfg.batch)));
    }
    let started = Instant::now();
    let out: TrainOutcome = match a.mode {
        TrainMode::CleartextRef => training::train_reference(&cfg, &data, epochs)?,
        TrainMode::Passive => {
            if ctx.ideal {
                return Err(Error::Config("train does not support ideal mode".into()));
            }
            training::train_local(&cfg, &data, epochs, ctx.field(&a.prime, "mersenne61")?, ctx.seed)?
        }
    };
    eprintln!("tmpc: trained in {:.1} s", started.elapsed().as_secs_f64());
    let mut r = Report::new("train");
    r.line("param")
        .kv("arch", "3dnn")
        .kv("mode", if a.mode == TrainMode::Passive { "passive" } else { "cleartext-ref" })
        .kv("train", data.train_images.count)
        .kv("test", data.test_images.count)
        .kv("batch", cfg.batch)
        .kv("epochs", epochs)
        .kv("frac", cfg.frac)
        .kv("lr_shift", cfg.adam.lr_shift)
        .kv("seed", ctx.seed);
    for s in &out.steps {
        r.line("step").kv("step", s.step).f("loss", s.loss, 4).f("acc", s.accuracy, 4);
    }
    r.line("summary").kv("steps", out.steps.len()).f("test_acc", out.test_accuracy, 4);
    if let Some(m) = &out.metrics {
        r.metrics(m);
    }
    Ok((r, Ok(())))
}

fn ingest(ctx: &Ctx, a: &IngestArgs) -> Result<Outcome> {
    let field = ctx.field(&a.prime, "mersenne61")?;
    let cfg = ctx.nn(None, None)?;
    let data = mnist::load_dir(&ctx.dataset(&a.dataset), a.train_limit.or(ctx.file.train.train_limit), Some(0))?;
    let dir = a.shares.clone().or_else(|| ctx.file.train.shares.clone()).ok_or_else(|| Error::Config("ingest needs --shares".into()))?;
    let paths = training::ingest(&data, &cfg, field, ctx.seed, &dir)?;
    let mut r = Report::new("ingest");
    r.line("param").kv("prime", prime_name(&field)).kv("examples", data.train_images.count).kv("frac", cfg.frac).kv("seed", ctx.seed);
    for p in paths {
        r.line("file").kv("path", p.display());
    }
    Ok((r, Ok(())))
}

fn party_file(prefix: &Path, id: PartyId) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(format!("-{id}.tmpc"));
    PathBuf::from(s)
}

fn share(ctx: &Ctx, a: &ShareArgs) -> Result<Outcome> {
    use rand::SeedableRng;
    let field = ctx.field(&a.prime, "mersenne61")?;
    let half = (field.p() / 2) as i64;
    if let Some(v) = a.values.iter().find(|v| v.abs() > half) {
        return Err(Error::Config(format!("value {v} does not fit the field")));
    }
    let vals: Vec<u64> = a.values.iter().map(|&v| field.from_i64(v)).collect();
    let shares = share_rep(&field, &vals, &mut rand_chacha::ChaCha20Rng::seed_from_u64(ctx.seed));
    let mut r = Report::new("share");
    r.line("param").kv("prime", prime_name(&field)).kv("count", vals.len()).kv("offset", a.offset);
    for s in shares {
        let path = party_file(&a.out, s.party);
        ShareFile::rep(&field, s, a.offset, 1).write(&path)?;
        r.line("file").kv("path", path.display());
    }
    Ok((r, Ok(())))
}

fn reconstruct(a: &ReconstructArgs) -> Result<Outcome> {
    let files: Vec<ShareFile> = a.files.iter().map(|p| ShareFile::read(p)).collect::<Result<_>>()?;
    let field = Field::parse(&files[0].prime.to_string()).ok_or_else(|| Error::Format("share file prime is not supported".into()))?;
    let mut views: Vec<RepShare> = Vec::new();
    for f in &files {
        if f.prime != field.p() || f.offset != files[0].offset {
            return Err(Error::Format("share files disagree on prime or offset".into()));
        }
        views.push(f.clone().into_rep()?);
    }
    views.sort_by_key(|v| v.party);
    let vals = reconstruct_rep(&field, &[&views[0], &views[1], &views[2]], Security::Active)
        .map_err(|e| Error::Verification(format!("shares do not reconstruct consistently: {e}")))?;
    let mut r = Report::new("reconstruct");
    r.line("param").kv("prime", prime_name(&field)).kv("count", vals.len()).kv("offset", files[0].offset);
    for (i, v) in vals.iter().enumerate() {
        let s = field.to_i64(*v);
        r.line("value").kv("i", i).kv("int", s).f("real", s as f64 / 2f64.powi(files[0].offset), 9);
    }
    Ok((r, Ok(())))
}

fn run_party(ctx: &Ctx, a: &RunPartyArgs) -> Result<Outcome> {
    if ctx.ideal {
        return Err(Error::Config("ideal mode needs all parties in one process".into()));
    }
    let pc = &ctx.file.party;
    let id = config::parse_party(a.party.or(pc.id).ok_or_else(|| Error::Config("run-party needs --party".into()))?)?;
    let peers = config::parse_peers(a.peers.as_ref().or(pc.peers.as_ref()).ok_or_else(|| Error::Config("run-party needs --peers".into()))?)?;
    let listen = match a.listen.as_ref().or(pc.listen.as_ref()) {
        Some(s) => config::parse_addr(s)?,
        None => peers[id.index()].1,
    };
    let timeout = Duration::from_secs(a.timeout_secs.or(pc.timeout_secs).unwrap_or(30));
    let field = ctx.field(&a.prime, "mersenne61")?;
    let security = ctx.security(a.security)?;

    // Inputs are checked before connecting so a bad file fails fast.
    enum Work {
        Div { input: ShareFile, output: PathBuf, d: u64 },
        Train { cfg: NnConfig, shares: PathBuf, epochs: usize },
    }
    let work = match a.job {
        Job::Div => {
            let input = ShareFile::read(a.input.as_ref().ok_or_else(|| Error::Config("div job needs --input".into()))?)?.expect(&field, id)?;
            let output = a.output.clone().ok_or_else(|| Error::Config("div job needs --output".into()))?;
            let d = a.d.ok_or_else(|| Error::Config("div job needs --d".into()))?;
            Work::Div { input, output, d }
        }
        Job::Train => Work::Train {
            cfg: ctx.nn(a.batch, None)?,
            shares: a.shares.clone().or_else(|| ctx.file.train.shares.clone()).ok_or_else(|| Error::Config("train job needs --shares".into()))?,
            epochs: a.epochs.or(ctx.file.train.epochs).unwrap_or(1),
        },
    };

    let net = TcpEndpoint::connect(id, listen, &peers, timeout)?;
    let seeds = SeedSet::derive_all(ctx.seed);
    let mut p = Party::new(field, &seeds[id.index()], 0, Arc::new(net));
    p.mode = Mode::Real;
    p.security = security;
    let mut r = Report::new("run-party");
    r.line("param").kv("party", id.get()).kv("prime", prime_name(&field)).kv("security", format!("{security:?}").to_lowercase()).kv("seed", ctx.seed);
    match work {
        Work::Div { input, output, d } => {
            let (offset, cols) = (input.offset, input.cols);
            let a_sh = input.into_rep()?;
            let out = match security {
                Security::Passive => div_pub_signed(&mut p, &a_sh, d)?,
                Security::Active => div_pub_active_scaled(&mut p, &a_sh, d, ActiveOffset::Centred)?,
            };
            ShareFile::rep(&field, out, offset, cols).write(&output)?;
            r.line("job").kv("kind", "div").kv("d", d).kv("count", a_sh.len()).kv("output", output.display());
        }
        Work::Train { cfg, shares, epochs } => {
            let (x, t) = training::load_shares(&p, &shares)?;
            let (weights, steps) = training::train_party(&mut p, &cfg, &x, &t, epochs)?;
            let mut line_acc = None;
            if let Some(dir) = a.dataset.clone().or_else(|| ctx.file.train.dataset.clone()) {
                let data = mnist::load_dir(&dir, Some(0), ctx.file.train.test_limit)?;
                line_acc = Some(reference::accuracy(&weights, &training::test_mats(&data, &cfg), &data.test_labels, cfg.frac));
            }
            let mut l = r.line("job").kv("kind", "train").kv("examples", x.rows).kv("steps", steps);
            if let Some(acc) = line_acc {
                l = l.f("test_acc", acc, 4);
            }
            drop(l);
        }
    }
    r.metrics(&p.metrics());
    Ok((r, Ok(())))
}
