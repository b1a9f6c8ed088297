//! Command-line front-end: verify certificates, evaluate series against
//! their targets, check invariance and half-k truncation, run the discovery
//! sweep, and profile convergence.
//!
//! Exit codes: 0 when every check passes, 1 on any mathematical failure,
//! 2 on usage errors (unknown ids, bad flags, unreadable files). Structured
//! output mode emits one JSON record per check, one per line, and is
//! byte-identical across re-runs of the same configuration.

use std::f64::consts::LOG2_10;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;

use crate::analysis;
use crate::bigfloat::{gamma_rational, oracle_pi, BigFloat};
use crate::catalog::{self, Catalog, Entry};
use crate::discovery::{self, CellStatus, FitOutcome, SearchTemplate};
use crate::exact::{int, rat};
use crate::wz;

/// Decimal digits → working precision in bits.
pub fn bits_for_digits(digits: u32) -> u32 {
    (digits as f64 * LOG2_10).ceil() as u32 + 32
}

fn pow10_neg(digits: u32, precision: u32) -> BigFloat {
    BigFloat::from_rational(
        &BigRational::new(BigInt::one(), BigInt::from(10u32).pow(digits)),
        precision,
    )
}

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation: exits 2.
    Usage(String),
    /// A computation could not be completed or bounded: exits 1.
    Math(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Math(m) => write!(f, "error: {m}"),
        }
    }
}

fn usage(m: impl Into<String>) -> CliError {
    CliError::Usage(m.into())
}

fn math(m: impl std::fmt::Display) -> CliError {
    CliError::Math(m.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputMode {
    /// Human-readable lines.
    Table,
    /// One JSON record per check per line.
    Structured,
}

#[derive(Parser, Debug)]
#[command(
    name = "wzt",
    version,
    about = "Exact verification of hypergeometric generators and their series",
    max_term_width = 100
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// Working precision in decimal digits (minimum 20).
    #[arg(long, global = true)]
    digits: Option<u32>,
    /// Number of series terms (minimum 1); defaults to 200 or the catalog's
    /// per-entry recommendation, whichever is larger.
    #[arg(long, global = true)]
    terms: Option<usize>,
    /// Output mode.
    #[arg(long, global = true, value_enum, default_value_t = OutputMode::Table)]
    output: OutputMode,
    /// Cap on worker threads for parallel commands.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for randomized work ordering; results are order-independent.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List the catalog entries.
    List {
        /// Extra catalog file whose entries are listed alongside the builtins.
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Check certificates exactly and that F(0,k) = 0.
    Verify {
        /// Formula ids (default: every entry that carries a certificate).
        ids: Vec<String>,
        /// Check exactly the five certified generator rows.
        #[arg(long)]
        all_table1: bool,
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Sum series and compare against their target constants.
    Sum {
        /// Formula ids (default: all entries).
        ids: Vec<String>,
        /// Evaluation point k.
        #[arg(long, default_value_t = 0)]
        k: i64,
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Check that partial sums are independent of k.
    Invariance {
        /// Formula ids (default: the certified generator rows).
        ids: Vec<String>,
        /// k values to compare.
        #[arg(long, value_delimiter = ',', default_values_t = vec![0i64, 1, 2, 3, 4])]
        ks: Vec<i64>,
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Check the k = 1/2 truncation against the gamma-function route.
    Halfk {
        /// Formula ids (default: all entries; those without a truncating
        /// factor are reported as not applicable).
        ids: Vec<String>,
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Run the integer-relation sweep over the exponent template.
    Discover {
        /// Search template JSON (default: the worked-example template).
        #[arg(long)]
        file: Option<PathBuf>,
        /// Checkpoint file: completed cells are stored and reused on re-run.
        #[arg(long)]
        status: Option<PathBuf>,
        /// Largest k when fitting f(k) on hit cells.
        #[arg(long, default_value_t = 6)]
        fit_kmax: u32,
    },
    /// Emit digit-count tables d(N) and digits-per-term summaries.
    Profile {
        /// Formula ids (required).
        ids: Vec<String>,
        /// k values to profile.
        #[arg(long, value_delimiter = ',', default_values_t = vec![0i64])]
        ks: Vec<i64>,
        #[arg(long)]
        file: Option<PathBuf>,
    },
}

/// Resolved run configuration shared by all commands.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub digits: u32,
    /// None means "derive from the catalog entry"; Some is a user override.
    pub terms: Option<usize>,
    pub output: OutputMode,
    pub jobs: Option<usize>,
    pub seed: u64,
}

impl RunConfig {
    fn from_common(c: &CommonArgs) -> Result<RunConfig, CliError> {
        let digits = c.digits.unwrap_or(50);
        if digits < 20 {
            return Err(usage("--digits must be at least 20"));
        }
        if c.terms == Some(0) {
            return Err(usage("--terms must be at least 1"));
        }
        Ok(RunConfig {
            digits,
            terms: c.terms,
            output: c.output,
            jobs: c.jobs,
            seed: c.seed,
        })
    }

    fn precision(&self) -> u32 {
        bits_for_digits(self.digits)
    }

    /// Effective term budget for an entry.
    fn terms_for(&self, entry: &Entry) -> usize {
        match self.terms {
            Some(t) => t,
            None => entry.terms_needed.max(200),
        }
    }
}

/// One structured output record; field order is the output order.
#[derive(Serialize)]
struct Record {
    id: String,
    k: Option<String>,
    lhs: String,
    rhs: String,
    #[serde(rename = "|diff|")]
    diff: String,
    bound: String,
    verdict: String,
}

impl Record {
    fn passed(&self) -> bool {
        self.verdict == "pass"
    }
}

struct Reporter {
    mode: OutputMode,
    all_pass: bool,
}

impl Reporter {
    fn new(mode: OutputMode) -> Self {
        Reporter { mode, all_pass: true }
    }

    /// Emit one check result; `table_line` is the human-readable rendering.
    fn emit(&mut self, record: Record, table_line: String) {
        self.all_pass &= record.passed();
        match self.mode {
            OutputMode::Table => println!("{table_line}"),
            OutputMode::Structured => {
                println!("{}", serde_json::to_string(&record).expect("record serializes"));
            }
        }
    }

    /// Informational line, printed only in table mode.
    fn note(&self, line: impl std::fmt::Display) {
        if matches!(self.mode, OutputMode::Table) {
            println!("{line}");
        }
    }
}

fn load_catalog(file: Option<&Path>) -> Result<Catalog, CliError> {
    let mut cat = catalog::builtin();
    if let Some(path) = file {
        let extra = Catalog::load_path(path)
            .map_err(|e| usage(format!("cannot load {}: {e}", path.display())))?;
        for entry in extra.entries {
            if cat.get(&entry.id).is_ok() {
                return Err(usage(format!(
                    "formula id {:?} in {} collides with a builtin entry",
                    entry.id,
                    path.display()
                )));
            }
            cat.entries.push(entry);
        }
        cat.validate()
            .map_err(|e| usage(format!("combined catalog is invalid: {e}")))?;
    }
    Ok(cat)
}

fn resolve<'c>(cat: &'c Catalog, ids: &[String]) -> Result<Vec<&'c Entry>, CliError> {
    ids.iter()
        .map(|id| {
            cat.get(id).map_err(|_| usage(format!("unknown formula id: {id}")))
        })
        .collect()
}

fn target_display(entry: &Entry) -> String {
    let mut s = String::new();
    let q = &entry.target.rational;
    s.push_str(&q.to_string());
    if entry.target.surd > 1 {
        s.push_str(&format!("*sqrt({})", entry.target.surd));
    }
    match entry.target.pi_power {
        0 => {}
        -1 => s.push_str("/pi"),
        -2 => s.push_str("/pi^2"),
        p => s.push_str(&format!("*pi^{p}")),
    }
    if !entry.target.kfactor.is_empty() {
        s.push_str(" * f(k)");
    }
    s
}

fn install_pool<T: Send>(
    jobs: Option<usize>,
    run: impl FnOnce() -> T + Send,
) -> Result<T, CliError> {
    match jobs {
        None => Ok(run()),
        Some(j) => {
            if j == 0 {
                return Err(usage("--jobs must be at least 1"));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build()
                .map_err(|e| math(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(run))
        }
    }
}

/// Parse argv and run; returns the process exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            // clap renders its own message; --help/--version land here too.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let config = match RunConfig::from_common(&cli.common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return 2;
        }
    };
    match dispatch(&cli.command, &config) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(CliError::Usage(m)) => {
            eprintln!("usage error: {m}");
            2
        }
        Err(CliError::Math(m)) => {
            eprintln!("error: {m}");
            1
        }
    }
}

fn dispatch(cmd: &Command, config: &RunConfig) -> Result<bool, CliError> {
    match cmd {
        Command::List { file } => cmd_list(config, file.as_deref()),
        Command::Verify { ids, all_table1, file } => {
            cmd_verify(config, ids, *all_table1, file.as_deref())
        }
        Command::Sum { ids, k, file } => cmd_sum(config, ids, *k, file.as_deref()),
        Command::Invariance { ids, ks, file } => {
            cmd_invariance(config, ids, ks, file.as_deref())
        }
        Command::Halfk { ids, file } => cmd_halfk(config, ids, file.as_deref()),
        Command::Discover { file, status, fit_kmax } => {
            cmd_discover(config, file.as_deref(), status.as_deref(), *fit_kmax)
        }
        Command::Profile { ids, ks, file } => cmd_profile(config, ids, ks, file.as_deref()),
    }
}

// ---------------------------------------------------------------------------
// list
// ---------------------------------------------------------------------------

fn cmd_list(_config: &RunConfig, file: Option<&Path>) -> Result<bool, CliError> {
    let cat = load_catalog(file)?;
    let id_width = cat.entries.iter().map(|e| e.id.len()).max().unwrap_or(0);
    for entry in &cat.entries {
        println!(
            "{:width$}  {:10}  terms {:4}  target {}",
            entry.id,
            entry.form.to_string(),
            entry.terms_needed,
            target_display(entry),
            width = id_width
        );
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

const TABLE1_IDS: [&str; 5] = ["t1.r1", "t1.r2", "t1.r3", "t1.r4", "t1.r5"];

fn cmd_verify(
    config: &RunConfig,
    ids: &[String],
    all_table1: bool,
    file: Option<&Path>,
) -> Result<bool, CliError> {
    let cat = load_catalog(file)?;
    let entries: Vec<&Entry> = if all_table1 {
        if !ids.is_empty() {
            return Err(usage("--all-table1 does not take explicit ids"));
        }
        TABLE1_IDS
            .iter()
            .map(|id| cat.get(id).expect("builtin row present"))
            .collect()
    } else if ids.is_empty() {
        cat.entries.iter().filter(|e| e.certificate.is_some()).collect()
    } else {
        resolve(&cat, ids)?
    };

    let mut rep = Reporter::new(config.output);
    let mut certified = 0usize;
    for &entry in &entries {
        let pair = entry.pair().ok_or_else(|| {
            usage(format!("formula {} carries no certificate to verify", entry.id))
        })?;
        let cert = wz::certify(&pair);
        let vanish = wz::check_f_vanishes(&pair);
        let ok = cert.is_ok() && vanish.is_ok();
        certified += usize::from(ok);
        let detail = |r: &Result<(), wz::WzError>| match r {
            Ok(()) => "exact".to_string(),
            Err(e) => e.to_string(),
        };
        rep.emit(
            Record {
                id: entry.id.clone(),
                k: None,
                lhs: "F(n+1,k) - F(n,k)".into(),
                rhs: "G(n,k+1) - G(n,k)".into(),
                diff: if cert.is_ok() { "0".into() } else { detail(&cert) },
                bound: "0".into(),
                verdict: if cert.is_ok() { "pass".into() } else { "fail".into() },
            },
            format!(
                "{}: certificate {}",
                entry.id,
                if cert.is_ok() { "exact".to_string() } else { detail(&cert) }
            ),
        );
        rep.emit(
            Record {
                id: entry.id.clone(),
                k: None,
                lhs: "F(0,k)".into(),
                rhs: "0".into(),
                diff: if vanish.is_ok() { "0".into() } else { detail(&vanish) },
                bound: "0".into(),
                verdict: if vanish.is_ok() { "pass".into() } else { "fail".into() },
            },
            format!(
                "{}: F(0,k) {}",
                entry.id,
                if vanish.is_ok() { "= 0 identically".to_string() } else { detail(&vanish) }
            ),
        );
    }
    rep.note(format!("{certified}/{} certified", entries.len()));
    Ok(rep.all_pass)
}

// ---------------------------------------------------------------------------
// sum
// ---------------------------------------------------------------------------

fn sum_entry(
    config: &RunConfig,
    entry: &Entry,
    k: i64,
) -> Result<(analysis::SeriesSum, BigFloat, BigFloat, BigFloat), CliError> {
    let precision = config.precision();
    let kq = int(k);
    let max_terms = config.terms_for(entry);
    let term = entry.term();
    let sum = if config.terms.is_some() {
        // Explicit --terms: sum exactly that many and report the bound there.
        analysis::sum_fixed(&term, &kq, max_terms, precision).map_err(math)?
    } else {
        let eps = pow10_neg(config.digits + 5, precision);
        analysis::sum_auto(&term, &kq, &eps, precision, max_terms).map_err(math)?
    };
    let target = entry.target_value(&kq, precision).map_err(math)?;
    let diff = sum.value.sub(&target).abs();
    let allowance = sum.tail_bound.add(&pow10_neg(config.digits, precision));
    Ok((sum, target, diff, allowance))
}

fn cmd_sum(
    config: &RunConfig,
    ids: &[String],
    k: i64,
    file: Option<&Path>,
) -> Result<bool, CliError> {
    let cat = load_catalog(file)?;
    let entries: Vec<&Entry> = if ids.is_empty() {
        cat.entries.iter().collect()
    } else {
        resolve(&cat, ids)?
    };
    let digits = config.digits as usize;
    let mut rep = Reporter::new(config.output);
    for &entry in &entries {
        let (sum, target, diff, allowance) = sum_entry(config, entry, k)?;
        let ok = diff.cmp_value(&allowance) != std::cmp::Ordering::Greater;
        rep.emit(
            Record {
                id: entry.id.clone(),
                k: Some(k.to_string()),
                lhs: sum.value.to_decimal(digits),
                rhs: target.to_decimal(digits),
                diff: diff.to_decimal(6),
                bound: allowance.to_decimal(6),
                verdict: if ok { "pass".into() } else { "fail".into() },
            },
            format!(
                "{} k={k}: sum({} terms, {:?}) = {}\n{}target = {}\n{}|diff| = {} <= {} -> {}",
                entry.id,
                sum.terms_used,
                sum.method,
                sum.value.to_decimal(digits),
                " ".repeat(entry.id.len() + 2),
                target.to_decimal(digits),
                " ".repeat(entry.id.len() + 2),
                diff.to_decimal(6),
                allowance.to_decimal(6),
                if ok { "ok" } else { "MISMATCH" },
            ),
        );
    }
    Ok(rep.all_pass)
}

// ---------------------------------------------------------------------------
// invariance
// ---------------------------------------------------------------------------

fn cmd_invariance(
    config: &RunConfig,
    ids: &[String],
    ks: &[i64],
    file: Option<&Path>,
) -> Result<bool, CliError> {
    if ks.len() < 2 {
        return Err(usage("--ks needs at least two values"));
    }
    let cat = load_catalog(file)?;
    let entries: Vec<&Entry> = if ids.is_empty() {
        cat.entries.iter().filter(|e| e.certificate.is_some()).collect()
    } else {
        resolve(&cat, ids)?
    };
    let precision = config.precision();
    let slack = pow10_neg(config.digits.min(30), precision);
    let mut rep = Reporter::new(config.output);
    for &entry in &entries {
        let n_terms = config.terms_for(entry);
        let report = wz::sum_invariance(&entry.term(), ks, n_terms, precision, &slack)
            .map_err(math)?;
        let base = &report.entries[0];
        for other in &report.entries[1..] {
            let gap = base.sum.value.sub(&other.sum.value).abs();
            let allowance = base.sum.tail_bound.add(&other.sum.tail_bound).add(&slack);
            let ok = gap.cmp_value(&allowance) != std::cmp::Ordering::Greater;
            rep.emit(
                Record {
                    id: entry.id.clone(),
                    k: Some(other.k.to_string()),
                    lhs: other.sum.value.to_decimal(config.digits as usize),
                    rhs: base.sum.value.to_decimal(config.digits as usize),
                    diff: gap.to_decimal(6),
                    bound: allowance.to_decimal(6),
                    verdict: if ok { "pass".into() } else { "fail".into() },
                },
                format!(
                    "{}: |S(k={}) - S(k={})| = {} <= {} -> {}",
                    entry.id,
                    other.k,
                    base.k,
                    gap.to_decimal(6),
                    allowance.to_decimal(6),
                    if ok { "ok" } else { "MISMATCH" },
                ),
            );
        }
        rep.note(format!(
            "{}: worst pairwise excess {} ({})",
            entry.id,
            report.worst_excess.to_decimal(6),
            if report.pass { "invariant" } else { "NOT invariant" },
        ));
    }
    Ok(rep.all_pass)
}

// ---------------------------------------------------------------------------
// halfk
// ---------------------------------------------------------------------------

fn cmd_halfk(config: &RunConfig, ids: &[String], file: Option<&Path>) -> Result<bool, CliError> {
    let cat = load_catalog(file)?;
    let explicit = !ids.is_empty();
    let entries: Vec<&Entry> = if explicit {
        resolve(&cat, ids)?
    } else {
        cat.entries.iter().collect()
    };
    let precision = config.precision();
    let tol = pow10_neg(config.digits.min(30), precision);
    let digits = config.digits as usize;

    // Self-check of the gamma route: Γ(1/2)² = π.
    let g = gamma_rational(&rat(1, 2), precision).map_err(math)?;
    let pi = oracle_pi(precision).map_err(math)?;
    let gd = g.mul(&g).sub(&pi).abs();
    let mut rep = Reporter::new(config.output);
    let gok = gd.cmp_value(&tol) != std::cmp::Ordering::Greater;
    rep.emit(
        Record {
            id: "gamma(1/2)^2".into(),
            k: None,
            lhs: g.mul(&g).to_decimal(digits),
            rhs: pi.to_decimal(digits),
            diff: gd.to_decimal(6),
            bound: tol.to_decimal(6),
            verdict: if gok { "pass".into() } else { "fail".into() },
        },
        format!(
            "gamma(1/2)^2 = pi: |diff| = {} -> {}",
            gd.to_decimal(6),
            if gok { "ok" } else { "MISMATCH" }
        ),
    );

    for &entry in &entries {
        match wz::constant_at_half_k(&entry.term()) {
            Ok(value) => {
                let lhs = BigFloat::from_rational(&value, precision);
                let rhs = entry
                    .target_value(&rat(1, 2), precision)
                    .map_err(math)?;
                let diff = lhs.sub(&rhs).abs();
                let ok = diff.cmp_value(&tol) != std::cmp::Ordering::Greater;
                rep.emit(
                    Record {
                        id: entry.id.clone(),
                        k: Some("1/2".into()),
                        lhs: lhs.to_decimal(digits),
                        rhs: rhs.to_decimal(digits),
                        diff: diff.to_decimal(6),
                        bound: tol.to_decimal(6),
                        verdict: if ok { "pass".into() } else { "fail".into() },
                    },
                    format!(
                        "{} at k=1/2 truncates to {} ; gamma route gives {} -> {}",
                        entry.id,
                        value,
                        rhs.to_decimal(digits.min(12)),
                        if ok { "ok" } else { "MISMATCH" },
                    ),
                );
            }
            Err(wz::WzError::NotTruncating(reason)) => {
                if explicit {
                    rep.note(format!("{}: not applicable ({reason})", entry.id));
                }
            }
            Err(e) => return Err(math(format!("{}: {e}", entry.id))),
        }
    }
    Ok(rep.all_pass)
}

// ---------------------------------------------------------------------------
// discover
// ---------------------------------------------------------------------------

fn cell_id(p: i32, q: i32, r: i32) -> String {
    format!("cell({p},{q},{r})")
}

fn cmd_discover(
    config: &RunConfig,
    file: Option<&Path>,
    status: Option<&Path>,
    fit_kmax: u32,
) -> Result<bool, CliError> {
    let tpl: SearchTemplate = match file {
        None => SearchTemplate::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| usage(format!("bad template {}: {e}", path.display())))?
        }
    };
    tpl.validate().map_err(|e| usage(e.to_string()))?;

    let mut rep = Reporter::new(config.output);
    rep.note(format!(
        "template hash {} | p {:?} q {:?} r {:?} | weight 2^({}n)*3^({}n) | \
         target {}*sqrt({})*pi^{} | k samples {:?} | {} digits",
        tpl.hash(),
        tpl.p_range,
        tpl.q_range,
        tpl.r_range,
        tpl.two_exp,
        tpl.three_exp,
        tpl.target_rational,
        tpl.target_surd,
        tpl.target_pi_power,
        tpl.ks,
        tpl.digits,
    ));

    let seed = config.seed;
    let report = install_pool(config.jobs, || discovery::sweep(&tpl, status, seed))?
        .map_err(math)?;

    let mut hits = Vec::new();
    for cell in &report.cells {
        let (summary, ok) = match &cell.status {
            CellStatus::Hit { a, b, c, .. } => {
                hits.push((cell.p, cell.q, cell.r, *a, *b, *c));
                (format!("hit: prefactor {a}n + {b}k + {c}"), true)
            }
            CellStatus::NoRelation { k, found } => (
                format!(
                    "no relation at k={k} (relations at {} earlier k)",
                    found.len()
                ),
                true,
            ),
            CellStatus::Inconsistent { detail, .. } => {
                (format!("inconsistent: {detail}"), true)
            }
            CellStatus::Divergent => ("divergent".into(), true),
            CellStatus::Unresolved { detail } => (format!("unresolved: {detail}"), false),
        };
        rep.emit(
            Record {
                id: cell_id(cell.p, cell.q, cell.r),
                k: None,
                lhs: summary.clone(),
                rhs: String::new(),
                diff: "0".into(),
                bound: "0".into(),
                verdict: if ok { "pass".into() } else { "fail".into() },
            },
            format!("{}: {summary}", cell_id(cell.p, cell.q, cell.r)),
        );
    }

    for (p, q, r, a, b, c) in &hits {
        let fit = discovery::fit_f_of_k(&tpl, (*p, *q, *r), (*a, *b, *c), fit_kmax)
            .map_err(math)?;
        let summary = match &fit.outcome {
            FitOutcome::Matched(members) => {
                let names: Vec<String> = members.iter().map(|m| m.to_string()).collect();
                format!("f(k) = {}", names.join(" | "))
            }
            FitOutcome::UnrecognizedRatios(ratios) => {
                let shown: Vec<String> = ratios
                    .iter()
                    .map(|(k, v)| format!("f({})/f({k}) = {v}", k + 1))
                    .collect();
                format!("unrecognized f(k) ratios: {}", shown.join(", "))
            }
        };
        rep.emit(
            Record {
                id: format!("{}.fit", cell_id(*p, *q, *r)),
                k: None,
                lhs: summary.clone(),
                rhs: String::new(),
                diff: "0".into(),
                bound: "0".into(),
                verdict: "pass".into(),
            },
            format!("{}: {summary}", cell_id(*p, *q, *r)),
        );
    }
    rep.note(format!("{} hit(s) in {} cells", hits.len(), report.cells.len()));
    Ok(rep.all_pass)
}

// ---------------------------------------------------------------------------
// profile
// ---------------------------------------------------------------------------

fn cmd_profile(
    config: &RunConfig,
    ids: &[String],
    ks: &[i64],
    file: Option<&Path>,
) -> Result<bool, CliError> {
    if ids.is_empty() {
        return Err(usage("profile needs at least one formula id"));
    }
    let cat = load_catalog(file)?;
    let entries = resolve(&cat, ids)?;
    let precision = config.precision();

    let mut jobs_list = Vec::new();
    for &entry in &entries {
        for &k in ks {
            jobs_list.push((entry, k));
        }
    }
    let n_top = config.terms.unwrap_or(200) as u64;
    let checkpoints: Vec<u64> = {
        let mut v: Vec<u64> = (1..=8).map(|i| (n_top * i).div_ceil(8)).collect();
        v.dedup();
        v
    };

    let seed = config.seed;
    let jobs_ref = &jobs_list;
    let checkpoints_ref = &checkpoints;
    let blocks = install_pool(config.jobs, move || {
        use rayon::prelude::*;
        let mut order: Vec<usize> = (0..jobs_ref.len()).collect();
        // Seeded work order; output is reassembled in input order below.
        order.sort_by_key(|&i| {
            let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed;
            for byte in (i as u64).to_le_bytes() {
                h ^= u64::from(byte);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
            h
        });
        // (terms evaluated, correct digits) pairs per job, or the error text.
        type DigitCurve = Result<Vec<(u64, f64)>, String>;
        let mut blocks: Vec<(usize, DigitCurve)> = order
            .par_iter()
            .map(|&i| {
                let (entry, k) = &jobs_ref[i];
                let res = analysis::digit_counts(&entry.term(), &int(*k), checkpoints_ref, precision)
                    .map(|pts| {
                        pts.into_iter().map(|(n, d)| (n, d.to_f64())).collect::<Vec<_>>()
                    })
                    .map_err(|e| e.to_string());
                (i, res)
            })
            .collect();
        blocks.sort_by_key(|(i, _)| *i);
        blocks
    })?;

    let mut rep = Reporter::new(config.output);
    for (i, res) in blocks {
        let (entry, k) = &jobs_list[i];
        let points = res.map_err(|e| math(format!("{} k={k}: {e}", entry.id)))?;
        rep.note(format!("# {} k={k}", entry.id));
        rep.note("N\td(N)");
        for (n, d) in &points {
            rep.emit(
                Record {
                    id: entry.id.clone(),
                    k: Some(k.to_string()),
                    lhs: n.to_string(),
                    rhs: format!("{d:.4}"),
                    diff: "0".into(),
                    bound: "0".into(),
                    verdict: "pass".into(),
                },
                format!("{n}\t{d:.4}"),
            );
        }
        if let Some((n, d)) = points.last() {
            rep.note(format!("digits/term at N={n}: {:.4}", d / *n as f64));
        }
    }
    Ok(rep.all_pass)
}
