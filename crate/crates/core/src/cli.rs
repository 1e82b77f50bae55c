//! The `jn-lab` command line: one subcommand per group of checks, reports as
//! text, CSV or JSON.
//!
//! Exit codes: `0` every check passed, `1` a check was refuted, `2` usage or
//! configuration error, `3` some check was inconclusive.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::analysis::{
    convergence_table, generalized_table, parse_sizes, random_block_function, run_trials_on, strongly_normal_partial,
    trial_rng, ConvergenceRow, DecayVerdict, GeneralizedRow, TrialForm, TrialRow,
};
use crate::complemented::{
    build_bumps, is_half_identity, random_projection_trials, random_st_trials, sign_bumps, BumpFamily,
};
use crate::error::{Error, Result};
use crate::exactmath::{fmt_rat, identity_suite, pi_interval, rat, to_decimal, BigRat, Certainty, PiInterval};
use crate::measures::{build_mu, configured_n_max, IndexRectangle, JNMeasure, MeasureDoc, SignMatrix};
use crate::rectopt::{
    bound4_table, brute_sup_for, oracle_sup_for, sup_closed, BoundsRow, RectWitness, BRUTE_N_MAX, ORACLE_N_MAX,
};
use crate::spaces::{ProductFunction, Side, TestFunction};

/// Largest `n` accepted by `bounds`, which only uses the closed form.
pub const BOUNDS_N_MAX: u64 = 1_000_000;
/// Largest table printed by `construct`.
const CONSTRUCT_TABLE_N_MAX: u32 = 12;
/// Wallis range from which both sequences must lie within `10^-4` of `2/pi`.
const WALLIS_TOL_M: u64 = 10_000;
/// Widest field that still sets a text column width.
const TEXT_COLUMN_MAX: usize = 24;

#[derive(Parser, Debug)]
#[command(name = "jn-lab", version, about = "Exact checks for an explicit Josefson-Nissenzweig sequence")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Single size parameter
    #[arg(long, global = true, conflicts_with = "n_max")]
    pub n: Option<u32>,
    /// Upper end of a range of sizes (for verify-identities: the Wallis range)
    #[arg(long = "n-max", global = true)]
    pub n_max: Option<u64>,
    /// Upper end of the binomial identity range
    #[arg(long = "k-max", global = true)]
    pub k_max: Option<u64>,
    /// Decimal digits of pi used for certification
    #[arg(long, global = true, default_value_t = 50, value_parser = clap::value_parser!(u32).range(1..=120))]
    pub digits: u32,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write the report here instead of standard output
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Test function on K: pow:p, affine:a,b, indicator:t or table:@file.csv
    #[arg(long = "fn", global = true)]
    pub fn_spec: Option<String>,
    /// Test function on L, same grammar as --fn
    #[arg(long = "gn", global = true)]
    pub gn_spec: Option<String>,
    /// Block sizes: a1:b1,a2:b2,... or id:N or pow2:N
    #[arg(long, global = true)]
    pub sizes: Option<String>,
    /// Number of random trials
    #[arg(long, global = true)]
    pub trials: Option<u32>,
    /// Replace the sign matrix by a corrupted one (all-plus row lost)
    #[arg(long = "inject-fault", global = true, hide = true)]
    pub inject_fault: bool,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Build mu_n and check its norm, mass and support
    Construct,
    /// Supremum of |mu_n(A x B)| over rectangles
    Sup {
        /// Closed form only, unless --oracle is also given
        #[arg(long)]
        closed: bool,
        /// b: optimal rows for every column set; full: every rectangle
        #[arg(long, value_enum)]
        oracle: Option<Oracle>,
        /// Certify the majority-rows rectangle
        #[arg(long)]
        witness: bool,
    },
    /// Certified 1/(2 sqrt(pi n)) < sup < 2/sqrt(pi n) for n = 1..=n-max
    Bounds,
    /// Pascal, absorption, S_k, g monotone, Wallis and central binomial checks
    VerifyIdentities,
    /// Random product functions against the decay bound
    TensorTest,
    /// Random sum functions against the decay bound
    SumTest,
    /// mu_n(f) for one test function, n = 1..=n-max
    Converge {
        #[arg(long, value_enum, default_value_t = Combine::Tensor)]
        combine: Combine,
    },
    /// Partial sums over a subsequence against the summed decay bounds
    StronglyNormal {
        #[arg(long, default_value = "1,4,9,16")]
        subseq: String,
    },
    /// The construction for arbitrary block sizes
    Generalized,
    /// Disjoint bumps, T, S and P = TS
    Complemented,
    /// Every suite at small sizes
    Selftest,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Oracle {
    B,
    Full,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Combine {
    Tensor,
    Sum,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Text,
}

/// Overall outcome of a report.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn and(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            _ => Pass,
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::Inconclusive => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

impl From<bool> for Verdict {
    fn from(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

impl From<Certainty> for Verdict {
    fn from(c: Certainty) -> Self {
        match c {
            Certainty::ProvenStrict => Verdict::Pass,
            Certainty::ProvenFalse => Verdict::Fail,
            Certainty::Inconclusive => Verdict::Inconclusive,
        }
    }
}

impl From<DecayVerdict> for Verdict {
    fn from(d: DecayVerdict) -> Self {
        match d {
            DecayVerdict::ProvenHolds => Verdict::Pass,
            DecayVerdict::ProvenFails => Verdict::Fail,
            DecayVerdict::Inconclusive => Verdict::Inconclusive,
        }
    }
}

/// Settings echoed into every JSON report. The output path is left out so
/// that reports do not depend on where they are written.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub n: Option<u32>,
    pub n_max: Option<u64>,
    pub k_max: Option<u64>,
    pub digits: u32,
    pub seed: u64,
    pub format: Format,
    #[serde(rename = "fn", skip_serializing_if = "Option::is_none")]
    pub fn_spec: Option<String>,
    #[serde(rename = "gn", skip_serializing_if = "Option::is_none")]
    pub gn_spec: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sizes: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u32>,
    pub n_cap: u32,
}

impl RunConfig {
    fn from_cli(cli: &Cli) -> Self {
        RunConfig {
            n: cli.n,
            n_max: cli.n_max,
            k_max: cli.k_max,
            digits: cli.digits,
            seed: cli.seed,
            format: cli.format,
            fn_spec: cli.fn_spec.clone(),
            gn_spec: cli.gn_spec.clone(),
            sizes: cli.sizes.clone(),
            trials: cli.trials,
            n_cap: configured_n_max(),
        }
    }
}

/// A finished report: named results, an optional table, and a verdict.
#[derive(Clone, Debug)]
pub struct Report {
    pub command: String,
    pub results: Map<String, Value>,
    pub table: Option<(Vec<String>, Vec<Vec<String>>)>,
    pub verdict: Verdict,
}

impl Report {
    fn new(command: &str) -> Self {
        Report { command: command.to_string(), results: Map::new(), table: None, verdict: Verdict::Pass }
    }

    fn set(&mut self, key: &str, value: impl Serialize) {
        self.results.insert(key.to_string(), serde_json::to_value(value).expect("serializable"));
    }

    fn check(&mut self, key: &str, verdict: impl Into<Verdict>) {
        let v = verdict.into();
        self.set(key, v.as_str());
        self.verdict = self.verdict.and(v);
    }

    fn table<const N: usize>(&mut self, header: [&str; N], rows: Vec<Vec<String>>) {
        self.table = Some((header.iter().map(|s| s.to_string()).collect(), rows));
    }

    pub fn render(&self, format: Format, config: &RunConfig) -> String {
        match format {
            Format::Json => {
                let doc = json!({
                    "command": self.command,
                    "config": config,
                    "results": Value::Object(self.results.clone()),
                    "verdict": self.verdict.as_str(),
                });
                let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
                s.push('\n');
                s
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                match &self.table {
                    Some((header, rows)) => {
                        w.write_record(header).expect("in-memory write");
                        for r in rows {
                            w.write_record(r).expect("in-memory write");
                        }
                    }
                    None => {
                        w.write_record(["key", "value"]).expect("in-memory write");
                        for (k, v) in &self.results {
                            w.write_record([k.as_str(), &scalar(v)]).expect("in-memory write");
                        }
                        w.write_record(["verdict", self.verdict.as_str()]).expect("in-memory write");
                    }
                }
                String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
            }
            Format::Text => {
                let mut s = format!("{}: {}\n", self.command, self.verdict.as_str());
                for (k, v) in &self.results {
                    s.push_str(&format!("  {k}: {}\n", scalar(v)));
                }
                if let Some((header, rows)) = &self.table {
                    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
                    // long exact values overflow their column instead of widening it
                    for r in rows {
                        for (w, f) in widths.iter_mut().zip(r) {
                            if f.len() <= TEXT_COLUMN_MAX {
                                *w = (*w).max(f.len());
                            }
                        }
                    }
                    let line = |fields: &[String]| {
                        let cells: Vec<String> = fields.iter().zip(&widths).map(|(f, w)| format!("{f:<w$}")).collect();
                        format!("{}\n", cells.join("  ").trim_end())
                    };
                    s.push_str(&line(header));
                    for r in rows {
                        s.push_str(&line(r));
                    }
                }
                s
            }
        }
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Parses `argv` (including the program name), runs the command and writes
/// the report. Returns the exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run(argv, &mut io::stdout().lock(), &mut io::stderr().lock())
}

/// [`dispatch`] with explicit output streams.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = if e.use_stderr() { e.render().to_string() } else { e.to_string() };
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let config = RunConfig::from_cli(&cli);
    let report = match execute(&cli) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 2;
        }
    };
    let text = report.render(cli.format, &config);
    let written = match &cli.out {
        Some(path) => File::create(path).and_then(|mut f| f.write_all(text.as_bytes())),
        None => out.write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        let _ = writeln!(err, "error: {e}");
        return 2;
    }
    report.verdict.exit_code()
}

/// Runs the parsed command.
pub fn execute(cli: &Cli) -> Result<Report> {
    let pi = pi_interval(cli.digits)?;
    match &cli.command {
        Command::Construct => construct(cli),
        Command::Sup { closed, oracle, witness } => sup(cli, *closed, *oracle, *witness),
        Command::Bounds => bounds(cli, &pi),
        Command::VerifyIdentities => verify_identities(cli, &pi),
        Command::TensorTest => trials(cli, TrialForm::Tensor, &pi),
        Command::SumTest => trials(cli, TrialForm::Sum, &pi),
        Command::Converge { combine } => converge(cli, *combine, &pi),
        Command::StronglyNormal { subseq } => strongly_normal(cli, subseq, &pi),
        Command::Generalized => generalized(cli, &pi),
        Command::Complemented => complemented(cli),
        Command::Selftest => selftest(cli),
    }
}

fn capped(n: u64, what: &'static str, max: u64) -> Result<u64> {
    if n == 0 || n > max {
        return Err(Error::SizeLimit { what, n, max });
    }
    Ok(n)
}

fn single_n(cli: &Cli, default: u32) -> Result<u32> {
    let n = cli.n.unwrap_or(default);
    capped(n as u64, "n", configured_n_max() as u64).map(|n| n as u32)
}

fn range_max(cli: &Cli, default: u64, what: &'static str, max: u64) -> Result<u64> {
    let n = cli.n_max.or(cli.n.map(u64::from)).unwrap_or(default);
    capped(n, what, max)
}

/// The measure under test: canonical, or with its all-plus row overwritten
/// by the all-minus row when a fault is injected.
fn measure_for(cli: &Cli, n: u32) -> Result<JNMeasure> {
    if !cli.inject_fault {
        return build_mu(n);
    }
    let mut patterns: Vec<u64> = (0..1u64 << n).collect();
    let last = patterns.len() - 1;
    patterns[last] = patterns[0];
    Ok(JNMeasure::from_matrix(SignMatrix::from_patterns_unchecked(n, patterns)?))
}

fn construct(cli: &Cli) -> Result<Report> {
    let n = single_n(cli, 4)?;
    let mu = measure_for(cli, n)?;
    let mut r = Report::new("construct");
    r.set("measure", MeasureDoc::new(&mu, None));
    r.set("support_size", mu.support_size());
    r.set("total_variation", fmt_rat(&mu.total_variation()));
    r.set("total_mass", fmt_rat(&mu.total_mass()));
    r.set("positive_mass", fmt_rat(&mu.positive_mass()));
    r.check("sign_matrix_valid", mu.matrix().validate().is_ok());
    r.check("norm_one", mu.total_variation().is_one());
    r.check("mass_zero", mu.total_mass().is_zero());
    r.check("support_full", mu.support_size() == n as u64 * (1u64 << n));
    r.check("positive_half", mu.positive_mass() == rat(1, 2));
    if n <= CONSTRUCT_TABLE_N_MAX {
        let rows = mu
            .atoms()
            .map(|(s, j, sign)| vec![s.to_string(), j.to_string(), fmt_rat(&(mu.scale() * BigInt::from(sign)))])
            .collect();
        r.table(["s", "j", "weight"], rows);
    }
    Ok(r)
}

fn rect_json(w: &RectWitness) -> Value {
    json!({ "rows": w.rect.rows, "cols": w.rect.cols, "value": fmt_rat(&w.value) })
}

fn sup(cli: &Cli, closed: bool, oracle: Option<Oracle>, witness: bool) -> Result<Report> {
    let n = single_n(cli, 4)?;
    let oracle = match (closed, oracle) {
        (_, Some(o)) => Some(o),
        (true, None) => None,
        (false, None) => (n <= ORACLE_N_MAX).then_some(Oracle::B),
    };
    match oracle {
        Some(Oracle::Full) => capped(n as u64, "n for --oracle full", BRUTE_N_MAX as u64)?,
        Some(Oracle::B) => capped(n as u64, "n for --oracle b", ORACLE_N_MAX as u64)?,
        None => n as u64,
    };
    let closed_value = sup_closed(n as u64);
    let mut r = Report::new("sup");
    r.set("n", n);
    r.set("sup_closed", fmt_rat(&closed_value));
    r.set("sup_decimal", to_decimal(&closed_value, 12));
    let mu = measure_for(cli, n)?;
    match oracle {
        Some(Oracle::B) => {
            let w = oracle_sup_for(&mu)?;
            r.check("oracle_b_matches", w.value == closed_value);
            r.set("oracle_b", rect_json(&w));
        }
        Some(Oracle::Full) => {
            let v = brute_sup_for(&mu)?;
            r.check("oracle_full_matches", v == closed_value);
            r.set("oracle_full", fmt_rat(&v));
        }
        None => {}
    }
    if witness {
        let m = mu.matrix();
        let full = m.full_mask();
        let rows: Vec<u64> = (0..m.num_rows()).filter(|&s| m.row_sum(s, full) > 0).collect();
        let w = RectWitness::evaluate(&mu, IndexRectangle::new(rows, (0..n).collect()))?;
        r.check("witness_attains", w.value == closed_value);
        r.set("witness", rect_json(&w));
    }
    Ok(r)
}

fn bounds(cli: &Cli, pi: &PiInterval) -> Result<Report> {
    let n_max = range_max(cli, 100, "n-max for bounds", BOUNDS_N_MAX)?;
    let table = bound4_table(n_max, pi);
    let mut r = Report::new("bounds");
    let overall = table.iter().fold(Certainty::ProvenStrict, |acc, v| acc.and(v.both()));
    r.set("n_max", n_max);
    r.set("proven", table.iter().filter(|v| v.both().is_proven()).count());
    r.check("bounds", overall);
    let rows = table.iter().map(|v| BoundsRow::new(v, pi).fields()).collect();
    r.table(BoundsRow::HEADER, rows);
    Ok(r)
}

fn verify_identities(cli: &Cli, pi: &PiInterval) -> Result<Report> {
    let k_max = capped(cli.k_max.unwrap_or(1000), "k-max", 100_000)?;
    let m_max = capped(cli.n_max.unwrap_or(10_000), "n-max for the Wallis range", 1_000_000)?;
    let rep = identity_suite(k_max, m_max, pi);
    let tol = rat(1, 10_000);
    let mut r = Report::new("verify-identities");
    r.set("k_max", k_max);
    r.set("m_max", m_max);
    r.check("pascal", rep.pascal);
    r.check("absorption", rep.absorption);
    r.check("s_identity", rep.s_identity);
    r.check("g_monotone", rep.g_monotone);
    r.check("wallis_monotone", rep.wallis_monotone);
    r.check("wallis_closed_form", rep.wallis_closed);
    r.check("wallis_bracket", rep.wallis_bracket);
    r.set("wallis_width_decimal", to_decimal(&rep.wallis_width, 12));
    // the width is about 1/(pi m), so the tolerance is only meaningful at full range
    if m_max >= WALLIS_TOL_M {
        r.check("wallis_within_1e-4", rep.wallis_width < tol);
    }
    r.check("central_binomial_bounds", rep.central_binom);
    Ok(r)
}

fn trials(cli: &Cli, form: TrialForm, pi: &PiInterval) -> Result<Report> {
    let n_max = range_max(cli, 10, "n-max", configured_n_max() as u64)? as u32;
    let count = cli.trials.unwrap_or(1000);
    let rows: Vec<TrialRow> = run_trials_on(form, 1..=n_max, count, cli.seed, pi, |n| measure_for(cli, n))?;
    let name = match form {
        TrialForm::Tensor => "tensor-test",
        TrialForm::Sum => "sum-test",
    };
    let mut r = Report::new(name);
    let tally = |v: DecayVerdict| rows.iter().filter(|row| row.verdict == v).count();
    r.set("trials", rows.len());
    r.set("proven_holds", tally(DecayVerdict::ProvenHolds));
    r.set("proven_fails", tally(DecayVerdict::ProvenFails));
    r.set("inconclusive", tally(DecayVerdict::Inconclusive));
    let overall = rows.iter().fold(DecayVerdict::ProvenHolds, |acc, row| acc.and(row.verdict));
    r.check("bound", overall);
    r.table(TrialRow::HEADER, rows.iter().map(TrialRow::fields).collect());
    Ok(r)
}

fn test_function(spec: &Option<String>, default: &str) -> Result<TestFunction> {
    TestFunction::parse(spec.as_deref().unwrap_or(default))
}

fn converge(cli: &Cli, combine: Combine, pi: &PiInterval) -> Result<Report> {
    let n_max = range_max(cli, 12, "n-max", configured_n_max() as u64)? as u32;
    let f = test_function(&cli.fn_spec, "pow:1")?;
    let g = test_function(&cli.gn_spec, "pow:1")?;
    f.check_continuity()?;
    g.check_continuity()?;
    let h = match combine {
        Combine::Tensor => ProductFunction::Tensor(f, g),
        Combine::Sum => ProductFunction::Sum(f, g),
    };
    let rows: Vec<ConvergenceRow> = convergence_table(&h, 1..=n_max, pi)?;
    let mut r = Report::new("converge");
    r.set("function", h.to_string());
    r.set("rectangle", h.as_rectangle().is_some());
    let overall = rows.iter().fold(DecayVerdict::ProvenHolds, |acc, row| acc.and(row.verdict.unwrap_or(DecayVerdict::ProvenHolds)));
    r.check("bound", overall);
    r.table(ConvergenceRow::HEADER, rows.iter().map(ConvergenceRow::fields).collect());
    Ok(r)
}

fn parse_subseq(s: &str) -> Result<Vec<u32>> {
    s.split(',')
        .map(|t| t.trim().parse::<u32>().map_err(|_| Error::Parse(format!("bad subsequence entry {t:?}"))))
        .collect()
}

fn strongly_normal(cli: &Cli, subseq: &str, pi: &PiInterval) -> Result<Report> {
    let subseq = parse_subseq(subseq)?;
    let mut r = Report::new("strongly-normal");
    r.set("subsequence", &subseq);
    let pairs: Vec<(String, TestFunction, TestFunction)> = match (&cli.fn_spec, &cli.gn_spec) {
        (None, None) => {
            let count = cli.trials.unwrap_or(100);
            (0..count)
                .map(|t| {
                    let mut rng = trial_rng(cli.seed, 0, t);
                    let f = random_block_function(&mut rng, Side::K, &subseq);
                    let g = random_block_function(&mut rng, Side::L, &subseq);
                    (t.to_string(), f, g)
                })
                .collect()
        }
        _ => {
            let f = test_function(&cli.fn_spec, "pow:1")?;
            let g = test_function(&cli.gn_spec, "pow:1")?;
            vec![("0".to_string(), f, g)]
        }
    };
    let mut rows = Vec::new();
    let mut overall = DecayVerdict::ProvenHolds;
    for (label, f, g) in &pairs {
        let rep = strongly_normal_partial(&subseq, f, g, pi)?;
        overall = overall.and(rep.verdict);
        rows.push(vec![
            label.clone(),
            to_decimal(&rep.partial_sum, 12),
            to_decimal(&rep.bound_floor, 12),
            rep.verdict.to_string(),
        ]);
    }
    r.set("trials", pairs.len());
    r.check("partial_sum_bound", overall);
    r.table(["trial", "partial_sum_decimal", "bound_floor_decimal", "verdict"], rows);
    Ok(r)
}

fn generalized(cli: &Cli, pi: &PiInterval) -> Result<Report> {
    let spec = cli.sizes.as_deref().unwrap_or("id:50");
    let sizes = parse_sizes(spec)?;
    let rows: Vec<GeneralizedRow> = generalized_table(&sizes, cli.seed, cli.trials.unwrap_or(4), pi)?;
    let mut r = Report::new("generalized");
    r.set("sizes", spec);
    r.set("stages", rows.last().map_or(0, |row| row.stage));
    let overall = rows.iter().fold(Certainty::ProvenStrict, |acc, row| acc.and(row.holds()));
    r.check("norm_support_envelope", overall);
    if rows.iter().any(|row| row.matches_mu.is_some()) {
        r.check("matches_fixed_sizes", rows.iter().all(|row| row.matches_mu != Some(false)));
    }
    r.table(GeneralizedRow::HEADER, rows.iter().map(GeneralizedRow::fields).collect());
    Ok(r)
}

fn family_ranges(fam: &BumpFamily) -> Result<Vec<(BigRat, BigRat)>> {
    (1..=fam.n_max()).map(|n| fam.range(n)).collect()
}

fn complemented(cli: &Cli) -> Result<Report> {
    let n_max = range_max(cli, 8, "n-max", configured_n_max() as u64)? as u32;
    let seed = cli.seed;
    let fam = build_bumps(n_max)?;
    let mut r = Report::new("complemented");
    r.set("n_max", n_max);
    let matrix = fam.orthogonality_matrix()?;
    let printable: Vec<Vec<String>> = matrix.iter().map(|row| row.iter().map(fmt_rat).collect()).collect();
    r.set("orthogonality_matrix", &printable);
    r.check("orthogonality_half_identity", is_half_identity(&matrix));
    let t: Vec<String> = (1..=n_max).map(|n| fam.t(n).map(fmt_rat)).collect::<Result<_>>()?;
    r.set("t", &t);
    let disjoint = fam.certify_disjointness()?;
    r.set("min_hat_gap", fmt_rat(&disjoint.min_gap));
    r.check("disjoint_supports", disjoint.holds);
    let ranges = family_ranges(&fam)?;
    r.check("bump_range_0_1", ranges.iter().all(|(lo, hi)| lo.is_zero() && hi.is_one()));

    let st_trials = cli.trials.unwrap_or(100);
    let st_passed = random_st_trials(&fam, st_trials, seed, n_max)?;
    r.set("st_identity_trials", format!("{st_passed}/{st_trials}"));
    r.check("st_identity", st_passed == st_trials);
    let p_range = n_max.min(8);
    let p_trials = 20;
    let p_passed = random_projection_trials(&build_bumps(p_range)?, p_trials, seed, p_range)?;
    r.set("projection_trials", format!("{p_passed}/{p_trials}"));
    r.check("projection_idempotent", p_passed == p_trials);

    let signed = sign_bumps(n_max)?;
    let sm = signed.orthogonality_matrix()?;
    let identity = sm.iter().enumerate().all(|(i, row)| row.iter().enumerate().all(|(j, v)| *v == if i == j { BigRat::one() } else { BigRat::zero() }));
    r.check("sign_bumps_biorthogonal", identity);
    let sranges = family_ranges(&signed)?;
    r.set("sign_bump_range", "[-1, 1]");
    r.check("sign_bump_range_both_signs", sranges.iter().all(|(lo, hi)| *lo == -BigRat::one() && hi.is_one()));
    Ok(r)
}

fn sub_cli(base: &Cli, command: Command, edit: impl FnOnce(&mut Cli)) -> Cli {
    let mut c = Cli {
        command,
        n: None,
        n_max: None,
        k_max: None,
        digits: base.digits,
        seed: base.seed,
        format: base.format,
        out: None,
        fn_spec: None,
        gn_spec: None,
        sizes: None,
        trials: None,
        inject_fault: base.inject_fault,
    };
    edit(&mut c);
    c
}

fn selftest(cli: &Cli) -> Result<Report> {
    let plan: Vec<(&str, Cli)> = vec![
        ("construct", sub_cli(cli, Command::Construct, |c| c.n = Some(6))),
        ("sup-full", sub_cli(cli, Command::Sup { closed: false, oracle: Some(Oracle::Full), witness: true }, |c| c.n = Some(4))),
        ("sup-b", sub_cli(cli, Command::Sup { closed: false, oracle: Some(Oracle::B), witness: true }, |c| c.n = Some(8))),
        ("bounds", sub_cli(cli, Command::Bounds, |c| c.n_max = Some(200))),
        ("verify-identities", sub_cli(cli, Command::VerifyIdentities, |c| {
            c.k_max = Some(200);
            c.n_max = Some(500);
        })),
        ("tensor-test", sub_cli(cli, Command::TensorTest, |c| {
            c.n_max = Some(6);
            c.trials = Some(20);
        })),
        ("sum-test", sub_cli(cli, Command::SumTest, |c| {
            c.n_max = Some(6);
            c.trials = Some(20);
        })),
        ("converge", sub_cli(cli, Command::Converge { combine: Combine::Tensor }, |c| c.n_max = Some(8))),
        ("converge-rectangle", sub_cli(cli, Command::Converge { combine: Combine::Tensor }, |c| {
            c.n_max = Some(8);
            c.fn_spec = Some("indicator:1/4".into());
            c.gn_spec = Some("indicator:1".into());
        })),
        ("strongly-normal", sub_cli(cli, Command::StronglyNormal { subseq: "1,4,9".into() }, |c| c.trials = Some(5))),
        ("generalized", sub_cli(cli, Command::Generalized, |c| c.sizes = Some("id:20".into()))),
        ("generalized-pow2", sub_cli(cli, Command::Generalized, |c| c.sizes = Some("pow2:8".into()))),
        ("complemented", sub_cli(cli, Command::Complemented, |c| {
            c.n_max = Some(5);
            c.trials = Some(10);
        })),
    ];
    let mut r = Report::new("selftest");
    let mut rows = Vec::new();
    for (name, sub) in &plan {
        let rep = execute(sub)?;
        rows.push(vec![name.to_string(), rep.verdict.as_str().to_string()]);
        r.check(name, rep.verdict);
    }
    r.table(["check", "verdict"], rows);
    Ok(r)
}
