//! Command-line configuration and dispatch.
//!
//! Every subcommand reads the same flat set of fields from flags and, optionally,
//! a JSON config file (`--config`); flags win. Rationals are written `a/b`, `a`,
//! or `n/d` and `n`, which resolve against `n`. Seeds are `a..b` (inclusive) or a
//! comma-separated list.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::containers::{fingerprint, ContainerConfig};
use crate::density::DensityTable;
use crate::error::{Error, Result};
use crate::extremal::max_k_chain_free;
use crate::lattice::SubsetFamily;
use crate::random_lab::{
    export, run_trials, sample_power_set, sparse_regime_trial, to_csv_string, to_json_string, union_bound_evaluate,
    Format, TrialFlag, DEFAULT_TIMEOUT,
};
use crate::supersat::{build_balanced_hypergraph, largest_feasible_delta, max_codegree, BuildReport};

#[derive(Debug, Parser)]
#[command(name = "spernerlab", version, about = "Extremal set theory in the Boolean lattice")]
pub struct Cli {
    /// JSON file supplying any of the flags below; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Sample,
    Solve,
    Density,
    Supersaturate,
    Containers,
    Experiment,
    Bounds,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Sample => "sample",
            Mode::Solve => "solve",
            Mode::Density => "density",
            Mode::Supersaturate => "supersaturate",
            Mode::Containers => "containers",
            Mode::Experiment => "experiment",
            Mode::Bounds => "bounds",
        }
    }

    /// `(required, optional)` fields.
    fn fields(self) -> (&'static [&'static str], &'static [&'static str]) {
        match self {
            Mode::Sample => (&["n", "p", "seeds"], &["out"]),
            Mode::Solve => (&["family", "k"], &["n", "out"]),
            Mode::Density => (&["family", "k"], &["n", "out"]),
            Mode::Supersaturate => (&["n", "k", "m", "alpha"], &["delta", "family", "grid", "out"]),
            Mode::Containers => (&["family", "k"], &["n", "epsilon", "out"]),
            Mode::Experiment => (&["n", "k", "seeds"], &["p", "c", "out", "format"]),
            Mode::Bounds => (&["n", "k", "p", "epsilon", "K"], &[]),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample P(n, p) and write it as a family file.
    Sample(Params),
    /// Largest k-chain-free subfamily of a family file.
    Solve(Params),
    /// Table of scaled l-chain densities.
    Density(Params),
    /// Balanced supersaturated k-chain hypergraph.
    Supersaturate(Params),
    /// Fingerprint and container of a k-chain-free family.
    Containers(Params),
    /// Seeded random trials, one row per seed.
    Experiment(Params),
    /// Log-domain union bound over fingerprints.
    Bounds(Params),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Params {
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub delta: Option<String>,
    /// Chain parameter m.
    #[arg(long, alias = "chain-param-m")]
    pub m: Option<String>,
    #[arg(long)]
    pub epsilon: Option<String>,
    /// Fingerprint counting constant K.
    #[arg(long = "K", alias = "big-k")]
    pub big_k: Option<String>,
    /// Sparse-regime constant: trials at p = C/n.
    #[arg(long)]
    pub c: Option<String>,
    #[arg(long)]
    pub seeds: Option<String>,
    #[arg(long)]
    pub family: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    pub format: Option<String>,
    /// Denominator of the δ grid searched when --delta is absent.
    #[arg(long)]
    pub grid: Option<u32>,
}

/// A rational or integer given as a JSON number or string.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Scalar {
    Int(i64),
    Text(String),
}

impl Scalar {
    fn text(self) -> String {
        match self {
            Scalar::Int(v) => v.to_string(),
            Scalar::Text(s) => s,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum SeedSpec {
    List(Vec<u64>),
    Text(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    subcommand: Option<Mode>,
    n: Option<u32>,
    k: Option<u32>,
    p: Option<Scalar>,
    alpha: Option<Scalar>,
    delta: Option<Scalar>,
    #[serde(alias = "chain_param_m")]
    m: Option<Scalar>,
    epsilon: Option<Scalar>,
    #[serde(rename = "K")]
    big_k: Option<Scalar>,
    c: Option<Scalar>,
    seeds: Option<SeedSpec>,
    family: Option<PathBuf>,
    out: Option<PathBuf>,
    format: Option<String>,
    grid: Option<u32>,
}

/// Fully resolved configuration of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub subcommand: Mode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "ser_rat")]
    pub p: Option<BigRational>,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "ser_rat")]
    pub alpha: Option<BigRational>,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "ser_rat")]
    pub delta: Option<BigRational>,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "ser_rat")]
    pub chain_param_m: Option<BigRational>,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "ser_rat")]
    pub epsilon: Option<BigRational>,
    #[serde(rename = "K", skip_serializing_if = "Option::is_none", serialize_with = "ser_rat")]
    pub big_k: Option<BigRational>,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "ser_rat")]
    pub c: Option<BigRational>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<u32>,
}

fn ser_rat<S: serde::Serializer>(v: &Option<BigRational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(r) => s.serialize_str(&r.to_string()),
        None => s.serialize_none(),
    }
}

/// Parses `a/b`, `a`, `n`, `n/d` (the last two need `n`).
pub fn parse_rational(field: &str, text: &str, n: Option<u32>) -> Result<BigRational> {
    let text = text.trim();
    let (num, den) = text.split_once('/').unwrap_or((text, "1"));
    let num = num.trim();
    let num: BigInt = if num == "n" {
        n.ok_or_else(|| Error::config(field, format!("{text:?} refers to n, but n is not set")))?
            .into()
    } else {
        num.parse()
            .map_err(|_| Error::config(field, format!("expected a/b or n/d, got {text:?}")))?
    };
    let den: BigInt = den
        .trim()
        .parse()
        .map_err(|_| Error::config(field, format!("expected a/b or n/d, got {text:?}")))?;
    if den.is_positive() {
        Ok(BigRational::new(num, den))
    } else {
        Err(Error::config(field, "denominator must be positive"))
    }
}

/// Parses `a..b` (inclusive) or `s1,s2,...`.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let bad = || Error::config("seeds", format!("expected a..b or a comma list, got {text:?}"));
    if let Some((a, b)) = text.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(Error::config("seeds", "empty seed range"));
        }
        return Ok((a..=b).collect());
    }
    text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect()
}

fn read_file_config(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::config("config", format!("{}: {e}", path.display())))
}

fn split_command(cmd: Command) -> (Mode, Params) {
    match cmd {
        Command::Sample(p) => (Mode::Sample, p),
        Command::Solve(p) => (Mode::Solve, p),
        Command::Density(p) => (Mode::Density, p),
        Command::Supersaturate(p) => (Mode::Supersaturate, p),
        Command::Containers(p) => (Mode::Containers, p),
        Command::Experiment(p) => (Mode::Experiment, p),
        Command::Bounds(p) => (Mode::Bounds, p),
    }
}

/// Merges flags over the config file and checks fields against the subcommand.
pub fn resolve(cli: Cli) -> Result<RunConfig> {
    let file = match &cli.config {
        Some(path) => read_file_config(path)?,
        None => FileConfig::default(),
    };
    let (mode, flags) = split_command(cli.command);
    if let Some(other) = file.subcommand {
        if other != mode {
            return Err(Error::config(
                "subcommand",
                format!("config file is for {}, command line asks for {}", other.name(), mode.name()),
            ));
        }
    }
    let n = flags.n.or(file.n);
    let text = |flag: Option<String>, f: Option<Scalar>| flag.or(f.map(Scalar::text));
    let rat = |field: &str, v: Option<String>| v.map(|t| parse_rational(field, &t, n)).transpose();
    let seeds = match (flags.seeds, file.seeds) {
        (Some(t), _) | (None, Some(SeedSpec::Text(t))) => Some(parse_seeds(&t)?),
        (None, Some(SeedSpec::List(v))) => Some(v),
        (None, None) => None,
    };
    let cfg = RunConfig {
        subcommand: mode,
        n,
        k: flags.k.or(file.k),
        p: rat("p", text(flags.p, file.p))?,
        alpha: rat("alpha", text(flags.alpha, file.alpha))?,
        delta: rat("delta", text(flags.delta, file.delta))?,
        chain_param_m: rat("m", text(flags.m, file.m))?,
        epsilon: rat("epsilon", text(flags.epsilon, file.epsilon))?,
        big_k: rat("K", text(flags.big_k, file.big_k))?,
        c: rat("c", text(flags.c, file.c))?,
        seeds,
        family: flags.family.or(file.family),
        out: flags.out.or(file.out),
        format: flags.format.or(file.format),
        grid: flags.grid.or(file.grid),
    };
    check_fields(&cfg)?;
    Ok(cfg)
}

fn present(cfg: &RunConfig) -> Vec<&'static str> {
    let flags = [
        ("n", cfg.n.is_some()),
        ("k", cfg.k.is_some()),
        ("p", cfg.p.is_some()),
        ("alpha", cfg.alpha.is_some()),
        ("delta", cfg.delta.is_some()),
        ("m", cfg.chain_param_m.is_some()),
        ("epsilon", cfg.epsilon.is_some()),
        ("K", cfg.big_k.is_some()),
        ("c", cfg.c.is_some()),
        ("seeds", cfg.seeds.is_some()),
        ("family", cfg.family.is_some()),
        ("out", cfg.out.is_some()),
        ("format", cfg.format.is_some()),
        ("grid", cfg.grid.is_some()),
    ];
    flags.iter().filter(|(_, on)| *on).map(|(name, _)| *name).collect()
}

fn check_fields(cfg: &RunConfig) -> Result<()> {
    let (required, optional) = cfg.subcommand.fields();
    let given = present(cfg);
    if let Some(missing) = required.iter().find(|f| !given.contains(f)) {
        return Err(Error::config(
            *missing,
            format!("required by {}", cfg.subcommand.name()),
        ));
    }
    if let Some(extra) = given.iter().find(|f| !required.contains(f) && !optional.contains(f)) {
        return Err(Error::config(
            *extra,
            format!("not used by {}", cfg.subcommand.name()),
        ));
    }
    if let Some(n) = cfg.n {
        // bounds never builds a family, only binomials up to u128
        let max = if cfg.subcommand == Mode::Bounds { 128 } else { crate::lattice::MAX_N };
        if n == 0 || n > max {
            return Err(Error::config("n", format!("must lie in 1..={max}")));
        }
    }
    if cfg.k == Some(0) {
        return Err(Error::config("k", "must be positive"));
    }
    if let Some(p) = &cfg.p {
        if p.is_negative() || p > &BigRational::one() {
            return Err(Error::config("p", format!("must lie in [0, 1], got {p}")));
        }
    }
    if cfg.subcommand == Mode::Experiment && cfg.p.is_some() == cfg.c.is_some() {
        return Err(Error::config("p", "experiment needs exactly one of p and c"));
    }
    if cfg.subcommand == Mode::Sample && cfg.seeds.as_ref().is_some_and(|s| s.len() != 1) {
        return Err(Error::config("seeds", "sample takes a single seed"));
    }
    if let Some(f) = &cfg.format {
        f.parse::<Format>().map_err(|e| Error::config("format", e.to_string()))?;
    }
    Ok(())
}

/// Parses argv into a resolved config; clap errors carry clap's own message and exit code.
pub fn parse_config<I, T>(args: I) -> std::result::Result<Result<RunConfig>, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    Ok(resolve(cli))
}

fn load_family(cfg: &RunConfig) -> Result<SubsetFamily> {
    let path = cfg.family.as_ref().expect("checked as required");
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let fam = SubsetFamily::parse_text(&text)?;
    if let Some(n) = cfg.n {
        if n != fam.n() {
            return Err(Error::config("n", format!("--n {n} disagrees with the family file (n={})", fam.n())));
        }
    }
    Ok(fam)
}

fn emit(cfg: &RunConfig, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match &cfg.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn hex(masks: &[u32]) -> Vec<String> {
    masks.iter().map(|m| format!("{m:x}")).collect()
}

fn json_line(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string(v).expect("values serialize");
    s.push('\n');
    s
}

fn report_json(report: &BuildReport) -> Result<serde_json::Value> {
    let h = &report.hypergraph;
    let k = h.k();
    let degrees = (1..=k).map(|l| max_codegree(h, l)).collect::<Result<Vec<_>>>()?;
    let caps = (1..=k).map(|l| h.ledger().cap(l)).collect::<Result<Vec<_>>>()?;
    Ok(json!({
        "delta": h.ledger().delta().to_string(),
        "m": h.ledger().chain_param_m().to_string(),
        "edges": h.edge_count(),
        "target": report.target.to_string(),
        "target_met": report.target_met,
        "stop": report.stop.map(|s| format!("{s:?}")),
        "max_codegrees": degrees,
        "caps": caps,
    }))
}

/// Runs the configured subcommand, writing primary output to `--out` or `stdout`.
pub fn dispatch(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let need = |v: Option<u32>| v.expect("checked as required");
    match cfg.subcommand {
        Mode::Sample => {
            let seeds = cfg.seeds.as_ref().expect("checked");
            let fam = sample_power_set(need(cfg.n), cfg.p.as_ref().expect("checked"), seeds[0])?;
            emit(cfg, &fam.to_text(), stdout)
        }
        Mode::Solve => {
            let fam = load_family(cfg)?;
            let sol = max_k_chain_free(&fam, need(cfg.k))?;
            let partition: Vec<Vec<String>> = sol.chain_partition.iter().map(|c| hex(c)).collect();
            let out = json!({
                "size": sol.size,
                "witness_masks": hex(&sol.witness),
                "method": sol.method,
                "certificate": {
                    "chain_partition": partition,
                    "cost": sol.partition_cost(need(cfg.k) as usize - 1),
                },
            });
            emit(cfg, &json_line(&out), stdout)
        }
        Mode::Density => {
            let fam = load_family(cfg)?;
            let table = DensityTable::build(&fam, need(cfg.k))?;
            emit(cfg, &table.to_csv(), stdout)
        }
        Mode::Supersaturate => {
            let n = need(cfg.n);
            let k = need(cfg.k);
            let fam = match &cfg.family {
                Some(_) => load_family(cfg)?,
                None => SubsetFamily::full(n)?.filter(|x| 3 * x.count_ones() >= n),
            };
            let m = cfg.chain_param_m.as_ref().expect("checked");
            let alpha = cfg.alpha.as_ref().expect("checked");
            let (report, feasible, tried) = match &cfg.delta {
                Some(delta) => {
                    let r = build_balanced_hypergraph(&fam, k, delta, m, alpha)?;
                    let feasible = r.target_met.then(|| delta.to_string());
                    (r, feasible, Vec::new())
                }
                None => {
                    let search = largest_feasible_delta(&fam, k, m, alpha, cfg.grid.unwrap_or(32))?;
                    let tried: Vec<_> = search
                        .tried
                        .iter()
                        .map(|(d, ok)| json!({"delta": d.to_string(), "target_met": ok}))
                        .collect();
                    match (search.report, search.delta) {
                        (Some(r), Some(d)) => (r, Some(d.to_string()), tried),
                        // nothing feasible: show the build at the smallest admissible δ
                        _ => (build_balanced_hypergraph(&fam, k, &m.recip(), m, alpha)?, None, tried),
                    }
                }
            };
            let mut out = report_json(&report)?;
            out["largest_feasible_delta"] = feasible.into();
            out["searched"] = tried.into();
            if let Some(path) = &cfg.out {
                std::fs::write(path, report.hypergraph.to_dump()).map_err(|e| Error::io(path, e))?;
            } else {
                stdout
                    .write_all(report.hypergraph.to_dump().as_bytes())
                    .map_err(|e| Error::io("<stdout>", e))?;
            }
            stdout
                .write_all(json_line(&out).as_bytes())
                .map_err(|e| Error::io("<stdout>", e))
        }
        Mode::Containers => {
            let fam = load_family(cfg)?;
            let mut cc = ContainerConfig::new(need(cfg.k));
            if let Some(e) = &cfg.epsilon {
                cc.epsilon = e.clone();
            }
            let fp = fingerprint(&fam, &cc)?;
            let mut text = fp.to_json();
            text.push('\n');
            emit(cfg, &text, stdout)
        }
        Mode::Experiment => {
            let n = need(cfg.n);
            let k = need(cfg.k);
            let seeds = cfg.seeds.as_ref().expect("checked");
            let format = cfg.format.as_deref().unwrap_or("csv").parse::<Format>()?;
            let (records, summary) = match (&cfg.p, &cfg.c) {
                (Some(p), None) => (run_trials(n, k, p, seeds, DEFAULT_TIMEOUT)?, None),
                (None, Some(c)) => {
                    let s = sparse_regime_trial(n, k, c, seeds)?;
                    let certified: Vec<_> = s
                        .records
                        .iter()
                        .map(|r| json!({"seed": r.trial.seed, "explicit": r.explicit_size, "two_layer": r.two_layer_size, "certified": r.certified_size}))
                        .collect();
                    let summary = json!({
                        "p": s.p.to_string(),
                        "mean_ratio": s.mean_ratio,
                        "mean_certified_ratio": s.mean_certified_ratio,
                        "target": s.target,
                        "certified": certified,
                    });
                    (s.records.into_iter().map(|r| r.trial).collect(), Some(summary))
                }
                _ => unreachable!("checked: exactly one of p and c"),
            };
            match &cfg.out {
                Some(path) => export(&records, path, format)?,
                None => {
                    let text = match format {
                        Format::Csv => to_csv_string(&records)?,
                        Format::Json => to_json_string(&records)?,
                    };
                    stdout.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e))?;
                }
            }
            if let Some(s) = summary {
                // rows already on stdout: keep it a clean table
                if cfg.out.is_some() {
                    stdout.write_all(json_line(&s).as_bytes()).map_err(|e| Error::io("<stdout>", e))?;
                } else {
                    let _ = writeln!(stderr, "summary: {s}");
                }
            }
            let flagged = records.iter().filter(|r| r.flag != TrialFlag::Ok).count();
            if flagged > 0 {
                let _ = writeln!(stderr, "{flagged} trial(s) exceeded the time budget and are flagged");
            }
            Ok(())
        }
        Mode::Bounds => {
            let b = union_bound_evaluate(
                need(cfg.n),
                need(cfg.k),
                cfg.p.as_ref().expect("checked"),
                cfg.epsilon.as_ref().expect("checked"),
                cfg.big_k.as_ref().expect("checked"),
            )?;
            let out = json!({
                "s_max": b.s_max.to_string(),
                "log_summed": b.log_summed,
                "log_max_term": b.log_max_term,
                "log_simplified": b.log_simplified,
                "log_margin": b.log_margin,
                "log_final": b.log_final,
                "terms_summed": b.terms_summed,
            });
            emit(cfg, &json_line(&out), stdout)
        }
    }
}

fn error_json(e: &Error) -> String {
    let mut v = json!({"error": e.kind(), "message": e.to_string()});
    if let Error::Config { field, .. } = e {
        v["field"] = field.clone().into();
    }
    serde_json::to_string(&v).expect("values serialize")
}

/// Full CLI run; returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match parse_config(args) {
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return e.exit_code();
        }
        Ok(Err(e)) => {
            let _ = writeln!(stderr, "{}", error_json(&e));
            return 2;
        }
        Ok(Ok(cfg)) => cfg,
    };
    let echo = serde_json::to_string(&cfg).expect("config serializes");
    let _ = writeln!(stderr, "config: {echo}");
    match dispatch(&cfg, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "{}", error_json(&e));
            1
        }
    }
}
