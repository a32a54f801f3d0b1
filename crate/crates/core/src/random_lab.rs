//! Seeded experiments on the random family `P(n, p)`.
//!
//! Sampling is counter based: the draw for subset `A` is the `A`-th 64-bit word of
//! the ChaCha8 stream seeded with `seed`, and `A` is kept iff the draw is below
//! `floor(p · 2^64)`. Any subset's fate can be recomputed on its own, so samples
//! do not depend on iteration order. The bias against `p` is below `2^-64`.

use std::path::Path;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extremal::{max_antichain, max_k_chain_free};
use crate::lattice::{central_binomial, count_k_chains, middle_layers, SubsetFamily};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);
/// Environment variable capping the trial runner's worker threads.
pub const THREADS_ENV: &str = "SPERNERLAB_THREADS";

fn check_probability(p: &BigRational) -> Result<()> {
    if p.is_negative() || p > &BigRational::one() {
        return Err(Error::domain(format!("p must lie in [0, 1], got {p}")));
    }
    Ok(())
}

/// `floor(p · 2^64)`, or `None` for `p = 1` (keep everything).
fn threshold(p: &BigRational) -> Option<u64> {
    if p.is_one() {
        return None;
    }
    let scaled = p * BigRational::from_integer(BigInt::one() << 64u32);
    Some(scaled.floor().to_integer().to_u64().expect("p < 1"))
}

fn keep(draw: u64, threshold: Option<u64>) -> bool {
    threshold.is_none_or(|t| draw < t)
}

/// The 64-bit draw attached to `mask` under `seed`.
pub fn mask_draw(seed: u64, mask: u32) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_word_pos(2 * u128::from(mask));
    rng.next_u64()
}

/// Each subset of `[n]` independently with probability `p`.
pub fn sample_power_set(n: u32, p: &BigRational, seed: u64) -> Result<SubsetFamily> {
    check_probability(p)?;
    let t = threshold(p);
    // sequential words of the stream are exactly the per-mask draws
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut masks = Vec::new();
    for mask in 0..1u32 << n {
        if keep(rng.next_u64(), t) {
            masks.push(mask);
        }
    }
    SubsetFamily::from_masks(n, masks)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialFlag {
    Ok,
    /// The solver finished but took longer than the trial budget.
    Timeout,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub n: u32,
    pub k: u32,
    pub p: BigRational,
    pub seed: u64,
    pub sample_size: usize,
    pub opt_size: usize,
    /// `opt_size / (p C(n, n/2))`, zero when `p = 0`.
    pub ratio: f64,
    /// The same normalization of `|middle k-1 layers ∩ sample|`.
    pub lb_ratio: f64,
    pub runtime_ms: u64,
    pub flag: TrialFlag,
}

fn normalized(size: usize, p: &BigRational, n: u32) -> f64 {
    if p.is_zero() {
        return 0.0;
    }
    let denom = p * BigRational::from_integer(central_binomial(n).into());
    (BigRational::from_integer(size.into()) / denom).to_f64().unwrap_or(f64::NAN)
}

fn check_trial_inputs(n: u32, k: u32, p: &BigRational) -> Result<()> {
    check_probability(p)?;
    if k < 2 {
        return Err(Error::domain(format!("k must be at least 2, got {k}")));
    }
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    let mean = p * BigRational::from_integer(central_binomial(n).into());
    if !p.is_zero() && mean < BigRational::one() {
        return Err(Error::domain(format!(
            "p C(n, n/2) = {mean} is below 1; the ratio is meaningless"
        )));
    }
    Ok(())
}

pub fn run_trial(n: u32, k: u32, p: &BigRational, seed: u64) -> Result<TrialRecord> {
    run_trial_with_timeout(n, k, p, seed, DEFAULT_TIMEOUT)
}

/// One sample, solved exactly. Solvers are not interruptible, so a slow trial is
/// completed and then flagged.
pub fn run_trial_with_timeout(n: u32, k: u32, p: &BigRational, seed: u64, timeout: Duration) -> Result<TrialRecord> {
    check_trial_inputs(n, k, p)?;
    let start = Instant::now();
    let sample = sample_power_set(n, p, seed)?;
    let opt = max_k_chain_free(&sample, k)?;
    let lower = sample.intersection(&middle_layers(n, k)?)?.len();
    if lower > opt.size || opt.size > sample.len() {
        return Err(Error::contract(format!(
            "sandwich fails: lower bound {lower}, optimum {}, sample {}",
            opt.size,
            sample.len()
        )));
    }
    let elapsed = start.elapsed();
    Ok(TrialRecord {
        n,
        k,
        p: p.clone(),
        seed,
        sample_size: sample.len(),
        opt_size: opt.size,
        ratio: normalized(opt.size, p, n),
        lb_ratio: normalized(lower, p, n),
        runtime_ms: elapsed.as_millis() as u64,
        flag: if elapsed > timeout { TrialFlag::Timeout } else { TrialFlag::Ok },
    })
}

/// Worker count from `SPERNERLAB_THREADS`, or rayon's default.
pub fn thread_count() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(Some(t)),
            _ => Err(Error::domain(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(None),
    }
}

/// Runs one trial per seed in parallel; results come back in seed order.
pub fn run_trials(n: u32, k: u32, p: &BigRational, seeds: &[u64], timeout: Duration) -> Result<Vec<TrialRecord>> {
    check_trial_inputs(n, k, p)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = thread_count()? {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::domain(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| run_trial_with_timeout(n, k, p, seed, timeout))
            .collect()
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SparseRecord {
    pub trial: TrialRecord,
    /// Sampled middle layer plus the sampled sets one level up that contain none of it.
    pub explicit_size: usize,
    /// Largest antichain inside the two sampled middle layers.
    pub two_layer_size: usize,
    /// Two-layer antichain plus `k - 2` further sampled layers; k-chain-free by construction.
    pub certified_size: usize,
    pub certified_ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SparseSummary {
    pub n: u32,
    pub k: u32,
    pub c: BigRational,
    pub p: BigRational,
    pub records: Vec<SparseRecord>,
    pub mean_ratio: f64,
    pub mean_certified_ratio: f64,
    /// `k - 1 + e^(-C/2)`.
    pub target: f64,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = xs.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

/// Certified lower bounds for one sample at `p = C/n`.
fn certify(sample: &SubsetFamily, k: u32) -> Result<(usize, usize, usize)> {
    let n = sample.n();
    let h = n / 2;
    let low = sample.level(h);
    let low_set = SubsetFamily::from_masks(n, low.iter().copied())?;
    let explicit_up = if h < n {
        sample
            .level(h + 1)
            .iter()
            .filter(|&&b| (0..n).all(|i| b >> i & 1 == 0 || !low_set.contains(b & !(1 << i))))
            .count()
    } else {
        0
    };
    let explicit = low.len() + explicit_up;
    let pair = sample.filter(|x| x.count_ones() == h || x.count_ones() == h + 1);
    let anti = max_antichain(&pair)?;
    if anti.size < explicit {
        return Err(Error::contract("two-layer optimum below the explicit antichain"));
    }
    // k - 2 further layers, nearest the middle first
    let mut others: Vec<u32> = (0..=n).filter(|&l| l != h && l != h + 1).collect();
    others.sort_by_key(|&l| ((2 * l).abs_diff(n), l));
    let extra: Vec<u32> = others.into_iter().take((k - 2) as usize).collect();
    let mut certified = SubsetFamily::from_masks(n, anti.witness.iter().copied())?;
    certified = certified.union(&sample.filter(|x| extra.contains(&x.count_ones())))?;
    if count_k_chains(&certified, k) != 0 {
        return Err(Error::contract("certified family contains a k-chain"));
    }
    Ok((explicit, anti.size, certified.len()))
}

/// Trials at `p = C/n` with the explicit two-layer construction as a certified lower bound.
pub fn sparse_regime_trial(n: u32, k: u32, c: &BigRational, seeds: &[u64]) -> Result<SparseSummary> {
    if n == 0 || !c.is_positive() {
        return Err(Error::domain("n and C must be positive"));
    }
    let p = c / BigRational::from_integer(n.into());
    check_probability(&p)?;
    check_trial_inputs(n, k, &p)?;
    let records = seeds
        .iter()
        .map(|&seed| {
            let trial = run_trial(n, k, &p, seed)?;
            let sample = sample_power_set(n, &p, seed)?;
            let (explicit_size, two_layer_size, certified_size) = certify(&sample, k)?;
            if certified_size > trial.opt_size {
                return Err(Error::contract("certified bound exceeds the optimum"));
            }
            Ok(SparseRecord {
                certified_ratio: normalized(certified_size, &p, n),
                trial,
                explicit_size,
                two_layer_size,
                certified_size,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let half_c = c.to_f64().unwrap_or(f64::NAN) / 2.0;
    Ok(SparseSummary {
        n,
        k,
        c: c.clone(),
        mean_ratio: mean(records.iter().map(|r| r.trial.ratio)),
        mean_certified_ratio: mean(records.iter().map(|r| r.certified_ratio)),
        target: f64::from(k - 1) + (-half_c).exp(),
        p,
        records,
    })
}

/// Log-domain values of the union bound over fingerprints.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UnionBound {
    /// `S = floor(K C(n, n/2) / n)`, the largest fingerprint size.
    pub s_max: u128,
    /// Log of `sum_{s=1}^{S} (K C / s)^s e^(K C / n) p^s e^(-ε² p C / 3)`.
    pub log_summed: f64,
    /// Log of the largest summand; the summand increases in `s`, so it sits at `s = S`.
    pub log_max_term: f64,
    /// Log of `(K C / n) exp((K log(pn) / n) C + K C / n - ε² p C / 3)`.
    pub log_simplified: f64,
    /// `log_simplified - log_summed`, evaluated without the cancellation between
    /// the two (their common part is far above f64 resolution for large n).
    pub log_margin: f64,
    /// `-ε² p C / 6`.
    pub log_final: f64,
    /// Summands actually added before the geometric tail bound fell below `2^-60` of the sum.
    pub terms_summed: u64,
}

/// Evaluates the chain of bounds in the probabilistic argument; requires `pn >= K/ε`.
pub fn union_bound_evaluate(n: u32, k: u32, p: &BigRational, epsilon: &BigRational, big_k: &BigRational) -> Result<UnionBound> {
    check_probability(p)?;
    if k < 2 || n < 2 {
        return Err(Error::domain("need k >= 2 and n >= 2"));
    }
    if !p.is_positive() || !epsilon.is_positive() || !big_k.is_positive() {
        return Err(Error::domain("p, ε and K must be positive"));
    }
    let nr = BigRational::from_integer(n.into());
    if p * &nr < big_k / epsilon {
        return Err(Error::domain(format!(
            "hypothesis pn >= K/ε fails: pn = {}, K/ε = {}",
            p * &nr,
            big_k / epsilon
        )));
    }
    let cm = BigRational::from_integer(central_binomial(n).into());
    let kc_over_n = big_k * &cm / &nr;
    let s_max = kc_over_n
        .floor()
        .to_integer()
        .to_u128()
        .ok_or_else(|| Error::domain("K C(n, n/2) / n does not fit in u128"))?;
    let f = |x: &BigRational| x.to_f64().unwrap_or(f64::NAN);
    let (pf, ef, cf, nf) = (f(p), f(epsilon), f(&cm), f64::from(n));
    let kc = f(big_k) * cf;
    let kcn = f(&kc_over_n);
    let constant = kcn - ef * ef * pf * cf / 3.0;
    let log_simplified = kcn.ln() + kcn * (pf * nf).ln() + constant;
    let log_final = -ef * ef * pf * cf / 6.0;
    if s_max == 0 {
        return Ok(UnionBound {
            s_max,
            log_summed: f64::NEG_INFINITY,
            log_max_term: f64::NEG_INFINITY,
            log_simplified,
            log_margin: f64::INFINITY,
            log_final,
            terms_summed: 0,
        });
    }
    // h(s) = s ln(K C p / s); terms relative to s = S via d_j = h(S - j) - h(S)
    let x = kc * pf;
    let s = s_max as f64;
    let ln_x_over_s = (x / s).ln();
    let h_top = s * ln_x_over_s;
    let slope = ln_x_over_s - 1.0;
    let ratio = (-slope).exp();
    let mut sum = 0.0f64;
    let mut terms = 0u64;
    for j in 0..s_max {
        let jf = j as f64;
        let d = -jf * ln_x_over_s - (s - jf) * (-jf / s).ln_1p();
        let term = d.exp();
        sum += term;
        terms += 1;
        // concavity of h: later terms shrink at least geometrically by `ratio`
        if ratio < 1.0 && term * ratio / (1.0 - ratio) < sum * 2f64.powi(-60) {
            break;
        }
        if ratio >= 1.0 && terms > 1 << 24 {
            return Err(Error::domain("summand does not decay; sum too long to evaluate"));
        }
    }
    let log_max_term = h_top + constant;
    let log_summed = log_max_term + sum.ln();
    // with y = K C / n: ln y + (y - S) ln(pn) - S ln(y / S) - ln(sum)
    let frac = f(&(&kc_over_n - BigRational::from_integer(s_max.into())));
    let log_margin = kcn.ln() + frac * (pf * nf).ln() - s * (frac / s).ln_1p() - sum.ln();
    if log_margin < 0.0 {
        return Err(Error::contract(format!(
            "summed bound exceeds simplified bound by e^{}",
            -log_margin
        )));
    }
    Ok(UnionBound {
        s_max,
        log_summed,
        log_max_term,
        log_simplified,
        log_margin,
        log_final,
        terms_summed: terms,
    })
}

/// Output format of [`export`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::domain(format!("format must be csv or json, got {other:?}"))),
        }
    }
}

/// One exported trial; runtime is left out so files are byte-stable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub schema_version: u32,
    pub n: u32,
    pub k: u32,
    pub p_num: String,
    pub p_den: String,
    pub seed: u64,
    pub sample_size: usize,
    pub opt_size: usize,
    pub ratio: f64,
    pub lb_ratio: f64,
    pub flag: TrialFlag,
}

impl From<&TrialRecord> for TrialRow {
    fn from(r: &TrialRecord) -> Self {
        TrialRow {
            schema_version: SCHEMA_VERSION,
            n: r.n,
            k: r.k,
            p_num: r.p.numer().to_string(),
            p_den: r.p.denom().to_string(),
            seed: r.seed,
            sample_size: r.sample_size,
            opt_size: r.opt_size,
            ratio: r.ratio,
            lb_ratio: r.lb_ratio,
            flag: r.flag,
        }
    }
}

pub fn to_csv_string(records: &[TrialRecord]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record([
        "schema_version",
        "n",
        "k",
        "p_num",
        "p_den",
        "seed",
        "sample_size",
        "opt_size",
        "ratio",
        "lb_ratio",
        "flag",
    ])
    .map_err(|e| Error::Serialization(e.to_string()))?;
    for r in records {
        w.serialize(TrialRow::from(r)).map_err(|e| Error::Serialization(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Serialization(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serialization(e.to_string()))
}

pub fn to_json_string(records: &[TrialRecord]) -> Result<String> {
    let rows: Vec<TrialRow> = records.iter().map(TrialRow::from).collect();
    let mut s = serde_json::to_string_pretty(&rows).map_err(|e| Error::Serialization(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn rows_from_json(text: &str) -> Result<Vec<TrialRow>> {
    serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))
}

pub fn rows_from_csv(text: &str) -> Result<Vec<TrialRow>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<std::result::Result<Vec<TrialRow>, _>>()
        .map_err(|e| Error::Serialization(e.to_string()))
}

/// Writes `records` to `path` with a schema-version column.
pub fn export(records: &[TrialRecord], path: &Path, format: Format) -> Result<()> {
    let text = match format {
        Format::Csv => to_csv_string(records)?,
        Format::Json => to_json_string(records)?,
    };
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
