//! Hypergraph containers for k-chains and the iterated fingerprint.
//!
//! A container step builds a balanced k-chain hypergraph `H` on the current
//! container `C`, then runs a scythe sweep over `H` guided by an independent
//! set `I`. The sweep records a small fingerprint `T ⊆ I` and shrinks `C` to a
//! set that still covers `I \ T`. The sweep only ever asks "is this vertex in
//! `I`?" while it still has budget, and every vertex it sees under budget that
//! is in `I` goes into `T`. Replaying the sweep with `T` in place of `I`
//! therefore reproduces the same container, so the container is a function of
//! `T` alone.

use std::collections::HashMap;
use std::rc::Rc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{central_binomial, count_k_chains, SubsetFamily};
use crate::supersat::{build_balanced_hypergraph, min_comparable_binomial, ChainHypergraph};

/// Containers keep per-vertex arrays over `P(n)`.
pub const MAX_CONTAINER_N: u32 = 20;

fn q(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn int(x: u128) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Parameters of the container pipeline.
#[derive(Clone, Debug, PartialEq)]
pub struct ContainerConfig {
    pub k: u32,
    pub epsilon: BigRational,
    /// Every step must satisfy `|C_next| <= (1 - delta_shrink) |C|`.
    pub delta_shrink: BigRational,
    /// Degree-condition constant: `Δ_l(H) <= c τ^(l-1) e(H) / N`.
    pub c: BigRational,
    /// Counting constant `K` of the fingerprint bound.
    pub big_k: BigRational,
    /// `τ` switches regimes at `tau_block · k · C(n, n/2)`.
    pub tau_block: u32,
    pub tau_small_power: u32,
    pub tau_big_power: u32,
    /// Share of the `k τ |C|` fingerprint allowance the sweep may spend.
    pub tee_fraction: BigRational,
    /// `δ` handed to the supersaturation builder (raised to `1/m` when smaller).
    pub supersat_delta: BigRational,
    /// Steps allowed per element of the ground set.
    pub iteration_factor: u32,
}

impl ContainerConfig {
    /// Calibrated defaults for `ε = 1/4`.
    pub fn new(k: u32) -> ContainerConfig {
        ContainerConfig {
            k,
            epsilon: q(1, 4),
            delta_shrink: q(1, 64),
            c: q(64, 1),
            big_k: q(4, 1),
            tau_block: 3,
            tau_small_power: 1,
            tau_big_power: 3,
            tee_fraction: q(1, 8),
            supersat_delta: if k == 2 { q(32, 1) } else { q(6, 1) },
            iteration_factor: 8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::domain(format!("k must be at least 2, got {}", self.k)));
        }
        let positive = [
            ("epsilon", &self.epsilon),
            ("delta_shrink", &self.delta_shrink),
            ("c", &self.c),
            ("K", &self.big_k),
            ("tee_fraction", &self.tee_fraction),
            ("supersat_delta", &self.supersat_delta),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !v.is_positive()) {
            return Err(Error::domain(format!("{name} must be positive, got {v}")));
        }
        if self.epsilon >= BigRational::one() || self.delta_shrink >= BigRational::one() {
            return Err(Error::domain("epsilon and delta_shrink must be below 1"));
        }
        if self.tee_fraction > BigRational::one() {
            return Err(Error::domain("tee_fraction must not exceed 1"));
        }
        if self.tau_block == 0 || self.iteration_factor == 0 {
            return Err(Error::domain("tau_block and iteration_factor must be positive"));
        }
        Ok(())
    }

    pub fn tau(&self, family_size: u128, n: u32) -> BigRational {
        let small = family_size <= u128::from(self.tau_block) * u128::from(self.k) * central_binomial(n);
        let power = if small { self.tau_small_power } else { self.tau_big_power };
        int(u128::from(n).pow(power)).recip()
    }
}

/// `1/n` up to `3k C(n, n/2)` sets, `1/n^3` beyond.
pub fn tau(family_size: u128, n: u32, k: u32) -> BigRational {
    ContainerConfig::new(k).tau(family_size, n)
}

/// Whether `Δ_l(H) <= c τ^(l-1) e(H) / N` for every `l`, with `N = |V(H)|`;
/// the error names the first failing `l`.
pub fn hcl_condition(h: &ChainHypergraph, tau: &BigRational, c: &BigRational) -> Result<()> {
    let vertices = h.family().len();
    if vertices == 0 {
        return Ok(());
    }
    let e = int(h.edge_count() as u128);
    for ell in 1..=h.k() {
        let delta = int(u128::from(h.ledger().max_degree(ell)?));
        let rhs = c * num_traits::pow(tau.clone(), (ell - 1) as usize) * &e / int(vertices as u128);
        if delta > rhs {
            return Err(Error::contract(format!(
                "degree condition fails at l = {ell}: Δ = {delta} > {}",
                to_f64(&rhs)
            )));
        }
    }
    Ok(())
}

/// Smallest `c` for which the degree condition holds.
pub fn hcl_constant(h: &ChainHypergraph, tau: &BigRational) -> Result<BigRational> {
    let vertices = h.family().len();
    if h.edge_count() == 0 || vertices == 0 {
        return Ok(BigRational::zero());
    }
    let e = int(h.edge_count() as u128);
    let mut worst = BigRational::zero();
    for ell in 1..=h.k() {
        let delta = int(u128::from(h.ledger().max_degree(ell)?));
        let scale = num_traits::pow(tau.clone(), (ell - 1) as usize) * &e / int(vertices as u128);
        worst = worst.max(delta / scale);
    }
    Ok(worst)
}

/// Fingerprint and container of one scythe sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct Extraction {
    pub tees: SubsetFamily,
    /// Contains `tees` and every vertex of `I`.
    pub container: SubsetFamily,
}

/// Scythe sweep over `V(H)`; at most `k τ N` fingerprint sets.
pub fn scythe_extract(h: &ChainHypergraph, tau: &BigRational, i: &SubsetFamily) -> Result<Extraction> {
    let vertices = h.family();
    let n = vertices.n();
    if n > MAX_CONTAINER_N {
        return Err(Error::domain(format!("containers support n <= {MAX_CONTAINER_N}")));
    }
    if i.n() != n {
        return Err(Error::domain("I and H live on different ground sets"));
    }
    if let Some(e) = h.edges().iter().find(|e| e.masks().iter().all(|&m| i.contains(m))) {
        return Err(Error::contract(format!("I is not independent: contains the edge {:x?}", e.masks())));
    }
    let k = h.k();
    let allowance = int(u128::from(k)) * tau * int(vertices.len() as u128);
    let per_round = (allowance / int(u128::from(k - 1)))
        .floor()
        .to_integer()
        .to_usize()
        .unwrap_or(usize::MAX);
    let (tees, excluded) = sweep(h, per_round, |v| i.contains(v));
    let tees = SubsetFamily::from_masks(n, tees)?;
    let (replayed, replay_excluded) = sweep(h, per_round, |v| tees.contains(v));
    if replayed.len() != tees.len() || replay_excluded != excluded {
        return Err(Error::contract("replaying the sweep from T changed the container"));
    }
    let container = vertices.filter(|v| !excluded[v as usize]);
    let ext = Extraction { tees, container };
    if !ext.tees.is_subfamily_of(i) {
        return Err(Error::contract("fingerprint is not inside I"));
    }
    if let Some(v) = i.iter_masks().find(|&v| vertices.contains(v) && !ext.container.contains(v)) {
        return Err(Error::contract(format!("container misses {v:x} from I")));
    }
    Ok(ext)
}

/// One sweep; `take` answers membership in `I` (or in `T` when replaying).
fn sweep(h: &ChainHypergraph, per_round: usize, take: impl Fn(u32) -> bool) -> (Vec<u32>, Vec<bool>) {
    let n = h.family().n();
    let k = h.k() as usize;
    let edges: Vec<Vec<u32>> = h.edges().iter().map(|e| e.masks()).collect();
    let mut in_t = vec![false; 1usize << n];
    let mut excluded = vec![false; 1usize << n];
    let mut tees = Vec::new();
    let mut degree = vec![0u32; 1usize << n];
    for round in 0..k - 1 {
        // G_(round+1): live edges with exactly `round` fingerprint vertices, minus those vertices
        degree.fill(0);
        let mut touched = Vec::new();
        for e in &edges {
            if e.iter().any(|&v| excluded[v as usize]) {
                continue;
            }
            if e.iter().filter(|&&v| in_t[v as usize]).count() != round {
                continue;
            }
            for &v in e.iter().filter(|&&v| !in_t[v as usize]) {
                if degree[v as usize] == 0 {
                    touched.push(v);
                }
                degree[v as usize] += 1;
            }
        }
        touched.sort_unstable_by_key(|&v| (std::cmp::Reverse(degree[v as usize]), v));
        let mut taken = 0;
        for v in touched {
            if taken == per_round {
                break;
            }
            if take(v) {
                in_t[v as usize] = true;
                tees.push(v);
                taken += 1;
            } else {
                excluded[v as usize] = true;
            }
        }
        // a vertex completing an edge with k - 1 fingerprint vertices cannot be in I
        for e in &edges {
            let mut outside = e.iter().filter(|&&v| !in_t[v as usize]);
            if let (Some(&u), None) = (outside.next(), outside.next()) {
                excluded[u as usize] = true;
            }
        }
    }
    tees.sort_unstable();
    (tees, excluded)
}

/// Which hypergraph construction a step used.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Route {
    /// Sets below `cutoff` were set aside; the rest carry a builder hypergraph with chain parameter `m`.
    SmallF { cutoff: u32, discarded: usize, m: String, target_met: bool },
    /// Blocks of `3k C(n, n/2)` sets, one residue class of sizes mod 3 per block.
    BigF { blocks: usize, used_blocks: usize, m: String },
}

/// Hypergraphs are a function of the container alone, so they can be shared between runs.
#[derive(Default)]
pub struct ContainerCache {
    map: HashMap<(SubsetFamily, u32), Rc<(ChainHypergraph, Route)>>,
}

impl ContainerCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Outcome of a single container step.
#[derive(Clone, Debug)]
pub struct Step {
    pub tees: SubsetFamily,
    pub next: SubsetFamily,
    pub tau: BigRational,
    pub route: Route,
    pub edges: usize,
}

fn small_f_hypergraph(c: &SubsetFamily, cfg: &ContainerConfig) -> Result<(ChainHypergraph, Route)> {
    let n = c.n();
    let k = cfg.k;
    let cm = int(central_binomial(n));
    let budget = &cfg.epsilon * &cm / int(2);
    let below = |t: u32| (0..t).map(|j| c.level(j).len()).sum::<usize>();
    let mut cutoff = n.div_ceil(3);
    while cutoff > 0 && int(below(cutoff) as u128) > budget {
        cutoff -= 1;
    }
    let discarded = below(cutoff);
    if int(discarded as u128) > budget {
        return Err(Error::contract("discarded small sets exceed ε C(n, n/2) / 2"));
    }
    let kept = c.filter(|x| x.count_ones() >= cutoff);
    let m = if cutoff == 0 {
        BigRational::one()
    } else {
        q(i64::from(n), 3).min(int(u128::from(cutoff) + 1))
    };
    let delta = cfg.supersat_delta.clone().max(m.recip());
    let alpha = int(kept.len() as u128) / &cm - int(u128::from(k - 1));
    let report = build_balanced_hypergraph(&kept, k, &delta, &m, &alpha)?;
    let h = report.hypergraph.rebase(c)?;
    Ok((
        h,
        Route::SmallF {
            cutoff,
            discarded,
            m: m.to_string(),
            target_met: report.target_met,
        },
    ))
}

/// The large-container hypergraph: disjoint blocks of `tau_block · k · C(n, n/2)` sets.
pub fn big_f_hypergraph(c: &SubsetFamily, cfg: &ContainerConfig) -> Result<(ChainHypergraph, Route)> {
    let n = c.n();
    let k = cfg.k;
    let cm = central_binomial(n);
    let block = (u128::from(cfg.tau_block) * u128::from(k) * cm) as usize;
    let members = c.members_asc();
    let blocks: Vec<&[u32]> = members.chunks(block).filter(|b| b.len() == block).collect();
    let third = q(i64::from(n), 3);
    let mut parts = Vec::new();
    for b in &blocks {
        let mut classes: [Vec<u32>; 3] = Default::default();
        for &x in b.iter().filter(|x| int(u128::from(x.count_ones())) >= third) {
            classes[(x.count_ones() % 3) as usize].push(x);
        }
        let best = (0..3).max_by_key(|&r| (classes[r].len(), std::cmp::Reverse(r))).expect("three classes");
        let part = SubsetFamily::from_masks(n, classes[best].iter().copied())?;
        if let Some(min) = min_comparable_binomial(&part) {
            parts.push((part, min));
        }
    }
    let m = parts.iter().map(|(_, min)| *min).min().unwrap_or(1);
    let m = int(m);
    let delta = cfg.supersat_delta.clone().max(m.recip());
    let mut h = ChainHypergraph::new(c, k, delta.clone(), m.clone())?;
    let mut used = 0;
    for (part, _) in &parts {
        let alpha = int(part.len() as u128) / int(cm) - int(u128::from(k - 1));
        if !alpha.is_positive() {
            continue;
        }
        let report = build_balanced_hypergraph(part, k, &delta, &m, &alpha)?;
        for e in report.hypergraph.edges() {
            h.add_edge(e.clone())?;
        }
        used += 1;
    }
    Ok((
        h,
        Route::BigF {
            blocks: blocks.len(),
            used_blocks: used,
            m: m.to_string(),
        },
    ))
}

fn hypergraph_for(c: &SubsetFamily, cfg: &ContainerConfig, cache: &mut ContainerCache) -> Result<Rc<(ChainHypergraph, Route)>> {
    let key = (c.clone(), cfg.k);
    if let Some(hit) = cache.map.get(&key) {
        return Ok(Rc::clone(hit));
    }
    let small = c.len() as u128 <= u128::from(cfg.tau_block) * u128::from(cfg.k) * central_binomial(c.n());
    let built = Rc::new(if small {
        small_f_hypergraph(c, cfg)?
    } else {
        big_f_hypergraph(c, cfg)?
    });
    cache.map.insert(key, Rc::clone(&built));
    Ok(built)
}

/// One application of the container corollary to `C`, guided by `I`.
pub fn container_step(c: &SubsetFamily, i: &SubsetFamily, cfg: &ContainerConfig, cache: &mut ContainerCache) -> Result<Step> {
    cfg.validate()?;
    let n = c.n();
    if n > MAX_CONTAINER_N {
        return Err(Error::domain(format!("containers support n <= {MAX_CONTAINER_N}")));
    }
    let k = cfg.k;
    let cm = int(central_binomial(n));
    let floor = (int(u128::from(k - 1)) + &cfg.epsilon) * &cm;
    if int(c.len() as u128) < floor {
        return Err(Error::contract(format!(
            "|C| = {} is below (k - 1 + ε) C(n, n/2) = {}",
            c.len(),
            to_f64(&floor)
        )));
    }
    let local = i.intersection(c)?;
    if count_k_chains(&local, k) != 0 {
        return Err(Error::contract(format!("I ∩ C contains a {k}-chain")));
    }
    let tau = cfg.tau(c.len() as u128, n);
    let built = hypergraph_for(c, cfg, cache)?;
    let (h, route) = (&built.0, &built.1);
    hcl_condition(h, &tau, &cfg.c)?;
    let ext = scythe_extract(h, &(&tau * &cfg.tee_fraction), &local)?;
    let next = ext.container.difference(&ext.tees)?;
    let allowance = int(u128::from(k)) * &tau * int(c.len() as u128);
    if int(ext.tees.len() as u128) > allowance {
        return Err(Error::contract("fingerprint exceeds k τ(C) |C|"));
    }
    let limit = (BigRational::one() - &cfg.delta_shrink) * int(c.len() as u128);
    if int(next.len() as u128) > limit {
        return Err(Error::contract(format!(
            "step shrank |C| only from {} to {}, above (1 - δ) |C| = {}",
            c.len(),
            next.len(),
            to_f64(&limit)
        )));
    }
    Ok(Step {
        tees: ext.tees,
        next,
        tau,
        route: route.clone(),
        edges: h.edge_count(),
    })
}

/// The fingerprint `(T_1, ..., T_m)` of an independent set and its container trajectory.
#[derive(Clone, Debug)]
pub struct Fingerprint {
    pub n: u32,
    pub k: u32,
    pub epsilon: BigRational,
    pub tees: Vec<SubsetFamily>,
    /// `C_1 = P(n), ..., C_(m+1)`.
    pub containers: Vec<SubsetFamily>,
    /// `C_(m+1) ∪ T_1 ∪ ... ∪ T_m`.
    pub final_container: SubsetFamily,
    pub taus: Vec<BigRational>,
    pub routes: Vec<Route>,
}

#[derive(Serialize)]
struct FingerprintDump<'a> {
    n: u32,
    k: u32,
    epsilon: String,
    iteration_count: usize,
    tees: Vec<Vec<u32>>,
    container_sizes: Vec<usize>,
    final_container_size: usize,
    routes: &'a [Route],
}

impl Fingerprint {
    /// `m`.
    pub fn iteration_count(&self) -> usize {
        self.tees.len()
    }

    /// `|T(I)|`.
    pub fn tee_total(&self) -> usize {
        self.tees.iter().map(SubsetFamily::len).sum()
    }

    /// `sum_i k τ(C_i) |C_i|`.
    pub fn tee_allowance(&self) -> BigRational {
        self.taus
            .iter()
            .zip(&self.containers)
            .map(|(t, c)| int(u128::from(self.k)) * t * int(c.len() as u128))
            .fold(BigRational::zero(), |a, b| a + b)
    }

    /// `sum τ(C_i)|C_i|` split at the first container of at most `3k C(n, n/2)` sets.
    pub fn allowance_split(&self) -> (BigRational, BigRational) {
        let threshold = 3 * u128::from(self.k) * central_binomial(self.n);
        let mut pre = BigRational::zero();
        let mut post = BigRational::zero();
        let mut reached = false;
        for (t, c) in self.taus.iter().zip(&self.containers) {
            reached |= c.len() as u128 <= threshold;
            let term = t * int(c.len() as u128);
            if reached {
                post += term;
            } else {
                pre += term;
            }
        }
        (pre, post)
    }

    pub fn to_json(&self) -> String {
        let dump = FingerprintDump {
            n: self.n,
            k: self.k,
            epsilon: self.epsilon.to_string(),
            iteration_count: self.iteration_count(),
            tees: self.tees.iter().map(SubsetFamily::members_asc).collect(),
            container_sizes: self.containers.iter().map(SubsetFamily::len).collect(),
            final_container_size: self.final_container.len(),
            routes: &self.routes,
        };
        serde_json::to_string(&dump).expect("plain data serializes")
    }

    /// Properties (i), (ii) and the size and iteration bounds.
    pub fn verify(&self, i: &SubsetFamily, cfg: &ContainerConfig) -> Result<()> {
        let mut covered = SubsetFamily::empty(self.n)?;
        for (step, t) in self.tees.iter().enumerate() {
            if !covered.is_disjoint_from(t) {
                return Err(Error::contract(format!("T_{} meets an earlier T", step + 1)));
            }
            covered = covered.union(t)?;
            let next = &self.containers[step + 1];
            if !next.is_disjoint_from(&covered) {
                return Err(Error::contract(format!("C_{} meets T_1..T_{}", step + 2, step + 1)));
            }
            if !i.is_subfamily_of(&next.union(&covered)?) {
                return Err(Error::contract(format!("I escapes C_{} ∪ T_1..T_{}", step + 2, step + 1)));
            }
            let limit = (BigRational::one() - &cfg.delta_shrink) * int(self.containers[step].len() as u128);
            if int(next.len() as u128) > limit {
                return Err(Error::contract(format!("C_{} did not shrink enough", step + 2)));
            }
        }
        if !covered.is_subfamily_of(i) || !i.is_subfamily_of(&self.final_container) {
            return Err(Error::contract("T(I) ⊆ I ⊆ C(T(I)) fails"));
        }
        let cm = int(central_binomial(self.n));
        let cap = (int(u128::from(self.k - 1)) + int(2) * &self.epsilon) * &cm;
        if int(self.final_container.len() as u128) > cap {
            return Err(Error::contract(format!(
                "final container has {} sets, above (k - 1 + 2ε) C(n, n/2) = {}",
                self.final_container.len(),
                to_f64(&cap)
            )));
        }
        if self.iteration_count() > (cfg.iteration_factor * self.n) as usize {
            return Err(Error::contract(format!(
                "{} iterations exceed {} n",
                self.iteration_count(),
                cfg.iteration_factor
            )));
        }
        Ok(())
    }
}

/// Iterated container steps from `P(n)`, without the final size and iteration checks.
pub fn fingerprint_trace(i: &SubsetFamily, cfg: &ContainerConfig, cache: &mut ContainerCache) -> Result<Fingerprint> {
    cfg.validate()?;
    let n = i.n();
    let k = cfg.k;
    if count_k_chains(i, k) != 0 {
        return Err(Error::contract(format!("I contains a {k}-chain")));
    }
    let cm = int(central_binomial(n));
    let floor = (int(u128::from(k - 1)) + &cfg.epsilon) * &cm;
    let mut fp = Fingerprint {
        n,
        k,
        epsilon: cfg.epsilon.clone(),
        tees: Vec::new(),
        containers: vec![SubsetFamily::full(n)?],
        final_container: SubsetFamily::empty(n)?,
        taus: Vec::new(),
        routes: Vec::new(),
    };
    let max_steps = 4 * (cfg.iteration_factor * n.max(1)) as usize;
    loop {
        let c = fp.containers.last().expect("C_1 present");
        if int(c.len() as u128) < floor {
            break;
        }
        if fp.tees.len() >= max_steps {
            return Err(Error::contract("container iteration does not terminate"));
        }
        let step = container_step(c, i, cfg, cache)?;
        fp.tees.push(step.tees);
        fp.containers.push(step.next);
        fp.taus.push(step.tau);
        fp.routes.push(step.route);
    }
    let mut fin = fp.containers.last().expect("nonempty").clone();
    for t in &fp.tees {
        fin = fin.union(t)?;
    }
    fp.final_container = fin;
    Ok(fp)
}

/// Fingerprint of a k-chain-free `I`, with all of its guarantees checked.
pub fn fingerprint(i: &SubsetFamily, cfg: &ContainerConfig) -> Result<Fingerprint> {
    let fp = fingerprint_trace(i, cfg, &mut ContainerCache::new())?;
    fp.verify(i, cfg)?;
    Ok(fp)
}

/// A nonnegative real kept as its natural logarithm (`-inf` for zero).
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize)]
pub struct LogValue {
    pub ln: f64,
}

impl LogValue {
    pub fn value(self) -> f64 {
        self.ln.exp()
    }

    pub fn is_zero(self) -> bool {
        self.ln == f64::NEG_INFINITY
    }
}

/// `(K C(n, n/2) / s)^s · exp(K C(n, n/2) / n)`.
pub fn fingerprint_count_bound(s: u64, n: u32, big_k: &BigRational) -> Result<LogValue> {
    if s == 0 {
        return Err(Error::domain("s must be at least 1"));
    }
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    if big_k.is_negative() {
        return Err(Error::domain("K must be nonnegative"));
    }
    if big_k.is_zero() {
        return Ok(LogValue { ln: f64::NEG_INFINITY });
    }
    let kc = to_f64(big_k) * central_binomial(n) as f64;
    let s = s as f64;
    Ok(LogValue {
        ln: s * (kc.ln() - s.ln()) + kc / f64::from(n),
    })
}

/// `s log s`, `sum a_j log a_j` and their difference.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SlogsValue {
    pub lhs: f64,
    pub rhs_sum: f64,
    pub gap: f64,
}

fn xlogx(x: &BigRational) -> f64 {
    let v = to_f64(x);
    v * v.ln()
}

/// Checks `1 <= a_j <= (1 - δ)^j M` exactly, then evaluates both sides of the `s log s` inequality.
pub fn slogs_check(a: &[BigRational], big_m: &BigRational, delta: &BigRational) -> Result<SlogsValue> {
    if !delta.is_positive() || delta >= &BigRational::one() {
        return Err(Error::domain(format!("δ must lie in (0, 1), got {delta}")));
    }
    if a.is_empty() {
        return Err(Error::domain("the sequence is empty"));
    }
    let ratio = BigRational::one() - delta;
    let mut bound = big_m.clone();
    for (j, x) in a.iter().enumerate() {
        bound *= &ratio;
        if x < &BigRational::one() || x > &bound {
            return Err(Error::domain(format!(
                "a_{} = {x} outside [1, (1 - δ)^{} M]",
                j + 1,
                j + 1
            )));
        }
    }
    let s = a.iter().fold(BigRational::zero(), |acc, x| acc + x);
    let lhs = xlogx(&s);
    let rhs_sum: f64 = a.iter().map(xlogx).sum();
    Ok(SlogsValue {
        lhs,
        rhs_sum,
        gap: lhs - rhs_sum,
    })
}
