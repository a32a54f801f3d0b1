//! Balanced supersaturation: a k-chain hypergraph with many edges and small
//! codegrees, grown one good edge at a time.
//!
//! A vertex set `A` is saturated once `d(A) = floor((δm)^(k - |A|))`; a chain is
//! good if none of its subfamilies is saturated. Adding a good chain never
//! breaks a cap, so the builder maintains `Δ_l(H) <= (δm)^(k-l)` throughout.
//!
//! The search for a good edge picks a top `F_1` of minimal size whose k-chain
//! density is at least `α/k`, then descends through good prefixes. Degrees only
//! grow and the working family only shrinks, so a prefix that is bad, or whose
//! subtree holds no good chain, stays that way: each prefix keeps a cursor over
//! its children and never revisits discarded ones.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::density::{factorial, DensityTable, MAX_DENSITY_N};
use crate::error::{Error, Result};
use crate::lattice::{binomial, central_binomial, pdep, Chain, SubsetFamily, SubsetId};

/// Longest chains tracked by the ledger (all `2^k - 1` subfamilies of an edge are stored).
pub const MAX_EDGE_LEN: u32 = 12;

fn floor_u64(x: &BigRational) -> Result<u64> {
    x.floor()
        .to_integer()
        .to_u64()
        .ok_or_else(|| Error::domain(format!("cap {x} does not fit in u64")))
}

/// Ascending masks of a vertex set, zero-padded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct Key {
    len: u8,
    masks: [u32; MAX_EDGE_LEN as usize],
}

impl Key {
    fn sorted(masks: &[u32]) -> Key {
        let mut key = Key {
            len: masks.len() as u8,
            masks: [0; MAX_EDGE_LEN as usize],
        };
        key.masks[..masks.len()].copy_from_slice(masks);
        key.masks[..masks.len()].sort_unstable();
        key
    }

    fn as_slice(&self) -> &[u32] {
        &self.masks[..self.len as usize]
    }
}

fn rational(x: u128) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

/// Codegrees `d(A)` of every vertex set covered by the hypergraph, with their caps.
#[derive(Clone, Debug)]
pub struct SaturationLedger {
    k: u32,
    delta: BigRational,
    chain_param_m: BigRational,
    /// Keyed by ascending masks; only positive degrees are stored.
    degrees: HashMap<Key, u64>,
    caps: Vec<u64>,
    max_degree: Vec<u64>,
}

impl SaturationLedger {
    pub fn new(k: u32, delta: BigRational, chain_param_m: BigRational) -> Result<Self> {
        if k == 0 || k > MAX_EDGE_LEN {
            return Err(Error::domain(format!("k must lie in 1..={MAX_EDGE_LEN}, got {k}")));
        }
        if !delta.is_positive() || !chain_param_m.is_positive() {
            return Err(Error::domain("delta and m must be positive"));
        }
        let dm = &delta * &chain_param_m;
        let caps = (1..=k)
            .map(|ell| floor_u64(&num_traits::pow(dm.clone(), (k - ell) as usize)))
            .collect::<Result<Vec<_>>>()?;
        Ok(SaturationLedger {
            k,
            delta,
            chain_param_m,
            degrees: HashMap::new(),
            caps,
            max_degree: vec![0; k as usize],
        })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn delta(&self) -> &BigRational {
        &self.delta
    }

    pub fn chain_param_m(&self) -> &BigRational {
        &self.chain_param_m
    }

    fn check_len(&self, ell: usize) -> Result<()> {
        if ell == 0 || ell > self.k as usize {
            return Err(Error::domain(format!("set size {ell} outside 1..={}", self.k)));
        }
        Ok(())
    }

    /// `floor((δm)^(k - l))`.
    pub fn cap(&self, ell: u32) -> Result<u64> {
        self.check_len(ell as usize)?;
        Ok(self.caps[ell as usize - 1])
    }

    /// `d(A)`; `masks` in any order.
    pub fn degree(&self, masks: &[u32]) -> u64 {
        self.degree_key(&Key::sorted(masks))
    }

    fn degree_key(&self, key: &Key) -> u64 {
        self.degrees.get(key).copied().unwrap_or(0)
    }

    pub fn is_saturated(&self, masks: &[u32]) -> Result<bool> {
        self.check_len(masks.len())?;
        Ok(self.degree(masks) >= self.caps[masks.len() - 1])
    }

    fn saturated_key(&self, key: &Key) -> bool {
        self.degree_key(key) >= self.caps[key.len as usize - 1]
    }

    /// `Δ_l`, the largest codegree of an l-set.
    pub fn max_degree(&self, ell: u32) -> Result<u64> {
        self.check_len(ell as usize)?;
        Ok(self.max_degree[ell as usize - 1])
    }

    /// All stored `(A, d(A))`, `A` ascending.
    pub fn entries(&self) -> impl Iterator<Item = (&[u32], u64)> {
        self.degrees.iter().map(|(k, &v)| (k.as_slice(), v))
    }

    fn subsets(edge: &[u32]) -> impl Iterator<Item = Key> + '_ {
        let mut sorted = Key::sorted(edge);
        sorted.len = 0;
        (1u32..(1 << edge.len())).map(move |sel| {
            let mut key = sorted;
            for i in (0..edge.len()).filter(|&i| sel >> i & 1 == 1) {
                key.masks[key.len as usize] = sorted.masks[i];
                key.len += 1;
            }
            key.masks[key.len as usize..].fill(0);
            key
        })
    }

    /// Adds one edge, failing without change if any subfamily is saturated.
    fn record(&mut self, edge: &[u32]) -> Result<()> {
        for key in Self::subsets(edge) {
            if self.saturated_key(&key) {
                return Err(Error::contract(format!(
                    "adding the edge would exceed cap({}) = {} at {:x?}",
                    key.len,
                    self.caps[key.len as usize - 1],
                    key.as_slice()
                )));
            }
        }
        for key in Self::subsets(edge) {
            let ell = key.len as usize;
            let d = self.degrees.entry(key).or_insert(0);
            *d += 1;
            self.max_degree[ell - 1] = self.max_degree[ell - 1].max(*d);
        }
        Ok(())
    }
}

pub fn is_saturated(a: &[SubsetId], ledger: &SaturationLedger) -> Result<bool> {
    let masks: Vec<u32> = a.iter().map(|s| s.mask()).collect();
    ledger.is_saturated(&masks)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChainClass {
    Good,
    /// The first `critical_prefix` elements are good, the first `critical_prefix + 1` are not.
    Bad { critical_prefix: usize },
}

/// Good/bad status of a chain (or any list of at most k sets).
pub fn classify_chain(ch: &Chain, ledger: &SaturationLedger) -> Result<ChainClass> {
    let masks = ch.masks();
    if masks.len() > ledger.k() as usize {
        return Err(Error::domain(format!(
            "chain of length {} exceeds k = {}",
            masks.len(),
            ledger.k()
        )));
    }
    for len in 1..=masks.len() {
        // the first `len - 1` are good, so only subfamilies using the new element matter
        if extension_is_bad(ledger, &masks[..len - 1], masks[len - 1]) {
            if len == 1 {
                return Err(Error::contract(format!(
                    "top element {:x} is itself saturated; such sets belong to S(∅) and are removed beforehand",
                    masks[0]
                )));
            }
            return Ok(ChainClass::Bad {
                critical_prefix: len - 1,
            });
        }
    }
    Ok(ChainClass::Good)
}

/// Whether some subfamily `B ∪ {x}` with `B ⊆ prefix` is saturated.
fn extension_is_bad(ledger: &SaturationLedger, prefix: &[u32], x: u32) -> bool {
    let mut buf = [0u32; MAX_EDGE_LEN as usize];
    (0u32..(1 << prefix.len())).any(|sel| {
        let mut len = 0;
        for i in (0..prefix.len()).filter(|&i| sel >> i & 1 == 1) {
            buf[len] = prefix[i];
            len += 1;
        }
        buf[len] = x;
        ledger.saturated_key(&Key::sorted(&buf[..=len]))
    })
}

/// Enumeration position among the strict subsets of a top set, in
/// (size descending, mask ascending) order.
#[derive(Clone, Copy, Debug)]
struct ChildCursor {
    size: u32,
    comb: u32,
    done: bool,
}

impl ChildCursor {
    fn start(top: u32) -> Self {
        let s = top.count_ones();
        if s == 0 {
            return ChildCursor { size: 0, comb: 0, done: true };
        }
        ChildCursor {
            size: s - 1,
            comb: (1 << (s - 1)) - 1,
            done: false,
        }
    }

    fn next_level(&mut self) {
        if self.size == 0 {
            self.done = true;
        } else {
            self.size -= 1;
            self.comb = (1 << self.size) - 1;
        }
    }

    fn advance(&mut self, top: u32) {
        if self.size == 0 {
            self.done = true;
            return;
        }
        let c = self.comb;
        let u = c & c.wrapping_neg();
        let v = c + u;
        let next = v + (((v ^ c) / u) >> 2);
        if u64::from(next) >= 1u64 << top.count_ones() {
            self.next_level();
        } else {
            self.comb = next;
        }
    }
}

/// A k-uniform hypergraph of k-chains of a family, with its codegree ledger.
#[derive(Clone, Debug)]
pub struct ChainHypergraph {
    family: SubsetFamily,
    k: u32,
    edges: Vec<Chain>,
    ledger: SaturationLedger,
    /// `floor(δ^k m^(k-1) C(n, n/2))`, saturating.
    edge_cap: u128,
    search: SearchState,
}

#[derive(Clone, Debug)]
struct SearchState {
    /// The family with saturated singletons removed.
    working: SubsetFamily,
    epoch: u64,
    /// Densities of an earlier (larger) working family: upper bounds for the current one.
    stale: Option<DensityTable>,
    removed_since_stale: usize,
    f1_order: Vec<u32>,
    f1_pos: usize,
    f1_epoch: u64,
    dead: Vec<bool>,
    exact: HashMap<u32, (u64, u128)>,
    cursors: HashMap<Vec<u32>, ChildCursor>,
    /// `(epoch, α, per-size density thresholds)` of the last call.
    thresholds: Option<(u64, BigRational, Vec<u128>)>,
}

impl SearchState {
    fn new(working: SubsetFamily) -> Self {
        SearchState {
            f1_order: working.members_asc(),
            dead: vec![false; 1usize << working.n()],
            working,
            epoch: 0,
            stale: None,
            removed_since_stale: 0,
            f1_pos: 0,
            f1_epoch: u64::MAX,
            exact: HashMap::new(),
            cursors: HashMap::new(),
            thresholds: None,
        }
    }
}

impl ChainHypergraph {
    pub fn new(family: &SubsetFamily, k: u32, delta: BigRational, chain_param_m: BigRational) -> Result<Self> {
        if k < 2 {
            return Err(Error::domain(format!("k must be at least 2, got {k}")));
        }
        if family.n() > MAX_DENSITY_N {
            return Err(Error::domain(format!(
                "supersaturation supports n <= {MAX_DENSITY_N}, got {}",
                family.n()
            )));
        }
        let ledger = SaturationLedger::new(k, delta, chain_param_m)?;
        let mut h = ChainHypergraph {
            family: family.clone(),
            k,
            edges: Vec::new(),
            ledger,
            edge_cap: 0,
            search: SearchState::new(family.clone()),
        };
        h.edge_cap = h.edge_bound().floor().to_integer().to_u128().unwrap_or(u128::MAX);
        Ok(h)
    }

    /// The same edges and ledger over a larger family.
    pub fn rebase(self, family: &SubsetFamily) -> Result<Self> {
        if !self.family.is_subfamily_of(family) {
            return Err(Error::domain("rebase target must contain the current family"));
        }
        let cap1 = self.ledger.caps[0];
        let working = family.filter(|x| self.ledger.degree(&[x]) < cap1);
        Ok(ChainHypergraph {
            family: family.clone(),
            search: SearchState::new(working),
            ..self
        })
    }

    pub fn family(&self) -> &SubsetFamily {
        &self.family
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn edges(&self) -> &[Chain] {
        &self.edges
    }

    /// `e(H)`.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn ledger(&self) -> &SaturationLedger {
        &self.ledger
    }

    /// The family minus its saturated singletons.
    pub fn working_family(&self) -> &SubsetFamily {
        &self.search.working
    }

    /// `|S(∅)|`.
    pub fn saturated_singletons(&self) -> usize {
        self.family.len() - self.search.working.len()
    }

    /// Adds a k-chain of the family that keeps every codegree within its cap.
    pub fn add_edge(&mut self, chain: Chain) -> Result<()> {
        let masks = chain.masks();
        if masks.len() != self.k as usize {
            return Err(Error::domain(format!(
                "edge has {} sets, expected {}",
                masks.len(),
                self.k
            )));
        }
        if let Some(&x) = masks.iter().find(|&&x| !self.family.contains(x)) {
            return Err(Error::domain(format!("{x:x} is not in the family")));
        }
        self.ledger.record(&masks)?;
        self.edges.push(chain);
        let cap1 = self.ledger.caps[0];
        let newly: Vec<u32> = masks
            .iter()
            .copied()
            .filter(|&x| self.ledger.degree(&[x]) >= cap1)
            .collect();
        if !newly.is_empty() {
            let s = &mut self.search;
            s.working = s.working.filter(|x| !newly.contains(&x));
            s.removed_since_stale += newly.len();
            s.epoch += 1;
        }
        Ok(())
    }

    /// `δ^k m^(k-1) C(n, n/2)`.
    pub fn edge_bound(&self) -> BigRational {
        let l = &self.ledger;
        num_traits::pow(l.delta.clone(), self.k as usize)
            * num_traits::pow(l.chain_param_m.clone(), (self.k - 1) as usize)
            * rational(central_binomial(self.family.n()))
    }

    /// `α - |S(∅)| / C(n, n/2)`.
    pub fn effective_alpha(&self, alpha: &BigRational) -> BigRational {
        alpha - BigRational::new(
            BigInt::from(self.saturated_singletons()),
            BigInt::from(central_binomial(self.family.n())),
        )
    }

    /// Hypergraph dump: header `n k δ m`, then one edge per line, masks in hex, largest first.
    pub fn to_dump(&self) -> String {
        let l = &self.ledger;
        let mut out = format!(
            "{} {} {}/{} {}/{}\n",
            self.family.n(),
            self.k,
            l.delta.numer(),
            l.delta.denom(),
            l.chain_param_m.numer(),
            l.chain_param_m.denom()
        );
        for e in &self.edges {
            let line: Vec<String> = e.masks().iter().map(|m| format!("{m:x}")).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }
}

/// `Δ_l(H)` from the ledger.
pub fn max_codegree(h: &ChainHypergraph, ell: u32) -> Result<u64> {
    h.ledger.max_degree(ell)
}

/// A good k-chain of the working family, or `None` when every admissible top is exhausted.
pub fn find_good_edge(h: &mut ChainHypergraph, alpha: &BigRational) -> Result<Option<Chain>> {
    let k = h.k;
    let n = h.family.n();
    let c = central_binomial(n);
    if h.edge_count() as u128 > h.edge_cap {
        return Err(Error::contract(format!(
            "e(H) = {} exceeds δ^k m^(k-1) C(n, n/2) = {}",
            h.edge_count(),
            h.edge_bound()
        )));
    }
    for ell in 1..=k {
        if h.ledger.max_degree(ell)? > h.ledger.cap(ell)? {
            return Err(Error::contract(format!("Δ_{ell} exceeds its cap")));
        }
    }
    let fresh = match &h.search.thresholds {
        Some((epoch, a, _)) => *epoch != h.search.epoch || a != alpha,
        None => true,
    };
    if fresh {
        let alpha_eff = h.effective_alpha(alpha);
        if !alpha_eff.is_positive() {
            return Err(Error::contract(format!(
                "saturated singletons used up the density surplus (effective α = {alpha_eff})"
            )));
        }
        let need = (rational(u128::from(k - 1)) + &alpha_eff) * rational(c);
        if rational(h.search.working.len() as u128) < need {
            return Err(Error::contract(format!(
                "working family has {} sets, fewer than (k - 1 + α) C(n, n/2) = {need}",
                h.search.working.len()
            )));
        }
        // per-size thresholds: c_k(F) >= α/k  <=>  |F|! c_k(F) >= ceil(α |F|! / k)
        let thresholds: Vec<u128> = (0..=n)
            .map(|s| {
                let t = &alpha_eff * rational(factorial(s)) / rational(u128::from(k));
                t.ceil().to_integer().to_u128().unwrap_or(u128::MAX)
            })
            .collect();
        h.search.thresholds = Some((h.search.epoch, alpha.clone(), thresholds));
    }

    let s = &mut h.search;
    let thresholds = s.thresholds.take().expect("set above");
    let found = scan_tops(&h.ledger, s, &thresholds.2, k);
    s.thresholds = Some(thresholds);
    found
}

fn scan_tops(ledger: &SaturationLedger, s: &mut SearchState, thresholds: &[u128], k: u32) -> Result<Option<Chain>> {
    if s.f1_epoch != s.epoch {
        s.f1_pos = 0;
        s.f1_epoch = s.epoch;
        if s.stale.is_none() || s.removed_since_stale * 32 > s.working.len() {
            s.stale = Some(DensityTable::build(&s.working, k)?);
            s.removed_since_stale = 0;
        }
    }
    while s.f1_pos < s.f1_order.len() {
        let f1 = s.f1_order[s.f1_pos];
        if s.dead[f1 as usize] || !s.working.contains(f1) {
            s.f1_pos += 1;
            continue;
        }
        let stale = s.stale.as_ref().expect("built above");
        let need = thresholds[f1.count_ones() as usize];
        let upper = stale.scaled(SubsetId(f1), k).unwrap_or(0);
        if upper < need || exact_scaled(s, f1, k)? < need {
            s.f1_pos += 1;
            continue;
        }
        let mut prefix = vec![f1];
        if descend(ledger, s, &mut prefix, k)? {
            return Ok(Some(Chain::from_masks(&prefix)?));
        }
        s.dead[f1 as usize] = true;
        s.f1_pos += 1;
    }
    Ok(None)
}

/// `|F|! c_k(F)` in the current working family.
fn exact_scaled(s: &mut SearchState, f1: u32, k: u32) -> Result<u128> {
    if let Some(&(epoch, w)) = s.exact.get(&f1) {
        if epoch == s.epoch {
            return Ok(w);
        }
    }
    let local = s.working.restrict_below(f1, false);
    let top = (1u32 << f1.count_ones()) - 1;
    let w = DensityTable::build(&local, k)?.scaled(SubsetId(top), k)?;
    s.exact.insert(f1, (s.epoch, w));
    Ok(w)
}

fn descend(ledger: &SaturationLedger, s: &mut SearchState, prefix: &mut Vec<u32>, k: u32) -> Result<bool> {
    if prefix.len() == k as usize {
        return Ok(true);
    }
    let depth = prefix.len();
    let top = prefix[depth - 1];
    // a child must head a chain of this many sets
    let remaining = k - prefix.len() as u32;
    let mut cur = match s.cursors.get(prefix.as_slice()) {
        Some(&c) => c,
        None => ChildCursor::start(top),
    };
    let found = loop {
        if cur.done || cur.size + 1 < remaining {
            cur.done = true;
            break false;
        }
        if s.working.level(cur.size).is_empty() {
            cur.next_level();
            continue;
        }
        let g = pdep(cur.comb, top);
        let usable = s.working.contains(g)
            && s.stale.as_ref().is_some_and(|t| t.has_chain(SubsetId(g), remaining))
            && !extension_is_bad(ledger, prefix, g);
        if usable {
            prefix.push(g);
            if descend(ledger, s, prefix, k)? {
                break true;
            }
            prefix.pop();
        }
        cur.advance(top);
    };
    s.cursors.insert(prefix[..depth].to_vec(), cur);
    Ok(found)
}

/// Why the builder stopped short of its edge target.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    NoGoodEdge,
    /// Saturated singletons consumed the surplus `α C(n, n/2)`.
    SurplusExhausted,
}

#[derive(Clone, Debug)]
pub struct BuildReport {
    pub hypergraph: ChainHypergraph,
    /// `ceil(δ^k m^(k-1) C(n, n/2))`.
    pub target: u128,
    pub target_met: bool,
    pub stop: Option<StopReason>,
}

/// Smallest `C(|F|, |G|)` over comparable `F ⊋ G` in the family, if any pair exists.
pub fn min_comparable_binomial(fam: &SubsetFamily) -> Option<u128> {
    let levels = fam.occupied_levels();
    let mut pairs: Vec<(u128, u32, u32)> = levels
        .iter()
        .flat_map(|&a| levels.iter().filter(move |&&b| b < a).map(move |&b| (binomial(a.into(), b.into()), a, b)))
        .collect();
    pairs.sort_unstable();
    let n = fam.n();
    for (value, a, b) in pairs {
        // does some member of level a contain a member of level b?
        let mut below = vec![false; 1usize << n];
        for &g in fam.level(b) {
            below[g as usize] = true;
        }
        for i in 0..n {
            let bit = 1usize << i;
            for z in 0..below.len() {
                if z & bit != 0 && below[z ^ bit] {
                    below[z] = true;
                }
            }
        }
        if fam.level(a).iter().any(|&f| below[f as usize]) {
            return Some(value);
        }
    }
    None
}

fn check_build_inputs(fam: &SubsetFamily, k: u32, delta: &BigRational, m: &BigRational, alpha: &BigRational) -> Result<()> {
    if !alpha.is_positive() {
        return Err(Error::domain(format!("α must be positive, got {alpha}")));
    }
    if !delta.is_positive() || !m.is_positive() {
        return Err(Error::domain("δ and m must be positive"));
    }
    let c = rational(central_binomial(fam.n()));
    let need = (rational(u128::from(k.saturating_sub(1))) + alpha) * &c;
    if rational(fam.len() as u128) < need {
        return Err(Error::contract(format!(
            "|F| = {} < (k - 1 + α) C(n, n/2) = {need}",
            fam.len()
        )));
    }
    if delta * m < BigRational::one() {
        return Err(Error::contract(format!("δ^-1 <= m fails: δ = {delta}, m = {m}")));
    }
    if let Some(min) = min_comparable_binomial(fam) {
        if m > &rational(min) {
            return Err(Error::contract(format!(
                "m <= C(|F|, |G|) fails: m = {m}, smallest comparable binomial is {min}"
            )));
        }
    }
    Ok(())
}

/// Greedy edge-by-edge construction until `e(H) >= ceil(δ^k m^(k-1) C(n, n/2))`.
pub fn build_balanced_hypergraph(
    fam: &SubsetFamily,
    k: u32,
    delta: &BigRational,
    m: &BigRational,
    alpha: &BigRational,
) -> Result<BuildReport> {
    check_build_inputs(fam, k, delta, m, alpha)?;
    let mut h = ChainHypergraph::new(fam, k, delta.clone(), m.clone())?;
    let target = h
        .edge_bound()
        .ceil()
        .to_integer()
        .to_u128()
        .ok_or_else(|| Error::domain("edge target does not fit in u128"))?;
    let mut stop = None;
    let mut checked = None;
    while (h.edge_count() as u128) < target {
        if checked != Some(h.saturated_singletons()) {
            if !h.effective_alpha(alpha).is_positive() {
                stop = Some(StopReason::SurplusExhausted);
                break;
            }
            checked = Some(h.saturated_singletons());
        }
        match find_good_edge(&mut h, alpha)? {
            Some(edge) => h.add_edge(edge)?,
            None => {
                stop = Some(StopReason::NoGoodEdge);
                break;
            }
        }
    }
    for ell in 1..=k {
        if h.ledger.max_degree(ell)? > h.ledger.cap(ell)? {
            return Err(Error::contract(format!("Δ_{ell} exceeds its cap after building")));
        }
    }
    Ok(BuildReport {
        target_met: (h.edge_count() as u128) >= target,
        hypergraph: h,
        target,
        stop,
    })
}

/// Outcome of the search for the largest workable δ.
#[derive(Clone, Debug)]
pub struct DeltaSearch {
    /// Largest δ on the grid whose build met its target.
    pub delta: Option<BigRational>,
    pub report: Option<BuildReport>,
    /// Every `(δ, target met)` evaluated, in evaluation order.
    pub tried: Vec<(BigRational, bool)>,
}

/// Binary search for the largest δ in `{1/m} ∪ {j/grid : 1/m <= j/grid <= 1}` meeting the target.
pub fn largest_feasible_delta(
    fam: &SubsetFamily,
    k: u32,
    m: &BigRational,
    alpha: &BigRational,
    grid: u32,
) -> Result<DeltaSearch> {
    if grid == 0 {
        return Err(Error::domain("grid must be positive"));
    }
    let floor_delta = m.recip();
    let mut candidates = vec![floor_delta.clone()];
    for j in 1..=grid {
        let d = BigRational::new(BigInt::from(j), BigInt::from(grid));
        if d > floor_delta {
            candidates.push(d);
        }
    }
    let mut tried = Vec::new();
    let mut best: Option<(usize, BuildReport)> = None;
    let (mut lo, mut hi) = (0usize, candidates.len());
    while lo < hi {
        let mid = match &best {
            None => 0,
            Some(_) => lo + (hi - lo) / 2,
        };
        let report = build_balanced_hypergraph(fam, k, &candidates[mid], m, alpha)?;
        tried.push((candidates[mid].clone(), report.target_met));
        if report.target_met {
            lo = mid + 1;
            best = Some((mid, report));
        } else if best.is_none() {
            break;
        } else {
            hi = mid;
        }
    }
    Ok(match best {
        Some((i, report)) => DeltaSearch {
            delta: Some(candidates[i].clone()),
            report: Some(report),
            tried,
        },
        None => DeltaSearch {
            delta: None,
            report: None,
            tried,
        },
    })
}

/// Sets `F` outside `A`, not saturated alone, for which `A ∪ {F}` is bad. `A` must be good.
pub fn bad_extensions(h: &ChainHypergraph, a: &[u32]) -> Result<Vec<u32>> {
    if a.is_empty() || a.len() >= h.k as usize {
        return Err(Error::domain(format!("A must have 1..{} sets", h.k)));
    }
    for len in 1..=a.len() {
        if extension_is_bad(&h.ledger, &a[..len - 1], a[len - 1]) {
            return Err(Error::contract("A is not good"));
        }
    }
    let cap1 = h.ledger.caps[0];
    Ok((0..1u32 << h.family.n())
        .filter(|f| !a.contains(f) && h.ledger.degree(&[*f]) < cap1)
        .filter(|&f| extension_is_bad(&h.ledger, a, f))
        .collect())
}

/// `2^|A| · 2δkm`.
pub fn bad_extension_bound(h: &ChainHypergraph, a_len: usize) -> BigRational {
    let l = &h.ledger;
    rational(1u128 << a_len) * rational(2 * u128::from(h.k)) * &l.delta * &l.chain_param_m
}

/// Sum over critical chains `F_1 ⊋ ... ⊋ F_(l+1)` of the working family of
/// `prod 1/C(|F_i|, |F_(i+1)|)`, together with the bound `2^l · 2δk · c_l(F_1)`.
pub fn critical_chain_density(h: &ChainHypergraph, f1: u32, ell: u32) -> Result<(BigRational, BigRational)> {
    if ell == 0 || ell >= h.k {
        return Err(Error::domain(format!("l must lie in 1..{}", h.k)));
    }
    let working = &h.search.working;
    if !working.contains(f1) {
        return Err(Error::domain(format!("{f1:x} is not in the working family")));
    }
    let mut total = BigRational::zero();
    let mut prefix = vec![f1];
    critical_walk(h, working, &mut prefix, ell as usize + 1, &BigRational::one(), &mut total);
    let local = working.restrict_below(f1, false);
    let top = (1u32 << f1.count_ones()) - 1;
    let c_ell = DensityTable::build(&local, ell)?.density(SubsetId(top), ell)?;
    let l = &h.ledger;
    let bound = rational(1u128 << ell) * rational(2 * u128::from(h.k)) * &l.delta * c_ell;
    Ok((total, bound))
}

fn critical_walk(
    h: &ChainHypergraph,
    working: &SubsetFamily,
    prefix: &mut Vec<u32>,
    len: usize,
    weight: &BigRational,
    total: &mut BigRational,
) {
    let top = *prefix.last().expect("nonempty");
    let mut g = top;
    loop {
        g = g.wrapping_sub(1) & top;
        if working.contains(g) && g != top {
            let w = weight / rational(binomial(top.count_ones().into(), g.count_ones().into()));
            let bad = extension_is_bad(&h.ledger, prefix, g);
            if prefix.len() + 1 == len {
                if bad {
                    *total += w;
                }
            } else if !bad {
                prefix.push(g);
                critical_walk(h, working, prefix, len, &w, total);
                prefix.pop();
            }
        }
        if g == 0 {
            break;
        }
    }
}
