//! Exact extremal optima for subfamilies of `P(n)`.
//!
//! Both flow solvers route comparabilities through a copy of the Hasse diagram
//! of `P(n)` (one uncapacitated "descent" node per mask, arcs `z -> z \ {i}`),
//! so a member can reach every strict subset without materializing all
//! comparable pairs.
//!
//! * [`max_antichain`]: Dilworth. Maximum matching of the strict-containment
//!   bipartite graph; the antichain is read off a minimum cut (König).
//! * [`max_k_chain_free`]: Greene-Kleitman. The largest union of `j = k - 1`
//!   antichains equals `min over chain partitions of sum min(|C|, j)`, i.e.
//!   `|fam| - max sum (|C| - j)` over disjoint chains, a min-cost flow where a
//!   chain start costs `j` and every covered element earns `1`. The witness is
//!   recovered from optimal node potentials.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{Network, INF_CAP};
use crate::lattice::{count_k_chains, heights_below, Chain, SubsetFamily, SubsetId};

/// Largest family accepted by the exhaustive oracle.
pub const BRUTE_FORCE_LIMIT: usize = 64;

/// The poset induced on a list of subsets by strict containment.
#[derive(Clone, Debug)]
pub struct PosetInstance {
    pub elements: Vec<SubsetId>,
}

impl PosetInstance {
    pub fn from_family(fam: &SubsetFamily) -> Self {
        PosetInstance {
            elements: fam.iter().collect(),
        }
    }

    pub fn less(&self, a: usize, b: usize) -> bool {
        self.elements[b].is_strict_superset_of(self.elements[a])
    }

    /// Irreflexivity and transitivity, checked over all triples.
    pub fn is_strict_partial_order(&self) -> bool {
        let len = self.elements.len();
        (0..len).all(|a| !self.less(a, a))
            && (0..len).all(|a| {
                (0..len).all(|b| !self.less(a, b) || (0..len).all(|c| !self.less(b, c) || self.less(a, c)))
            })
    }
}

/// An optimum together with the data that certifies it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Solution {
    pub size: usize,
    /// Witness subfamily, ascending masks.
    pub witness: Vec<u32>,
    pub method: String,
    /// A chain partition of the family (tops first) whose Greene-Kleitman cost
    /// `sum min(|C|, k - 1)` equals `size`.
    pub chain_partition: Vec<Vec<u32>>,
}

impl Solution {
    /// `sum over the chain partition of min(|C|, j)`.
    pub fn partition_cost(&self, j: usize) -> usize {
        self.chain_partition.iter().map(|c| c.len().min(j)).sum()
    }
}

/// Exhaustive branch-and-bound over all subfamilies; the independent oracle.
pub fn brute_force_max_k_chain_free(fam: &SubsetFamily, k: u32) -> Result<(usize, Vec<u32>)> {
    if k == 0 {
        return Err(Error::domain("k must be at least 1"));
    }
    if fam.len() > BRUTE_FORCE_LIMIT {
        return Err(Error::domain(format!(
            "brute force refuses families larger than {BRUTE_FORCE_LIMIT} (got {})",
            fam.len()
        )));
    }
    // Larger sets first: when an element is considered, every chosen comparable
    // element lies above it, so only chains ending at it can grow.
    let order = fam.members_desc();
    let suffix_cap: Vec<usize> = (0..=order.len()).map(|pos| greedy_chain_cap(order[pos..].iter().copied(), k - 1)).collect();
    let scd_chain = symmetric_chain_ids(&order, fam.n());
    // any k - 1 levels are k-chain-free; start from the fullest ones
    let mut levels = fam.occupied_levels();
    levels.sort_by_key(|&j| std::cmp::Reverse(fam.level(j).len()));
    levels.truncate((k - 1) as usize);
    let incumbent: Vec<u32> = order.iter().copied().filter(|x| levels.contains(&x.count_ones())).collect();
    let mut search = BruteForce {
        order: &order,
        suffix_cap: &suffix_cap,
        scd_chain: &scd_chain,
        scd_count: vec![0; scd_chain.iter().max().map_or(0, |&c| c + 1)],
        limit: k - 1,
        chosen: Vec::new(),
        up_len: Vec::new(),
        best: incumbent,
    };
    search.run(0);
    let mut witness = search.best;
    witness.sort_unstable();
    Ok((witness.len(), witness))
}

/// `sum min(|C|, limit)` over a greedy chain partition of `desc` (each set joins
/// the chain with the smallest bottom above it); an upper bound on any subfamily
/// of `desc` without a `(limit + 1)`-chain.
fn greedy_chain_cap(desc: impl IntoIterator<Item = u32>, limit: u32) -> usize {
    let mut bottoms: Vec<(u32, usize)> = Vec::new();
    for x in desc {
        let slot = bottoms
            .iter_mut()
            .filter(|(b, _)| *b != x && x & !*b == 0)
            .min_by_key(|(b, _)| b.count_ones());
        match slot {
            Some(slot) => *slot = (x, slot.1 + 1),
            None => bottoms.push((x, 1)),
        }
    }
    bottoms.iter().map(|&(_, len)| len.min(limit as usize)).sum()
}

/// For each member, the index of its chain in the de Bruijn symmetric chain
/// decomposition of `P(n)`: bits are matched as parentheses (`0` opens, `1`
/// closes) and sets agreeing on the matched positions share a chain.
fn symmetric_chain_ids(members: &[u32], n: u32) -> Vec<usize> {
    let mut ids = std::collections::HashMap::new();
    members
        .iter()
        .map(|&x| {
            let mut open = Vec::new();
            let mut matched = 0u32;
            for i in 0..n {
                if x >> i & 1 == 0 {
                    open.push(i);
                } else if let Some(j) = open.pop() {
                    matched |= 1 << i | 1 << j;
                }
            }
            let next = ids.len();
            *ids.entry((matched, x & matched)).or_insert(next)
        })
        .collect()
}

struct BruteForce<'a> {
    order: &'a [u32],
    suffix_cap: &'a [usize],
    scd_chain: &'a [usize],
    scd_count: Vec<usize>,
    limit: u32,
    chosen: Vec<u32>,
    /// Longest chain among chosen sets having the matching chosen set as its bottom.
    up_len: Vec<u32>,
    best: Vec<u32>,
}

impl BruteForce<'_> {
    /// Length of the longest chain of chosen sets extended by `x` at the bottom.
    fn chain_len(&self, x: u32) -> u32 {
        1 + self
            .chosen
            .iter()
            .zip(&self.up_len)
            .filter(|(&y, _)| y != x && x & !y == 0)
            .map(|(_, &l)| l)
            .max()
            .unwrap_or(0)
    }

    fn run(&mut self, pos: usize) {
        if pos == self.order.len() {
            if self.chosen.len() > self.best.len() {
                self.best = self.chosen.clone();
            }
            return;
        }
        if self.chosen.len() + self.suffix_cap[pos] <= self.best.len() {
            return;
        }
        // sets that already close a long chain can never be added later
        let open: Vec<usize> = (pos..self.order.len()).filter(|&i| self.chain_len(self.order[i]) <= self.limit).collect();
        let limit = self.limit as usize;
        let mut scd_cap = 0;
        for &i in &open {
            let c = &mut self.scd_count[self.scd_chain[i]];
            *c += 1;
            scd_cap += usize::from(*c <= limit);
        }
        for &i in &open {
            self.scd_count[self.scd_chain[i]] = 0;
        }
        if self.chosen.len() + scd_cap <= self.best.len() {
            return;
        }
        if self.chosen.len() + greedy_chain_cap(open.iter().map(|&i| self.order[i]), self.limit) <= self.best.len() {
            return;
        }
        let x = self.order[pos];
        let len = self.chain_len(x);
        if len <= self.limit {
            self.chosen.push(x);
            self.up_len.push(len);
            self.run(pos + 1);
            self.chosen.pop();
            self.up_len.pop();
        }
        self.run(pos + 1);
    }
}

/// Node layout shared by both solvers.
struct Layout {
    members: Vec<u32>,
    descent_base: usize,
    first_member_node: usize,
}

const SOURCE: usize = 0;
const SINK: usize = 1;

impl Layout {
    fn new(fam: &SubsetFamily) -> Layout {
        Layout {
            members: fam.members_desc(),
            descent_base: 2,
            first_member_node: 2 + (1usize << fam.n()),
        }
    }

    fn descent(&self, mask: u32) -> usize {
        self.descent_base + mask as usize
    }

    /// The two nodes of member `i` (upper/lower copy).
    fn pair(&self, i: usize) -> (usize, usize) {
        (self.first_member_node + 2 * i, self.first_member_node + 2 * i + 1)
    }

    fn node_count(&self) -> usize {
        self.first_member_node + 2 * self.members.len()
    }

    fn add_descent_arcs(&self, net: &mut Network, n: u32) {
        for z in 1..(1u32 << n) {
            let mut rest = z;
            while rest != 0 {
                let b = rest & rest.wrapping_neg();
                net.add_arc(self.descent(z), self.descent(z ^ b), INF_CAP, 0);
                rest ^= b;
            }
        }
    }

    fn add_strict_descent(&self, net: &mut Network, from: usize, mask: u32) {
        let mut rest = mask;
        while rest != 0 {
            let b = rest & rest.wrapping_neg();
            net.add_arc(from, self.descent(mask ^ b), INF_CAP, 0);
            rest ^= b;
        }
    }

    /// Follows one unit of flow from `start` through descent nodes to a member node,
    /// consuming it from `remaining`.
    fn follow_unit(&self, net: &Network, remaining: &mut [i64], start: usize, target_is: impl Fn(usize) -> Option<usize>) -> Option<usize> {
        let mut v = start;
        loop {
            let a = net
                .out_arcs(v)
                .iter()
                .copied()
                .find(|&a| net.is_forward(a) && remaining[a / 2] > 0)?;
            remaining[a / 2] -= 1;
            v = net.head(a);
            if let Some(found) = target_is(v) {
                return Some(found);
            }
        }
    }
}

fn check_dense(fam: &SubsetFamily) -> Result<()> {
    if fam.n() > 24 {
        return Err(Error::domain(format!(
            "flow solvers build a 2^n descent network; n = {} is too large",
            fam.n()
        )));
    }
    Ok(())
}

/// Maximum antichain by Dilworth duality.
pub fn max_antichain(fam: &SubsetFamily) -> Result<Solution> {
    check_dense(fam)?;
    let lay = Layout::new(fam);
    let mut net = Network::new(lay.node_count());
    lay.add_descent_arcs(&mut net, fam.n());
    let mut source_arc = Vec::with_capacity(lay.members.len());
    for (i, &x) in lay.members.iter().enumerate() {
        let (left, right) = lay.pair(i);
        source_arc.push(net.add_arc(SOURCE, left, 1, 0));
        lay.add_strict_descent(&mut net, left, x);
        net.add_arc(lay.descent(x), right, INF_CAP, 0);
        net.add_arc(right, SINK, 1, 0);
    }
    let matching = net.max_flow(SOURCE, SINK) as usize;

    let reach = net.residual_reachable(SOURCE);
    let mut witness: Vec<u32> = lay
        .members
        .iter()
        .enumerate()
        .filter(|&(i, _)| {
            let (left, right) = lay.pair(i);
            reach[left] && !reach[right]
        })
        .map(|(_, &x)| x)
        .collect();
    witness.sort_unstable();

    // Dilworth chain cover from the matching: x -> y whenever a flow unit runs L_x ~> R_y.
    let mut remaining: Vec<i64> = (0..net_arc_pairs(&net)).map(|p| net.flow(2 * p)).collect();
    let mut next = vec![usize::MAX; lay.members.len()];
    let mut has_prev = vec![false; lay.members.len()];
    let right_of = |v: usize| {
        (v >= lay.first_member_node && (v - lay.first_member_node) % 2 == 1)
            .then(|| (v - lay.first_member_node) / 2)
    };
    for (i, &a) in source_arc.iter().enumerate() {
        if net.flow(a) == 1 {
            let (left, _) = lay.pair(i);
            let j = lay
                .follow_unit(&net, &mut remaining, left, right_of)
                .ok_or_else(|| Error::contract("flow decomposition lost a unit"))?;
            next[i] = j;
            has_prev[j] = true;
        }
    }
    let chains = collect_chains(&lay.members, &next, &has_prev);
    let sol = Solution {
        size: lay.members.len() - matching,
        witness,
        method: "dilworth-matching".into(),
        chain_partition: chains,
    };
    if sol.witness.len() != sol.size || sol.chain_partition.len() != sol.size {
        return Err(Error::contract(format!(
            "Dilworth certificate mismatch: antichain {}, cover {}, expected {}",
            sol.witness.len(),
            sol.chain_partition.len(),
            sol.size
        )));
    }
    let witness_fam = SubsetFamily::from_masks(fam.n(), sol.witness.iter().copied())?;
    if count_k_chains(&witness_fam, 2) != 0 {
        return Err(Error::contract("antichain witness contains a comparable pair"));
    }
    Ok(sol)
}

fn net_arc_pairs(net: &Network) -> usize {
    (0..net.node_count()).map(|v| net.out_arcs(v).len()).sum::<usize>() / 2
}

fn collect_chains(members: &[u32], next: &[usize], has_prev: &[bool]) -> Vec<Vec<u32>> {
    let mut chains = Vec::new();
    for start in 0..members.len() {
        if has_prev[start] {
            continue;
        }
        let mut chain = vec![members[start]];
        let mut cur = start;
        while next[cur] != usize::MAX {
            cur = next[cur];
            chain.push(members[cur]);
        }
        chains.push(chain);
    }
    chains
}

/// Maximum subfamily containing no k-chain. `k = 2` uses the Dilworth route,
/// larger `k` the Greene-Kleitman min-cost flow.
pub fn max_k_chain_free(fam: &SubsetFamily, k: u32) -> Result<Solution> {
    if k < 2 {
        return Err(Error::domain(format!("k must be at least 2, got {k}")));
    }
    if k == 2 {
        max_antichain(fam)
    } else {
        max_k_chain_free_mcf(fam, k)
    }
}

/// Greene-Kleitman min-cost flow for any `k >= 2`.
pub fn max_k_chain_free_mcf(fam: &SubsetFamily, k: u32) -> Result<Solution> {
    if k < 2 {
        return Err(Error::domain(format!("k must be at least 2, got {k}")));
    }
    check_dense(fam)?;
    let j = i64::from(k - 1);
    let lay = Layout::new(fam);
    let mut net = Network::new(lay.node_count());
    lay.add_descent_arcs(&mut net, fam.n());
    let mut start_arc = Vec::with_capacity(lay.members.len());
    let mut cover_arc = Vec::with_capacity(lay.members.len());
    let mut end_arc = Vec::with_capacity(lay.members.len());
    for (i, &x) in lay.members.iter().enumerate() {
        let (inp, out) = lay.pair(i);
        start_arc.push(net.add_arc(SOURCE, inp, 1, j));
        cover_arc.push(net.add_arc(inp, out, 1, -1));
        end_arc.push(net.add_arc(out, SINK, 1, 0));
        lay.add_strict_descent(&mut net, out, x);
        net.add_arc(lay.descent(x), inp, INF_CAP, 0);
    }
    let (flow, cost) = net.min_cost_free_flow(SOURCE, SINK);
    let total = lay.members.len() as i64;
    let size = usize::try_from(total + cost)
        .map_err(|_| Error::contract(format!("negative optimum {}", total + cost)))?;

    let witness: Vec<u32> = if flow == 0 {
        lay.members.clone()
    } else {
        // Potentials with p(v) <= p(u) + cost on every residual arc; the
        // return arc t -> s (and s -> t while flow is positive) pins p(t) = p(s).
        let pot = net
            .residual_potentials(&[(SINK, SOURCE, 0), (SOURCE, SINK, 0)])
            .ok_or_else(|| Error::contract("negative residual cycle after min-cost flow"))?;
        let base = pot[SOURCE];
        lay.members
            .iter()
            .enumerate()
            .filter(|&(i, _)| {
                let (inp, out) = lay.pair(i);
                let upper = (pot[inp] - base).min(j);
                let lower = (pot[out] - base + 1).max(1);
                lower <= upper
            })
            .map(|(_, &x)| x)
            .collect()
    };
    let mut witness = witness;
    witness.sort_unstable();

    // Chain partition: flow chains plus uncovered singletons.
    let mut remaining: Vec<i64> = (0..net_arc_pairs(&net)).map(|p| net.flow(2 * p)).collect();
    let mut next = vec![usize::MAX; lay.members.len()];
    let mut has_prev = vec![false; lay.members.len()];
    let in_of = |v: usize| {
        (v >= lay.first_member_node && (v - lay.first_member_node) % 2 == 0)
            .then(|| (v - lay.first_member_node) / 2)
    };
    for i in 0..lay.members.len() {
        if net.flow(cover_arc[i]) == 0 || net.flow(end_arc[i]) == 1 {
            continue;
        }
        let (_, out) = lay.pair(i);
        let succ = lay
            .follow_unit(&net, &mut remaining, out, in_of)
            .ok_or_else(|| Error::contract("flow decomposition lost a unit"))?;
        next[i] = succ;
        has_prev[succ] = true;
    }
    debug_assert!(start_arc.iter().filter(|&&a| net.flow(a) == 1).count() as i64 == flow);
    let sol = Solution {
        size,
        witness,
        method: "greene-kleitman-mcf".into(),
        chain_partition: collect_chains(&lay.members, &next, &has_prev),
    };
    verify_k_chain_free(fam, k, &sol)?;
    Ok(sol)
}

fn verify_k_chain_free(fam: &SubsetFamily, k: u32, sol: &Solution) -> Result<()> {
    let witness_fam = SubsetFamily::from_masks(fam.n(), sol.witness.iter().copied())?;
    if !witness_fam.is_subfamily_of(fam) {
        return Err(Error::contract("witness is not a subfamily"));
    }
    if sol.witness.len() != sol.size {
        return Err(Error::contract(format!(
            "witness has {} sets, optimum is {}",
            sol.witness.len(),
            sol.size
        )));
    }
    if count_k_chains(&witness_fam, k) != 0 {
        return Err(Error::contract(format!("witness contains a {k}-chain")));
    }
    let cost = sol.partition_cost((k - 1) as usize);
    if cost != sol.size {
        return Err(Error::contract(format!(
            "chain partition cost {cost} differs from optimum {}",
            sol.size
        )));
    }
    Ok(())
}

/// Result of splitting a family into antichains by height.
#[derive(Clone, Debug, PartialEq)]
pub enum Mirsky {
    /// `k - 1` antichains partitioning the family (some possibly empty).
    Antichains(Vec<SubsetFamily>),
    /// The family contains this k-chain.
    Violation(Chain),
}

/// Partition a k-chain-free family into `k - 1` antichains: antichain `i` holds
/// the members whose longest chain downwards has length `i`.
pub fn mirsky_decompose(fam: &SubsetFamily, k: u32) -> Result<Mirsky> {
    if k < 2 {
        return Err(Error::domain(format!("k must be at least 2, got {k}")));
    }
    let members = fam.members_desc();
    let heights = heights_below(fam, &members);
    if let Some(start) = heights.iter().position(|&h| h >= k) {
        let mut chain = vec![SubsetId(members[start])];
        let mut cur = start;
        while chain.len() < k as usize {
            let x = members[cur];
            let want = heights[cur] - 1;
            cur = (0..members.len())
                .find(|&p| heights[p] == want && members[p] != x && members[p] & !x == 0)
                .ok_or_else(|| Error::contract("height table inconsistent"))?;
            chain.push(SubsetId(members[cur]));
        }
        return Ok(Mirsky::Violation(Chain::new(chain)?));
    }
    let antichains = (1..k)
        .map(|h| {
            SubsetFamily::from_masks(
                fam.n(),
                members.iter().zip(&heights).filter(|(_, &hh)| hh == h).map(|(&m, _)| m),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Mirsky::Antichains(antichains))
}
