//! Subsets of `[n]` as bitmasks, families of subsets, and k-chain enumeration.
//!
//! Bit `i` of a mask stands for the element `i + 1` of the ground set. A
//! family stores membership as a flat bitset over all `2^n` masks together
//! with a per-level index, so both membership tests and level scans are cheap.

use std::cmp::Reverse;
use std::fmt;
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Largest supported ground-set size.
pub const MAX_N: u32 = 30;

/// Above this size dense `2^n` work arrays are avoided and pairwise scans are used.
const DENSE_LIMIT: u32 = 24;

/// A subset of the ground set, encoded as a little-endian bitmask.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SubsetId(pub u32);

impl SubsetId {
    #[inline]
    pub fn mask(self) -> u32 {
        self.0
    }

    /// Cardinality of the subset.
    #[inline]
    pub fn size(self) -> u32 {
        self.0.count_ones()
    }

    #[inline]
    pub fn is_subset_of(self, other: SubsetId) -> bool {
        self.0 & !other.0 == 0
    }

    #[inline]
    pub fn is_strict_superset_of(self, other: SubsetId) -> bool {
        self.0 != other.0 && other.is_subset_of(self)
    }

    #[inline]
    pub fn comparable(self, other: SubsetId) -> bool {
        self.is_subset_of(other) || other.is_subset_of(self)
    }

    /// Sort key of the canonical enumeration order: larger sets first, then ascending mask.
    #[inline]
    pub fn desc_key(self) -> (Reverse<u32>, u32) {
        (Reverse(self.size()), self.0)
    }
}

impl fmt::Display for SubsetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:x}", self.0)
    }
}

/// Binomial coefficient, zero when `j > n`.
pub fn binomial(n: u64, j: u64) -> u128 {
    if j > n {
        return 0;
    }
    let j = j.min(n - j);
    let mut acc: u128 = 1;
    for i in 0..j {
        // acc * (n - i) is divisible by (i + 1) after the multiplication
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    acc
}

/// Size of level `j` of `P(n)`, i.e. `C(n, j)`.
pub fn level_size(n: u32, j: u32) -> Result<u128> {
    if j > n {
        return Err(Error::domain(format!("level {j} out of range for n = {n}")));
    }
    Ok(binomial(u64::from(n), u64::from(j)))
}

/// `C(n, floor(n/2))`, the size of a largest level.
pub fn central_binomial(n: u32) -> u128 {
    binomial(u64::from(n), u64::from(n / 2))
}

/// Levels of `P(n)` ordered by decreasing size. Ties go to the level nearer
/// `ceil(n/2)`, then to the lower level.
pub fn levels_by_size(n: u32) -> Vec<u32> {
    let centre = n.div_ceil(2);
    let mut levels: Vec<u32> = (0..=n).collect();
    levels.sort_by_key(|&j| {
        (
            Reverse(binomial(u64::from(n), u64::from(j))),
            j.abs_diff(centre),
            j,
        )
    });
    levels
}

/// Sum of the `count` largest binomial coefficients `C(n, j)`.
pub fn largest_levels_total(n: u32, count: usize) -> u128 {
    levels_by_size(n)
        .into_iter()
        .take(count)
        .map(|j| binomial(u64::from(n), u64::from(j)))
        .sum()
}

/// The `k - 1` largest levels of `P(n)`; contains no k-chain.
pub fn middle_layers(n: u32, k: u32) -> Result<SubsetFamily> {
    if k < 2 {
        return Err(Error::domain(format!("middle_layers needs k >= 2, got {k}")));
    }
    if k - 1 > n + 1 {
        return Err(Error::domain(format!(
            "k - 1 = {} exceeds the {} levels of P({n})",
            k - 1,
            n + 1
        )));
    }
    let levels: Vec<u32> = levels_by_size(n).into_iter().take((k - 1) as usize).collect();
    SubsetFamily::from_levels(n, &levels)
}

/// Deposit the low bits of `bits` at the positions of the set bits of `mask`.
pub fn pdep(bits: u32, mask: u32) -> u32 {
    let mut out = 0;
    let mut m = mask;
    let mut b = bits;
    while m != 0 {
        let low = m & m.wrapping_neg();
        if b & 1 == 1 {
            out |= low;
        }
        b >>= 1;
        m &= m - 1;
    }
    out
}

/// Extract the bits of `x` at the positions of the set bits of `mask`, packed low.
pub fn pext(x: u32, mask: u32) -> u32 {
    let mut out = 0;
    let mut m = mask;
    let mut pos = 0;
    while m != 0 {
        let low = m & m.wrapping_neg();
        if x & low != 0 {
            out |= 1 << pos;
        }
        pos += 1;
        m &= m - 1;
    }
    out
}

/// A family of subsets of `[n]`.
#[derive(Clone, PartialEq, Eq)]
pub struct SubsetFamily {
    n: u32,
    bits: Vec<u64>,
    levels: Vec<Vec<u32>>,
}

impl fmt::Debug for SubsetFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SubsetFamily")
            .field("n", &self.n)
            .field("len", &self.len())
            .finish()
    }
}

impl std::hash::Hash for SubsetFamily {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.n.hash(state);
        self.bits.hash(state);
    }
}

fn check_n(n: u32) -> Result<()> {
    if n > MAX_N {
        return Err(Error::domain(format!("n = {n} exceeds the supported maximum {MAX_N}")));
    }
    Ok(())
}

impl SubsetFamily {
    pub fn empty(n: u32) -> Result<Self> {
        check_n(n)?;
        let words = ((1u64 << n) as usize).div_ceil(64);
        Ok(SubsetFamily {
            n,
            bits: vec![0; words],
            levels: vec![Vec::new(); n as usize + 1],
        })
    }

    /// The whole power set `P(n)`.
    pub fn full(n: u32) -> Result<Self> {
        Self::from_masks(n, 0..(1u32 << n))
    }

    pub fn from_masks(n: u32, masks: impl IntoIterator<Item = u32>) -> Result<Self> {
        let mut fam = Self::empty(n)?;
        for m in masks {
            if n < 32 && m >> n != 0 {
                return Err(Error::domain(format!("mask {m:x} does not fit in n = {n} bits")));
            }
            fam.bits[(m >> 6) as usize] |= 1 << (m & 63);
        }
        fam.rebuild_levels();
        Ok(fam)
    }

    /// All subsets whose size is one of `levels`.
    pub fn from_levels(n: u32, levels: &[u32]) -> Result<Self> {
        check_n(n)?;
        if let Some(&bad) = levels.iter().find(|&&j| j > n) {
            return Err(Error::domain(format!("level {bad} out of range for n = {n}")));
        }
        Self::from_masks(n, (0..(1u32 << n)).filter(|m| levels.contains(&m.count_ones())))
    }

    fn rebuild_levels(&mut self) {
        let mut levels = vec![Vec::new(); self.n as usize + 1];
        for m in self.iter_masks() {
            levels[m.count_ones() as usize].push(m);
        }
        self.levels = levels;
    }

    #[inline]
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.iter().all(Vec::is_empty)
    }

    #[inline]
    pub fn contains(&self, mask: u32) -> bool {
        let idx = (mask >> 6) as usize;
        idx < self.bits.len() && self.bits[idx] >> (mask & 63) & 1 == 1
    }

    /// Members of size `j`, ascending by mask.
    pub fn level(&self, j: u32) -> &[u32] {
        self.levels.get(j as usize).map_or(&[], Vec::as_slice)
    }

    /// Members in ascending mask order.
    pub fn iter_masks(&self) -> impl Iterator<Item = u32> + '_ {
        self.bits.iter().enumerate().flat_map(|(w, &word)| {
            let mut rest = word;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let b = rest.trailing_zeros();
                rest &= rest - 1;
                Some((w as u32) << 6 | b)
            })
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = SubsetId> + '_ {
        self.iter_masks().map(SubsetId)
    }

    /// Members ordered by decreasing size, ascending mask within a level.
    pub fn members_desc(&self) -> Vec<u32> {
        self.levels.iter().rev().flatten().copied().collect()
    }

    /// Members ordered by increasing size, ascending mask within a level.
    pub fn members_asc(&self) -> Vec<u32> {
        self.levels.iter().flatten().copied().collect()
    }

    /// Sizes `j` with a nonempty level.
    pub fn occupied_levels(&self) -> Vec<u32> {
        (0..=self.n).filter(|&j| !self.level(j).is_empty()).collect()
    }

    pub fn filter(&self, mut keep: impl FnMut(u32) -> bool) -> SubsetFamily {
        let mut out = self.clone();
        for m in self.iter_masks() {
            if !keep(m) {
                out.bits[(m >> 6) as usize] &= !(1 << (m & 63));
            }
        }
        out.rebuild_levels();
        out
    }

    fn same_ground(&self, other: &SubsetFamily) -> Result<()> {
        if self.n != other.n {
            return Err(Error::domain(format!(
                "families over different ground sets ({} vs {})",
                self.n, other.n
            )));
        }
        Ok(())
    }

    fn zip_bits(&self, other: &SubsetFamily, op: impl Fn(u64, u64) -> u64) -> Result<SubsetFamily> {
        self.same_ground(other)?;
        let mut out = self.clone();
        for (a, b) in out.bits.iter_mut().zip(&other.bits) {
            *a = op(*a, *b);
        }
        out.rebuild_levels();
        Ok(out)
    }

    pub fn union(&self, other: &SubsetFamily) -> Result<SubsetFamily> {
        self.zip_bits(other, |a, b| a | b)
    }

    pub fn intersection(&self, other: &SubsetFamily) -> Result<SubsetFamily> {
        self.zip_bits(other, |a, b| a & b)
    }

    pub fn difference(&self, other: &SubsetFamily) -> Result<SubsetFamily> {
        self.zip_bits(other, |a, b| a & !b)
    }

    pub fn is_subfamily_of(&self, other: &SubsetFamily) -> bool {
        self.n == other.n && self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }

    pub fn is_disjoint_from(&self, other: &SubsetFamily) -> bool {
        self.n == other.n && self.bits.iter().zip(&other.bits).all(|(a, b)| a & b == 0)
    }

    /// Members that are subsets of `top` (strict subsets when `strict`),
    /// relabelled into the cube `P(|top|)` by packing the bits of `top`.
    pub fn restrict_below(&self, top: u32, strict: bool) -> SubsetFamily {
        let width = top.count_ones();
        let masks = (0..(1u32 << width))
            .map(|packed| (packed, pdep(packed, top)))
            .filter(|&(_, full)| self.contains(full) && !(strict && full == top))
            .map(|(packed, _)| packed);
        Self::from_masks(width, masks).expect("restricted width never exceeds n")
    }

    /// Parse the text interchange format: `n=<int>` then one lowercase hex mask per line.
    pub fn parse_text(text: &str) -> Result<SubsetFamily> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing `n=<int>` header".into(),
        })?;
        let n: u32 = header
            .strip_prefix("n=")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| Error::Parse {
                line: hline,
                msg: format!("expected `n=<int>`, found `{header}`"),
            })?;
        check_n(n)?;
        let mut masks = Vec::new();
        for (line, l) in lines {
            let m = u32::from_str_radix(l, 16).map_err(|e| Error::Parse {
                line,
                msg: format!("bad hex mask `{l}`: {e}"),
            })?;
            if n < 32 && m >> n != 0 {
                return Err(Error::Parse {
                    line,
                    msg: format!("mask {l} does not fit in n = {n} bits"),
                });
            }
            masks.push(m);
        }
        Self::from_masks(n, masks)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("n={}\n", self.n);
        for m in self.iter_masks() {
            let _ = writeln!(s, "{m:x}");
        }
        s
    }
}

/// A chain `F_1 ⊋ F_2 ⊋ ... ⊋ F_l`, stored top element first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Chain(Vec<SubsetId>);

impl Chain {
    pub fn new(elements: Vec<SubsetId>) -> Result<Chain> {
        if let Some(w) = elements.windows(2).find(|w| !w[0].is_strict_superset_of(w[1])) {
            return Err(Error::domain(format!(
                "{} is not a strict superset of {}",
                w[0], w[1]
            )));
        }
        Ok(Chain(elements))
    }

    pub fn from_masks(masks: &[u32]) -> Result<Chain> {
        Chain::new(masks.iter().copied().map(SubsetId).collect())
    }

    pub fn elements(&self) -> &[SubsetId] {
        &self.0
    }

    pub fn masks(&self) -> Vec<u32> {
        self.0.iter().map(|s| s.0).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Length of the longest chain of `fam` having `mask` as its top element,
/// for every member, indexed like `members` (any order).
pub fn heights_below(fam: &SubsetFamily, members: &[u32]) -> Vec<u32> {
    let n = fam.n();
    if n <= DENSE_LIMIT {
        // best[z] = longest chain of members inside z
        let mut best = vec![0u32; 1usize << n];
        for z in 0..(1u32 << n) {
            let mut below = 0;
            let mut rest = z;
            while rest != 0 {
                let b = rest & rest.wrapping_neg();
                below = below.max(best[(z ^ b) as usize]);
                rest ^= b;
            }
            best[z as usize] = if fam.contains(z) { below + 1 } else { below };
        }
        members.iter().map(|&m| best[m as usize]).collect()
    } else {
        let asc = fam.members_asc();
        let mut h = std::collections::HashMap::with_capacity(asc.len());
        for (i, &x) in asc.iter().enumerate() {
            let below = asc[..i]
                .iter()
                .filter(|&&y| y != x && y & !x == 0)
                .map(|y| h[y])
                .max()
                .unwrap_or(0);
            h.insert(x, below + 1);
        }
        members.iter().map(|m| h[m]).collect()
    }
}

/// Longest chain length in `fam` (0 for the empty family).
pub fn height(fam: &SubsetFamily) -> u32 {
    let members = fam.members_desc();
    heights_below(fam, &members).into_iter().max().unwrap_or(0)
}

fn zeta_sum(values: &mut [u128], n: u32) {
    for i in 0..n {
        let bit = 1usize << i;
        for z in 0..values.len() {
            if z & bit != 0 {
                values[z] = values[z]
                    .checked_add(values[z ^ bit])
                    .expect("chain count overflows u128");
            }
        }
    }
}

/// Number of k-chains of `fam`, i.e. the number of edges of `G_k[fam]`.
pub fn count_k_chains(fam: &SubsetFamily, k: u32) -> u128 {
    if k == 0 {
        return 0;
    }
    let n = fam.n();
    if n <= DENSE_LIMIT {
        // cnt[x] = number of l-chains with top x, advanced one length at a time
        let size = 1usize << n;
        let mut cnt: Vec<u128> = (0..size as u32).map(|z| u128::from(fam.contains(z))).collect();
        for _ in 1..k {
            let mut sums = cnt.clone();
            zeta_sum(&mut sums, n);
            for z in 0..size {
                cnt[z] = if fam.contains(z as u32) { sums[z] - cnt[z] } else { 0 };
            }
        }
        cnt.iter().sum()
    } else {
        let asc = fam.members_asc();
        let mut cnt: Vec<u128> = vec![1; asc.len()];
        for _ in 1..k {
            let next: Vec<u128> = asc
                .iter()
                .map(|&x| {
                    asc.iter()
                        .zip(&cnt)
                        .filter(|(&y, _)| y != x && y & !x == 0)
                        .map(|(_, &c)| c)
                        .sum()
                })
                .collect();
            cnt = next;
        }
        cnt.iter().sum()
    }
}

/// Every k-chain of `fam` exactly once, top element first, in lexicographic
/// order of the `(size descending, mask ascending)` keys of successive elements.
pub fn enumerate_chains(fam: &SubsetFamily, k: u32) -> ChainIter {
    let order = fam.members_desc();
    let heights = if k == 0 { vec![0; order.len()] } else { heights_below(fam, &order) };
    ChainIter {
        order,
        heights,
        k: k as usize,
        next_top: 0,
        frames: Vec::new(),
    }
}

struct Frame {
    pos: usize,
    cursor: usize,
}

/// Iterator returned by [`enumerate_chains`].
pub struct ChainIter {
    order: Vec<u32>,
    heights: Vec<u32>,
    k: usize,
    next_top: usize,
    frames: Vec<Frame>,
}

impl ChainIter {
    fn current(&self) -> Chain {
        Chain(self.frames.iter().map(|f| SubsetId(self.order[f.pos])).collect())
    }
}

impl Iterator for ChainIter {
    type Item = Chain;

    fn next(&mut self) -> Option<Chain> {
        if self.k == 0 {
            return None;
        }
        loop {
            if self.frames.is_empty() {
                let top = (self.next_top..self.order.len())
                    .find(|&p| self.heights[p] as usize >= self.k)?;
                self.next_top = top + 1;
                self.frames.push(Frame { pos: top, cursor: top + 1 });
            } else {
                let depth = self.frames.len();
                let needed = (self.k - depth) as u32;
                let last = self.frames.last_mut().expect("nonempty");
                let x = self.order[last.pos];
                let found = (last.cursor..self.order.len()).find(|&p| {
                    let y = self.order[p];
                    y != x && y & !x == 0 && self.heights[p] >= needed
                });
                match found {
                    Some(p) => {
                        last.cursor = p + 1;
                        self.frames.push(Frame { pos: p, cursor: p + 1 });
                    }
                    None => {
                        self.frames.pop();
                        continue;
                    }
                }
            }
            if self.frames.len() == self.k {
                let chain = self.current();
                self.frames.pop();
                return Some(chain);
            }
        }
    }
}
