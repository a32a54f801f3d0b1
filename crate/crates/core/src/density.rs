//! Exact l-chain densities.
//!
//! The l-chain density of `F` weights each chain `F = F_1 ⊋ ... ⊋ F_l` of the
//! family by `prod 1/C(|F_{i-1}|, |F_i|)`. Multiplying by `|F|!` telescopes the
//! product into `prod (|F_{i-1}| - |F_i|)! * |F_l|!`, so the table stores the
//! integers `w_l(F) = |F|! c_l(F)` and converts to rationals on demand:
//!
//! `w_1(F) = |F|!`, `w_l(F) = sum_{G ⊊ F} (|F| - |G|)! w_{l-1}(G)`.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::lattice::{binomial, central_binomial, SubsetFamily, SubsetId};

/// Densities are kept as `|F|! c_l(F)` in `u128`, which is exact up to this ground-set size.
pub const MAX_DENSITY_N: u32 = 24;

pub(crate) fn factorial(n: u32) -> u128 {
    (1..=u128::from(n)).product()
}

pub(crate) fn ratio(num: u128, den: u128) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Exact l-chain densities `c_l(F)` for every member of a family and `1 <= l <= k_max`.
#[derive(Clone, Debug)]
pub struct DensityTable {
    family: SubsetFamily,
    k_max: u32,
    /// `scaled[l - 1][mask] = |mask|! * c_l(mask)`; zero for non-members.
    scaled: Vec<Vec<u128>>,
}

impl DensityTable {
    pub fn build(family: &SubsetFamily, k_max: u32) -> Result<DensityTable> {
        let n = family.n();
        if n > MAX_DENSITY_N {
            return Err(Error::domain(format!(
                "density tables support n <= {MAX_DENSITY_N}, got {n}"
            )));
        }
        if k_max == 0 {
            return Err(Error::domain("k_max must be at least 1"));
        }
        let size = 1usize << n;
        let fact: Vec<u128> = (0..=n).map(factorial).collect();
        let mut first = vec![0u128; size];
        for m in family.iter_masks() {
            first[m as usize] = fact[m.count_ones() as usize];
        }
        let occupied = family.occupied_levels();
        let mut scaled = vec![first];
        let mut level_sum = vec![0u128; size];
        for _ in 1..k_max {
            let prev = scaled.last().expect("nonempty");
            let mut next = vec![0u128; size];
            for &j in &occupied {
                if family.levels_above(j) == 0 {
                    continue;
                }
                level_sum.fill(0);
                for &g in family.level(j) {
                    level_sum[g as usize] = prev[g as usize];
                }
                zeta(&mut level_sum, n);
                for &top in occupied.iter().filter(|&&t| t > j) {
                    let weight = fact[(top - j) as usize];
                    for &f in family.level(top) {
                        let add = weight
                            .checked_mul(level_sum[f as usize])
                            .and_then(|v| v.checked_add(next[f as usize]))
                            .ok_or_else(|| Error::domain("chain density overflows u128"))?;
                        next[f as usize] = add;
                    }
                }
            }
            scaled.push(next);
        }
        Ok(DensityTable {
            family: family.clone(),
            k_max,
            scaled,
        })
    }

    pub fn family(&self) -> &SubsetFamily {
        &self.family
    }

    pub fn k_max(&self) -> u32 {
        self.k_max
    }

    fn check(&self, f: SubsetId, ell: u32) -> Result<()> {
        if !self.family.contains(f.mask()) {
            return Err(Error::domain(format!("{f} is not a member of the family")));
        }
        if ell == 0 || ell > self.k_max {
            return Err(Error::domain(format!(
                "chain length {ell} outside 1..={}",
                self.k_max
            )));
        }
        Ok(())
    }

    /// `|F|! c_l(F)`, an integer.
    pub fn scaled(&self, f: SubsetId, ell: u32) -> Result<u128> {
        self.check(f, ell)?;
        Ok(self.scaled[ell as usize - 1][f.mask() as usize])
    }

    pub fn density(&self, f: SubsetId, ell: u32) -> Result<BigRational> {
        let w = self.scaled(f, ell)?;
        Ok(ratio(w, factorial(f.size())))
    }

    /// `c_l(F) > 0`, i.e. some l-chain of the family has top `F`.
    pub fn has_chain(&self, f: SubsetId, ell: u32) -> bool {
        self.scaled(f, ell).is_ok_and(|w| w > 0)
    }

    /// `c_l(F) >= threshold`.
    pub fn at_least(&self, f: SubsetId, ell: u32, threshold: &BigRational) -> Result<bool> {
        let w = self.scaled(f, ell)?;
        let lhs = BigInt::from(w) * threshold.denom();
        Ok(lhs >= threshold.numer() * BigInt::from(factorial(f.size())))
    }

    pub fn max_density(&self, ell: u32) -> Result<BigRational> {
        let mut best = BigRational::zero();
        for f in self.family.iter() {
            let d = self.density(f, ell)?;
            if d > best {
                best = d;
            }
        }
        Ok(best)
    }

    /// CSV dump with columns `mask,size,ell,numerator,denominator`, fractions reduced.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("mask,size,ell,numerator,denominator\n");
        for f in self.family.iter() {
            for ell in 1..=self.k_max {
                let d = self.density(f, ell).expect("member and length in range");
                let _ = writeln!(
                    out,
                    "{:x},{},{},{},{}",
                    f.mask(),
                    f.size(),
                    ell,
                    d.numer(),
                    d.denom()
                );
            }
        }
        out
    }
}

impl SubsetFamily {
    /// Number of members strictly larger than `j`.
    pub(crate) fn levels_above(&self, j: u32) -> usize {
        ((j + 1)..=self.n()).map(|t| self.level(t).len()).sum()
    }
}

fn zeta(values: &mut [u128], n: u32) {
    for i in 0..n {
        let bit = 1usize << i;
        for z in 0..values.len() {
            if z & bit != 0 {
                values[z] += values[z ^ bit];
            }
        }
    }
}

/// `c_l(F_1)` within `fam`, computed on the part of the family below `F_1`.
pub fn chain_density(f1: SubsetId, fam: &SubsetFamily, ell: u32) -> Result<BigRational> {
    if !fam.contains(f1.mask()) {
        return Err(Error::domain(format!("{f1} is not a member of the family")));
    }
    if ell == 0 {
        return Err(Error::domain("chain length must be at least 1"));
    }
    let local = fam.restrict_below(f1.mask(), false);
    let top = SubsetId((1u32 << f1.size()) - 1);
    DensityTable::build(&local, ell)?.density(top, ell)
}

/// Number of l-chains of `fam` all of whose sets are prefixes `{π(1), ..., π(j)}`
/// of the permutation `perm` (0-based elements).
///
/// The prefixes form a single chain, so the count is `C(s, l)` where `s` is the
/// number of prefixes in the family; the count is taken over the prefix sets and
/// checked against that identity.
pub fn permutation_chain_count(perm: &[usize], fam: &SubsetFamily, ell: u32) -> Result<u128> {
    let n = fam.n() as usize;
    let mut seen = vec![false; n];
    if perm.len() != n || !perm.iter().all(|&p| p < n && !std::mem::replace(&mut seen[p], true)) {
        return Err(Error::domain(format!("not a permutation of 0..{n}: {perm:?}")));
    }
    let mut prefix = 0u32;
    let mut contained = Vec::with_capacity(n + 1);
    if fam.contains(0) {
        contained.push(0u32);
    }
    for &p in perm {
        prefix |= 1 << p;
        if fam.contains(prefix) {
            contained.push(prefix);
        }
    }
    // chains[l][i] = l-chains among the contained prefixes whose largest set is contained[i]
    let s = contained.len();
    let mut chains = vec![1u128; s];
    let mut total: u128 = if ell == 1 { s as u128 } else { 0 };
    for _ in 1..ell {
        let mut next = vec![0u128; s];
        for i in 0..s {
            next[i] = (0..i)
                .filter(|&j| contained[j] & !contained[i] == 0)
                .map(|j| chains[j])
                .sum();
        }
        chains = next;
        total = chains.iter().sum();
    }
    if ell == 0 {
        total = 0;
    }
    let expected = if ell == 0 { 0 } else { binomial(s as u64, u64::from(ell)) };
    if total != expected {
        return Err(Error::contract(format!(
            "prefix chain count {total} differs from C({s}, {ell}) = {expected}"
        )));
    }
    Ok(total)
}

/// `max_{s >= 0} C(s, i) - C(s, j)`; the difference is negative once `s >= 2j - 1`.
pub fn max_binomial_difference(i: u32, j: u32) -> BigInt {
    (0..2 * u64::from(j))
        .map(|s| BigInt::from(binomial(s, u64::from(i))) - BigInt::from(binomial(s, u64::from(j))))
        .max()
        .unwrap_or_else(BigInt::zero)
}

/// Left side of the permutation-method gap inequality together with its bound.
#[derive(Clone, Debug, PartialEq)]
pub struct GapValue {
    pub value: BigRational,
    pub bound: BigInt,
}

/// `sum_{F in fam} (c_i(F) - c_j(F)) / C(n, |F|)`, checked against
/// `max_s C(s, i) - C(s, j)`.
pub fn dgs_gap(fam: &SubsetFamily, i: u32, j: u32) -> Result<GapValue> {
    if i == 0 || i >= j {
        return Err(Error::domain(format!("need 1 <= i < j, got i = {i}, j = {j}")));
    }
    let table = DensityTable::build(fam, j)?;
    gap_with_table(&table, i, j)
}

fn gap_with_table(table: &DensityTable, i: u32, j: u32) -> Result<GapValue> {
    let n = u64::from(table.family().n());
    let mut value = BigRational::zero();
    for f in table.family().iter() {
        let diff = table.density(f, i)? - table.density(f, j)?;
        value += diff / BigRational::from_integer(BigInt::from(binomial(n, u64::from(f.size()))));
    }
    let bound = max_binomial_difference(i, j);
    if value > BigRational::from_integer(bound.clone()) {
        return Err(Error::contract(format!(
            "gap {value} exceeds max_s C(s,{i}) - C(s,{j}) = {bound}"
        )));
    }
    Ok(GapValue { value, bound })
}

/// The gap sum taken over the members strictly below `top`, in the cube of
/// subsets of `top` (ambient size `|top|`).
pub fn dgs_gap_below(fam: &SubsetFamily, top: SubsetId, i: u32, j: u32) -> Result<GapValue> {
    if i == 0 || i >= j {
        return Err(Error::domain(format!("need 1 <= i < j, got i = {i}, j = {j}")));
    }
    let local = fam.restrict_below(top.mask(), true);
    gap_with_table(&DensityTable::build(&local, j)?, i, j)
}

/// A member of minimal cardinality (then smallest mask) with `c_k(F) >= α/k`.
pub fn find_dense_vertex(fam: &SubsetFamily, k: u32, alpha: &BigRational) -> Result<Option<SubsetId>> {
    if k < 2 {
        return Err(Error::domain(format!("k must be at least 2, got {k}")));
    }
    if *alpha <= BigRational::zero() || *alpha > BigRational::one() {
        return Err(Error::domain(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let table = DensityTable::build(fam, k)?;
    let threshold = alpha / BigRational::from_integer(BigInt::from(k));
    let mut found = None;
    for m in fam.members_asc() {
        if table.at_least(SubsetId(m), k, &threshold)? {
            found = Some(SubsetId(m));
            break;
        }
    }
    let needed = (BigRational::from_integer(BigInt::from(k - 1)) + alpha)
        * BigRational::from_integer(BigInt::from(central_binomial(fam.n())));
    if found.is_none() && BigRational::from_integer(BigInt::from(fam.len())) >= needed {
        return Err(Error::contract(format!(
            "family of size {} >= {needed} has no vertex with c_{k} >= {threshold}",
            fam.len()
        )));
    }
    Ok(found)
}
