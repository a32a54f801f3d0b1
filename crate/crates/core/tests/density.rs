use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use spernerlab::density::*;
use spernerlab::lattice::*;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// Direct summation of the chain weights over enumerated chains.
fn brute_density(fam: &SubsetFamily, f: u32, ell: u32) -> BigRational {
    enumerate_chains(fam, ell)
        .filter(|c| c.masks()[0] == f)
        .map(|c| {
            c.elements().windows(2).fold(BigRational::one(), |acc, w| {
                acc / BigRational::from_integer(
                    binomial(u64::from(w[0].size()), u64::from(w[1].size())).into(),
                )
            })
        })
        .sum()
}

#[test]
fn unit_length_density_is_one() {
    let fam = SubsetFamily::full(4).unwrap();
    let t = DensityTable::build(&fam, 3).unwrap();
    for f in fam.iter() {
        assert_eq!(t.density(f, 1).unwrap(), BigRational::one());
    }
}

#[test]
fn top_of_p3() {
    let fam = SubsetFamily::full(3).unwrap();
    assert_eq!(chain_density(SubsetId(7), &fam, 2).unwrap(), q(3, 1));
    let lonely = SubsetFamily::from_masks(3, [7, 6]).unwrap();
    assert_eq!(chain_density(SubsetId(3 << 1), &lonely, 2).unwrap(), q(0, 1));
    assert!(chain_density(SubsetId(1), &lonely, 2).is_err());
}

#[test]
fn recursion_matches_direct_summation() {
    for seed in 0u32..40 {
        let fam = SubsetFamily::from_masks(5, (0..32u32).filter(|m| (m.wrapping_mul(2654435761) ^ seed.wrapping_mul(40503)) % 3 != 0)).unwrap();
        let t = DensityTable::build(&fam, 4).unwrap();
        for f in fam.iter() {
            for ell in 1..=4 {
                assert_eq!(t.density(f, ell).unwrap(), brute_density(&fam, f.mask(), ell));
            }
        }
    }
}

#[test]
fn permutation_counts() {
    let fam = SubsetFamily::from_masks(3, [0, 1, 3, 7]).unwrap();
    assert_eq!(permutation_chain_count(&[0, 1, 2], &fam, 2).unwrap(), 6);
    let none = SubsetFamily::from_masks(3, [2, 5]).unwrap();
    assert_eq!(permutation_chain_count(&[0, 1, 2], &none, 2).unwrap(), 0);
    let p3 = SubsetFamily::full(3).unwrap();
    assert_eq!(permutation_chain_count(&[0, 1, 2], &p3, 1).unwrap(), 4);
    assert!(permutation_chain_count(&[0, 0, 2], &p3, 1).is_err());
}

#[test]
fn gap_examples() {
    let antichain = middle_layers(5, 2).unwrap();
    let g = dgs_gap(&antichain, 1, 2).unwrap();
    assert_eq!(g.bound, BigInt::from(1));
    assert_eq!(g.value, BigRational::one());
    let empty = SubsetFamily::empty(4).unwrap();
    assert_eq!(dgs_gap(&empty, 1, 3).unwrap().value, BigRational::zero());
    let p3 = SubsetFamily::full(3).unwrap();
    let g = dgs_gap(&p3, 1, 3).unwrap();
    assert_eq!(g.bound, BigInt::from(2));
    assert!(g.value <= BigRational::from_integer(2.into()));
    assert!(dgs_gap(&p3, 2, 2).is_err());
}

#[test]
fn binomial_difference_maximum() {
    assert_eq!(max_binomial_difference(1, 2), BigInt::from(1));
    assert_eq!(max_binomial_difference(1, 3), BigInt::from(2));
    assert_eq!(max_binomial_difference(1, 5), BigInt::from(4));
}

#[test]
fn dense_vertex_search() {
    let antichain = middle_layers(6, 2).unwrap();
    assert_eq!(find_dense_vertex(&antichain, 2, &q(1, 2)).unwrap(), None);

    let p4 = SubsetFamily::full(4).unwrap();
    let found = find_dense_vertex(&p4, 2, &q(1, 1)).unwrap().unwrap();
    let t = DensityTable::build(&p4, 2).unwrap();
    let qualifying: Vec<SubsetId> = p4
        .iter()
        .filter(|&f| t.at_least(f, 2, &q(1, 2)).unwrap())
        .collect();
    let min_size = qualifying.iter().map(|f| f.size()).min().unwrap();
    assert_eq!(found.size(), min_size);
    assert_eq!(
        found,
        *qualifying.iter().filter(|f| f.size() == min_size).min().unwrap()
    );

    // k - 1 middle layers plus alpha * C(n, n/2) sets of the next layer up
    let (n, k) = (6, 3);
    let base = middle_layers(n, k).unwrap();
    let upper: Vec<u32> = SubsetFamily::from_levels(n, &[4]).unwrap().level(4)[..5].to_vec();
    let fam = SubsetFamily::from_masks(n, base.iter_masks().chain(upper)).unwrap();
    assert!(find_dense_vertex(&fam, k, &q(1, 4)).unwrap().is_some());
}
