use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use spernerlab::lattice::{central_binomial, enumerate_chains, middle_layers};
use spernerlab::supersat::{
    bad_extension_bound, bad_extensions, build_balanced_hypergraph, classify_chain, critical_chain_density,
    find_good_edge, is_saturated, largest_feasible_delta, max_codegree, ChainClass, ChainHypergraph,
};
use spernerlab::{Chain, SubsetFamily, SubsetId};

fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

/// Codegrees recomputed from the edge list alone.
fn recount(h: &ChainHypergraph) -> HashMap<Vec<u32>, u64> {
    let mut out = HashMap::new();
    for e in h.edges() {
        let masks = e.masks();
        for sel in 1u32..(1 << masks.len()) {
            let mut key: Vec<u32> = (0..masks.len()).filter(|&i| sel >> i & 1 == 1).map(|i| masks[i]).collect();
            key.sort_unstable();
            *out.entry(key).or_insert(0) += 1;
        }
    }
    out
}

fn assert_consistent(h: &ChainHypergraph) {
    let counts = recount(h);
    let stored: HashMap<Vec<u32>, u64> = h.ledger().entries().map(|(k, v)| (k.to_vec(), v)).collect();
    assert_eq!(counts, stored);
    for ell in 1..=h.k() {
        let brute = counts.iter().filter(|(k, _)| k.len() == ell as usize).map(|(_, &v)| v).max().unwrap_or(0);
        assert_eq!(max_codegree(h, ell).unwrap(), brute);
        assert!(brute <= h.ledger().cap(ell).unwrap());
    }
    let mut seen = std::collections::HashSet::new();
    for e in h.edges() {
        assert!(seen.insert(e.masks()), "duplicate edge");
        assert!(e.masks().iter().all(|&m| h.family().contains(m)));
    }
}

#[test]
fn saturation_basics() {
    let p4 = SubsetFamily::full(4).unwrap();
    // δm = 2: cap(1) = 2 for k = 2
    let mut h = ChainHypergraph::new(&p4, 2, q(1, 2), q(4, 1)).unwrap();
    assert_eq!(h.ledger().cap(1).unwrap(), 2);
    assert!(!is_saturated(&[SubsetId(0xf)], h.ledger()).unwrap());
    h.add_edge(Chain::from_masks(&[0xf, 0x7]).unwrap()).unwrap();
    assert!(is_saturated(&[SubsetId(0xf), SubsetId(0x7)], h.ledger()).unwrap());
    assert!(h.add_edge(Chain::from_masks(&[0xf, 0x7]).unwrap()).is_err());
    h.add_edge(Chain::from_masks(&[0xf, 0x3]).unwrap()).unwrap();
    assert!(is_saturated(&[SubsetId(0xf)], h.ledger()).unwrap());
    assert!(h.add_edge(Chain::from_masks(&[0xf, 0x1]).unwrap()).is_err());
    assert!(is_saturated(&[], h.ledger()).is_err());
    assert_eq!(h.saturated_singletons(), 1);
    assert_consistent(&h);
}

#[test]
fn classification() {
    let p4 = SubsetFamily::full(4).unwrap();
    // k = 3, δm = 2: caps 4, 2, 1
    let mut h = ChainHypergraph::new(&p4, 3, q(1, 2), q(4, 1)).unwrap();
    let probe = Chain::from_masks(&[0xf, 0x7, 0x1]).unwrap();
    assert_eq!(classify_chain(&probe, h.ledger()).unwrap(), ChainClass::Good);
    h.add_edge(Chain::from_masks(&[0xf, 0x7, 0x3]).unwrap()).unwrap();
    h.add_edge(Chain::from_masks(&[0xf, 0x7, 0x2]).unwrap()).unwrap();
    assert_eq!(
        classify_chain(&probe, h.ledger()).unwrap(),
        ChainClass::Bad { critical_prefix: 1 }
    );
    h.add_edge(Chain::from_masks(&[0xf, 0xb, 0x1]).unwrap()).unwrap();
    h.add_edge(Chain::from_masks(&[0xf, 0xd, 0x1]).unwrap()).unwrap();
    assert!(classify_chain(&probe, h.ledger()).is_err());
    assert_consistent(&h);
}

#[test]
fn first_good_edge_on_empty_hypergraph() {
    let p3 = SubsetFamily::full(3).unwrap();
    let mut h = ChainHypergraph::new(&p3, 2, q(1, 1), q(1, 1)).unwrap();
    let edge = find_good_edge(&mut h, &q(1, 2)).unwrap().unwrap();
    // the smallest top with 2-chain density at least α/k = 1/4 is a singleton
    assert_eq!(edge.masks(), vec![0x1, 0x0]);
    let first = enumerate_chains(&SubsetFamily::full(1).unwrap(), 2).next().unwrap();
    assert_eq!(first.masks(), vec![0x1, 0x0]);
}

#[test]
fn exhaustion_on_a_chain_family() {
    let fam = SubsetFamily::from_masks(2, [0x3, 0x1, 0x0]).unwrap();
    let mut h = ChainHypergraph::new(&fam, 2, q(1, 1), q(1, 1)).unwrap();
    let mut added = 0;
    while let Ok(Some(e)) = find_good_edge(&mut h, &q(1, 100)) {
        h.add_edge(e).unwrap();
        added += 1;
    }
    // cap(1) = 1 lets only one edge through the three sets
    assert_eq!(added, 1);
    assert_consistent(&h);
}

#[test]
fn good_edges_exist_below_the_edge_bound() {
    let mut fam = middle_layers(6, 3).unwrap();
    fam = fam.union(&SubsetFamily::from_masks(6, [0x0f, 0x17, 0x1b, 0x1d, 0x1e, 0x27]).unwrap()).unwrap();
    let (delta, m) = (q(1, 2), q(2, 1));
    let alpha = q(fam.len() as i64 - 20, 20);
    let mut h = ChainHypergraph::new(&fam, 2, delta, m).unwrap();
    while BigRational::from_integer(h.edge_count().into()) < h.edge_bound() {
        let e = find_good_edge(&mut h, &alpha).unwrap().expect("lemma guarantees a good edge");
        assert_eq!(classify_chain(&e, h.ledger()).unwrap(), ChainClass::Good);
        h.add_edge(e).unwrap();
    }
    assert_consistent(&h);
}

#[test]
fn power_set_builds_meet_target() {
    for k in [2, 3] {
        let fam = SubsetFamily::full(8).unwrap().filter(|x| x.count_ones() >= 3);
        let c = central_binomial(8) as i64;
        let alpha = q(fam.len() as i64 - (k as i64 - 1) * c, c);
        let m = q(8, 3);
        let r = build_balanced_hypergraph(&fam, k, &q(3, 8), &m, &alpha).unwrap();
        assert!(r.target_met, "k={k} stop={:?}", r.stop);
        assert_consistent(&r.hypergraph);
        let search = largest_feasible_delta(&fam, k, &m, &alpha, 32).unwrap();
        assert!(search.delta.is_some());
        assert_consistent(&search.report.unwrap().hypergraph);
    }
}

#[test]
fn antichain_has_no_edges() {
    let fam = middle_layers(6, 2).unwrap();
    let r = build_balanced_hypergraph(&fam, 2, &q(1, 2), &q(2, 1), &q(1, 10));
    assert!(r.is_err());
}

#[test]
fn builder_rejects_bad_parameters() {
    let p6 = SubsetFamily::full(6).unwrap();
    assert!(build_balanced_hypergraph(&p6, 2, &q(1, 4), &q(2, 1), &q(1, 4)).is_err());
    // m = 2 exceeds C(1, 0) = 1
    assert!(build_balanced_hypergraph(&p6, 2, &q(1, 2), &q(2, 1), &q(1, 4)).is_err());
}

#[test]
fn tightness_example() {
    // k - 1 middle layers of P(9) plus a slice of the next layer, m = n/3
    let n = 9;
    let k = 2;
    let extra: Vec<u32> = (0u32..1 << n).filter(|x| x.count_ones() == 4).take(40).collect();
    let fam = middle_layers(n, k).unwrap().union(&SubsetFamily::from_masks(n, extra).unwrap()).unwrap();
    let c = central_binomial(n) as i64;
    let alpha = q(40, c);
    let m = q(3, 1);
    let r = build_balanced_hypergraph(&fam, k, &q(1, 3), &m, &alpha).unwrap();
    assert_consistent(&r.hypergraph);
    // every edge pairs one extra set with a middle set, so e(H) <= 40 * cap(1)
    assert!(r.hypergraph.edge_count() as u64 <= 40 * r.hypergraph.ledger().cap(1).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lemma_bounds_hold_along_builds(n in 4u32..=6, k in 2u32..=3, dm in 1i64..=3, steps in 1usize..60) {
        let fam = SubsetFamily::full(n).unwrap();
        let c = central_binomial(n) as i64;
        // m = 1 keeps m <= C(|F|, |G|) on all of P(n)
        let m = q(1, 1);
        let delta = q(dm, 1);
        let alpha = q(fam.len() as i64 - (k as i64 - 1) * c, c);
        let mut h = ChainHypergraph::new(&fam, k, delta.clone(), m.clone()).unwrap();
        for _ in 0..steps {
            let bound = h.edge_bound();
            if BigRational::from_integer(h.edge_count().into()) >= bound || h.effective_alpha(&alpha) <= q(0, 1) {
                break;
            }
            let Some(e) = find_good_edge(&mut h, &alpha).unwrap() else { break };
            h.add_edge(e).unwrap();
            // saturated singletons stay few while e(H) is below the bound
            if BigRational::from_integer(h.edge_count().into()) <= h.edge_bound() {
                let limit = q(2 * k as i64, 1) * &delta * q(c, 1);
                prop_assert!(q(h.saturated_singletons() as i64, 1) <= limit);
            }
        }
        let members: Vec<u32> = h.working_family().iter_masks().collect();
        for &a in members.iter().step_by(3) {
            if let Ok(ext) = bad_extensions(&h, &[a]) {
                prop_assert!(q(ext.len() as i64, 1) <= bad_extension_bound(&h, 1));
            }
            for ell in 1..k {
                let (lhs, rhs) = critical_chain_density(&h, a, ell).unwrap();
                prop_assert!(lhs <= rhs, "lhs {} rhs {}", lhs, rhs);
            }
        }
    }
}
