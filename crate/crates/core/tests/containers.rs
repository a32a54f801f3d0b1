use dashu_float::FBig;
use dashu_int::UBig;
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spernerlab::containers::*;
use spernerlab::lattice::{central_binomial, count_k_chains, middle_layers};
use spernerlab::supersat::{build_balanced_hypergraph, ChainHypergraph};
use spernerlab::SubsetFamily;

fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

fn big(x: u128) -> FBig {
    FBig::from(UBig::from(x)).with_precision(256).value()
}

/// Random maximal k-chain-free family: insert sets in shuffled order while no k-chain appears.
fn greedy_chain_free(n: u32, k: u32, seed: u64) -> SubsetFamily {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<u32> = (0..1u32 << n).collect();
    order.shuffle(&mut rng);
    let mut fam = SubsetFamily::empty(n).unwrap();
    for x in order {
        let cand = fam.union(&SubsetFamily::from_masks(n, [x]).unwrap()).unwrap();
        if count_k_chains(&cand, k) == 0 {
            fam = cand;
        }
    }
    fam
}

fn upper_part(n: u32) -> SubsetFamily {
    SubsetFamily::full(n).unwrap().filter(|x| 3 * x.count_ones() >= n)
}

#[test]
fn tau_switches_at_three_k_middle_binomials() {
    let (n, k) = (10, 2);
    let edge = 3 * u128::from(k) * central_binomial(n);
    assert_eq!(tau(edge, n, k), q(1, 10));
    assert_eq!(tau(edge + 1, n, k), q(1, 1000));
    assert_eq!(tau(0, n, k), q(1, 10));
}

#[test]
fn scythe_without_edges_keeps_everything() {
    let fam = SubsetFamily::full(4).unwrap();
    let h = ChainHypergraph::new(&fam, 2, q(1, 1), q(1, 1)).unwrap();
    let i = SubsetFamily::from_masks(4, [0b0011, 0b0101]).unwrap();
    let ext = scythe_extract(&h, &q(1, 4), &i).unwrap();
    assert_eq!(ext.tees.len(), 0);
    assert_eq!(ext.container, fam);
}

#[test]
fn scythe_on_empty_independent_set() {
    let fam = upper_part(8);
    let report = build_balanced_hypergraph(&fam, 2, &q(1, 1), &q(8, 3), &q(1, 4)).unwrap();
    let h = report.hypergraph;
    assert!(h.edge_count() > 0);
    let empty = SubsetFamily::empty(8).unwrap();
    let a = scythe_extract(&h, &q(1, 8), &empty).unwrap();
    let b = scythe_extract(&h, &q(1, 8), &empty).unwrap();
    assert_eq!(a.tees.len(), 0);
    assert_eq!(a, b);
    assert!(a.container.len() < fam.len());
}

#[test]
fn scythe_respects_allowance_on_random_antichains() {
    let n = 8;
    let fam = upper_part(n);
    let report = build_balanced_hypergraph(&fam, 2, &q(1, 1), &q(8, 3), &q(1, 4)).unwrap();
    let h = report.hypergraph;
    let tau = q(1, 8);
    for seed in 0..10 {
        let i = greedy_chain_free(n, 2, seed);
        let ext = scythe_extract(&h, &tau, &i).unwrap();
        let allowance = q(2, 1) * &tau * BigRational::from_integer(fam.len().into());
        assert!(BigRational::from_integer(ext.tees.len().into()) <= allowance);
        assert!(ext.tees.is_subfamily_of(&i));
        let local = i.intersection(&fam).unwrap();
        assert!(local.is_subfamily_of(&ext.container));
        // the fingerprint alone reproduces the container
        assert_eq!(scythe_extract(&h, &tau, &ext.tees).unwrap(), ext);
    }
}

#[test]
fn scythe_rejects_dependent_sets() {
    let fam = upper_part(6);
    let h = build_balanced_hypergraph(&fam, 2, &q(1, 1), &q(2, 1), &q(1, 4))
        .unwrap()
        .hypergraph;
    let e = h.edges()[0].masks();
    let i = SubsetFamily::from_masks(6, e).unwrap();
    assert!(scythe_extract(&h, &q(1, 6), &i).is_err());
}

#[test]
fn middle_layer_step_on_p10_shrinks() {
    let n = 10;
    let cfg = ContainerConfig::new(2);
    let i = middle_layers(n, 2).unwrap();
    let full = SubsetFamily::full(n).unwrap();
    let step = container_step(&full, &i, &cfg, &mut ContainerCache::new()).unwrap();
    let limit = (BigRational::from_integer(1.into()) - &cfg.delta_shrink) * BigRational::from_integer(1024.into());
    assert!(BigRational::from_integer(step.next.len().into()) <= limit);
    assert!(i.is_subfamily_of(&step.next.union(&step.tees).unwrap()));
    assert_eq!(step.tau, q(1, 10));
}

#[test]
fn empty_set_step_depends_only_on_the_container() {
    let n = 8;
    let cfg = ContainerConfig::new(2);
    let full = SubsetFamily::full(n).unwrap();
    let empty = SubsetFamily::empty(n).unwrap();
    let a = container_step(&full, &empty, &cfg, &mut ContainerCache::new()).unwrap();
    let b = container_step(&full, &empty, &cfg, &mut ContainerCache::new()).unwrap();
    assert_eq!(a.tees.len(), 0);
    assert_eq!(a.next, b.next);
}

#[test]
fn large_containers_use_the_block_route() {
    // 3k C(n, n/2) < 2^n needs n >= 24, so shrink the block to reach the route at n = 10
    let (n, k) = (10, 2);
    let mut cfg = ContainerConfig::new(k);
    cfg.tau_block = 2;
    let threshold = 2 * k as usize * central_binomial(n) as usize;
    let members = SubsetFamily::full(n).unwrap().members_desc();
    let c = SubsetFamily::from_masks(n, members[..threshold + 1].iter().copied()).unwrap();
    assert_eq!(cfg.tau(c.len() as u128, n), q(1, 1000));
    assert_eq!(cfg.tau(threshold as u128, n), q(1, 10));
    let (h, route) = big_f_hypergraph(&c, &cfg).unwrap();
    match route {
        Route::BigF { blocks, .. } => assert_eq!(blocks, 1),
        other => panic!("unexpected route {other:?}"),
    }
    assert!(h.edge_count() > 0);
    for e in h.edges() {
        let sizes: Vec<u32> = e.masks().iter().map(|m| m.count_ones() % 3).collect();
        assert!(sizes.windows(2).all(|w| w[0] == w[1]));
    }
}

#[test]
fn tiny_ground_set_needs_no_steps() {
    let cfg = ContainerConfig::new(3);
    let i = SubsetFamily::from_masks(2, [0b01, 0b11]).unwrap();
    let fp = fingerprint(&i, &cfg).unwrap();
    assert_eq!(fp.iteration_count(), 0);
    assert_eq!(fp.final_container, SubsetFamily::full(2).unwrap());
}

#[test]
fn middle_layer_of_p10_fingerprint() {
    let cfg = ContainerConfig::new(2);
    let i = middle_layers(10, 2).unwrap();
    let fp = fingerprint(&i, &cfg).unwrap();
    assert!(fp.iteration_count() >= 1);
    assert!(BigRational::from_integer(fp.tee_total().into()) <= fp.tee_allowance());
    let json: serde_json::Value = serde_json::from_str(&fp.to_json()).unwrap();
    assert_eq!(json["iteration_count"], fp.iteration_count());
    assert_eq!(json["final_container_size"], fp.final_container.len());
}

#[test]
fn shared_fingerprint_gives_shared_container() {
    let cfg = ContainerConfig::new(2);
    let mut cache = ContainerCache::new();
    for seed in 0..4 {
        let i = greedy_chain_free(8, 2, seed);
        let fp = fingerprint_trace(&i, &cfg, &mut cache).unwrap();
        let mut t = SubsetFamily::empty(8).unwrap();
        for part in &fp.tees {
            t = t.union(part).unwrap();
        }
        let again = fingerprint_trace(&t, &cfg, &mut cache).unwrap();
        assert_eq!(again.tees, fp.tees);
        assert_eq!(again.final_container, fp.final_container);
    }
}

#[test]
fn count_bound_matches_high_precision() {
    // s = 1, K = 1, n = 10: C(10,5) exp(C(10,5)/10)
    let v = fingerprint_count_bound(1, 10, &q(1, 1)).unwrap();
    let reference = big(252).ln() + big(252) / big(10);
    let r = reference.to_f64().value();
    assert!((v.ln - r).abs() <= 1e-12 * r.abs());

    for (s, n, kn, kd) in [(3u64, 12u32, 5u128, 2u128), (40, 14, 7, 1), (1000, 20, 1, 3)] {
        let v = fingerprint_count_bound(s, n, &q(kn as i64, kd as i64)).unwrap();
        let kc = big(kn * central_binomial(n)) / big(kd);
        let reference = big(s.into()) * (kc.clone() / big(s.into())).ln() + kc / big(n.into());
        let r = reference.to_f64().value();
        assert!((v.ln - r).abs() <= 1e-9 * r.abs(), "s={s} n={n}: {} vs {r}", v.ln);
    }
}

#[test]
fn count_bound_first_factor_peaks_near_kc_over_e() {
    let n = 12;
    let kc = 2.0 * central_binomial(n) as f64;
    let peak = (kc / std::f64::consts::E).round() as u64;
    let first = |s: u64| fingerprint_count_bound(s, n, &q(2, 1)).unwrap().ln;
    let mut prev = f64::NEG_INFINITY;
    for s in (1..=peak).step_by(17) {
        assert!(first(s) > prev);
        prev = first(s);
    }
    assert!(first(peak) >= first(peak + 5));
    assert!(first(peak) >= first(peak.saturating_sub(5)));
}

#[test]
fn count_bound_vanishes_for_zero_k() {
    let v = fingerprint_count_bound(5, 10, &q(0, 1)).unwrap();
    assert!(v.is_zero());
    assert_eq!(v.value(), 0.0);
    assert!(fingerprint_count_bound(0, 10, &q(1, 1)).is_err());
}

#[test]
fn slogs_single_term_is_exact() {
    let v = slogs_check(&[q(37, 2)], &q(100, 1), &q(1, 2)).unwrap();
    assert_eq!(v.gap, 0.0);
}

#[test]
fn slogs_unit_terms() {
    let m = 6;
    let a = vec![q(1, 1); m];
    let v = slogs_check(&a, &q(1000, 1), &q(1, 4)).unwrap();
    let expect = m as f64 * (m as f64).ln();
    assert!((v.lhs - expect).abs() < 1e-12);
    assert_eq!(v.rhs_sum, 0.0);
    assert!(v.gap <= 8.0 * 1000.0);
}

#[test]
fn slogs_geometric_sequence() {
    let big_m = q(4096, 1);
    let delta = q(1, 2);
    let a: Vec<BigRational> = (1..=12).map(|j| q(4096 >> j, 1)).collect();
    let v = slogs_check(&a, &big_m, &delta).unwrap();
    let s: f64 = (1..=12).map(|j| f64::from(4096u32 >> j)).sum();
    let rhs: f64 = (1..=12).map(|j| f64::from(4096u32 >> j)).map(|x| x * x.ln()).sum();
    assert!((v.gap - (s * s.ln() - rhs)).abs() < 1e-9);
    assert!(slogs_check(&[q(4096, 1)], &big_m, &delta).is_err());
    assert!(slogs_check(&[q(1, 2)], &big_m, &delta).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn fingerprints_of_random_chain_free_families(n in 6u32..=8, k in 2u32..=3, seed in any::<u64>()) {
        let cfg = ContainerConfig::new(k);
        let i = greedy_chain_free(n, k, seed);
        let fp = fingerprint(&i, &cfg).unwrap();
        prop_assert!(fp.iteration_count() <= 8 * n as usize);
        prop_assert!(BigRational::from_integer(fp.tee_total().into()) <= fp.tee_allowance());
        let (pre, post) = fp.allowance_split();
        prop_assert_eq!(pre + post, fp.tee_allowance() / BigRational::from_integer(k.into()));
    }

    #[test]
    fn slogs_gap_is_linear_in_m(
        m_exp in 4u32..=20,
        delta_q in 1i64..=3,
        fracs in proptest::collection::vec(0.0f64..1.0, 1..30),
    ) {
        let big_m = q(1i64 << m_exp, 1);
        let delta = q(delta_q, 4);
        let ratio = 1.0 - delta_q as f64 / 4.0;
        let mut a = Vec::new();
        let mut cap = (1i64 << m_exp) as f64;
        for f in fracs {
            cap *= ratio;
            if cap < 1.0 {
                break;
            }
            let x = 1 + ((cap - 1.0) * f).floor() as i64;
            a.push(q(x, 1));
        }
        prop_assume!(!a.is_empty());
        let v = slogs_check(&a, &big_m, &delta).unwrap();
        prop_assert!(v.gap >= -1e-9);
        prop_assert!(v.gap <= 8.0 * (1i64 << m_exp) as f64);
    }
}
