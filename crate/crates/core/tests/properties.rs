//! Property tests for the algebraic and combinatorial invariants.

use proptest::prelude::*;

use rcw_core::canon::{automorphism_group, canonical_form};
use rcw_core::deciders::{decide_local_rc, Mode};
use rcw_core::modelzoo::{evaluate, make_model, ZooPrinciple};
use rcw_core::reductions::oracle::SeededOracle;
use rcw_core::reductions::{reduce, subsum_divisors, OracleFamily};
use rcw_core::verify::verify_certificate;
use rcw_core::{Perm, SelectionStructure, SubsetCode};

fn perm(n: usize) -> impl Strategy<Value = Perm> {
    Just((0..n).collect::<Vec<usize>>())
        .prop_shuffle()
        .prop_map(|v| Perm::from_images(v).unwrap())
}

fn perm_triple(max: usize) -> impl Strategy<Value = (Perm, Perm, Perm)> {
    (1..=max).prop_flat_map(|n| (perm(n), perm(n), perm(n)))
}

/// A random arity-2 structure on `d` points, choices drawn from `seed`.
fn structure(d: usize, seed: u64) -> SelectionStructure {
    let mut state = seed | 1;
    SelectionStructure::from_fn(d, 2, |l| {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        let subs: Vec<SubsetCode> = l.k_subsets(2).collect();
        subs[(state % subs.len() as u64) as usize]
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn perm_group_laws((a, b, c) in perm_triple(12)) {
        prop_assert!(a.compose(&a.inverse()).is_identity());
        prop_assert!(a.inverse().compose(&a).is_identity());
        prop_assert_eq!(a.compose(&b).compose(&c), a.compose(&b.compose(&c)));
        for x in 0..a.degree() {
            prop_assert_eq!(a.compose(&b).apply(x), a.apply(b.apply(x)));
        }
        prop_assert_eq!(Perm::parse_cycles(a.degree(), &a.to_string()).unwrap(), a.clone());
        prop_assert_eq!(Perm::unrank(a.degree(), a.rank()), a);
    }

    #[test]
    fn subset_ops(x in 0u64..1 << 20, y in 0u64..1 << 20, (p, _, _) in perm_triple(20)) {
        let (a, b) = (SubsetCode(x), SubsetCode(y));
        prop_assert_eq!(a.union(b).len() + a.intersection(b).len(), a.len() + b.len());
        prop_assert!(a.difference(b).intersection(b).is_empty());
        prop_assert!(a.intersection(b).is_subset_of(a));
        prop_assert_eq!(SubsetCode::from_indices(a.to_vec()).unwrap(), a);
        let d = p.degree();
        let a = a.intersection(SubsetCode::full(d));
        let img = p.apply_subset(a);
        prop_assert_eq!(img.len(), a.len());
        prop_assert_eq!(p.inverse().apply_subset(img), a);
        prop_assert_eq!(a.k_subsets(2).count() as u64, rcw_core::selection::binom(a.len(), 2));
    }

    #[test]
    fn canonical_form_is_invariant(d in 3usize..=6, seed in any::<u64>(), relabel in any::<u64>()) {
        let m = structure(d, seed);
        let pi = Perm::unrank(d, (relabel % (1..=d as u64).product::<u64>()) as usize);
        let moved = m.relabel(&pi);
        let (k1, s1) = canonical_form(&m).unwrap();
        let (k2, _) = canonical_form(&moved).unwrap();
        prop_assert_eq!(&k1, &k2);
        prop_assert_eq!(m.relabel(&s1), k1);
        prop_assert_eq!(automorphism_group(&m).unwrap().order(), automorphism_group(&moved).unwrap().order());
    }

    #[test]
    fn subsum_hits_exactly(pk in prop::sample::select(vec![(2u64, 3u32), (3, 2), (2, 4), (3, 3), (5, 2)]), picks in prop::collection::vec(0u32..8, 1..30)) {
        let (p, k) = pk;
        let q = p.pow(k);
        let mut sizes: Vec<u64> = picks.iter().map(|&i| p.pow(i % (k + 1))).collect();
        while sizes.iter().sum::<u64>() <= q {
            sizes.push(q);
        }
        let out = subsum_divisors(p, k, &sizes).unwrap();
        prop_assert_eq!(out.iter().sum::<u64>(), q);
        let mut pool = sizes.clone();
        for s in out {
            let i = pool.iter().position(|&x| x == s);
            prop_assert!(i.is_some());
            pool.swap_remove(i.unwrap());
        }
    }

    #[test]
    fn reductions_are_valid(n in prop::sample::select(vec![2usize, 3, 4, 6]), extra in prop::collection::vec(1usize..6, 3..20), seed in any::<u64>()) {
        let mut next = 0u32;
        let members: Vec<Vec<u32>> = extra
            .iter()
            .map(|&e| {
                let m: Vec<u32> = (next..next + (n + e) as u32).collect();
                next += (n + e) as u32 + 1;
                m
            })
            .collect();
        let mut fam = OracleFamily::new(members.clone(), n, SeededOracle::new(seed)).unwrap();
        let sel = reduce(n, &mut fam).unwrap();
        prop_assert!(sel.validate(&members).is_ok());
        prop_assert!(!sel.is_empty());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn verifier_rejects_mutations(m in prop::sample::select(vec![3usize, 4, 6, 8]), pick in any::<prop::sample::Index>(), bit in 0usize..8) {
        let v = decide_local_rc(4, m, Mode::Complete).unwrap();
        let cert = v.witness.unwrap();
        prop_assert!(verify_certificate(&cert).is_ok());
        if let rcw_core::deciders::SelTable::Explicit(rows) = &cert.sel_table {
            if !rows.is_empty() {
                let i = pick.index(rows.len());
                let (l, s) = rows[i];
                // a different 4-subset of the same set
                let other = l.k_subsets(4).find(|&t| t != s);
                if let Some(t) = other {
                    let mut bad = cert.clone();
                    let mut rows = rows.clone();
                    rows[i] = (l, t);
                    bad.sel_table = rcw_core::deciders::SelTable::Explicit(rows);
                    prop_assert!(verify_certificate(&bad).is_err());
                }
            }
        }
        let mut bad = cert.clone();
        bad.target_set = SubsetCode(cert.target_set.0 ^ (1 << (bit % m)));
        prop_assert!(verify_certificate(&bad).is_err());
    }

    #[test]
    fn zoo_verdicts_are_monotone_in_budget(model in prop::sample::select(vec![("vfin", "4"), ("vlines", "2,3"), ("vlines", "4"), ("bfm", "12")]), n in 1usize..=5, principle in 0usize..4) {
        let m = make_model(model.0, model.1, 64, &[]).unwrap();
        let p = [ZooPrinciple::NrcFin(n), ZooPrinciple::CN(n), ZooPrinciple::Rc(n), ZooPrinciple::NcfinMinus(n)][principle];
        let mut before = false;
        for e in 0..=6 {
            let now = evaluate(&m, p, e).unwrap().holds();
            prop_assert!(!before || now, "{} {} at budget {}", model.0, p, e);
            before = now;
        }
    }
}
