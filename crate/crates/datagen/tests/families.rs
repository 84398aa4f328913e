//! Family-builder contracts: split roles, distinctness, and capacity errors.

use std::collections::BTreeSet;

use cayley_datagen::{
    build_commutativity_families, build_identity_families, count_arrangements,
    distinct_permutations, DatagenError, FamilyClass, FamilySide, IdentityFamily,
};

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

#[test]
fn arrangement_counts_are_multinomials() {
    // 6!/3! = 120 for three repeated fives; 6!/(2!*2!) = 180 for two pairs.
    assert_eq!(count_arrangements(&[3, 4, 5, 5, 5, 6]), 120);
    assert_eq!(count_arrangements(&[2, 3, 3, 5, 5, 6]), 180);
    assert_eq!(count_arrangements(&[1, 2]), 2);
    assert_eq!(count_arrangements(&[4, 4, 4]), 1);
    assert_eq!(count_arrangements(&[1]), 1);
    assert_eq!(count_arrangements(&[1, 2, 3, 4]), 24);
}

#[test]
fn distinct_permutations_enumerate_exactly() {
    let perms = distinct_permutations(&[1, 2, 2]);
    assert_eq!(perms, vec![vec![1, 2, 2], vec![2, 1, 2], vec![2, 2, 1]]);
    for multiset in [vec![1, 2, 3], vec![1, 1, 2, 2], vec![5, 5, 5]] {
        let perms = distinct_permutations(&multiset);
        assert_eq!(perms.len(), count_arrangements(&multiset), "count for {multiset:?}");
        let set: BTreeSet<_> = perms.iter().collect();
        assert_eq!(set.len(), perms.len(), "duplicates for {multiset:?}");
        for p in &perms {
            assert_eq!(sorted(p.clone()), multiset, "not an arrangement of {multiset:?}");
        }
    }
}

#[test]
fn commutativity_builder_respects_family_roles() {
    let fams = build_commutativity_families(7, 6, 5, 4, 10, 99).expect("feasible");
    assert_eq!(fams.len(), 9);
    assert_eq!(fams.iter().filter(|f| f.class == FamilyClass::TrainRich).count(), 5);
    assert_eq!(fams.iter().filter(|f| f.class == FamilyClass::TestHeld).count(), 4);

    let mut multisets = BTreeSet::new();
    for fam in &fams {
        assert!(multisets.insert(fam.multiset.clone()), "duplicate family multiset");
        assert!(fam.multiset.iter().all(|&x| (1..7).contains(&x)), "nonzero indices only");
        assert!(
            fam.multiset.windows(2).all(|w| w[0] <= w[1]),
            "family key must be sorted"
        );
        assert!(
            !fam.multiset.iter().all(|&x| x == fam.multiset[0]),
            "constant multisets are excluded"
        );
        let mut seen = BTreeSet::new();
        for perm in fam.train_perms.iter().chain(fam.test_perms.iter()) {
            assert_eq!(sorted(perm.clone()), fam.multiset, "perm not in family");
            assert!(seen.insert(perm.clone()), "duplicate arrangement in family");
        }
        match fam.class {
            FamilyClass::TrainRich => {
                assert!(fam.train_perms.len() >= 2, "rich family with < 2 train perms");
                assert!(fam.test_perms.is_empty(), "rich family leaks to test");
                assert_eq!(fam.train_perms.len(), 10.min(count_arrangements(&fam.multiset)));
            }
            FamilyClass::TestHeld => {
                assert_eq!(fam.train_perms.len(), 1, "held family must train exactly one");
                assert!(!fam.test_perms.is_empty(), "held family with no test perms");
            }
        }
    }
}

#[test]
fn commutativity_builder_is_deterministic() {
    let a = build_commutativity_families(11, 4, 3, 3, 6, 5).unwrap();
    let b = build_commutativity_families(11, 4, 3, 3, 6, 5).unwrap();
    assert_eq!(a, b);
    let c = build_commutativity_families(11, 4, 3, 3, 6, 6).unwrap();
    assert_ne!(a, c, "different seeds should sample different families");
}

#[test]
fn two_element_multiset_splits_into_the_two_arrangements() {
    // With chain length 2 every non-constant family has exactly two
    // arrangements: held families train one and test the other.
    let fams = build_commutativity_families(5, 2, 0, 3, 10, 1).expect("feasible");
    for fam in &fams {
        assert_eq!(fam.class, FamilyClass::TestHeld);
        assert_eq!(fam.train_perms.len(), 1);
        assert_eq!(fam.test_perms.len(), 1);
        let a = &fam.train_perms[0];
        let b = &fam.test_perms[0];
        assert_eq!(a, &vec![b[1], b[0]], "test perm must be the swap of the train perm");
    }
}

#[test]
fn commutativity_builder_reports_capacity() {
    // n = 2 leaves only the constant multiset.
    match build_commutativity_families(2, 4, 1, 0, 10, 0) {
        Err(DatagenError::Capacity { category, .. }) => {
            assert_eq!(category, "commutativity families")
        }
        other => panic!("expected capacity error, got {other:?}"),
    }
    // Chain length 2 over {1, 2}: a single non-constant multiset exists.
    match build_commutativity_families(3, 2, 100, 0, 10, 0) {
        Err(DatagenError::Capacity { .. }) => {}
        other => panic!("expected capacity error, got {other:?}"),
    }
}

#[test]
fn identity_builder_produces_full_families() {
    let fams = build_identity_families(7, 6, 4, 3, 123).expect("feasible");
    assert_eq!(fams.len(), 7);
    let mut bases = BTreeSet::new();
    for (i, fam) in fams.iter().enumerate() {
        let expected_side = if i < 4 { FamilySide::TrainSide } else { FamilySide::TestSide };
        assert_eq!(fam.side, expected_side);
        assert!(bases.insert(fam.base.clone()), "duplicate base");
        assert_eq!(fam.base.len(), 5, "base length must be m - 1");
        assert!(fam.base.iter().all(|&x| (1..7).contains(&x)), "base must be zero-free");
        assert_eq!(fam.variants.len(), 6, "all m insertion positions");
        for (pos, v) in fam.variants.iter().enumerate() {
            assert_eq!(v, &IdentityFamily::insertion(&fam.base, pos));
            assert_eq!(v.len(), 6);
            assert_eq!(v.iter().filter(|&&x| x == 0).count(), 1);
        }
    }
}

#[test]
fn identity_builder_handles_single_element_bases() {
    // Chain length 2: bases are single nonzero elements and the two variants
    // are (z0, a) and (a, z0).
    let fams = build_identity_families(5, 2, 1, 1, 9).expect("feasible");
    for fam in &fams {
        assert_eq!(fam.base.len(), 1);
        let a = fam.base[0];
        assert_eq!(fam.variants, vec![vec![0, a], vec![a, 0]]);
    }
}

#[test]
fn identity_builder_reports_capacity() {
    // Bases of length 2 over {1, 2}: only four ordered tuples exist.
    match build_identity_families(3, 3, 10, 0, 0) {
        Err(DatagenError::Capacity { category, .. }) => assert_eq!(category, "identity families"),
        other => panic!("expected capacity error, got {other:?}"),
    }
}

#[test]
fn identity_builder_is_deterministic() {
    let a = build_identity_families(13, 5, 6, 6, 77).unwrap();
    let b = build_identity_families(13, 5, 6, 6, 77).unwrap();
    assert_eq!(a, b);
}
