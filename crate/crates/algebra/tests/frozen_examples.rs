//! Frozen worked examples for the operator oracles.
//!
//! Each case was checked by hand (or by an independent brute-force
//! computation noted inline) before being pinned here; these tests are the
//! regression anchor for the operator semantics.

use cayley_algebra::{
    label_for, left_fold, mod_add_chain, ominus_chain, ominus_pair, right_fold, AlgebraError,
    CanonicalMap, GroupElement, LabelToken, OperatorKind,
};

fn z(indices: &[usize], n: usize) -> Vec<GroupElement> {
    indices
        .iter()
        .map(|&i| GroupElement::new(i, n).expect("valid element"))
        .collect()
}

fn e(i: usize, n: usize) -> GroupElement {
    GroupElement::new(i, n).expect("valid element")
}

// ---------------------------------------------------------------- mod_add

#[test]
fn mod_add_chain_figure_row() {
    // z3 + z4 + z5 + z5 + z5 + z6 = z0 in Z_7 (3+4+5+5+5+6 = 28 ≡ 0).
    assert_eq!(mod_add_chain(&z(&[3, 4, 5, 5, 5, 6], 7)).unwrap(), e(0, 7));
}

#[test]
fn mod_add_chain_identity_case() {
    assert_eq!(mod_add_chain(&z(&[0, 0, 0, 0, 0, 0], 7)).unwrap(), e(0, 7));
}

#[test]
fn mod_add_chain_z11_sixty() {
    // 6 × 10 = 60; 60 mod 11 = 5.
    assert_eq!(
        mod_add_chain(&z(&[10, 10, 10, 10, 10, 10], 11)).unwrap(),
        e(5, 11)
    );
}

#[test]
fn mod_add_chain_rejects_empty_and_mixed_moduli() {
    assert_eq!(
        mod_add_chain(&[]).unwrap_err(),
        AlgebraError::EmptyOperandList
    );
    let mixed = [e(1, 7), e(1, 11)];
    assert!(matches!(
        mod_add_chain(&mixed).unwrap_err(),
        AlgebraError::ModulusMismatch { left: 7, right: 11 }
    ));
}

// ----------------------------------------------------------------- ominus

#[test]
fn ominus_pair_z5_walk_through_zero() {
    // Z_5: 3 → 4 → 0 → 1 passes z_0 once.
    assert_eq!(ominus_pair(e(3, 5), e(1, 5)).unwrap().count(), 1);
}

#[test]
fn ominus_pair_self_is_one_full_cycle() {
    assert_eq!(ominus_pair(e(2, 5), e(2, 5)).unwrap().count(), 1);
    for n in [5, 7, 11, 13] {
        for i in 0..n {
            assert_eq!(
                ominus_pair(e(i, n), e(i, n)).unwrap().count(),
                1,
                "self-hop must be a full cycle: i={i}, n={n}"
            );
        }
    }
}

#[test]
fn ominus_pair_no_zero_on_short_walk() {
    // Z_7: 1 → 2,3,4,5,6 never passes z_0.
    assert_eq!(ominus_pair(e(1, 7), e(6, 7)).unwrap().count(), 0);
}

#[test]
fn ominus_chain_z5_paper_example() {
    // z4 ⊖ z2 ⊖ z1 = (4⊖2) + (2⊖1) = 1 + 1 = 2.
    assert_eq!(ominus_chain(&z(&[4, 2, 1], 5)).unwrap().count(), 2);
}

#[test]
fn ominus_chain_figure_row() {
    // z3 ⊖ z4 ⊖ z5 ⊖ z5 ⊖ z5 ⊖ z6 = 2 in Z_7 (two self-hops at z5).
    assert_eq!(ominus_chain(&z(&[3, 4, 5, 5, 5, 6], 7)).unwrap().count(), 2);
}

#[test]
fn ominus_chain_all_ones_is_five() {
    // Five self-hops, each exactly 1.
    assert_eq!(
        ominus_chain(&z(&[1, 1, 1, 1, 1, 1], 7)).unwrap().count(),
        5
    );
}

#[test]
fn ominus_appendix_rows() {
    // Appendix training rows, recomputed by hand from the walk definition.
    assert_eq!(ominus_chain(&z(&[2, 2, 4, 3, 6, 4], 7)).unwrap().count(), 3);
    assert_eq!(ominus_chain(&z(&[4, 3, 6, 4, 2, 2], 7)).unwrap().count(), 4);
}

#[test]
fn ominus_chain_rejects_short_chains() {
    assert_eq!(
        ominus_chain(&z(&[3], 7)).unwrap_err(),
        AlgebraError::ChainTooShort { len: 1 }
    );
    assert_eq!(
        ominus_chain(&[]).unwrap_err(),
        AlgebraError::ChainTooShort { len: 0 }
    );
}

// --------------------------------------------------------------- lt / rt

#[test]
fn left_fold_appendix_row() {
    assert_eq!(left_fold(&z(&[2, 2, 4, 3, 6, 4], 7)).unwrap(), e(2, 7));
    assert_eq!(left_fold(&z(&[5], 7)).unwrap(), e(5, 7));
    assert_eq!(left_fold(&z(&[9, 0, 1], 13)).unwrap(), e(9, 13));
}

#[test]
fn right_fold_appendix_row() {
    assert_eq!(right_fold(&z(&[2, 2, 4, 3, 6, 4], 7)).unwrap(), e(4, 7));
    assert_eq!(right_fold(&z(&[5], 7)).unwrap(), e(5, 7));
    assert_eq!(right_fold(&z(&[9, 0, 1], 13)).unwrap(), e(1, 13));
}

// ------------------------------------------------------------------ oplus

#[test]
fn oplus_permutation_and_identity_invariance() {
    let mut map = CanonicalMap::new(7, 6, 42);
    let base = z(&[3, 4, 5, 5, 5, 6], 7);
    map.insert_operands(&base).unwrap();

    let permuted = z(&[5, 3, 6, 5, 4, 5], 7);
    assert_eq!(
        map.oplus_eval(&base).unwrap(),
        map.oplus_eval(&permuted).unwrap(),
        "⊕ must be permutation invariant"
    );

    let with_zero = z(&[0, 3, 4, 5, 5, 5, 6], 7);
    assert_eq!(
        map.oplus_eval(&base).unwrap(),
        map.oplus_eval(&with_zero).unwrap(),
        "⊕ must ignore z_0 operands"
    );
}

#[test]
fn oplus_base_and_inserted_sequence_share_label() {
    let mut map = CanonicalMap::new(7, 6, 42);
    let base = z(&[4, 3, 5, 3, 1], 7);
    map.insert_operands(&base).unwrap();
    let inserted = z(&[0, 4, 3, 5, 3, 1], 7);
    assert_eq!(
        map.oplus_eval(&base).unwrap(),
        map.oplus_eval(&inserted).unwrap()
    );
}

#[test]
fn oplus_unmapped_multiset_errors() {
    let map = CanonicalMap::new(7, 6, 42);
    let err = map.oplus_eval(&z(&[1, 2, 3], 7)).unwrap_err();
    assert!(matches!(err, AlgebraError::UnmappedMultiset { .. }));
}

#[test]
fn oplus_regression_constant_n7_seed42() {
    // Regression anchor: the seeded mapping builder's value for
    // (n=7, seed=42, multiset {1,1,2}), computed once by running the builder
    // and pinned here so the PRF can never drift silently.
    let observed = CanonicalMap::value_for(42, 7, &[1, 1, 2]);
    assert_eq!(observed, 3);

    // The same constant must surface through the public evaluation path.
    let mut map = CanonicalMap::new(7, 6, 42);
    map.insert_operands(&z(&[2, 1, 1], 7)).unwrap();
    assert_eq!(map.oplus_eval(&z(&[1, 2, 1], 7)).unwrap().index(), 3);
}

// ------------------------------------------------------------- label_for

#[test]
fn label_oracle_dispatches_all_operators() {
    let seq = z(&[3, 4, 5, 5, 5, 6], 7);
    let mut map = CanonicalMap::new(7, 6, 42);
    map.insert_operands(&seq).unwrap();

    assert_eq!(
        label_for(OperatorKind::Plus, &seq, None).unwrap(),
        LabelToken::Element(e(0, 7))
    );
    assert!(matches!(
        label_for(OperatorKind::Oplus, &seq, Some(&map)).unwrap(),
        LabelToken::Result(_)
    ));
    assert_eq!(
        label_for(OperatorKind::Ominus, &seq, None).unwrap(),
        LabelToken::Count(cayley_algebra::CountValue(2))
    );
    assert_eq!(
        label_for(OperatorKind::Left, &seq, None).unwrap(),
        LabelToken::Element(e(3, 7))
    );
    assert_eq!(
        label_for(OperatorKind::Right, &seq, None).unwrap(),
        LabelToken::Element(e(6, 7))
    );
    assert_eq!(
        label_for(OperatorKind::Oplus, &seq, None).unwrap_err(),
        AlgebraError::MapRequired
    );
}
