//! End-to-end dataset contracts at the reference configuration
//! (n = 7, chain length 6, K = 50) plus edge cases and adversarial audits.

use std::collections::BTreeSet;
use std::fs;
use std::time::Instant;

use cayley_algebra::{label_for, OperatorKind};
use cayley_datagen::{
    audit_labels, audit_no_leakage, compose_dataset, parse, serialize, DatagenError, Equation,
    Split, TaskTag, Violation, DEFAULT_PERMS_PER_FAMILY,
};

fn indices(eq: &Equation) -> Vec<usize> {
    eq.operands.iter().map(|e| e.index()).collect()
}

fn sorted_multiset(eq: &Equation) -> Vec<usize> {
    let mut v = indices(eq);
    v.sort_unstable();
    v
}

#[test]
fn reference_configuration_meets_every_count_and_guarantee() {
    let start = Instant::now();
    let bundle =
        compose_dataset(7, 6, 50, 50, DEFAULT_PERMS_PER_FAMILY, 42).expect("feasible split");

    // 10K instances per split: 4 categories of K and 3 of 2K.
    assert_eq!(bundle.train.len(), 500);
    assert_eq!(bundle.test.len(), 500);
    for tag in [TaskTag::PlusComm, TaskTag::PlusIde, TaskTag::OplusComm, TaskTag::OplusIde] {
        assert_eq!(bundle.category(Split::Train, tag).count(), 50, "{tag} train");
        assert_eq!(bundle.category(Split::Test, tag).count(), 50, "{tag} test");
    }
    for tag in [TaskTag::Ominus, TaskTag::Left, TaskTag::Right] {
        assert_eq!(bundle.category(Split::Train, tag).count(), 100, "{tag} train");
        assert_eq!(bundle.category(Split::Test, tag).count(), 100, "{tag} test");
    }

    // Structural audit and full label recheck both come back clean.
    let leakage = audit_no_leakage(&bundle);
    assert!(leakage.is_clean(), "unexpected violations:\n{leakage}");
    let labels = audit_labels(&bundle).expect("label audit runs");
    assert!(labels.is_clean(), "label violations:\n{labels}");

    // Every commutativity test row has exactly one train arrangement of its
    // multiset under the same operator.
    for tag in [TaskTag::PlusComm, TaskTag::OplusComm] {
        let train_rows: Vec<Vec<usize>> =
            bundle.category(Split::Train, tag).map(indices).collect();
        for eq in bundle.category(Split::Test, tag) {
            let key = sorted_multiset(eq);
            let matches = train_rows
                .iter()
                .filter(|row| {
                    let mut s = (*row).clone();
                    s.sort_unstable();
                    s == key
                })
                .count();
            assert_eq!(matches, 1, "{tag}: test multiset {key:?} has {matches} train perms");
        }
    }

    // Every identity test variant strips to a base equation present in train.
    for tag in [TaskTag::PlusIde, TaskTag::OplusIde] {
        let train_rows: BTreeSet<Vec<usize>> =
            bundle.category(Split::Train, tag).map(indices).collect();
        for eq in bundle.category(Split::Test, tag) {
            let row = indices(eq);
            assert_eq!(row.iter().filter(|&&x| x == 0).count(), 1, "test rows are variants");
            let base: Vec<usize> = row.iter().copied().filter(|&x| x != 0).collect();
            assert!(train_rows.contains(&base), "base {base:?} missing from train");
        }
    }

    // The operand pool is shared verbatim and in order across operators.
    for split in [Split::Train, Split::Test] {
        let plus_pool: Vec<Vec<usize>> = bundle
            .category(split, TaskTag::PlusComm)
            .chain(bundle.category(split, TaskTag::PlusIde))
            .map(indices)
            .collect();
        let oplus_pool: Vec<Vec<usize>> = bundle
            .category(split, TaskTag::OplusComm)
            .chain(bundle.category(split, TaskTag::OplusIde))
            .map(indices)
            .collect();
        assert_eq!(plus_pool, oplus_pool, "{split}: op and + pools must align");
        for tag in [TaskTag::Ominus, TaskTag::Left, TaskTag::Right] {
            let pool: Vec<Vec<usize>> = bundle.category(split, tag).map(indices).collect();
            assert_eq!(pool, plus_pool, "{split}/{tag}: pool must reuse sequences verbatim");
        }
    }

    // Desk-scale budget: composition plus both audits stay well under 5s.
    assert!(
        start.elapsed().as_secs_f64() < 5.0,
        "reference configuration took {:?}",
        start.elapsed()
    );
}

#[test]
fn composition_is_deterministic_in_the_seed() {
    let a = compose_dataset(7, 6, 20, 10, 10, 7).unwrap();
    let b = compose_dataset(7, 6, 20, 10, 10, 7).unwrap();
    assert_eq!(a, b);
    let c = compose_dataset(7, 6, 20, 10, 10, 8).unwrap();
    assert_ne!(a, c);
}

#[test]
fn minimal_and_large_split_sizes_count_correctly() {
    // K_train = 1: ten train instances (one per structured category, two per
    // pooled category).
    let tiny = compose_dataset(7, 6, 1, 1, 10, 3).expect("feasible");
    assert_eq!(tiny.train.len(), 10);
    assert_eq!(tiny.test.len(), 10);
    assert!(audit_no_leakage(&tiny).is_clean());

    // K_train = 3000 over Z_7 yields 30,000 train instances.
    let big = compose_dataset(7, 6, 3000, 100, 10, 5).expect("feasible");
    assert_eq!(big.train.len(), 30_000);
    assert_eq!(big.test.len(), 1_000);
    assert!(audit_no_leakage(&big).is_clean());
    assert!(audit_labels(&big).unwrap().is_clean());
}

#[test]
fn infeasible_requests_name_the_limiting_category() {
    // Chain length 3 over {1, 2}: two non-constant multisets exist, so a
    // large train quota cannot be met.
    match compose_dataset(3, 3, 50, 2, 10, 0) {
        Err(DatagenError::Capacity { category, .. }) => {
            assert_eq!(category, "commutativity families");
        }
        other => panic!("expected capacity error, got {other:?}"),
    }
}

#[test]
fn invalid_configurations_are_rejected() {
    assert!(matches!(compose_dataset(2, 6, 5, 5, 10, 0), Err(DatagenError::Config(_))));
    assert!(matches!(compose_dataset(7, 2, 5, 5, 10, 0), Err(DatagenError::Config(_))));
    assert!(matches!(compose_dataset(7, 6, 0, 5, 10, 0), Err(DatagenError::Config(_))));
    assert!(matches!(compose_dataset(7, 6, 5, 0, 10, 0), Err(DatagenError::Config(_))));
    assert!(matches!(compose_dataset(7, 6, 5, 5, 1, 0), Err(DatagenError::Config(_))));
}

#[test]
fn rendering_matches_the_line_format() {
    let bundle = compose_dataset(7, 6, 5, 5, 10, 11).unwrap();
    let (eq, _) = &bundle.train[0];
    let line = eq.render();
    assert!(line.contains(" + "), "plus rows spell the operator as `+`: {line}");
    assert!(line.contains(" = "), "equation separator: {line}");
    let om = bundle.category(Split::Train, TaskTag::Ominus).next().unwrap();
    assert!(om.render().contains(" om "), "count rows spell `om`: {}", om.render());
    assert!(om.render().split(" = ").nth(1).unwrap().starts_with('c'), "count label");
}

#[test]
fn serialization_round_trips_and_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = compose_dataset(7, 6, 12, 9, 10, 21).unwrap();
    let d1 = dir.path().join("first");
    serialize(&bundle, &d1).unwrap();
    let parsed = parse(&d1).unwrap();
    assert_eq!(parsed, bundle, "parse(serialize(b)) must equal b");

    // Re-serializing the parsed bundle reproduces every byte.
    let d2 = dir.path().join("second");
    serialize(&parsed, &d2).unwrap();
    let mut names: Vec<String> = fs::read_dir(&d1)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names.len(), 15, "manifest + 14 category files");
    for name in names {
        let a = fs::read(d1.join(&name)).unwrap();
        let b = fs::read(d2.join(&name)).unwrap();
        assert_eq!(a, b, "byte drift in {name}");
    }
}

#[test]
fn corrupted_lines_report_file_and_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = compose_dataset(7, 6, 4, 3, 10, 2).unwrap();
    serialize(&bundle, dir.path()).unwrap();

    let target = dir.path().join("train_plus_comm.txt");
    let mut text = fs::read_to_string(&target).unwrap();
    text = text.replacen("z", "zX", 1); // first token becomes zX<k>
    fs::write(&target, text).unwrap();

    match parse(dir.path()) {
        Err(DatagenError::Parse { file, line, .. }) => {
            assert_eq!(file, "train_plus_comm.txt");
            assert_eq!(line, 1);
        }
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn audit_flags_cross_split_duplicates() {
    let mut bundle = compose_dataset(7, 6, 6, 4, 10, 13).unwrap();
    // Copy a training row into the test split verbatim.
    let dup = bundle
        .train
        .iter()
        .find(|(_, t)| *t == TaskTag::Ominus)
        .cloned()
        .unwrap();
    bundle.test.push(dup.clone());
    let report = audit_no_leakage(&bundle);
    assert!(!report.is_clean());
    assert!(
        report.violations.iter().any(|v| matches!(
            v,
            Violation::CrossSplitDuplicate { op: OperatorKind::Ominus, operands }
                if *operands == indices(&dup.0)
        )),
        "missing cross-split duplicate violation:\n{report}"
    );
}

#[test]
fn audit_flags_held_families_with_extra_train_perms() {
    let mut bundle = compose_dataset(7, 6, 6, 4, 10, 17).unwrap();
    // Find a commutativity test row and inject a second train arrangement of
    // its multiset (rotate the test row so it differs from both existing
    // rows' exact order).
    let (test_eq, _) = bundle
        .test
        .iter()
        .find(|(_, t)| *t == TaskTag::PlusComm)
        .cloned()
        .unwrap();
    let mut rotated = test_eq.operands.clone();
    rotated.rotate_left(1);
    let injected = Equation {
        op: OperatorKind::Plus,
        operands: rotated.clone(),
        label: label_for(OperatorKind::Plus, &rotated, None).unwrap(),
    };
    bundle.train.push((injected, TaskTag::PlusComm));
    let report = audit_no_leakage(&bundle);
    let key = sorted_multiset(&test_eq);
    assert!(
        report.violations.iter().any(|v| matches!(
            v,
            Violation::HeldFamilyTrainCount { tag: TaskTag::PlusComm, multiset, .. }
                if *multiset == key
        )),
        "missing held-family violation:\n{report}"
    );
}

#[test]
fn audit_flags_missing_identity_bases() {
    let mut bundle = compose_dataset(7, 6, 6, 4, 10, 19).unwrap();
    // Remove a base equation whose variants sit in test.
    let (variant, _) = bundle
        .test
        .iter()
        .find(|(_, t)| *t == TaskTag::PlusIde)
        .cloned()
        .unwrap();
    let base: Vec<usize> = indices(&variant).into_iter().filter(|&x| x != 0).collect();
    let before = bundle.train.len();
    bundle.train.retain(|(eq, t)| {
        !(*t == TaskTag::PlusIde && indices(eq) == base)
    });
    assert_eq!(bundle.train.len(), before - 1, "exactly one base removed");
    let report = audit_no_leakage(&bundle);
    assert!(
        report.violations.iter().any(|v| matches!(
            v,
            Violation::IdentityBaseMissing { tag: TaskTag::PlusIde, base: b } if *b == base
        )),
        "missing identity-base violation:\n{report}"
    );
}

#[test]
fn label_audit_flags_tampered_labels() {
    let mut bundle = compose_dataset(7, 6, 6, 4, 10, 23).unwrap();
    // Flip one + label to a wrong element.
    let pos = bundle.train.iter().position(|(_, t)| *t == TaskTag::PlusComm).unwrap();
    let eq = &mut bundle.train[pos].0;
    let truth = label_for(OperatorKind::Plus, &eq.operands, None).unwrap();
    let wrong_idx = (match truth {
        cayley_algebra::LabelToken::Element(e) => e.index(),
        _ => unreachable!(),
    } + 1)
        % 7;
    eq.label = cayley_algebra::LabelToken::Element(
        cayley_algebra::GroupElement::new(wrong_idx, 7).unwrap(),
    );
    let report = audit_labels(&bundle).unwrap();
    assert!(
        report.violations.iter().any(|v| matches!(
            v,
            Violation::LabelMismatch { split: Split::Train, tag: TaskTag::PlusComm, .. }
        )),
        "missing label violation:\n{report}"
    );
}
