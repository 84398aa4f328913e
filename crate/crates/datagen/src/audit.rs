//! Split-guarantee and label auditing.
//!
//! Audits operate on a [`DatasetBundle`] alone (no access to the family
//! structures that built it), so they re-derive families from the rows —
//! exactly what an external reviewer of the serialized corpus would do.

use std::collections::{BTreeMap, BTreeSet};

use cayley_algebra::{label_for, OperatorKind};

use crate::compose::DatasetBundle;
use crate::equation::{Equation, Split, TaskTag};
use crate::DatagenError;

/// One violated guarantee.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// The same (operator, exact operand tuple) appears in both splits.
    CrossSplitDuplicate {
        /// Operator shared by the colliding rows.
        op: OperatorKind,
        /// Operand indices of the colliding rows.
        operands: Vec<usize>,
    },
    /// The same row appears twice within one split and category.
    WithinSplitDuplicate {
        /// Split the duplicate sits in.
        split: Split,
        /// Category the duplicate sits in.
        tag: TaskTag,
        /// Operand indices of the duplicated row.
        operands: Vec<usize>,
    },
    /// A commutativity multiset with test rows has ≠ 1 train arrangement.
    HeldFamilyTrainCount {
        /// Category of the family.
        tag: TaskTag,
        /// Sorted multiset key.
        multiset: Vec<usize>,
        /// Number of train arrangements found (must be exactly 1).
        train_perms: usize,
    },
    /// A commutativity multiset with train rows only has a single
    /// arrangement (train-rich families must hold at least two).
    RichFamilySingleton {
        /// Category of the family.
        tag: TaskTag,
        /// Sorted multiset key.
        multiset: Vec<usize>,
    },
    /// A test-side identity variant whose base equation is missing from
    /// train.
    IdentityBaseMissing {
        /// Category of the family.
        tag: TaskTag,
        /// Zero-free base sequence.
        base: Vec<usize>,
    },
    /// Insertion variants of one identity base appear in both splits.
    IdentityVariantsSplit {
        /// Category of the family.
        tag: TaskTag,
        /// Zero-free base sequence.
        base: Vec<usize>,
    },
    /// A zero-free base equation found in the test split.
    IdentityBaseInTest {
        /// Category of the row.
        tag: TaskTag,
        /// Operand indices of the offending row.
        operands: Vec<usize>,
    },
    /// An identity-category row with an impossible shape.
    MalformedIdentityRow {
        /// Split of the row.
        split: Split,
        /// Category of the row.
        tag: TaskTag,
        /// Operand indices of the offending row.
        operands: Vec<usize>,
        /// What is wrong with the shape.
        reason: String,
    },
    /// A pooled noncommutative category whose operand pool differs from the
    /// structured categories' pool.
    PoolMismatch {
        /// Split of the mismatch.
        split: Split,
        /// Pooled category.
        tag: TaskTag,
        /// Human-readable diagnosis.
        detail: String,
    },
    /// Actual category size differs from the manifest record.
    CategoryCountMismatch {
        /// Split of the mismatch.
        split: Split,
        /// Category of the mismatch.
        tag: TaskTag,
        /// Count recorded in the manifest.
        expected: usize,
        /// Count observed in the bundle.
        actual: usize,
    },
    /// A row whose stored label disagrees with the algebra oracle.
    LabelMismatch {
        /// Split of the row.
        split: Split,
        /// Category of the row.
        tag: TaskTag,
        /// 0-based row position within the category and split.
        row: usize,
        /// Oracle label rendering.
        expected: String,
        /// Stored label rendering.
        found: String,
    },
    /// The rebuilt structured-lookup map digest disagrees with the manifest.
    OplusDigestMismatch {
        /// Digest recorded in the manifest.
        manifest: String,
        /// Digest of the map rebuilt from the corpus.
        rebuilt: String,
    },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::CrossSplitDuplicate { op, operands } => {
                write!(f, "row with operator `{}` and operands {operands:?} appears in both splits", op.token())
            }
            Violation::WithinSplitDuplicate { split, tag, operands } => {
                write!(f, "row {operands:?} duplicated within {split}/{tag}")
            }
            Violation::HeldFamilyTrainCount { tag, multiset, train_perms } => {
                write!(f, "{tag}: multiset {multiset:?} has test rows but {train_perms} train arrangements (want exactly 1)")
            }
            Violation::RichFamilySingleton { tag, multiset } => {
                write!(f, "{tag}: train-only multiset {multiset:?} has a single arrangement (want >= 2)")
            }
            Violation::IdentityBaseMissing { tag, base } => {
                write!(f, "{tag}: test variants of base {base:?} lack the base equation in train")
            }
            Violation::IdentityVariantsSplit { tag, base } => {
                write!(f, "{tag}: insertion variants of base {base:?} are split across train and test")
            }
            Violation::IdentityBaseInTest { tag, operands } => {
                write!(f, "{tag}: zero-free base row {operands:?} found in test")
            }
            Violation::MalformedIdentityRow { split, tag, operands, reason } => {
                write!(f, "{split}/{tag}: row {operands:?} malformed: {reason}")
            }
            Violation::PoolMismatch { split, tag, detail } => {
                write!(f, "{split}/{tag}: operand pool differs from the structured categories: {detail}")
            }
            Violation::CategoryCountMismatch { split, tag, expected, actual } => {
                write!(f, "{split}/{tag}: manifest records {expected} rows, bundle holds {actual}")
            }
            Violation::LabelMismatch { split, tag, row, expected, found } => {
                write!(f, "{split}/{tag} row {row}: label `{found}` but oracle says `{expected}`")
            }
            Violation::OplusDigestMismatch { manifest, rebuilt } => {
                write!(f, "structured-lookup digest mismatch: manifest {manifest}, rebuilt {rebuilt}")
            }
        }
    }
}

/// Result of an audit pass: empty means every guarantee holds.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LeakageReport {
    /// All violations found, in detection order.
    pub violations: Vec<Violation>,
}

impl LeakageReport {
    /// True when no guarantee was violated.
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for LeakageReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_clean() {
            writeln!(f, "audit clean: no violations")
        } else {
            writeln!(f, "audit found {} violation(s):", self.violations.len())?;
            for v in &self.violations {
                writeln!(f, "  - {v}")?;
            }
            Ok(())
        }
    }
}

fn indices(eq: &Equation) -> Vec<usize> {
    eq.operands.iter().map(|e| e.index()).collect()
}

fn sorted_indices(eq: &Equation) -> Vec<usize> {
    let mut v = indices(eq);
    v.sort_unstable();
    v
}

/// Strips the single `0` from a variant row, yielding its base; `None` if
/// the row does not contain exactly one zero.
fn strip_zero(row: &[usize]) -> Option<Vec<usize>> {
    let zeros = row.iter().filter(|&&x| x == 0).count();
    if zeros != 1 {
        return None;
    }
    Some(row.iter().copied().filter(|&x| x != 0).collect())
}

/// Structural audit: cross-split duplicates, commutativity family rules,
/// identity family rules, pool sharing, and manifest count consistency.
///
/// Violations are report content, not errors; an empty report certifies the
/// split guarantees.
pub fn audit_no_leakage(bundle: &DatasetBundle) -> LeakageReport {
    let mut violations = Vec::new();
    let m = bundle.manifest.m;

    // Within-split duplicates (per split and category).
    for split in [Split::Train, Split::Test] {
        for tag in TaskTag::ALL {
            let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
            for eq in bundle.category(split, tag) {
                let ops = indices(eq);
                if !seen.insert(ops.clone()) {
                    violations.push(Violation::WithinSplitDuplicate { split, tag, operands: ops });
                }
            }
        }
    }

    // Cross-split duplicates keyed by (operator, exact operand tuple).
    for op in OperatorKind::ALL {
        let collect = |rows: &[(Equation, TaskTag)]| -> BTreeSet<Vec<usize>> {
            rows.iter()
                .filter(|(eq, _)| eq.op == op)
                .map(|(eq, _)| indices(eq))
                .collect()
        };
        let train_set = collect(&bundle.train);
        let test_set = collect(&bundle.test);
        for dup in train_set.intersection(&test_set) {
            violations.push(Violation::CrossSplitDuplicate { op, operands: dup.clone() });
        }
    }

    // Commutativity family rules.
    for tag in [TaskTag::PlusComm, TaskTag::OplusComm] {
        let mut families: BTreeMap<Vec<usize>, (usize, usize)> = BTreeMap::new();
        for (split, counter) in [(Split::Train, 0usize), (Split::Test, 1usize)] {
            for eq in bundle.category(split, tag) {
                let entry = families.entry(sorted_indices(eq)).or_insert((0, 0));
                if counter == 0 {
                    entry.0 += 1;
                } else {
                    entry.1 += 1;
                }
            }
        }
        for (multiset, (train_perms, test_perms)) in families {
            if test_perms > 0 && train_perms != 1 {
                violations.push(Violation::HeldFamilyTrainCount { tag, multiset, train_perms });
            } else if test_perms == 0 && train_perms == 1 {
                violations.push(Violation::RichFamilySingleton { tag, multiset });
            }
        }
    }

    // Identity family rules.
    for tag in [TaskTag::PlusIde, TaskTag::OplusIde] {
        let mut train_bases: BTreeSet<Vec<usize>> = BTreeSet::new();
        let mut train_variant_bases: BTreeSet<Vec<usize>> = BTreeSet::new();
        let mut test_variant_bases: BTreeSet<Vec<usize>> = BTreeSet::new();
        for split in [Split::Train, Split::Test] {
            for eq in bundle.category(split, tag) {
                let row = indices(eq);
                let zeros = row.iter().filter(|&&x| x == 0).count();
                match (split, zeros, row.len()) {
                    (Split::Train, 0, len) if len == m - 1 => {
                        train_bases.insert(row);
                    }
                    (Split::Train, 1, len) if len == m => {
                        train_variant_bases.insert(strip_zero(&row).unwrap());
                    }
                    (Split::Test, 1, len) if len == m => {
                        test_variant_bases.insert(strip_zero(&row).unwrap());
                    }
                    (Split::Test, 0, _) => {
                        violations.push(Violation::IdentityBaseInTest { tag, operands: row });
                    }
                    (split, zeros, len) => {
                        violations.push(Violation::MalformedIdentityRow {
                            split,
                            tag,
                            operands: row,
                            reason: format!(
                                "length {len} with {zeros} zero(s); identity rows are \
                                 zero-free length {} bases or single-zero length {m} variants",
                                m - 1
                            ),
                        });
                    }
                }
            }
        }
        for base in &test_variant_bases {
            if !train_bases.contains(base) {
                violations.push(Violation::IdentityBaseMissing { tag, base: base.clone() });
            }
            if train_variant_bases.contains(base) {
                violations.push(Violation::IdentityVariantsSplit { tag, base: base.clone() });
            }
        }
        for base in &train_variant_bases {
            if !train_bases.contains(base) {
                violations.push(Violation::IdentityBaseMissing { tag, base: base.clone() });
            }
        }
    }

    // Pool sharing: each noncommutative category's operand pool must equal
    // the union of the structured categories' pools, split by split.
    for split in [Split::Train, Split::Test] {
        let mut structured: BTreeSet<Vec<usize>> = BTreeSet::new();
        for tag in [TaskTag::PlusComm, TaskTag::PlusIde] {
            structured.extend(bundle.category(split, tag).map(indices));
        }
        for tag in [TaskTag::Ominus, TaskTag::Left, TaskTag::Right] {
            let pooled: BTreeSet<Vec<usize>> = bundle.category(split, tag).map(indices).collect();
            if pooled != structured {
                let missing = structured.difference(&pooled).count();
                let extra = pooled.difference(&structured).count();
                violations.push(Violation::PoolMismatch {
                    split,
                    tag,
                    detail: format!("{missing} structured row(s) missing, {extra} extraneous"),
                });
            }
        }
    }

    // Manifest count consistency.
    for split in [Split::Train, Split::Test] {
        for tag in TaskTag::ALL {
            let actual = bundle.category(split, tag).count();
            let expected = bundle
                .manifest
                .category_counts
                .get(tag.name())
                .map(|c| match split {
                    Split::Train => c.train,
                    Split::Test => c.test,
                })
                .unwrap_or(0);
            if actual != expected {
                violations.push(Violation::CategoryCountMismatch { split, tag, expected, actual });
            }
        }
    }

    LeakageReport { violations }
}

/// Full-corpus label recheck against the algebra oracles, including the
/// structured-lookup digest.
///
/// Rebuilds the `op` output map from the manifest seed and the realized
/// corpus, verifies its digest, then recomputes every label.
pub fn audit_labels(bundle: &DatasetBundle) -> Result<LeakageReport, DatagenError> {
    let mut violations = Vec::new();
    let map = bundle.rebuild_oplus_map()?;
    if map.digest() != bundle.manifest.oplus_digest {
        violations.push(Violation::OplusDigestMismatch {
            manifest: bundle.manifest.oplus_digest.clone(),
            rebuilt: map.digest(),
        });
    }
    for split in [Split::Train, Split::Test] {
        for tag in TaskTag::ALL {
            for (row, eq) in bundle.category(split, tag).enumerate() {
                let expected = label_for(eq.op, &eq.operands, Some(&map))?;
                if expected != eq.label {
                    violations.push(Violation::LabelMismatch {
                        split,
                        tag,
                        row,
                        expected: expected.to_string(),
                        found: eq.label.to_string(),
                    });
                }
            }
        }
    }
    Ok(LeakageReport { violations })
}
