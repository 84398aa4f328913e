//! Family structures underlying the leakage-controlled splits.
//!
//! A *commutativity family* is a set of arrangements of one nonzero operand
//! multiset; an *identity family* is one zero-free base sequence together with
//! its `z_0`-insertion variants. All split discipline lives at family level:
//! rows never move between train and test individually.
//!
//! Two layers are exposed:
//!
//! * [`build_commutativity_families`] / [`build_identity_families`] construct
//!   a requested number of full families — the natural unit for studying the
//!   split rules in isolation.
//! * `fill_*_rows` (crate-internal, used by `compose_dataset`) drive the same
//!   sampling machinery to hit *exact* train/test row quotas, trimming the
//!   final family of each phase without ever violating a family invariant.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::DatagenError;

/// Upper bound on arrangement counts that are fully enumerated rather than
/// rejection-sampled. 6! = 720 covers every multiset at chain length ≤ 6.
const ENUMERATION_CAP: usize = 720;

/// Attempt budget for rejection sampling before reporting capacity exhaustion.
const SAMPLE_ATTEMPTS: usize = 20_000;

/// Role of a commutativity family in the split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyClass {
    /// Two or more arrangements in train, none in test.
    TrainRich,
    /// Exactly one arrangement in train, at least one in test.
    TestHeld,
}

/// Side of the split an identity family serves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilySide {
    /// Base and all kept insertion variants go to train.
    TrainSide,
    /// Base goes to train; every kept insertion variant goes to test.
    TestSide,
}

/// Arrangements of one operand multiset, partitioned across the split.
///
/// Operands are stored as element indices (`1..n`, never `0`); the multiset
/// itself is kept in sorted order as the family identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultisetFamily {
    /// Sorted nonzero element indices; the family key.
    pub multiset: Vec<usize>,
    /// Split role.
    pub class: FamilyClass,
    /// Arrangements assigned to the training split.
    pub train_perms: Vec<Vec<usize>>,
    /// Arrangements assigned to the test split (empty for `TrainRich`).
    pub test_perms: Vec<Vec<usize>>,
}

/// One zero-free base sequence plus its kept `z_0`-insertion variants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityFamily {
    /// Ordered nonzero base sequence of length `M - 1`; the family key.
    pub base: Vec<usize>,
    /// Split role.
    pub side: FamilySide,
    /// Kept insertion variants (each one element longer than the base and
    /// containing exactly one `0`), ordered by insertion position.
    pub variants: Vec<Vec<usize>>,
}

impl IdentityFamily {
    /// The variant obtained by inserting `0` at `pos` (0-based, `0..=len`).
    pub fn insertion(base: &[usize], pos: usize) -> Vec<usize> {
        let mut v = Vec::with_capacity(base.len() + 1);
        v.extend_from_slice(&base[..pos]);
        v.push(0);
        v.extend_from_slice(&base[pos..]);
        v
    }
}

/// Number of distinct arrangements of a multiset: `len! / Π count_i!`.
pub fn count_arrangements(sorted_multiset: &[usize]) -> usize {
    let mut result: usize = 1;
    let mut seen = 0usize;
    let mut run = 0usize;
    let mut prev = usize::MAX;
    for &x in sorted_multiset {
        seen += 1;
        if x == prev {
            run += 1;
        } else {
            run = 1;
            prev = x;
        }
        // Incremental multinomial: the running product stays integral because
        // each step equals the previous value times a binomial coefficient.
        result = result * seen / run;
    }
    result
}

/// Enumerates every distinct permutation of a sorted multiset in
/// lexicographic order (classic next-permutation sweep).
pub fn distinct_permutations(sorted_multiset: &[usize]) -> Vec<Vec<usize>> {
    let mut cur = sorted_multiset.to_vec();
    let mut out = vec![cur.clone()];
    while let Some(i) = (0..cur.len().saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) {
        let j = (i + 1..cur.len()).rev().find(|&j| cur[j] > cur[i]).unwrap();
        cur.swap(i, j);
        cur[i + 1..].reverse();
        out.push(cur.clone());
    }
    out
}

/// Draws `how_many` distinct arrangements of `multiset` (the caller must not
/// request more than the arrangement count). Enumeration + shuffle below
/// [`ENUMERATION_CAP`]; seeded rejection sampling above it.
fn sample_distinct_perms(
    multiset: &[usize],
    how_many: usize,
    rng: &mut ChaCha12Rng,
) -> Vec<Vec<usize>> {
    let total = count_arrangements(multiset);
    debug_assert!(how_many <= total, "caller must clamp to arrangement count");
    if total <= ENUMERATION_CAP {
        let mut all = distinct_permutations(multiset);
        all.shuffle(rng);
        all.truncate(how_many);
        all
    } else {
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(how_many);
        let mut scratch = multiset.to_vec();
        while out.len() < how_many {
            scratch.shuffle(rng);
            if seen.insert(scratch.clone()) {
                out.push(scratch.clone());
            }
        }
        out
    }
}

/// Draws a fresh non-constant multiset of `m` nonzero indices modulo `n`,
/// distinct from everything in `used`. Sampling sorts an ordered draw, so
/// families arrive weighted by their arrangement count.
fn sample_multiset(
    n: usize,
    m: usize,
    used: &BTreeSet<Vec<usize>>,
    rng: &mut ChaCha12Rng,
) -> Option<Vec<usize>> {
    for _ in 0..SAMPLE_ATTEMPTS {
        let mut draw: Vec<usize> = (0..m).map(|_| rng.random_range(1..n)).collect();
        draw.sort_unstable();
        if draw.iter().all(|&x| x == draw[0]) {
            continue; // constant multisets have a single arrangement
        }
        if !used.contains(&draw) {
            return Some(draw);
        }
    }
    None
}

/// Draws a fresh ordered zero-free base of length `len`, distinct from
/// everything in `used`.
fn sample_base(
    n: usize,
    len: usize,
    used: &BTreeSet<Vec<usize>>,
    rng: &mut ChaCha12Rng,
) -> Option<Vec<usize>> {
    for _ in 0..SAMPLE_ATTEMPTS {
        let draw: Vec<usize> = (0..len).map(|_| rng.random_range(1..n)).collect();
        if !used.contains(&draw) {
            return Some(draw);
        }
    }
    None
}

fn check_comm_params(n: usize, m: usize) -> Result<(), DatagenError> {
    if n < 2 || m < 2 {
        return Err(DatagenError::Config(format!(
            "commutativity families need n >= 2 and chain length >= 2 (got n={n}, m={m})"
        )));
    }
    if n == 2 {
        // The nonzero alphabet is {1}: every multiset is constant.
        return Err(DatagenError::Capacity {
            category: "commutativity families",
            detail: "n = 2 leaves a single nonzero element, so every multiset is constant"
                .into(),
        });
    }
    Ok(())
}

/// Builds `count_train_rich` + `count_test_held` commutativity families.
///
/// Each train-rich family carries `min(perms_per_family, arrangements)`
/// train arrangements (always ≥ 2) and no test arrangements; each test-held
/// family carries exactly one train arrangement and
/// `min(perms_per_family - 1, arrangements - 1)` (always ≥ 1) test
/// arrangements. Family multisets are pairwise distinct.
pub fn build_commutativity_families(
    n: usize,
    m: usize,
    count_train_rich: usize,
    count_test_held: usize,
    perms_per_family: usize,
    rng_seed: u64,
) -> Result<Vec<MultisetFamily>, DatagenError> {
    check_comm_params(n, m)?;
    if perms_per_family < 2 {
        return Err(DatagenError::Config(
            "perms_per_family must be at least 2".into(),
        ));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(rng_seed);
    let mut used: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut families = Vec::with_capacity(count_train_rich + count_test_held);
    for i in 0..count_train_rich + count_test_held {
        let class = if i < count_train_rich {
            FamilyClass::TrainRich
        } else {
            FamilyClass::TestHeld
        };
        let multiset = sample_multiset(n, m, &used, &mut rng).ok_or(DatagenError::Capacity {
            category: "commutativity families",
            detail: format!("multiset space exhausted after {} families", families.len()),
        })?;
        let avail = count_arrangements(&multiset);
        let fam = match class {
            FamilyClass::TrainRich => MultisetFamily {
                train_perms: sample_distinct_perms(
                    &multiset,
                    perms_per_family.min(avail),
                    &mut rng,
                ),
                test_perms: Vec::new(),
                class,
                multiset: multiset.clone(),
            },
            FamilyClass::TestHeld => {
                let mut perms = sample_distinct_perms(
                    &multiset,
                    perms_per_family.min(avail),
                    &mut rng,
                );
                let train_perm = perms.remove(0);
                MultisetFamily {
                    train_perms: vec![train_perm],
                    test_perms: perms,
                    class,
                    multiset: multiset.clone(),
                }
            }
        };
        used.insert(multiset);
        families.push(fam);
    }
    Ok(families)
}

/// Builds `count_train_side` + `count_test_side` full identity families.
///
/// Every family consists of a zero-free ordered base of length `m - 1` plus
/// all `m` insertion variants; the side determines which split the variants
/// land in (the base equation always trains).
pub fn build_identity_families(
    n: usize,
    m: usize,
    count_train_side: usize,
    count_test_side: usize,
    rng_seed: u64,
) -> Result<Vec<IdentityFamily>, DatagenError> {
    if n < 2 || m < 2 {
        return Err(DatagenError::Config(format!(
            "identity families need n >= 2 and chain length >= 2 (got n={n}, m={m})"
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(rng_seed);
    let mut used: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut families = Vec::with_capacity(count_train_side + count_test_side);
    for i in 0..count_train_side + count_test_side {
        let side = if i < count_train_side {
            FamilySide::TrainSide
        } else {
            FamilySide::TestSide
        };
        let base = sample_base(n, m - 1, &used, &mut rng).ok_or(DatagenError::Capacity {
            category: "identity families",
            detail: format!("base space exhausted after {} families", families.len()),
        })?;
        let variants = (0..m)
            .map(|pos| IdentityFamily::insertion(&base, pos))
            .collect();
        used.insert(base.clone());
        families.push(IdentityFamily {
            base,
            side,
            variants,
        });
    }
    Ok(families)
}

/// Fills exactly `train_rows` train and `test_rows` test commutativity
/// arrangements with valid families, trimming the last family of each phase.
pub(crate) fn fill_commutativity_rows(
    n: usize,
    m: usize,
    train_rows: usize,
    test_rows: usize,
    perms_per_family: usize,
    rng_seed: u64,
) -> Result<Vec<MultisetFamily>, DatagenError> {
    check_comm_params(n, m)?;
    if perms_per_family < 2 {
        return Err(DatagenError::Config(
            "perms_per_family must be at least 2".into(),
        ));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(rng_seed);
    let mut used: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut families: Vec<MultisetFamily> = Vec::new();

    // How many test arrangements each held family should carry: at least
    // perms_per_family - 1, more when the train budget is too small to host
    // one held family per needed test chunk.
    let per_held = (perms_per_family - 1).max(test_rows.div_ceil(train_rows.max(1)));

    // Phase 1: held families until the test quota is filled.
    let mut test_filled = 0usize;
    while test_filled < test_rows {
        if families.len() >= train_rows {
            return Err(DatagenError::Capacity {
                category: "commutativity families",
                detail: format!(
                    "test quota {test_rows} needs more held families than the \
                     train quota {train_rows} can host"
                ),
            });
        }
        let multiset = sample_multiset(n, m, &used, &mut rng).ok_or(DatagenError::Capacity {
            category: "commutativity families",
            detail: format!(
                "multiset space exhausted after {} families; \
                 raise perms_per_family or lower the split sizes",
                families.len()
            ),
        })?;
        let avail = count_arrangements(&multiset) - 1;
        let want = per_held.min(test_rows - test_filled).min(avail);
        debug_assert!(want >= 1);
        let mut perms = sample_distinct_perms(&multiset, want + 1, &mut rng);
        let train_perm = perms.remove(0);
        test_filled += perms.len();
        used.insert(multiset.clone());
        families.push(MultisetFamily {
            multiset,
            class: FamilyClass::TestHeld,
            train_perms: vec![train_perm],
            test_perms: perms,
        });
    }

    // Phase 2: rich families for the remaining train quota.
    let mut train_remaining = train_rows - families.len();
    while train_remaining >= 2 {
        let multiset = sample_multiset(n, m, &used, &mut rng).ok_or(DatagenError::Capacity {
            category: "commutativity families",
            detail: format!(
                "multiset space exhausted after {} families; \
                 raise perms_per_family or lower the split sizes",
                families.len()
            ),
        })?;
        let avail = count_arrangements(&multiset);
        let mut want = perms_per_family.min(train_remaining).min(avail);
        // Never leave exactly one train slot: a rich family needs >= 2.
        if train_remaining - want == 1 && want >= 3 {
            want -= 1;
        }
        let perms = sample_distinct_perms(&multiset, want, &mut rng);
        train_remaining -= perms.len();
        used.insert(multiset.clone());
        families.push(MultisetFamily {
            multiset,
            class: FamilyClass::TrainRich,
            train_perms: perms,
            test_perms: Vec::new(),
        });
    }

    // Endgame: one leftover train slot. Grow an existing rich family by one
    // unused arrangement (keeps every invariant and every test count intact).
    if train_remaining == 1 {
        let mut placed = false;
        for fam in families
            .iter_mut()
            .filter(|f| f.class == FamilyClass::TrainRich)
        {
            let total = count_arrangements(&fam.multiset);
            if fam.train_perms.len() >= total {
                continue;
            }
            let taken: BTreeSet<&Vec<usize>> = fam.train_perms.iter().collect();
            let extra = if total <= ENUMERATION_CAP {
                distinct_permutations(&fam.multiset)
                    .into_iter()
                    .find(|p| !taken.contains(p))
            } else {
                let mut scratch = fam.multiset.clone();
                let mut found = None;
                for _ in 0..SAMPLE_ATTEMPTS {
                    scratch.shuffle(&mut rng);
                    if !taken.contains(&scratch) {
                        found = Some(scratch);
                        break;
                    }
                }
                found
            };
            if let Some(extra) = extra {
                fam.train_perms.push(extra);
                placed = true;
                break;
            }
        }
        if !placed {
            // Fall back: a new held family absorbing one test arrangement
            // donated by an existing held family that keeps >= 1.
            let donor = families
                .iter_mut()
                .find(|f| f.class == FamilyClass::TestHeld && f.test_perms.len() >= 2);
            match donor {
                Some(f) => {
                    f.test_perms.pop();
                    let multiset =
                        sample_multiset(n, m, &used, &mut rng).ok_or(DatagenError::Capacity {
                            category: "commutativity families",
                            detail: "multiset space exhausted during rebalancing".into(),
                        })?;
                    let mut perms = sample_distinct_perms(&multiset, 2, &mut rng);
                    let train_perm = perms.remove(0);
                    used.insert(multiset.clone());
                    families.push(MultisetFamily {
                        multiset,
                        class: FamilyClass::TestHeld,
                        train_perms: vec![train_perm],
                        test_perms: perms,
                    });
                }
                None => {
                    return Err(DatagenError::Capacity {
                        category: "commutativity families",
                        detail: format!(
                            "cannot place a single leftover train arrangement \
                             (train quota {train_rows}, test quota {test_rows})"
                        ),
                    });
                }
            }
        }
    }

    debug_assert_eq!(
        families.iter().map(|f| f.train_perms.len()).sum::<usize>(),
        train_rows
    );
    debug_assert_eq!(
        families.iter().map(|f| f.test_perms.len()).sum::<usize>(),
        test_rows
    );
    Ok(families)
}

/// Fills exactly `train_rows` train and `test_rows` test identity rows
/// (bases count as train rows) with valid families, trimming the last family
/// of each phase.
pub(crate) fn fill_identity_rows(
    n: usize,
    m: usize,
    train_rows: usize,
    test_rows: usize,
    rng_seed: u64,
) -> Result<Vec<IdentityFamily>, DatagenError> {
    if n < 2 || m < 2 {
        return Err(DatagenError::Config(format!(
            "identity families need n >= 2 and chain length >= 2 (got n={n}, m={m})"
        )));
    }
    let base_len = m - 1;
    let mut rng = ChaCha12Rng::seed_from_u64(rng_seed);
    let mut used: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut families: Vec<IdentityFamily> = Vec::new();

    // Phase 1: test-side families until the test quota is filled. Each holds
    // one train row (the base) and up to m insertion variants in test.
    let mut test_filled = 0usize;
    while test_filled < test_rows {
        if families.len() >= train_rows {
            return Err(DatagenError::Capacity {
                category: "identity families",
                detail: format!(
                    "test quota {test_rows} needs more test-side bases than the \
                     train quota {train_rows} can host"
                ),
            });
        }
        let base = sample_base(n, base_len, &used, &mut rng).ok_or(DatagenError::Capacity {
            category: "identity families",
            detail: format!("base space exhausted after {} families", families.len()),
        })?;
        let want = m.min(test_rows - test_filled);
        let variants: Vec<Vec<usize>> = (0..want)
            .map(|pos| IdentityFamily::insertion(&base, pos))
            .collect();
        test_filled += variants.len();
        used.insert(base.clone());
        families.push(IdentityFamily {
            base,
            side: FamilySide::TestSide,
            variants,
        });
    }

    // Phase 2: train-side families for the remaining train quota. Each full
    // family contributes 1 (base) + m (insertions) rows.
    let mut train_remaining = train_rows - families.len();
    while train_remaining > 0 {
        let base = sample_base(n, base_len, &used, &mut rng).ok_or(DatagenError::Capacity {
            category: "identity families",
            detail: format!("base space exhausted after {} families", families.len()),
        })?;
        let rows = (m + 1).min(train_remaining);
        let variants: Vec<Vec<usize>> = (0..rows - 1)
            .map(|pos| IdentityFamily::insertion(&base, pos))
            .collect();
        train_remaining -= rows;
        used.insert(base.clone());
        families.push(IdentityFamily {
            base,
            side: FamilySide::TrainSide,
            variants,
        });
    }

    let train_total: usize = families
        .iter()
        .map(|f| match f.side {
            FamilySide::TrainSide => 1 + f.variants.len(),
            FamilySide::TestSide => 1,
        })
        .sum();
    let test_total: usize = families
        .iter()
        .filter(|f| f.side == FamilySide::TestSide)
        .map(|f| f.variants.len())
        .sum();
    debug_assert_eq!(train_total, train_rows);
    debug_assert_eq!(test_total, test_rows);
    Ok(families)
}
