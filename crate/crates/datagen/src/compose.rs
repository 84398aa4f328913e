//! Full dataset assembly: seven categories, exact counts, shared operand pool.

use std::collections::BTreeMap;

use cayley_algebra::{
    label_for, stream::substream, CanonicalMap, GroupElement, OperatorKind,
};
use serde::{Deserialize, Serialize};

use crate::equation::{Equation, Split, TaskTag};
use crate::families::{fill_commutativity_rows, fill_identity_rows, FamilySide};
use crate::DatagenError;

/// Default number of arrangements sampled per commutativity family.
pub const DEFAULT_PERMS_PER_FAMILY: usize = 10;

/// Seeds are 64-bit and TOML integers are signed, so manifests store them as
/// fixed-width hex strings.
mod hex_u64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{v:016x}"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        let text = String::deserialize(d)?;
        u64::from_str_radix(&text, 16).map_err(serde::de::Error::custom)
    }
}

/// Per-category train/test row counts recorded in the manifest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryCount {
    /// Rows of this category in the training split.
    pub train: usize,
    /// Rows of this category in the test split.
    pub test: usize,
}

/// Reproducibility record accompanying every dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    /// Group modulus.
    pub n: usize,
    /// Chain length (number of operands in commutativity rows).
    pub m: usize,
    /// Per-category train count K.
    pub k_train: usize,
    /// Per-category test count K.
    pub k_test: usize,
    /// Root seed the generation streams were derived from.
    #[serde(with = "hex_u64")]
    pub seed: u64,
    /// Derived stream seed for commutativity-family sampling.
    #[serde(with = "hex_u64")]
    pub comm_seed: u64,
    /// Derived stream seed for identity-family sampling.
    #[serde(with = "hex_u64")]
    pub ide_seed: u64,
    /// Derived stream seed for the structured-lookup (`op`) output map.
    #[serde(with = "hex_u64")]
    pub oplus_seed: u64,
    /// Arrangements sampled per commutativity family.
    pub perms_per_family: usize,
    /// Digest of the structured-lookup map over the realized corpus.
    pub oplus_digest: String,
    /// Exact per-category row counts, keyed by category name.
    pub category_counts: BTreeMap<String, CategoryCount>,
}

/// A complete seven-category dataset plus its manifest.
///
/// Both splits are grouped by category in [`TaskTag::ALL`] order, families in
/// construction order within each category; [`crate::serialize`] preserves
/// this ordering, so round-trips are exact.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    /// Training rows with their category tags.
    pub train: Vec<(Equation, TaskTag)>,
    /// Test rows with their category tags.
    pub test: Vec<(Equation, TaskTag)>,
    /// Reproducibility record.
    pub manifest: Manifest,
}

impl DatasetBundle {
    /// The rows of one split.
    pub fn split(&self, split: Split) -> &[(Equation, TaskTag)] {
        match split {
            Split::Train => &self.train,
            Split::Test => &self.test,
        }
    }

    /// Iterates one category of one split.
    pub fn category(&self, split: Split, tag: TaskTag) -> impl Iterator<Item = &Equation> {
        self.split(split)
            .iter()
            .filter(move |(_, t)| *t == tag)
            .map(|(eq, _)| eq)
    }

    /// Rebuilds the structured-lookup map from the manifest seed and the
    /// realized `op` rows. The result reproduces every `op` label in the
    /// bundle and must match the manifest digest.
    pub fn rebuild_oplus_map(&self) -> Result<CanonicalMap, DatagenError> {
        let mut map = CanonicalMap::new(self.manifest.n, self.manifest.m, self.manifest.oplus_seed);
        for (eq, _) in self.train.iter().chain(self.test.iter()) {
            if eq.op == OperatorKind::Oplus {
                map.insert_operands(&eq.operands)?;
            }
        }
        Ok(map)
    }
}

/// Relabels a shared operand pool under the three noncommutative operators.
///
/// `family_pool` must be the operand-sequence pool produced by the family
/// builders (commutativity arrangements followed by identity rows); sequences
/// are reused verbatim — only labels are recomputed — so `count` must equal
/// the pool size. Returns the equations for `om`, `lt`, `rt` in that order.
///
/// `_rng_seed` is reserved: verbatim reuse requires no randomness, but the
/// signature keeps a seed slot so subsampled pools stay reproducible.
pub fn build_noncommutative_pool(
    n: usize,
    m: usize,
    count: usize,
    _rng_seed: u64,
    family_pool: &[Vec<GroupElement>],
) -> Result<BTreeMap<OperatorKind, Vec<Equation>>, DatagenError> {
    if count > family_pool.len() {
        return Err(DatagenError::Capacity {
            category: "noncommutative pool",
            detail: format!(
                "requested {count} rows per operator but the shared pool holds {}",
                family_pool.len()
            ),
        });
    }
    for seq in family_pool {
        if seq.len() < 2 {
            return Err(DatagenError::Config(format!(
                "noncommutative operators need at least two operands per row \
                 (got a row of length {}); use chain length >= 3",
                seq.len()
            )));
        }
        if seq.len() > m + 1 {
            return Err(DatagenError::Config(format!(
                "pool row of length {} exceeds the maximum m + 1 = {}",
                seq.len(),
                m + 1
            )));
        }
        for el in seq {
            if el.modulus() != n {
                return Err(DatagenError::Config(format!(
                    "pool row mixes moduli: expected {n}, found {}",
                    el.modulus()
                )));
            }
        }
    }
    let mut out = BTreeMap::new();
    for op in [OperatorKind::Ominus, OperatorKind::Left, OperatorKind::Right] {
        let mut eqs = Vec::with_capacity(count);
        for seq in &family_pool[..count] {
            eqs.push(Equation {
                op,
                operands: seq.clone(),
                label: label_for(op, seq, None)?,
            });
        }
        out.insert(op, eqs);
    }
    Ok(out)
}

fn elements(indices: &[usize], n: usize) -> Result<Vec<GroupElement>, DatagenError> {
    indices
        .iter()
        .map(|&i| GroupElement::new(i, n).map_err(DatagenError::from))
        .collect()
}

/// Composes the complete seven-category bundle with exact per-category
/// counts: `k_train`/`k_test` rows each for the four structured categories,
/// `2·k_train`/`2·k_test` for the three pooled noncommutative categories.
///
/// All randomness derives from `seed` via named substreams, so equal inputs
/// yield byte-identical bundles.
pub fn compose_dataset(
    n: usize,
    m: usize,
    k_train: usize,
    k_test: usize,
    perms_per_family: usize,
    seed: u64,
) -> Result<DatasetBundle, DatagenError> {
    if n < 3 {
        return Err(DatagenError::Config(format!(
            "dataset composition needs modulus n >= 3 (got {n})"
        )));
    }
    if m < 3 {
        return Err(DatagenError::Config(format!(
            "dataset composition needs chain length m >= 3 so that identity \
             bases keep at least two operands (got {m})"
        )));
    }
    if k_train == 0 || k_test == 0 {
        return Err(DatagenError::Config(
            "k_train and k_test must both be at least 1".into(),
        ));
    }

    let comm_seed = substream(seed, "datagen.comm");
    let ide_seed = substream(seed, "datagen.ide");
    let oplus_seed = substream(seed, "datagen.oplus");

    let comm = fill_commutativity_rows(n, m, k_train, k_test, perms_per_family, comm_seed)?;
    let ide = fill_identity_rows(n, m, k_train, k_test, ide_seed)?;

    // Operand pools per split, in family order: commutativity arrangements
    // first, then identity rows (base before variants).
    let mut pool_train: Vec<Vec<GroupElement>> = Vec::with_capacity(2 * k_train);
    let mut pool_test: Vec<Vec<GroupElement>> = Vec::with_capacity(2 * k_test);
    for fam in &comm {
        for perm in &fam.train_perms {
            pool_train.push(elements(perm, n)?);
        }
        for perm in &fam.test_perms {
            pool_test.push(elements(perm, n)?);
        }
    }
    let comm_train_rows = pool_train.len();
    let comm_test_rows = pool_test.len();
    for fam in &ide {
        pool_train.push(elements(&fam.base, n)?);
        match fam.side {
            FamilySide::TrainSide => {
                for v in &fam.variants {
                    pool_train.push(elements(v, n)?);
                }
            }
            FamilySide::TestSide => {
                for v in &fam.variants {
                    pool_test.push(elements(v, n)?);
                }
            }
        }
    }
    debug_assert_eq!(pool_train.len(), 2 * k_train);
    debug_assert_eq!(pool_test.len(), 2 * k_test);

    // Structured-lookup map over every multiset realized in the pool.
    let mut oplus_map = CanonicalMap::new(n, m, oplus_seed);
    for seq in pool_train.iter().chain(pool_test.iter()) {
        oplus_map.insert_operands(seq)?;
    }

    let mut train: Vec<(Equation, TaskTag)> = Vec::with_capacity(10 * k_train);
    let mut test: Vec<(Equation, TaskTag)> = Vec::with_capacity(10 * k_test);
    let mut counts: BTreeMap<String, CategoryCount> = BTreeMap::new();

    // The four structured categories reuse the split pools: the first
    // `comm_*_rows` pool rows are the commutativity arrangements, the rest
    // are the identity rows.
    for tag in [TaskTag::PlusComm, TaskTag::PlusIde, TaskTag::OplusComm, TaskTag::OplusIde] {
        let op = tag.operator();
        let map = if op == OperatorKind::Oplus { Some(&oplus_map) } else { None };
        let (train_rows, test_rows): (&[Vec<GroupElement>], &[Vec<GroupElement>]) = match tag {
            TaskTag::PlusComm | TaskTag::OplusComm => {
                (&pool_train[..comm_train_rows], &pool_test[..comm_test_rows])
            }
            _ => (&pool_train[comm_train_rows..], &pool_test[comm_test_rows..]),
        };
        for seq in train_rows {
            train.push((
                Equation { op, operands: seq.clone(), label: label_for(op, seq, map)? },
                tag,
            ));
        }
        for seq in test_rows {
            test.push((
                Equation { op, operands: seq.clone(), label: label_for(op, seq, map)? },
                tag,
            ));
        }
        counts.insert(
            tag.name().to_string(),
            CategoryCount { train: train_rows.len(), test: test_rows.len() },
        );
    }

    // The three pooled categories relabel the full pool verbatim.
    let nc_train = build_noncommutative_pool(n, m, pool_train.len(), seed, &pool_train)?;
    let nc_test = build_noncommutative_pool(n, m, pool_test.len(), seed, &pool_test)?;
    for (tag, op) in [
        (TaskTag::Ominus, OperatorKind::Ominus),
        (TaskTag::Left, OperatorKind::Left),
        (TaskTag::Right, OperatorKind::Right),
    ] {
        for eq in &nc_train[&op] {
            train.push((eq.clone(), tag));
        }
        for eq in &nc_test[&op] {
            test.push((eq.clone(), tag));
        }
        counts.insert(
            tag.name().to_string(),
            CategoryCount { train: nc_train[&op].len(), test: nc_test[&op].len() },
        );
    }

    debug_assert_eq!(train.len(), 10 * k_train);
    debug_assert_eq!(test.len(), 10 * k_test);

    let manifest = Manifest {
        n,
        m,
        k_train,
        k_test,
        seed,
        comm_seed,
        ide_seed,
        oplus_seed,
        perms_per_family,
        oplus_digest: oplus_map.digest(),
        category_counts: counts,
    };
    Ok(DatasetBundle { train, test, manifest })
}
