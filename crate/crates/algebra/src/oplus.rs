//! The canonical `⊕` map: a deterministic, seeded assignment from canonical
//! (sorted, `z_0`-stripped) operand multisets to answer symbols `r_i`.
//!
//! The source operator is "a randomly selected element"; we realize the
//! selection as a keyed PRF so that a map value depends only on
//! `(seed, n, multiset)` — never on insertion order — which makes dataset
//! generation reproducible and map digests stable. Collisions across
//! multisets are allowed.

use crate::element::{GroupElement, ResultToken};
use crate::AlgebraError;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;

const PRF_TAG: &[u8] = b"cayley.oplus.v1";

/// Seeded map from canonical multisets to `r`-token indices, built once per
/// dataset. Lookup keys are the sorted indices of the non-`z_0` operands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalMap {
    n: usize,
    m: usize,
    seed: u64,
    entries: BTreeMap<Vec<usize>, usize>,
}

impl CanonicalMap {
    /// Creates an empty map for datasets over `Z_n` with sequence length `m`.
    pub fn new(n: usize, m: usize, seed: u64) -> Self {
        Self {
            n,
            m,
            seed,
            entries: BTreeMap::new(),
        }
    }

    /// Group order this map was built for.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Sequence length this map was built for.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Seed the PRF values are derived from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of multisets in the map's domain.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// True when no multiset has been registered.
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The canonical key of an operand list: indices of all non-`z_0`
    /// operands, sorted ascending.
    pub fn canonical_key(operands: &[GroupElement]) -> Vec<usize> {
        let mut key: Vec<usize> = operands
            .iter()
            .filter(|e| !e.is_identity())
            .map(|e| e.index())
            .collect();
        key.sort_unstable();
        key
    }

    /// The PRF behind the map: `r`-index for `(seed, n, canonical key)`.
    ///
    /// Exposed so tests can pin regression constants independently of which
    /// multisets a particular dataset registered.
    pub fn value_for(seed: u64, n: usize, key: &[usize]) -> usize {
        let mut hasher = Sha256::new();
        hasher.update(PRF_TAG);
        hasher.update(seed.to_le_bytes());
        hasher.update((n as u64).to_le_bytes());
        hasher.update((key.len() as u64).to_le_bytes());
        for &idx in key {
            hasher.update((idx as u64).to_le_bytes());
        }
        let digest = hasher.finalize();
        let raw = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
        (raw % (n as u64)) as usize
    }

    /// Registers the canonical multiset of `operands` (idempotent) and
    /// returns its `r`-index.
    pub fn insert_operands(&mut self, operands: &[GroupElement]) -> Result<usize, AlgebraError> {
        for e in operands {
            if e.modulus() != self.n {
                return Err(AlgebraError::ModulusMismatch {
                    left: self.n,
                    right: e.modulus(),
                });
            }
        }
        let key = Self::canonical_key(operands);
        let value = Self::value_for(self.seed, self.n, &key);
        self.entries.insert(key, value);
        Ok(value)
    }

    /// Looks up a canonical key without registering it.
    pub fn lookup(&self, key: &[usize]) -> Option<usize> {
        self.entries.get(key).copied()
    }

    /// Evaluates `⊕` over `operands`: the map entry of the sorted,
    /// `z_0`-stripped multiset. Invariant under permutation and `z_0`
    /// insertion by construction.
    ///
    /// Errors with [`AlgebraError::UnmappedMultiset`] when the multiset was
    /// never registered, and with a modulus mismatch when the operands do not
    /// live in this map's `Z_n`.
    pub fn oplus_eval(&self, operands: &[GroupElement]) -> Result<ResultToken, AlgebraError> {
        for e in operands {
            if e.modulus() != self.n {
                return Err(AlgebraError::ModulusMismatch {
                    left: self.n,
                    right: e.modulus(),
                });
            }
        }
        let key = Self::canonical_key(operands);
        match self.lookup(&key) {
            Some(value) => Ok(ResultToken(value)),
            None => Err(AlgebraError::UnmappedMultiset { key }),
        }
    }

    /// Hex SHA-256 digest over `(n, m, seed)` and all entries, for manifests.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(b"cayley.oplus.digest.v1");
        hasher.update((self.n as u64).to_le_bytes());
        hasher.update((self.m as u64).to_le_bytes());
        hasher.update(self.seed.to_le_bytes());
        for (key, value) in &self.entries {
            hasher.update((key.len() as u64).to_le_bytes());
            for &idx in key {
                hasher.update((idx as u64).to_le_bytes());
            }
            hasher.update((*value as u64).to_le_bytes());
        }
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Evaluates `⊕` over `operands` with `map` (free-function form mirroring the
/// other operator evaluators).
pub fn oplus_eval(
    operands: &[GroupElement],
    map: &CanonicalMap,
) -> Result<ResultToken, AlgebraError> {
    map.oplus_eval(operands)
}
