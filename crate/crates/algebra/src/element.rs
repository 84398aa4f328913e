//! Core value types: group elements, operator kinds, and label tokens.

use crate::AlgebraError;
use std::fmt;

/// One element `z_index` of the cyclic group `Z_modulus`.
///
/// The constructor enforces the invariants `0 ≤ index < modulus` and
/// `modulus ≥ 2`; the fields stay private so no invalid element can exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement {
    modulus: usize,
    index: usize,
}

impl GroupElement {
    /// Builds `z_index` in `Z_modulus`, validating both invariants.
    pub fn new(index: usize, modulus: usize) -> Result<Self, AlgebraError> {
        if modulus < 2 || index >= modulus {
            return Err(AlgebraError::InvalidElement { index, modulus });
        }
        Ok(Self { modulus, index })
    }

    /// The element's index `i` of `z_i`.
    pub fn index(&self) -> usize {
        self.index
    }

    /// The group order `n` of `Z_n`.
    pub fn modulus(&self) -> usize {
        self.modulus
    }

    /// True for the additive identity `z_0`.
    pub fn is_identity(&self) -> bool {
        self.index == 0
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "z{}", self.index)
    }
}

/// The five sequence operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OperatorKind {
    /// Modular addition `+`.
    Plus,
    /// Relabeled commutative operator `⊕` (dataset token `op`).
    Oplus,
    /// Cyclic-walk counter `⊖` (dataset token `om`).
    Ominus,
    /// Left projection `◁` (dataset token `lt`).
    Left,
    /// Right projection `▷` (dataset token `rt`).
    Right,
}

impl OperatorKind {
    /// All operators in a stable order.
    pub const ALL: [OperatorKind; 5] = [
        OperatorKind::Plus,
        OperatorKind::Oplus,
        OperatorKind::Ominus,
        OperatorKind::Left,
        OperatorKind::Right,
    ];

    /// The single-token dataset spelling of the operator.
    pub fn token(&self) -> &'static str {
        match self {
            OperatorKind::Plus => "+",
            OperatorKind::Oplus => "op",
            OperatorKind::Ominus => "om",
            OperatorKind::Left => "lt",
            OperatorKind::Right => "rt",
        }
    }

    /// Inverse of [`token`](Self::token).
    pub fn from_token(token: &str) -> Option<Self> {
        match token {
            "+" => Some(OperatorKind::Plus),
            "op" => Some(OperatorKind::Oplus),
            "om" => Some(OperatorKind::Ominus),
            "lt" => Some(OperatorKind::Left),
            "rt" => Some(OperatorKind::Right),
            _ => None,
        }
    }

    /// `+` and `⊕` are commutative; `⊖`, `◁`, `▷` are not.
    pub fn is_commutative(&self) -> bool {
        matches!(self, OperatorKind::Plus | OperatorKind::Oplus)
    }

    /// `+` and `⊕` treat `z_0` as a neutral element; the others do not.
    pub fn is_identity_preserving(&self) -> bool {
        matches!(self, OperatorKind::Plus | OperatorKind::Oplus)
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// The natural-number output of a `⊖` chain: how many times the walk passed
/// through `z_0`. For an M-term chain the count lies in `[0, M]` (each of the
/// M−1 hops contributes at most 1, and self-hops contribute exactly 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CountValue(pub usize);

impl CountValue {
    /// The raw count.
    pub fn count(&self) -> usize {
        self.0
    }
}

impl fmt::Display for CountValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

/// The opaque answer symbol `r_i` produced by `⊕`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ResultToken(pub usize);

impl ResultToken {
    /// The symbol index `i` of `r_i`.
    pub fn index(&self) -> usize {
        self.0
    }
}

impl fmt::Display for ResultToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

/// The right-hand side of an equation: a group element for `+`/`◁`/`▷`, an
/// `r`-token for `⊕`, or a count token for `⊖`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LabelToken {
    /// `z_i` answer.
    Element(GroupElement),
    /// `r_i` answer.
    Result(ResultToken),
    /// `c_k` answer.
    Count(CountValue),
}

impl fmt::Display for LabelToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelToken::Element(e) => e.fmt(f),
            LabelToken::Result(r) => r.fmt(f),
            LabelToken::Count(c) => c.fmt(f),
        }
    }
}
