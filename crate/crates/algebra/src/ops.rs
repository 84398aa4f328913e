//! The five operator evaluators and the combined label oracle.

use crate::element::{CountValue, GroupElement, LabelToken, OperatorKind};
use crate::oplus::CanonicalMap;
use crate::AlgebraError;

/// Checks that every operand shares one modulus and returns it.
fn common_modulus(operands: &[GroupElement]) -> Result<usize, AlgebraError> {
    let first = operands.first().ok_or(AlgebraError::EmptyOperandList)?;
    let n = first.modulus();
    for e in &operands[1..] {
        if e.modulus() != n {
            return Err(AlgebraError::ModulusMismatch {
                left: n,
                right: e.modulus(),
            });
        }
    }
    Ok(n)
}

/// Modular sum of a chain: `z_{(Σ indices) mod n}`.
///
/// Errors on an empty list or mixed moduli.
pub fn mod_add_chain(operands: &[GroupElement]) -> Result<GroupElement, AlgebraError> {
    let n = common_modulus(operands)?;
    let sum = operands.iter().fold(0usize, |acc, e| (acc + e.index()) % n);
    GroupElement::new(sum, n)
}

/// `a ⊖ b`: the number of times `z_0` is encountered while walking the cycle
/// `a → a+1 → … → b` (the step sequence `(a+1, a+2, …, b) mod n`).
///
/// When `a == b` the walk is the full n-step cycle, so the count is exactly 1.
pub fn ominus_pair(a: GroupElement, b: GroupElement) -> Result<CountValue, AlgebraError> {
    if a.modulus() != b.modulus() {
        return Err(AlgebraError::ModulusMismatch {
            left: a.modulus(),
            right: b.modulus(),
        });
    }
    let n = a.modulus();
    // Number of steps taken: (b − a) mod n, promoted to a full cycle when 0.
    let steps = {
        let s = (b.index() + n - a.index()) % n;
        if s == 0 {
            n
        } else {
            s
        }
    };
    // The walk visits positions a+1 … a+steps (mod n). Position 0 is visited
    // at step k iff k ≡ −a (mod n); within 1..=n that is k0 = n − a (and n
    // itself when a == 0). Each residue appears at most once in a window of
    // length ≤ n, so the count is 0 or 1.
    let k0 = n - a.index(); // in 1..=n
    let count = usize::from(k0 <= steps);
    Ok(CountValue(count))
}

/// `⊖` over a chain of at least two operands: the sum of [`ominus_pair`]
/// over consecutive pairs.
pub fn ominus_chain(operands: &[GroupElement]) -> Result<CountValue, AlgebraError> {
    if operands.len() < 2 {
        return Err(AlgebraError::ChainTooShort {
            len: operands.len(),
        });
    }
    common_modulus(operands)?;
    let mut total = 0usize;
    for pair in operands.windows(2) {
        total += ominus_pair(pair[0], pair[1])?.count();
    }
    Ok(CountValue(total))
}

/// `◁` chain: returns the first operand (associativity makes the chain
/// well-defined).
pub fn left_fold(operands: &[GroupElement]) -> Result<GroupElement, AlgebraError> {
    common_modulus(operands)?;
    Ok(operands[0])
}

/// `▷` chain: returns the last operand.
pub fn right_fold(operands: &[GroupElement]) -> Result<GroupElement, AlgebraError> {
    common_modulus(operands)?;
    Ok(*operands.last().expect("non-empty checked by common_modulus"))
}

/// The combined label oracle: evaluates `op` over `operands`.
///
/// `⊕` requires the canonical map the dataset was built with; every other
/// operator ignores `map`.
pub fn label_for(
    op: OperatorKind,
    operands: &[GroupElement],
    map: Option<&CanonicalMap>,
) -> Result<LabelToken, AlgebraError> {
    match op {
        OperatorKind::Plus => Ok(LabelToken::Element(mod_add_chain(operands)?)),
        OperatorKind::Oplus => {
            let map = map.ok_or(AlgebraError::MapRequired)?;
            Ok(LabelToken::Result(map.oplus_eval(operands)?))
        }
        OperatorKind::Ominus => Ok(LabelToken::Count(ominus_chain(operands)?)),
        OperatorKind::Left => Ok(LabelToken::Element(left_fold(operands)?)),
        OperatorKind::Right => Ok(LabelToken::Element(right_fold(operands)?)),
    }
}
