//! Token vocabulary: every symbol of the equation language is exactly one
//! token, with ids stable for a given `(n, M)`.

use std::collections::HashMap;

use cayley_algebra::{LabelToken, OperatorKind};

use crate::ModelError;

/// Padding symbol appended after the answer position when needed.
pub const PAD_SYMBOL: &str = "PAD";
/// The prompt terminator preceding the answer.
pub const EQUALS_SYMBOL: &str = "=";

/// Ordered token table for `Z_n` equations with up to `M` operands.
///
/// Id order is fixed: `z_0…z_{n−1}`, `r_0…r_{n−1}`, `c_0…c_M`, the five
/// operator symbols, `=`, `PAD`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    n: usize,
    m: usize,
    symbols: Vec<String>,
    lookup: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds the table for modulus `n` and operand bound `m`.
    pub fn new(n: usize, m: usize) -> Result<Self, ModelError> {
        if n < 2 {
            return Err(ModelError::Config(format!("modulus n must be at least 2, got {n}")));
        }
        if m < 2 {
            return Err(ModelError::Config(format!(
                "operand bound M must be at least 2, got {m}"
            )));
        }
        let mut symbols = Vec::with_capacity(2 * n + m + 8);
        symbols.extend((0..n).map(|k| format!("z{k}")));
        symbols.extend((0..n).map(|k| format!("r{k}")));
        symbols.extend((0..=m).map(|k| format!("c{k}")));
        symbols.extend(OperatorKind::ALL.iter().map(|op| op.token().to_string()));
        symbols.push(EQUALS_SYMBOL.to_string());
        symbols.push(PAD_SYMBOL.to_string());
        let lookup = symbols.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Ok(Self { n, m, symbols, lookup })
    }

    /// Modulus this table was built for.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Operand bound this table was built for.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of tokens (`2n + M + 8`).
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    /// True only for degenerate tables (never constructible).
    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Id of a symbol, if present.
    pub fn id(&self, symbol: &str) -> Option<usize> {
        self.lookup.get(symbol).copied()
    }

    /// Symbol of an id, if in range.
    pub fn symbol(&self, id: usize) -> Option<&str> {
        self.symbols.get(id).map(String::as_str)
    }

    /// Id of the `=` token.
    pub fn equals_id(&self) -> usize {
        self.len() - 2
    }

    /// Id of the `PAD` token.
    pub fn pad_id(&self) -> usize {
        self.len() - 1
    }

    /// Id of the element token `z_k`.
    pub fn element_id(&self, k: usize) -> Result<usize, ModelError> {
        if k >= self.n {
            return Err(ModelError::UnknownSymbol(format!("z{k}")));
        }
        Ok(k)
    }

    /// Id of the label token an equation carries.
    pub fn label_id(&self, label: &LabelToken) -> Result<usize, ModelError> {
        let symbol = label.to_string();
        self.id(&symbol).ok_or(ModelError::UnknownSymbol(symbol))
    }

    /// Encodes a space-separated prompt (ending in `=`, label excluded).
    pub fn encode(&self, prompt: &str) -> Result<Vec<usize>, ModelError> {
        let mut ids = Vec::new();
        for symbol in prompt.split_whitespace() {
            let id = self
                .id(symbol)
                .ok_or_else(|| ModelError::UnknownSymbol(symbol.to_string()))?;
            ids.push(id);
        }
        Ok(ids)
    }

    /// Decodes one id back to its symbol.
    pub fn decode(&self, id: usize) -> Result<&str, ModelError> {
        self.symbol(id)
            .ok_or_else(|| ModelError::UnknownSymbol(format!("token id {id}")))
    }

    /// Splits a full dataset line (`prompt = label`) into prompt ids and the
    /// label id.
    pub fn encode_line(&self, line: &str) -> Result<(Vec<usize>, usize), ModelError> {
        let mut ids = self.encode(line)?;
        let label = ids.pop().ok_or_else(|| {
            ModelError::UnknownSymbol("empty line has no label".to_string())
        })?;
        match ids.last() {
            Some(&last) if last == self.equals_id() => Ok((ids, label)),
            _ => Err(ModelError::UnknownSymbol(format!(
                "line {line:?} does not end with `= <label>`"
            ))),
        }
    }
}
