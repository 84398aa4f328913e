//! The weight/embedding assignments and the attention forward pass they feed.

use crate::TheoremError;
use cayley_algebra::OperatorKind;

/// Finite stand-in for −∞. A true IEEE −∞ would produce NaN under
/// `0 · (−∞)` inside the attention average; a large negative finite value
/// with saturating arithmetic keeps every saturated coordinate pinned to one
/// exact bit pattern.
pub const SENTINEL: f64 = -1e30;

/// Coordinates at or below half the sentinel count as sentinel-dominated.
pub const SATURATION_CUTOFF: f64 = SENTINEL / 2.0;

/// Attention scores are expected to stay many orders of magnitude below the
/// sentinel scale; anything beyond this bound means a sentinel leaked into
/// the query/key path.
const SCORE_BOUND: f64 = 1e15;

/// Default context window `L = 16·M`, comfortably above the `2M + 2` floor.
pub fn default_context_len(m: usize) -> usize {
    16 * m
}

/// Block structure of the embedding space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// `[word | position]` — the commutativity construction.
    Commutative,
    /// `[word | z_0 | position]` — the identity construction: non-identity
    /// elements live in the word block, `z_0` alone lives in the middle
    /// block, and the operator saturates everything but the word block.
    Identity,
}

/// A symbol the construction can embed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symbol {
    /// Group element `z_i`.
    Element(usize),
    /// One of the five sequence operators.
    Operator(OperatorKind),
    /// The terminal `=` token.
    Equals,
}

/// Reading of the paper's attention expression `σ(q·k_i / Σ_j q·k_j)`.
///
/// Under the main constructions every score is one positive constant, so both
/// readings yield exactly `1/L`; the construction's conclusion depends only on
/// that uniformity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SigmaReading {
    /// `σ` = identity applied to the pre-normalized ratios (paper-literal).
    #[default]
    NormalizedIdentity,
    /// `σ` = softmax over the raw scores (the conventional reading).
    Softmax,
}

/// Structured weight matrix: every matrix the proofs assign is either the
/// zero matrix or the identity, so applying one is exact and allocation-free
/// reasoning instead of a dense matvec that would only re-derive `x` or `0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LinearMap {
    Zero,
    Identity,
}

impl LinearMap {
    fn apply(self, x: &[f64]) -> Vec<f64> {
        match self {
            LinearMap::Zero => vec![0.0; x.len()],
            LinearMap::Identity => x.to_vec(),
        }
    }
}

/// `a + b` with sentinel absorption: if either operand is saturated the sum
/// stays pinned to the sentinel exactly.
fn sat_add(sentinel: f64, a: f64, b: f64) -> f64 {
    let cutoff = sentinel / 2.0;
    if a <= cutoff || b <= cutoff {
        sentinel
    } else {
        a + b
    }
}

/// `c · a` (with `c ≥ 0`) under the same absorption rule.
fn sat_scale(sentinel: f64, c: f64, a: f64) -> f64 {
    if a <= sentinel / 2.0 {
        sentinel
    } else {
        c * a
    }
}

/// One concrete weight/bias/embedding assignment for a single attention
/// layer, per the constructive proofs. Word vectors (one per symbol,
/// including the operators and `=`) and position vectors are scaled
/// standard-basis vectors in dimension `|symbols| + L`, so their pairwise dot
/// products are exactly zero.
#[derive(Debug, Clone)]
pub struct ProofConstruction {
    n: usize,
    m: usize,
    l: usize,
    layout: Layout,
    sentinel: f64,
    word_scale: f64,
    pos_scale: f64,
    /// Operator tokens carry the sentinel (main constructions) or live
    /// position embeddings (counter-configurations).
    operator_sentinel: bool,
    /// Trivial-solution demo: all position embeddings zero.
    zero_positions: bool,
    /// Trivial-solution demo: `z_0` embeds as the all-zero vector.
    zero_identity_word: bool,
    w_q: LinearMap,
    w_k: LinearMap,
    w_v: LinearMap,
    b_q: Vec<f64>,
    b_k: Vec<f64>,
    b_v: Vec<f64>,
    sigma: SigmaReading,
}

fn validate_dims(n: usize, m: usize, l: usize) -> Result<(), TheoremError> {
    if n < 2 {
        return Err(TheoremError::Config(format!("n must be at least 2, got {n}")));
    }
    if m < 2 {
        return Err(TheoremError::Config(format!("M must be at least 2, got {m}")));
    }
    if l <= 2 * m + 2 {
        return Err(TheoremError::Config(format!(
            "context length L = {l} must exceed 2M + 2 = {}",
            2 * m + 2
        )));
    }
    Ok(())
}

/// Commutativity construction (Theorem 1): `W_v = I`, `W_q = W_k = 0`,
/// `b_q = b_k = 1`, element embeddings `[w_i | p_m]`, operator embeddings
/// `[w_op | sentinel]`, positions beyond the prompt zero-padded. Attention is
/// exactly uniform (`1/L`), so the state at `=` is the uniform average of the
/// prompt embeddings and cannot see operand order.
pub fn build_commutative_assignment(
    n: usize,
    m: usize,
    l: usize,
) -> Result<ProofConstruction, TheoremError> {
    validate_dims(n, m, l)?;
    Ok(ProofConstruction::new(
        n,
        m,
        l,
        Layout::Commutative,
        true,
        false,
        false,
        LinearMap::Zero,
        LinearMap::Zero,
        BiasFill::Ones,
        BiasFill::Ones,
    ))
}

/// Identity construction (Theorem 2): three-block layout with
/// `e_{i,m} = [w_i | 0 | p_m]` for `i ≥ 1`, `e_{0,m} = [0 | w_0 | p_m]`, and
/// `e_{op,m} = [0 | sentinel | sentinel]`. The word block of the state is the
/// same uniform average with and without `z_0` insertions because `z_0` and
/// the operator contribute nothing to it.
pub fn build_identity_assignment(
    n: usize,
    m: usize,
    l: usize,
) -> Result<ProofConstruction, TheoremError> {
    validate_dims(n, m, l)?;
    Ok(ProofConstruction::new(
        n,
        m,
        l,
        Layout::Identity,
        true,
        false,
        false,
        LinearMap::Zero,
        LinearMap::Zero,
        BiasFill::Ones,
        BiasFill::Ones,
    ))
}

/// Counter-configuration for Theorem 1: the operator carries a live position
/// embedding instead of the sentinel, and the query is a descending position
/// ramp (`W_q = 0`, `b_q[p_m] = L + 1 − m`, `W_k = I`, `b_k = 0`), so earlier
/// positions attract strictly more attention. Permuting distinct operands
/// re-pairs attention weights with word vectors and measurably moves the
/// state.
pub fn build_commutativity_counter_assignment(
    n: usize,
    m: usize,
    l: usize,
) -> Result<ProofConstruction, TheoremError> {
    validate_dims(n, m, l)?;
    Ok(ProofConstruction::new(
        n,
        m,
        l,
        Layout::Commutative,
        false,
        false,
        false,
        LinearMap::Zero,
        LinearMap::Identity,
        BiasFill::PositionRamp,
        BiasFill::Zeros,
    ))
}

/// Counter-configuration for Theorem 2: the identity layout with the sentinel
/// removed from the operator and the same `◁`-style descending position ramp
/// (first tokens dominate). Inserting `z_0` shifts every later token's
/// position, reweights the average, and measurably moves the word block.
pub fn build_identity_counter_assignment(
    n: usize,
    m: usize,
    l: usize,
) -> Result<ProofConstruction, TheoremError> {
    validate_dims(n, m, l)?;
    Ok(ProofConstruction::new(
        n,
        m,
        l,
        Layout::Identity,
        false,
        false,
        false,
        LinearMap::Zero,
        LinearMap::Identity,
        BiasFill::PositionRamp,
        BiasFill::Zeros,
    ))
}

/// The degenerate "trivial solution" embedding: all position embeddings zero
/// and `z_0` embedded as the zero vector, under uniform attention. Every
/// operator's state becomes a pure multiset average, so invariance holds for
/// all five operators — which is exactly why the order-sensitive operators
/// are needed in the data.
pub fn build_trivial_assignment(
    n: usize,
    m: usize,
    l: usize,
) -> Result<ProofConstruction, TheoremError> {
    validate_dims(n, m, l)?;
    Ok(ProofConstruction::new(
        n,
        m,
        l,
        Layout::Commutative,
        false,
        true,
        true,
        LinearMap::Zero,
        LinearMap::Zero,
        BiasFill::Ones,
        BiasFill::Ones,
    ))
}

/// How a builder fills a bias vector.
enum BiasFill {
    Zeros,
    Ones,
    /// `b[p_m] = L + 1 − m` on position coordinates, zero elsewhere:
    /// a strictly descending, strictly positive ramp over positions.
    PositionRamp,
}

impl ProofConstruction {
    #[allow(clippy::too_many_arguments)]
    fn new(
        n: usize,
        m: usize,
        l: usize,
        layout: Layout,
        operator_sentinel: bool,
        zero_positions: bool,
        zero_identity_word: bool,
        w_q: LinearMap,
        w_k: LinearMap,
        b_q: BiasFill,
        b_k: BiasFill,
    ) -> Self {
        let mut pc = ProofConstruction {
            n,
            m,
            l,
            layout,
            sentinel: SENTINEL,
            word_scale: 1.0,
            pos_scale: 1.0,
            operator_sentinel,
            zero_positions,
            zero_identity_word,
            w_q,
            w_k,
            w_v: LinearMap::Identity,
            b_q: Vec::new(),
            b_k: Vec::new(),
            b_v: Vec::new(),
            sigma: SigmaReading::NormalizedIdentity,
        };
        pc.b_q = pc.fill_bias(b_q);
        pc.b_k = pc.fill_bias(b_k);
        pc.b_v = pc.fill_bias(BiasFill::Zeros);
        pc
    }

    fn fill_bias(&self, fill: BiasFill) -> Vec<f64> {
        let dim = self.dim();
        match fill {
            BiasFill::Zeros => vec![0.0; dim],
            BiasFill::Ones => vec![1.0; dim],
            BiasFill::PositionRamp => {
                let mut b = vec![0.0; dim];
                let base = self.position_base();
                for m in 1..=self.l {
                    b[base + (m - 1)] = (self.l + 1 - m) as f64;
                }
                b
            }
        }
    }

    /// Group order `n`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Nominal operand count `M` the construction was sized for.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Context window `L`.
    pub fn context_len(&self) -> usize {
        self.l
    }

    /// Block structure.
    pub fn layout(&self) -> Layout {
        self.layout
    }

    /// The finite stand-in for −∞.
    pub fn sentinel(&self) -> f64 {
        self.sentinel
    }

    /// Total embedding dimension: `n + 6` word coordinates (n elements, five
    /// operators, `=`), one `z_0` coordinate in the identity layout, and `L`
    /// position coordinates.
    pub fn dim(&self) -> usize {
        self.word_block_len() + self.middle_block_len() + self.l
    }

    fn word_block_len(&self) -> usize {
        self.n + 6
    }

    fn middle_block_len(&self) -> usize {
        match self.layout {
            Layout::Commutative => 0,
            Layout::Identity => 1,
        }
    }

    fn position_base(&self) -> usize {
        self.word_block_len() + self.middle_block_len()
    }

    /// Swap the σ reading (both coincide exactly on the main constructions).
    pub fn with_sigma(mut self, sigma: SigmaReading) -> Self {
        self.sigma = sigma;
        self
    }

    fn word_coordinate(&self, symbol: Symbol) -> Result<usize, TheoremError> {
        match symbol {
            Symbol::Element(i) => {
                if i >= self.n {
                    return Err(TheoremError::Sequence(format!(
                        "element index {i} outside Z_{}",
                        self.n
                    )));
                }
                Ok(i)
            }
            Symbol::Operator(kind) => {
                let slot = OperatorKind::ALL
                    .iter()
                    .position(|k| *k == kind)
                    .expect("OperatorKind::ALL covers every variant");
                Ok(self.n + slot)
            }
            Symbol::Equals => Ok(self.n + 5),
        }
    }

    /// The word vector of a symbol, embedded in the full space. In the
    /// identity layout `z_0`'s word vector lives in the middle block and the
    /// operators have none (the proofs give them `[0 | −∞ | −∞]`).
    pub fn word_vector(&self, symbol: Symbol) -> Result<Vec<f64>, TheoremError> {
        let mut v = vec![0.0; self.dim()];
        match (self.layout, symbol) {
            (_, Symbol::Element(0)) if self.zero_identity_word => {}
            (Layout::Identity, Symbol::Element(0)) => {
                v[self.word_block_len()] = self.word_scale;
            }
            (Layout::Identity, Symbol::Operator(_)) => {}
            _ => {
                v[self.word_coordinate(symbol)?] = self.word_scale;
            }
        }
        Ok(v)
    }

    /// The position vector for 1-based position `m`, embedded in the full
    /// space (all-zero when the construction zeroes positions).
    pub fn position_vector(&self, position: usize) -> Result<Vec<f64>, TheoremError> {
        if position == 0 || position > self.l {
            return Err(TheoremError::Sequence(format!(
                "position {position} outside 1..={}",
                self.l
            )));
        }
        let mut v = vec![0.0; self.dim()];
        if !self.zero_positions {
            v[self.position_base() + (position - 1)] = self.pos_scale;
        }
        Ok(v)
    }

    /// The embedding of `symbol` at 1-based position `position`, following
    /// the layout's assignment rules.
    pub fn embedding(&self, symbol: Symbol, position: usize) -> Result<Vec<f64>, TheoremError> {
        if position == 0 || position > self.l {
            return Err(TheoremError::Sequence(format!(
                "position {position} outside 1..={}",
                self.l
            )));
        }
        let mut e = self.word_vector(symbol)?;
        let pos_base = self.position_base();
        let saturate_positions = matches!(symbol, Symbol::Operator(_)) && self.operator_sentinel;
        if saturate_positions {
            e[pos_base..].fill(self.sentinel);
            if self.layout == Layout::Identity {
                e[self.word_block_len()] = self.sentinel;
            }
        } else if !self.zero_positions && !(matches!(symbol, Symbol::Element(0)) && self.zero_identity_word)
        {
            e[pos_base + (position - 1)] = self.pos_scale;
        }
        Ok(e)
    }

    fn prompt_tokens(
        &self,
        operands: &[usize],
        operator: OperatorKind,
    ) -> Result<Vec<Symbol>, TheoremError> {
        if operands.is_empty() {
            return Err(TheoremError::Sequence("empty operand sequence".into()));
        }
        for &o in operands {
            if o >= self.n {
                return Err(TheoremError::Sequence(format!(
                    "element index {o} outside Z_{}",
                    self.n
                )));
            }
        }
        let t = 2 * operands.len();
        if t + 2 > self.l {
            return Err(TheoremError::Sequence(format!(
                "{} operands need {t} context positions; L = {} must stay above {t} + 2",
                operands.len(),
                self.l
            )));
        }
        let mut tokens = Vec::with_capacity(t);
        for (idx, &o) in operands.iter().enumerate() {
            if idx > 0 {
                tokens.push(Symbol::Operator(operator));
            }
            tokens.push(Symbol::Element(o));
        }
        tokens.push(Symbol::Equals);
        Ok(tokens)
    }

    /// Attention weights of the `=` query over all `L` context positions for
    /// the prompt `z op z op … op z =`. Positions past the prompt hold the
    /// zero padding embedding.
    pub fn attention_weights(
        &self,
        operands: &[usize],
        operator: OperatorKind,
    ) -> Result<Vec<f64>, TheoremError> {
        let tokens = self.prompt_tokens(operands, operator)?;
        let embeddings = self.prompt_embeddings(&tokens)?;
        self.alphas(&embeddings)
    }

    fn prompt_embeddings(&self, tokens: &[Symbol]) -> Result<Vec<Vec<f64>>, TheoremError> {
        tokens
            .iter()
            .enumerate()
            .map(|(idx, &s)| self.embedding(s, idx + 1))
            .collect()
    }

    /// σ(q·k_i / Σ_j q·k_j) over all L positions; `embeddings` covers the
    /// prompt, every later position is the zero padding embedding.
    fn alphas(&self, embeddings: &[Vec<f64>]) -> Result<Vec<f64>, TheoremError> {
        let query_embedding = embeddings
            .last()
            .expect("prompt_tokens never yields an empty prompt");
        let q = self.add_bias(self.w_q.apply(query_embedding), &self.b_q);
        let pad_key = self.add_bias(self.w_k.apply(&vec![0.0; self.dim()]), &self.b_k);
        let pad_score = dot(&q, &pad_key);
        let mut scores = Vec::with_capacity(self.l);
        for i in 0..self.l {
            let score = if i < embeddings.len() {
                let k = self.add_bias(self.w_k.apply(&embeddings[i]), &self.b_k);
                dot(&q, &k)
            } else {
                pad_score
            };
            if !score.is_finite() || score.abs() > SCORE_BOUND {
                return Err(TheoremError::BadScore {
                    position: i + 1,
                    value: score,
                });
            }
            scores.push(score);
        }
        match self.sigma {
            SigmaReading::NormalizedIdentity => {
                if let Some((i, &s)) = scores.iter().enumerate().find(|(_, s)| **s < 0.0) {
                    return Err(TheoremError::BadScore {
                        position: i + 1,
                        value: s,
                    });
                }
                let total: f64 = scores.iter().sum();
                if total <= 0.0 {
                    return Err(TheoremError::BadScore {
                        position: 0,
                        value: total,
                    });
                }
                Ok(scores.into_iter().map(|s| s / total).collect())
            }
            SigmaReading::Softmax => {
                let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
                let total: f64 = exps.iter().sum();
                Ok(exps.into_iter().map(|e| e / total).collect())
            }
        }
    }

    fn add_bias(&self, mut v: Vec<f64>, bias: &[f64]) -> Vec<f64> {
        for (x, b) in v.iter_mut().zip(bias) {
            *x = sat_add(self.sentinel, *x, *b);
        }
        v
    }

    /// The hidden state at the `=` position: `Σ_i σ(…)·v_i` with `v_i = W_v
    /// e_i + b_v`, accumulated with saturating arithmetic. Padding positions
    /// contribute exactly zero (`W_v·0 + 0`), so the sum runs over the prompt.
    pub fn state_at_equals(
        &self,
        operands: &[usize],
        operator: OperatorKind,
    ) -> Result<ConstructedState, TheoremError> {
        let tokens = self.prompt_tokens(operands, operator)?;
        let embeddings = self.prompt_embeddings(&tokens)?;
        let alphas = self.alphas(&embeddings)?;
        let mut values = vec![0.0; self.dim()];
        for (i, e) in embeddings.iter().enumerate() {
            let v = self.add_bias(self.w_v.apply(e), &self.b_v);
            for (c, &vc) in v.iter().enumerate() {
                values[c] = sat_add(self.sentinel, values[c], sat_scale(self.sentinel, alphas[i], vc));
            }
        }
        let cutoff = self.sentinel / 2.0;
        let saturated: Vec<bool> = values.iter().map(|&x| x <= cutoff).collect();
        Ok(ConstructedState {
            values,
            saturated,
            element_block: self.n,
        })
    }

    /// Max |⟨u, v⟩| over all distinct pairs of word and position vectors.
    /// Exactly zero by construction (disjoint standard-basis coordinates).
    pub fn orthogonality_audit(&self) -> f64 {
        let mut vectors: Vec<Vec<f64>> = Vec::new();
        for i in 0..self.n {
            if let Ok(v) = self.word_vector(Symbol::Element(i)) {
                vectors.push(v);
            }
        }
        for kind in OperatorKind::ALL {
            if let Ok(v) = self.word_vector(Symbol::Operator(kind)) {
                vectors.push(v);
            }
        }
        if let Ok(v) = self.word_vector(Symbol::Equals) {
            vectors.push(v);
        }
        for m in 1..=self.l {
            if let Ok(v) = self.position_vector(m) {
                vectors.push(v);
            }
        }
        let mut max_dot = 0.0f64;
        for i in 0..vectors.len() {
            for j in (i + 1)..vectors.len() {
                max_dot = max_dot.max(dot(&vectors[i], &vectors[j]).abs());
            }
        }
        max_dot
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A hidden state produced by a construction: per-coordinate values with
/// saturated coordinates pinned to the sentinel exactly, plus the mask of
/// which coordinates the sentinel dominated.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstructedState {
    values: Vec<f64>,
    saturated: Vec<bool>,
    element_block: usize,
}

impl ConstructedState {
    /// The full state vector (saturated coordinates hold the sentinel).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Which coordinates are sentinel-dominated.
    pub fn saturated_mask(&self) -> &[bool] {
        &self.saturated
    }

    /// The element-word coordinates `w_0 … w_{n−1}` — the finite block the
    /// theorems make claims about.
    pub fn finite_block(&self) -> &[f64] {
        &self.values[..self.element_block]
    }

    /// Total dimension.
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Absorption invariant: every saturated coordinate holds a value at or
    /// below half the sentinel (in fact the sentinel itself).
    pub fn absorption_ok(&self) -> bool {
        self.values
            .iter()
            .zip(&self.saturated)
            .all(|(&v, &s)| if s { v <= SATURATION_CUTOFF } else { v > SATURATION_CUTOFF })
    }
}
