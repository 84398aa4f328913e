//! Model configuration, parameter tensors, deterministic initialization, and
//! the versioned binary checkpoint format.

use std::fs;
use std::path::Path;

use cayley_nn::Tensor;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

use crate::vocab::Vocabulary;
use crate::ModelError;

/// Standard deviation of the initialization normal (GPT-2 convention).
pub const INIT_STD: f64 = 0.02;

const CHECKPOINT_MAGIC: &[u8; 4] = b"CAYT";
const CHECKPOINT_VERSION: u32 = 1;

/// Architecture hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelConfig {
    /// Number of transformer blocks.
    pub layers: usize,
    /// Attention heads per block.
    pub heads: usize,
    /// Residual-stream width.
    pub d_model: usize,
    /// Hidden width of the MLP.
    pub d_ff: usize,
    /// Maximum sequence length (must be at least `2M + 2`).
    pub context_len: usize,
    /// Default seed recorded with the config (training may derive others).
    pub seed: u64,
}

impl ModelConfig {
    /// The desk-scale configuration: large enough to reach paper-style
    /// accuracies on `Z_7`, small enough for minutes of CPU training.
    pub fn desk() -> Self {
        Self { layers: 4, heads: 4, d_model: 128, d_ff: 512, context_len: 16, seed: 0 }
    }

    /// Checks internal consistency and capacity for `m`-operand prompts
    /// (identity-inserted inputs occupy `2M + 2` positions).
    pub fn validate(&self, m: usize) -> Result<(), ModelError> {
        if self.layers == 0 || self.heads == 0 || self.d_model == 0 || self.d_ff == 0 {
            return Err(ModelError::Config(
                "layers, heads, d_model, and d_ff must all be positive".to_string(),
            ));
        }
        if !self.d_model.is_multiple_of(self.heads) {
            return Err(ModelError::Config(format!(
                "d_model {} is not divisible by {} heads",
                self.d_model, self.heads
            )));
        }
        if self.context_len < 2 * m + 2 {
            return Err(ModelError::Config(format!(
                "context_len {} is too short for M = {m} (needs at least {})",
                self.context_len,
                2 * m + 2
            )));
        }
        Ok(())
    }
}

/// Weights of one transformer block (pre-LN layout).
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    /// Gain of the layer norm in front of attention.
    pub ln1_gain: Tensor,
    /// Bias of the layer norm in front of attention.
    pub ln1_bias: Tensor,
    /// Query projection.
    pub w_q: Tensor,
    /// Query bias.
    pub b_q: Tensor,
    /// Key projection.
    pub w_k: Tensor,
    /// Key bias.
    pub b_k: Tensor,
    /// Value projection.
    pub w_v: Tensor,
    /// Value bias.
    pub b_v: Tensor,
    /// Output projection after attention.
    pub w_o: Tensor,
    /// Output bias.
    pub b_o: Tensor,
    /// Gain of the layer norm in front of the MLP.
    pub ln2_gain: Tensor,
    /// Bias of the layer norm in front of the MLP.
    pub ln2_bias: Tensor,
    /// MLP up-projection.
    pub w_fc1: Tensor,
    /// MLP up-projection bias.
    pub b_fc1: Tensor,
    /// MLP down-projection.
    pub w_fc2: Tensor,
    /// MLP down-projection bias.
    pub b_fc2: Tensor,
}

/// All trainable tensors plus the vocabulary they are shaped for.
///
/// The output head is tied to the token embedding `w_e`; there is no separate
/// unembedding matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    /// Architecture the tensors are shaped for.
    pub config: ModelConfig,
    /// Token table (carries `n` and `M`).
    pub vocab: Vocabulary,
    /// Token embedding, `[vocab, d_model]`; doubles as the output head.
    pub w_e: Tensor,
    /// Learned absolute position embedding, `[context_len, d_model]`.
    pub w_p: Tensor,
    /// Transformer blocks, in depth order.
    pub blocks: Vec<Block>,
    /// Final layer-norm gain.
    pub ln_f_gain: Tensor,
    /// Final layer-norm bias.
    pub ln_f_bias: Tensor,
}

/// Deterministic initialization: weights and embeddings from N(0, 0.02²),
/// biases zero, layer-norm gains one. Same seed, same bits.
pub fn init_params(
    config: &ModelConfig,
    n: usize,
    m: usize,
    seed: u64,
) -> Result<Params, ModelError> {
    config.validate(m)?;
    let vocab = Vocabulary::new(n, m)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, INIT_STD)
        .map_err(|e| ModelError::Config(format!("initialization distribution: {e}")))?;
    let d = config.d_model;
    let mut weight = |rows: usize, cols: usize| -> Tensor {
        let data: Vec<f64> = (0..rows * cols).map(|_| normal.sample(&mut rng)).collect();
        Tensor::matrix(rows, cols, data).expect("positive dimensions")
    };
    let ones = |cols: usize| {
        Tensor::matrix(1, cols, vec![1.0; cols]).expect("positive dimensions")
    };

    let w_e = weight(vocab.len(), d);
    let w_p = weight(config.context_len, d);
    let mut blocks = Vec::with_capacity(config.layers);
    for _ in 0..config.layers {
        blocks.push(Block {
            ln1_gain: ones(d),
            ln1_bias: Tensor::zeros(&[1, d]),
            w_q: weight(d, d),
            b_q: Tensor::zeros(&[1, d]),
            w_k: weight(d, d),
            b_k: Tensor::zeros(&[1, d]),
            w_v: weight(d, d),
            b_v: Tensor::zeros(&[1, d]),
            w_o: weight(d, d),
            b_o: Tensor::zeros(&[1, d]),
            ln2_gain: ones(d),
            ln2_bias: Tensor::zeros(&[1, d]),
            w_fc1: weight(d, config.d_ff),
            b_fc1: Tensor::zeros(&[1, config.d_ff]),
            w_fc2: weight(config.d_ff, d),
            b_fc2: Tensor::zeros(&[1, d]),
        });
    }
    Ok(Params {
        config: *config,
        vocab,
        w_e,
        w_p,
        blocks,
        ln_f_gain: ones(d),
        ln_f_bias: Tensor::zeros(&[1, d]),
    })
}

impl Params {
    /// Every tensor in the canonical order used by optimizers and
    /// checkpoints: embeddings, blocks in depth order, final norm.
    pub fn tensors(&self) -> Vec<&Tensor> {
        let mut out = vec![&self.w_e, &self.w_p];
        for b in &self.blocks {
            out.extend([
                &b.ln1_gain, &b.ln1_bias, &b.w_q, &b.b_q, &b.w_k, &b.b_k, &b.w_v, &b.b_v,
                &b.w_o, &b.b_o, &b.ln2_gain, &b.ln2_bias, &b.w_fc1, &b.b_fc1, &b.w_fc2,
                &b.b_fc2,
            ]);
        }
        out.extend([&self.ln_f_gain, &self.ln_f_bias]);
        out
    }

    /// Mutable view of [`Params::tensors`], same order.
    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out: Vec<&mut Tensor> = vec![&mut self.w_e, &mut self.w_p];
        for b in &mut self.blocks {
            out.extend([
                &mut b.ln1_gain, &mut b.ln1_bias, &mut b.w_q, &mut b.b_q, &mut b.w_k,
                &mut b.b_k, &mut b.w_v, &mut b.b_v, &mut b.w_o, &mut b.b_o, &mut b.ln2_gain,
                &mut b.ln2_bias, &mut b.w_fc1, &mut b.b_fc1, &mut b.w_fc2, &mut b.b_fc2,
            ]);
        }
        out.extend([&mut self.ln_f_gain, &mut self.ln_f_bias]);
        out
    }

    /// Total trainable coordinate count.
    pub fn num_coords(&self) -> usize {
        self.tensors().iter().map(|t| t.numel()).sum()
    }

    /// True when every coordinate is finite (checked after optimizer steps).
    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.data().iter().all(|x| x.is_finite()))
    }

    /// Writes a versioned binary checkpoint that round-trips bitwise.
    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(CHECKPOINT_MAGIC);
        for v in [
            CHECKPOINT_VERSION,
            self.vocab.n() as u32,
            self.vocab.m() as u32,
            self.config.layers as u32,
            self.config.heads as u32,
            self.config.d_model as u32,
            self.config.d_ff as u32,
            self.config.context_len as u32,
        ] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        bytes.extend_from_slice(&self.config.seed.to_le_bytes());
        let tensors = self.tensors();
        bytes.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
        for t in tensors {
            bytes.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
            for &dim in t.shape() {
                bytes.extend_from_slice(&(dim as u32).to_le_bytes());
            }
            for &x in t.data() {
                bytes.extend_from_slice(&x.to_le_bytes());
            }
        }
        fs::write(path, bytes)?;
        Ok(())
    }

    /// Reads a checkpoint produced by [`Params::save`].
    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let bytes = fs::read(path)?;
        let mut cursor = Cursor { bytes: &bytes, pos: 0, path };
        let magic = cursor.take(4)?;
        if magic != CHECKPOINT_MAGIC {
            return Err(cursor.corrupt("bad magic; not a checkpoint file"));
        }
        let version = cursor.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(cursor.corrupt(&format!(
                "unsupported checkpoint version {version} (expected {CHECKPOINT_VERSION})"
            )));
        }
        let n = cursor.u32()? as usize;
        let m = cursor.u32()? as usize;
        let config = ModelConfig {
            layers: cursor.u32()? as usize,
            heads: cursor.u32()? as usize,
            d_model: cursor.u32()? as usize,
            d_ff: cursor.u32()? as usize,
            context_len: cursor.u32()? as usize,
            seed: cursor.u64()?,
        };
        config.validate(m)?;
        let count = cursor.u32()? as usize;
        let mut tensors = Vec::with_capacity(count);
        for _ in 0..count {
            let rank = cursor.u32()? as usize;
            if rank == 0 || rank > 2 {
                return Err(cursor.corrupt(&format!("tensor rank {rank} out of range")));
            }
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(cursor.u32()? as usize);
            }
            let numel: usize = shape.iter().product();
            let mut data = Vec::with_capacity(numel);
            for _ in 0..numel {
                data.push(cursor.f64()?);
            }
            tensors.push(
                Tensor::new(shape, data)
                    .map_err(|e| ModelError::Checkpoint(format!("{}: {e}", path.display())))?,
            );
        }
        if cursor.pos != bytes.len() {
            return Err(cursor.corrupt("trailing bytes after final tensor"));
        }

        // Rebuild the structured Params from the flat canonical order.
        let expected = 2 + 16 * config.layers + 2;
        if tensors.len() != expected {
            return Err(ModelError::Checkpoint(format!(
                "{}: expected {expected} tensors for {} layers, found {}",
                path.display(),
                config.layers,
                tensors.len()
            )));
        }
        let mut params = init_params(&config, n, m, config.seed)?;
        for (slot, loaded) in params.tensors_mut().into_iter().zip(tensors) {
            if slot.shape() != loaded.shape() {
                return Err(ModelError::Checkpoint(format!(
                    "{}: tensor shape {:?} does not match architecture shape {:?}",
                    path.display(),
                    loaded.shape(),
                    slot.shape()
                )));
            }
            *slot = loaded;
        }
        Ok(params)
    }
}

/// Minimal byte reader with positioned error messages.
struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn corrupt(&self, msg: &str) -> ModelError {
        ModelError::Checkpoint(format!("{} (at byte {}): {msg}", self.path.display(), self.pos))
    }

    fn take(&mut self, len: usize) -> Result<&'a [u8], ModelError> {
        if self.pos + len > self.bytes.len() {
            return Err(self.corrupt("unexpected end of file"));
        }
        let out = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32, ModelError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("length checked")))
    }

    fn u64(&mut self) -> Result<u64, ModelError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("length checked")))
    }

    fn f64(&mut self) -> Result<f64, ModelError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("length checked")))
    }
}
