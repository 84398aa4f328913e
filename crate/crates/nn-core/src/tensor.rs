//! Dense row-major f64 tensors and the raw kernels the graph ops build on.

use crate::NnError;

/// A dense tensor of 64-bit floats in row-major layout.
///
/// The graph ops interpret tensors as matrices: a 2-D shape is `[rows, cols]`,
/// a 1-D shape `[n]` is a single row, and a scalar is `[1]`. Higher ranks are
/// not needed by the fixed architecture and are rejected at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    /// Builds a tensor, validating that the shape matches the data length.
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, NnError> {
        if shape.is_empty() || shape.len() > 2 {
            return Err(NnError::InvalidShape(format!(
                "supported ranks are 1 and 2, got shape {shape:?}"
            )));
        }
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(NnError::InvalidShape(format!(
                "shape {shape:?} implies {numel} elements, data holds {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    /// A `rows × cols` matrix from row-major data.
    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NnError> {
        Self::new(vec![rows, cols], data)
    }

    /// A 1-D tensor (interpreted as a single row by matrix ops).
    pub fn vector(data: Vec<f64>) -> Self {
        Self { shape: vec![data.len()], data }
    }

    /// A single-element tensor.
    pub fn scalar(v: f64) -> Self {
        Self { shape: vec![1], data: vec![v] }
    }

    /// An all-zero tensor of the given shape.
    pub fn zeros(shape: &[usize]) -> Self {
        Self { shape: shape.to_vec(), data: vec![0.0; shape.iter().product()] }
    }

    /// The stored shape.
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Number of stored elements.
    pub fn numel(&self) -> usize {
        self.data.len()
    }

    /// Rows under the matrix interpretation (1 for 1-D tensors).
    pub fn rows(&self) -> usize {
        if self.shape.len() == 2 { self.shape[0] } else { 1 }
    }

    /// Columns under the matrix interpretation.
    pub fn cols(&self) -> usize {
        *self.shape.last().expect("shape is non-empty")
    }

    /// Read-only element access by flat index.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Mutable element access by flat index.
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Matrix element accessor.
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols() + col]
    }

    /// True when both tensors have identical shape vectors.
    pub fn same_shape(&self, other: &Tensor) -> bool {
        self.shape == other.shape
    }
}

/// `c = alpha * op_a(a) · op_b(b) + beta * c` on row-major buffers.
///
/// `a` is `m × k` after optional transposition, `b` is `k × n`, `c` is
/// `m × n` with row stride `rsc`. Strides let callers multiply sub-blocks
/// (attention heads) without copying.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: &[f64],
    rsa: isize,
    csa: isize,
    b: &[f64],
    rsb: isize,
    csb: isize,
    beta: f64,
    c: &mut [f64],
    rsc: isize,
) {
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            rsc,
            1,
        );
    }
}

/// Dense matrix product `a · b` for row-major matrices, with optional
/// transposition of either argument. Shapes are the caller's responsibility
/// (the graph layer validates them).
pub(crate) fn matmul_raw(
    a: &Tensor,
    b: &Tensor,
    trans_a: bool,
    trans_b: bool,
) -> Tensor {
    let (ar, ac) = (a.rows(), a.cols());
    let (br, bc) = (b.rows(), b.cols());
    let (m, k) = if trans_a { (ac, ar) } else { (ar, ac) };
    let (kb, n) = if trans_b { (bc, br) } else { (br, bc) };
    debug_assert_eq!(k, kb, "inner dimensions must agree");
    let mut out = Tensor::zeros(&[m, n]);
    let (rsa, csa) = if trans_a { (1, ac as isize) } else { (ac as isize, 1) };
    let (rsb, csb) = if trans_b { (1, bc as isize) } else { (bc as isize, 1) };
    gemm(m, k, n, 1.0, a.data(), rsa, csa, b.data(), rsb, csb, 0.0, out.data_mut(), n as isize);
    out
}

/// `dst += src`, element-wise over identical shapes.
pub(crate) fn add_assign(dst: &mut Tensor, src: &Tensor) {
    debug_assert!(dst.same_shape(src) || dst.numel() == src.numel());
    for (d, s) in dst.data.iter_mut().zip(src.data.iter()) {
        *d += s;
    }
}
