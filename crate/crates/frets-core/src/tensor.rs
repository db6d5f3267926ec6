//! Dense row-major tensors over a generic scalar.
//!
//! [`RealTensor`] is the universal numeric carrier: an n-d shape plus a flat
//! row-major buffer. [`ComplexTensor`] pairs two equal-shape real tensors as
//! the split re/im representation of frequency-domain quantities; there is no
//! interleaved complex storage anywhere in the crate.
//!
//! Kernels grow no smarter than the model needs: 2-d matmul (plus fused
//! transposed variants for backward passes), elementwise arithmetic, relu,
//! transpose and reshape. Matmul parallelizes over output rows once the work
//! is large enough; every output element is owned by exactly one task, so
//! results are bit-identical regardless of thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Work threshold (multiply-adds) below which matmul stays single-threaded.
const PAR_MATMUL_THRESHOLD: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq)]
pub struct RealTensor<S: Scalar> {
    shape: Vec<usize>,
    data: Vec<S>,
}

impl<S: Scalar> RealTensor<S> {
    /// Tensor of zeros.
    pub fn zeros(shape: &[usize]) -> Self {
        let n = checked_numel(shape).expect("valid shape");
        RealTensor {
            shape: shape.to_vec(),
            data: vec![S::zero(); n],
        }
    }

    /// Tensor filled with one value.
    pub fn filled(shape: &[usize], value: S) -> Self {
        let n = checked_numel(shape).expect("valid shape");
        RealTensor {
            shape: shape.to_vec(),
            data: vec![value; n],
        }
    }

    /// Build from a flat row-major buffer; the length must match the shape.
    pub fn from_vec(shape: &[usize], data: Vec<S>) -> Result<Self> {
        let n = checked_numel(shape)?;
        if data.len() != n {
            return Err(Error::dimension(format!(
                "data length {} does not match shape {:?} (expects {})",
                data.len(),
                shape,
                n
            )));
        }
        Ok(RealTensor {
            shape: shape.to_vec(),
            data,
        })
    }

    /// 2-d identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut t = Self::zeros(&[n, n]);
        for i in 0..n {
            t.data[i * n + i] = S::one();
        }
        t
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<S> {
        self.data
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    /// Dimension size along `axis`.
    pub fn dim(&self, axis: usize) -> usize {
        self.shape[axis]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Element at a 2-d index; rows/cols unchecked beyond debug builds.
    #[inline]
    pub fn at2(&self, i: usize, j: usize) -> S {
        debug_assert_eq!(self.rank(), 2);
        self.data[i * self.shape[1] + j]
    }

    #[inline]
    pub fn at3(&self, i: usize, j: usize, k: usize) -> S {
        debug_assert_eq!(self.rank(), 3);
        self.data[(i * self.shape[1] + j) * self.shape[2] + k]
    }

    #[inline]
    pub fn set2(&mut self, i: usize, j: usize, v: S) {
        debug_assert_eq!(self.rank(), 2);
        let cols = self.shape[1];
        self.data[i * cols + j] = v;
    }

    #[inline]
    pub fn set3(&mut self, i: usize, j: usize, k: usize, v: S) {
        debug_assert_eq!(self.rank(), 3);
        let (d1, d2) = (self.shape[1], self.shape[2]);
        self.data[(i * d1 + j) * d2 + k] = v;
    }

    /// Same buffer under a new shape with equal element count.
    pub fn reshape(mut self, shape: &[usize]) -> Result<Self> {
        let n = checked_numel(shape)?;
        if n != self.data.len() {
            return Err(Error::dimension(format!(
                "cannot reshape {:?} ({} elements) into {:?} ({} elements)",
                self.shape,
                self.data.len(),
                shape,
                n
            )));
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    /// Collapse to 1-d.
    pub fn flatten(self) -> Self {
        let n = self.data.len();
        RealTensor {
            shape: vec![n],
            data: self.data,
        }
    }

    /// Elementwise sum; shapes must match exactly.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn elem_mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(S, S) -> S) -> Result<Self> {
        if self.shape != other.shape {
            return Err(shape_mismatch("elementwise op", &self.shape, &other.shape));
        }
        let data = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(RealTensor {
            shape: self.shape.clone(),
            data,
        })
    }

    /// `self += alpha * other`, used by the optimizer and gradient folds.
    pub fn add_scaled_assign(&mut self, other: &Self, alpha: S) -> Result<()> {
        if self.shape != other.shape {
            return Err(shape_mismatch("add_scaled", &self.shape, &other.shape));
        }
        for (a, &b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn scale(&self, alpha: S) -> Self {
        self.map(|v| v * alpha)
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        RealTensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise `max(x, 0)`.
    pub fn relu(&self) -> Self {
        self.map(|v| if v > S::zero() { v } else { S::zero() })
    }

    /// 2-d transpose.
    pub fn transpose(&self) -> Result<Self> {
        if self.rank() != 2 {
            return Err(Error::dimension(format!(
                "transpose expects a matrix, got shape {:?}",
                self.shape
            )));
        }
        let (r, c) = (self.shape[0], self.shape[1]);
        let mut out = Self::zeros(&[c, r]);
        for i in 0..r {
            for j in 0..c {
                out.data[j * r + i] = self.data[i * c + j];
            }
        }
        Ok(out)
    }

    /// Matrix product `self * other` for 2-d operands.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        let (m, k) = mat_dims("matmul lhs", self)?;
        let (k2, n) = mat_dims("matmul rhs", other)?;
        if k != k2 {
            return Err(shape_mismatch("matmul", &self.shape, &other.shape));
        }
        let mut out = Self::zeros(&[m, n]);
        matmul_into(&self.data, &other.data, &mut out.data, m, k, n);
        Ok(out)
    }

    /// `self^T * other` without materializing the transpose
    /// (`self` is k x m, `other` is k x n, result m x n).
    pub fn matmul_at(&self, other: &Self) -> Result<Self> {
        let (k, m) = mat_dims("matmul_at lhs", self)?;
        let (k2, n) = mat_dims("matmul_at rhs", other)?;
        if k != k2 {
            return Err(shape_mismatch("matmul_at", &self.shape, &other.shape));
        }
        let a = &self.data;
        let b = &other.data;
        let mut out = Self::zeros(&[m, n]);
        // Each output row i reduces over the shared k axis sequentially.
        let run = |rows: &mut [S], i0: usize| {
            for (ri, row) in rows.chunks_exact_mut(n).enumerate() {
                let i = i0 + ri;
                for l in 0..k {
                    let aval = a[l * m + i];
                    if aval != S::zero() {
                        let brow = &b[l * n..(l + 1) * n];
                        for (o, &bv) in row.iter_mut().zip(brow) {
                            *o += aval * bv;
                        }
                    }
                }
            }
        };
        if m * n * k >= PAR_MATMUL_THRESHOLD && m > 1 {
            let chunk = m.div_ceil(rayon::current_num_threads().max(1));
            out.data
                .par_chunks_mut(chunk * n)
                .enumerate()
                .for_each(|(ci, rows)| run(rows, ci * chunk));
        } else {
            run(&mut out.data, 0);
        }
        Ok(out)
    }

    /// `self * other^T` (`self` is m x k, `other` n x k, result m x n).
    pub fn matmul_bt(&self, other: &Self) -> Result<Self> {
        let (m, k) = mat_dims("matmul_bt lhs", self)?;
        let (n, k2) = mat_dims("matmul_bt rhs", other)?;
        if k != k2 {
            return Err(shape_mismatch("matmul_bt", &self.shape, &other.shape));
        }
        // Large case: one cheap transpose buys the streaming-friendly kernel.
        if m * n * k >= PAR_MATMUL_THRESHOLD {
            return self.matmul(&other.transpose()?);
        }
        let a = &self.data;
        let b = &other.data;
        let mut out = Self::zeros(&[m, n]);
        for (ri, row) in out.data.chunks_exact_mut(n).enumerate() {
            let arow = &a[ri * k..(ri + 1) * k];
            for (j, o) in row.iter_mut().enumerate() {
                let brow = &b[j * k..(j + 1) * k];
                let mut acc = S::zero();
                for (&av, &bv) in arow.iter().zip(brow) {
                    acc += av * bv;
                }
                *o = acc;
            }
        }
        Ok(out)
    }

    /// Add a length-`cols` vector to every row of a matrix.
    pub fn add_row_vector(&self, row: &[S]) -> Result<Self> {
        let (_, c) = mat_dims("add_row_vector", self)?;
        if row.len() != c {
            return Err(Error::dimension(format!(
                "row vector of length {} does not fit matrix shape {:?}",
                row.len(),
                self.shape
            )));
        }
        let mut out = self.clone();
        for r in out.data.chunks_exact_mut(c) {
            for (o, &v) in r.iter_mut().zip(row) {
                *o += v;
            }
        }
        Ok(out)
    }

    /// Column sums of a matrix (used for bias gradients).
    pub fn col_sums(&self) -> Result<Vec<S>> {
        let (_, c) = mat_dims("col_sums", self)?;
        let mut sums = vec![S::zero(); c];
        for r in self.data.chunks_exact(c) {
            for (s, &v) in sums.iter_mut().zip(r) {
                *s += v;
            }
        }
        Ok(sums)
    }

    /// Sum of squares over all elements.
    pub fn sq_norm(&self) -> S {
        self.data.iter().map(|&v| v * v).sum()
    }
}

/// Single-threaded or row-parallel `C = A * B` on raw row-major buffers.
pub(crate) fn matmul_into<S: Scalar>(a: &[S], b: &[S], c: &mut [S], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    let run = |rows: &mut [S], i0: usize| {
        for (ri, crow) in rows.chunks_exact_mut(n).enumerate() {
            let arow = &a[(i0 + ri) * k..(i0 + ri + 1) * k];
            for (l, &av) in arow.iter().enumerate() {
                if av != S::zero() {
                    let brow = &b[l * n..(l + 1) * n];
                    for (o, &bv) in crow.iter_mut().zip(brow) {
                        *o += av * bv;
                    }
                }
            }
        }
    };
    if m * k * n >= PAR_MATMUL_THRESHOLD && m > 1 {
        let chunk = m.div_ceil(rayon::current_num_threads().max(1));
        c.par_chunks_mut(chunk * n)
            .enumerate()
            .for_each(|(ci, rows)| run(rows, ci * chunk));
    } else {
        run(c, 0);
    }
}

fn mat_dims<S: Scalar>(ctx: &str, t: &RealTensor<S>) -> Result<(usize, usize)> {
    if t.rank() != 2 {
        return Err(Error::dimension(format!(
            "{ctx} expects a matrix, got shape {:?}",
            t.shape
        )));
    }
    Ok((t.shape[0], t.shape[1]))
}

fn shape_mismatch(ctx: &str, a: &[usize], b: &[usize]) -> Error {
    Error::dimension(format!("{ctx}: shapes {a:?} and {b:?} are incompatible"))
}

fn checked_numel(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() || shape.iter().any(|&d| d == 0) {
        return Err(Error::dimension(format!(
            "shape {shape:?} must list positive dimension sizes"
        )));
    }
    Ok(shape.iter().product())
}

/// Split re/im representation of a complex tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexTensor<S: Scalar> {
    pub re: RealTensor<S>,
    pub im: RealTensor<S>,
}

impl<S: Scalar> ComplexTensor<S> {
    pub fn new(re: RealTensor<S>, im: RealTensor<S>) -> Result<Self> {
        if re.shape() != im.shape() {
            return Err(shape_mismatch("complex tensor", re.shape(), im.shape()));
        }
        Ok(ComplexTensor { re, im })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        ComplexTensor {
            re: RealTensor::zeros(shape),
            im: RealTensor::zeros(shape),
        }
    }

    /// Complex tensor with zero imaginary part.
    pub fn from_real(re: RealTensor<S>) -> Self {
        let im = RealTensor::zeros(re.shape());
        ComplexTensor { re, im }
    }

    pub fn shape(&self) -> &[usize] {
        self.re.shape()
    }

    pub fn conj(&self) -> Self {
        ComplexTensor {
            re: self.re.clone(),
            im: self.im.scale(-S::one()),
        }
    }

    /// Squared magnitude per element.
    pub fn abs_sq(&self) -> RealTensor<S> {
        let mut out = self.re.clone();
        for (o, &i) in out.data.iter_mut().zip(self.im.data.iter()) {
            *o = *o * *o + i * i;
        }
        out
    }
}

/// Elementwise complex product `(a.re + j a.im) * (b.re + j b.im)`,
/// expanded as `(ac - bd) + j(ad + bc)`.
pub fn complex_mul<S: Scalar>(a: &ComplexTensor<S>, b: &ComplexTensor<S>) -> Result<ComplexTensor<S>> {
    if a.shape() != b.shape() {
        return Err(shape_mismatch("complex_mul", a.shape(), b.shape()));
    }
    let n = a.re.numel();
    let mut re = Vec::with_capacity(n);
    let mut im = Vec::with_capacity(n);
    for i in 0..n {
        let (ar, ai) = (a.re.data[i], a.im.data[i]);
        let (br, bi) = (b.re.data[i], b.im.data[i]);
        re.push(ar * br - ai * bi);
        im.push(ar * bi + ai * br);
    }
    Ok(ComplexTensor {
        re: RealTensor::from_vec(a.shape(), re)?,
        im: RealTensor::from_vec(a.shape(), im)?,
    })
}
