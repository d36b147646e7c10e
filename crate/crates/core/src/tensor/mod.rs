//! Dense complex arrays and the kernels the rest of the crate is built on.
//!
//! All storage is row-major with the last index running fastest. A tensor of
//! shape `[a, b, c]` stores element `(i, j, k)` at offset `(i * b + j) * c + k`,
//! and every reshape in this crate is a reinterpretation of that flat buffer.
//! Matrices follow the same rule: element `(i, j)` sits at `i * cols + j`.

mod arnoldi;
mod linalg;

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Sub};

use faer::{Accum, MatMut, MatRef, Par};

use crate::error::{Error, Result};

pub use num_complex::Complex64 as C64;

pub use self::arnoldi::{arnoldi_eigs, ArnoldiOptions, ArnoldiResult, RitzPair, Target};
pub use self::linalg::{eig, hermitian_eigenvalues, lu_solve, qr, svd_truncated, LuFactor, Svd};

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Parallelism used for the heavy kernels. Follows faer's global setting, which
/// yields results independent of the thread count.
pub(crate) fn par() -> Par {
    faer::get_global_parallelism()
}

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::dims(
                "matrix data length",
                &[rows, cols],
                &[data.len()],
            ));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Builds a matrix from nested rows of real numbers.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        Self::from_fn(r, c, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn diag(values: &[C64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn as_faer(&self) -> MatRef<'_, C64> {
        MatRef::from_row_major_slice(&self.data, self.rows, self.cols)
    }

    pub fn as_faer_mut(&mut self) -> MatMut<'_, C64> {
        MatMut::from_row_major_slice_mut(&mut self.data, self.rows, self.cols)
    }

    pub fn from_faer(m: MatRef<'_, C64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, alpha: C64) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * alpha).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| *z == ZERO)
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::dims(
                "matmul inner extents",
                &[self.rows, self.cols],
                &[other.rows, other.cols],
            ));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        gemm(out.as_faer_mut(), self.as_faer(), other.as_faer());
        Ok(out)
    }

    pub fn matvec(&self, x: &[C64]) -> Result<Vec<C64>> {
        if self.cols != x.len() {
            return Err(Error::dims(
                "matvec extents",
                &[self.rows, self.cols],
                &[x.len()],
            ));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Kronecker product with `self` as the slow (outer) factor.
    pub fn kron(&self, other: &Matrix) -> Matrix {
        let (r2, c2) = (other.rows, other.cols);
        let mut out = Matrix::zeros(self.rows * r2, self.cols * c2);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a == ZERO {
                    continue;
                }
                for k in 0..r2 {
                    let dst = (i * r2 + k) * out.cols + j * c2;
                    let src = &other.data[k * c2..(k + 1) * c2];
                    for (d, s) in out.data[dst..dst + c2].iter_mut().zip(src) {
                        *d = a * s;
                    }
                }
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &Matrix {
    type Output = Matrix;

    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &Matrix {
    type Output = Matrix;

    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl AddAssign<&Matrix> for Matrix {
    fn add_assign(&mut self, rhs: &Matrix) {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl Mul for &Matrix {
    type Output = Matrix;

    fn mul(self, rhs: &Matrix) -> Matrix {
        self.matmul(rhs).expect("matrix product extents")
    }
}

fn gemm(dst: MatMut<'_, C64>, lhs: MatRef<'_, C64>, rhs: MatRef<'_, C64>) {
    faer::linalg::matmul::matmul(dst, Accum::Replace, lhs, rhs, ONE, par());
}

/// Dense row-major tensor of arbitrary rank.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<C64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![ZERO; shape.iter().product()],
        }
    }

    /// Rank-0 tensor holding a single value.
    pub fn scalar(value: C64) -> Self {
        Tensor {
            shape: Vec::new(),
            data: vec![value],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<C64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::dims("tensor data length", shape, &[data.len()]));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> C64) -> Self {
        let n: usize = shape.iter().product();
        let mut idx = vec![0; shape.len()];
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(f(&idx));
            increment(&mut idx, shape);
        }
        Tensor {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn from_matrix(m: Matrix) -> Self {
        Tensor {
            shape: vec![m.rows, m.cols],
            data: m.data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        idx.iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn get(&self, idx: &[usize]) -> C64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: C64) {
        let k = self.offset(idx);
        self.data[k] = value;
    }

    pub fn reshape(mut self, shape: &[usize]) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != self.data.len() {
            return Err(Error::dims("reshape", &self.shape, shape));
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    /// Views the tensor as a matrix whose rows are the first `split` axes.
    pub fn to_matrix(&self, split: usize) -> Matrix {
        let rows: usize = self.shape[..split].iter().product();
        let cols: usize = self.shape[split..].iter().product();
        Matrix {
            rows,
            cols,
            data: self.data.clone(),
        }
    }

    pub fn into_matrix(self, split: usize) -> Matrix {
        let rows: usize = self.shape[..split].iter().product();
        let cols: usize = self.shape[split..].iter().product();
        Matrix {
            rows,
            cols,
            data: self.data,
        }
    }

    /// Reorders axes: axis `k` of the result is axis `axes[k]` of `self`.
    pub fn permute(&self, axes: &[usize]) -> Result<Tensor> {
        let r = self.shape.len();
        let mut seen = vec![false; r];
        if axes.len() != r
            || axes
                .iter()
                .any(|&a| a >= r || std::mem::replace(&mut seen[a], true))
        {
            return Err(Error::Usage(format!(
                "invalid permutation {axes:?} for rank {r}"
            )));
        }
        if axes.iter().enumerate().all(|(k, &a)| k == a) {
            return Ok(self.clone());
        }
        let new_shape: Vec<usize> = axes.iter().map(|&a| self.shape[a]).collect();
        let mut strides = vec![1; r];
        for k in (0..r.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.shape[k + 1];
        }
        let src_strides: Vec<usize> = axes.iter().map(|&a| strides[a]).collect();
        let mut data = Vec::with_capacity(self.data.len());
        let mut idx = vec![0; r];
        let mut off = 0usize;
        let inner = r - 1;
        for _ in 0..self.data.len() / new_shape[inner].max(1) {
            let s = src_strides[inner];
            for t in 0..new_shape[inner] {
                data.push(self.data[off + t * s]);
            }
            // advance all but the innermost axis
            let mut k = inner;
            while k > 0 {
                k -= 1;
                idx[k] += 1;
                off += src_strides[k];
                if idx[k] < new_shape[k] {
                    break;
                }
                off -= src_strides[k] * new_shape[k];
                idx[k] = 0;
            }
        }
        Ok(Tensor {
            shape: new_shape,
            data,
        })
    }

    pub fn conj(&self) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, alpha: C64) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&z| z * alpha).collect(),
        }
    }

    pub fn scale_in_place(&mut self, alpha: C64) {
        for z in &mut self.data {
            *z *= alpha;
        }
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Tensor) -> f64 {
        assert_eq!(self.shape, other.shape);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

fn increment(idx: &mut [usize], shape: &[usize]) {
    for k in (0..shape.len()).rev() {
        idx[k] += 1;
        if idx[k] < shape[k] {
            return;
        }
        idx[k] = 0;
    }
}

/// Sums over the paired axes of `a` and `b`.
///
/// Each `(i, j)` in `axes` pairs axis `i` of `a` with axis `j` of `b`. The
/// result carries the free axes of `a` in their original order followed by
/// the free axes of `b`. An empty `axes` gives the outer product.
pub fn contract(a: &Tensor, b: &Tensor, axes: &[(usize, usize)]) -> Result<Tensor> {
    let (ra, rb) = (a.rank(), b.rank());
    let mut used_a = vec![false; ra];
    let mut used_b = vec![false; rb];
    for &(i, j) in axes {
        if i >= ra || j >= rb || used_a[i] || used_b[j] {
            return Err(Error::Usage(format!(
                "invalid contraction axes {axes:?} for ranks {ra} and {rb}"
            )));
        }
        if a.shape[i] != b.shape[j] {
            return Err(Error::dims(
                format!("contracted axes ({i}, {j}) differ in extent"),
                &a.shape,
                &b.shape,
            ));
        }
        used_a[i] = true;
        used_b[j] = true;
    }
    let free_a: Vec<usize> = (0..ra).filter(|&k| !used_a[k]).collect();
    let free_b: Vec<usize> = (0..rb).filter(|&k| !used_b[k]).collect();

    let perm_a: Vec<usize> = free_a
        .iter()
        .copied()
        .chain(axes.iter().map(|p| p.0))
        .collect();
    let perm_b: Vec<usize> = axes
        .iter()
        .map(|p| p.1)
        .chain(free_b.iter().copied())
        .collect();
    let a_p = a.permute(&perm_a)?;
    let b_p = b.permute(&perm_b)?;

    let m: usize = free_a.iter().map(|&k| a.shape[k]).product();
    let n: usize = free_b.iter().map(|&k| b.shape[k]).product();
    let k: usize = axes.iter().map(|p| a.shape[p.0]).product();

    let mut out = vec![ZERO; m * n];
    if m > 0 && n > 0 {
        if k == 0 {
            // empty contraction: all zeros
        } else {
            gemm(
                MatMut::from_row_major_slice_mut(&mut out, m, n),
                MatRef::from_row_major_slice(&a_p.data, m, k),
                MatRef::from_row_major_slice(&b_p.data, k, n),
            );
        }
    }
    let shape: Vec<usize> = free_a
        .iter()
        .map(|&k| a.shape[k])
        .chain(free_b.iter().map(|&k| b.shape[k]))
        .collect();
    Ok(Tensor { shape, data: out })
}

pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Hermitian inner product, conjugating the first argument.
pub fn vdot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}
