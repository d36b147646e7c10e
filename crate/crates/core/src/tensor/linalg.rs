//! Dense factorizations. The heavy lifting is delegated to faer; this layer
//! pins the conventions (thin factors, descending singular values, relative
//! truncation) the tensor-network code relies on.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::{MatMut, Side};

use super::{Matrix, C64, ZERO};
use crate::error::{Error, Result};

/// Thin QR factorization: `m = q * r` with `q` of shape `rows × k`,
/// `r` of shape `k × cols` and `k = min(rows, cols)`.
pub fn qr(m: &Matrix) -> (Matrix, Matrix) {
    let f = m.as_faer().qr();
    let q = Matrix::from_faer(f.compute_thin_Q().as_ref());
    let r = Matrix::from_faer(f.thin_R());
    (q, r)
}

/// Truncated singular value decomposition `m ≈ u · diag(s) · v†`.
#[derive(Clone, Debug)]
pub struct Svd {
    /// `rows × k`, orthonormal columns.
    pub u: Matrix,
    /// Retained singular values, descending.
    pub s: Vec<f64>,
    /// `cols × k`, orthonormal columns.
    pub v: Matrix,
    /// Sum of the squared singular values that were dropped.
    pub discarded_weight: f64,
}

impl Svd {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// `u · diag(s) · v†`.
    pub fn reconstruct(&self) -> Matrix {
        let k = self.rank();
        let us = Matrix::from_fn(self.u.rows(), k, |i, j| self.u[(i, j)] * self.s[j]);
        us.matmul(&self.v.adjoint()).expect("svd factor extents")
    }
}

/// Keeps `min(max_rank, #{σᵢ : σᵢ/σ₁ > cutoff})` singular triplets, at least
/// one. A zero matrix yields a rank-1 result with `s = [0]`.
pub fn svd_truncated(m: &Matrix, max_rank: usize, cutoff: f64) -> Result<Svd> {
    if max_rank == 0 {
        return Err(Error::Usage("svd max_rank must be at least 1".into()));
    }
    if !(cutoff >= 0.0) {
        return Err(Error::Usage(format!(
            "svd cutoff must be >= 0, got {cutoff}"
        )));
    }
    let (rows, cols) = (m.rows(), m.cols());
    if m.is_zero() {
        let mut u = Matrix::zeros(rows, 1);
        let mut v = Matrix::zeros(cols, 1);
        u[(0, 0)] = super::ONE;
        v[(0, 0)] = super::ONE;
        return Ok(Svd {
            u,
            s: vec![0.0],
            v,
            discarded_weight: 0.0,
        });
    }
    let f = m
        .as_faer()
        .thin_svd()
        .map_err(|e| Error::Eigensolver(format!("svd did not converge: {e:?}")))?;
    let s_all: Vec<f64> = f.S().column_vector().iter().map(|z| z.re).collect();
    let mut order: Vec<usize> = (0..s_all.len()).collect();
    order.sort_by(|&a, &b| s_all[b].total_cmp(&s_all[a]));
    let s_max = s_all[order[0]];
    let kept = order
        .iter()
        .take_while(|&&i| s_all[i] / s_max > cutoff)
        .count()
        .clamp(1, max_rank.max(1))
        .min(order.len());
    let (uf, vf) = (f.U(), f.V());
    let u = Matrix::from_fn(rows, kept, |i, j| uf[(i, order[j])]);
    let v = Matrix::from_fn(cols, kept, |i, j| vf[(i, order[j])]);
    let s: Vec<f64> = order[..kept].iter().map(|&i| s_all[i]).collect();
    let discarded_weight = order[kept..].iter().map(|&i| s_all[i] * s_all[i]).sum();
    Ok(Svd {
        u,
        s,
        v,
        discarded_weight,
    })
}

/// LU factorization with partial pivoting, reusable across right-hand sides.
pub struct LuFactor {
    n: usize,
    lu: PartialPivLu<C64>,
}

impl LuFactor {
    pub fn new(m: &Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::dims(
                "LU requires a square matrix",
                &[m.rows(), m.cols()],
                &[m.cols(), m.rows()],
            ));
        }
        let lu = PartialPivLu::new(m.as_faer());
        let u = lu.U();
        for k in 0..m.rows() {
            let p = u[(k, k)];
            if p == ZERO || !(p.re.is_finite() && p.im.is_finite()) {
                return Err(Error::Singular { pivot: k });
            }
        }
        Ok(LuFactor { n: m.rows(), lu })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, x: &mut [C64]) {
        assert_eq!(x.len(), self.n);
        self.lu
            .solve_in_place(MatMut::from_column_major_slice_mut(x, self.n, 1));
    }

    pub fn solve(&self, rhs: &[C64]) -> Vec<C64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Solves `m · x = rhs` by partial-pivoting LU.
pub fn lu_solve(m: &Matrix, rhs: &[C64]) -> Result<Vec<C64>> {
    if rhs.len() != m.rows() {
        return Err(Error::dims(
            "lu_solve right-hand side",
            &[m.rows(), m.cols()],
            &[rhs.len()],
        ));
    }
    Ok(LuFactor::new(m)?.solve(rhs))
}

/// Full eigendecomposition of a general square matrix. Eigenvectors are the
/// columns of the returned matrix, each with unit euclidean norm.
pub fn eig(m: &Matrix) -> Result<(Vec<C64>, Matrix)> {
    if !m.is_square() {
        return Err(Error::dims(
            "eigendecomposition requires a square matrix",
            &[m.rows(), m.cols()],
            &[m.cols(), m.rows()],
        ));
    }
    let f = m
        .as_faer()
        .eigen()
        .map_err(|e| Error::Eigensolver(format!("eigendecomposition failed: {e:?}")))?;
    let values: Vec<C64> = f.S().column_vector().iter().copied().collect();
    let mut vectors = Matrix::from_faer(f.U());
    let n = m.rows();
    for j in 0..n {
        let norm = (0..n)
            .map(|i| vectors[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if norm > 0.0 {
            for i in 0..n {
                vectors[(i, j)] /= norm;
            }
        }
    }
    Ok((values, vectors))
}

/// Ascending eigenvalues of a Hermitian matrix (only the lower triangle is read).
pub fn hermitian_eigenvalues(m: &Matrix) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(Error::dims(
            "hermitian eigenvalues require a square matrix",
            &[m.rows(), m.cols()],
            &[m.cols(), m.rows()],
        ));
    }
    m.as_faer()
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("hermitian eigenvalues failed: {e:?}")))
}
