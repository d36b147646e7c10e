//! The on-site Liouvillian and its near-null eigenpair.

use log::debug;
use rand::Rng;

use faer::linalg::matmul::matmul;
use faer::{Accum, MatMut, MatRef};

use crate::error::{Error, Result};
use crate::tensor::{
    arnoldi_eigs, contract, par, vdot, vec_norm, ArnoldiOptions, LuFactor, Matrix, Target, Tensor,
    C64, ONE, ZERO,
};

#[derive(Clone, Debug)]
pub enum LocalOperator {
    Dense(Matrix),
    /// Environments and MPO tensor, applied by contraction.
    MatrixFree {
        left: Tensor,
        w: Tensor,
        right: Tensor,
    },
}

/// `L_l` acting on the center tensor flattened as `(D_left, d², D_right)`.
#[derive(Clone, Debug)]
pub struct LocalProblem {
    pub shape: [usize; 3],
    pub operator: LocalOperator,
    /// Real shift `τ` the eigenvalue search is centred on.
    pub target_shift: C64,
}

impl LocalProblem {
    pub fn dimension(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.operator, LocalOperator::Dense(_))
    }

    /// `y = L_l x`.
    pub fn apply(&self, x: &[C64], y: &mut [C64]) -> Result<()> {
        match &self.operator {
            LocalOperator::Dense(m) => {
                y.copy_from_slice(&m.matvec(x)?);
            }
            LocalOperator::MatrixFree { left, w, right } => {
                let xt = Tensor::from_vec(&self.shape, x.to_vec())?;
                y.copy_from_slice(matrix_free_apply(left, w, right, &xt)?.data());
            }
        }
        Ok(())
    }

    /// The operator as a dense matrix, assembling it if necessary.
    pub fn to_dense(&self) -> Result<Matrix> {
        match &self.operator {
            LocalOperator::Dense(m) => Ok(m.clone()),
            LocalOperator::MatrixFree { left, w, right } => dense_local(left, w, right),
        }
    }
}

fn matrix_free_apply(left: &Tensor, w: &Tensor, right: &Tensor, x: &Tensor) -> Result<Tensor> {
    let (dl, wl) = (left.shape()[0], left.shape()[1]);
    let (dr, wr) = (right.shape()[0], right.shape()[1]);
    let p = w.shape()[2];
    // (w, s, a', b) so that each MPO block acts on one contiguous slab
    let t = contract(left, x, &[(2, 0)])?.permute(&[1, 2, 0, 3])?;
    let cols = dl * dr;
    let slab = p * cols;
    let mut u = vec![ZERO; wr * slab];
    let wd = w.data();
    for iw in 0..wl {
        let src = MatRef::from_row_major_slice(&t.data()[iw * slab..(iw + 1) * slab], p, cols);
        for jw in 0..wr {
            let block = &wd[(iw * wr + jw) * p * p..(iw * wr + jw + 1) * p * p];
            if block.iter().all(|z| *z == ZERO) {
                continue;
            }
            matmul(
                MatMut::from_row_major_slice_mut(&mut u[jw * slab..(jw + 1) * slab], p, cols),
                Accum::Add,
                MatRef::from_row_major_slice(block, p, p),
                src,
                ONE,
                par(),
            );
        }
    }
    let u = Tensor::from_vec(&[wr, p, dl, dr], u)?; // (w', s', a', b)
    contract(&u, right, &[(0, 1), (3, 2)])?.permute(&[1, 0, 2]) // (a', s', b')
}

/// `L[(a' s' b'), (a s b)] = Σ_{w w'} E[a', w, a] W[w, w', s', s] F[b', w', b]`.
fn dense_local(left: &Tensor, w: &Tensor, right: &Tensor) -> Result<Matrix> {
    let (dl, wl) = (left.shape()[0], left.shape()[1]);
    let (dr, wr) = (right.shape()[0], right.shape()[1]);
    let ws = w.shape();
    if ws[0] != wl || ws[1] != wr || left.shape()[2] != dl || right.shape()[2] != dr {
        return Err(Error::dims(
            "local operator environments",
            left.shape(),
            right.shape(),
        ));
    }
    let p = ws[2];
    let dim = dl * p * dr;
    let mut out = Matrix::zeros(dim, dim);
    let wd = w.data();
    let (ld, rd) = (left.data(), right.data());
    for iw in 0..wl {
        for jw in 0..wr {
            for sp in 0..p {
                for s in 0..p {
                    let wv = wd[((iw * wr + jw) * p + sp) * p + s];
                    if wv == ZERO {
                        continue;
                    }
                    for ap in 0..dl {
                        for a in 0..dl {
                            let lv = ld[(ap * wl + iw) * dl + a];
                            if lv == ZERO {
                                continue;
                            }
                            let c = wv * lv;
                            for bp in 0..dr {
                                let row = (ap * p + sp) * dr + bp;
                                let col0 = (a * p + s) * dr;
                                let rrow = &rd[(bp * wr + jw) * dr..(bp * wr + jw + 1) * dr];
                                let dst =
                                    &mut out.data_mut()[row * dim + col0..row * dim + col0 + dr];
                                for (d, r) in dst.iter_mut().zip(rrow) {
                                    *d += c * r;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Bytes needed to hold the dense local operator of the given shape.
pub fn dense_bytes(shape: [usize; 3]) -> usize {
    let dim: usize = shape.iter().product();
    dim.saturating_mul(dim)
        .saturating_mul(std::mem::size_of::<C64>())
}

/// Builds the local problem at a site from its environments. The operator is
/// stored densely unless that would exceed `memory_budget` bytes.
pub fn assemble_local(
    left: &Tensor,
    w: &Tensor,
    right: &Tensor,
    target_shift: C64,
    memory_budget: usize,
) -> Result<LocalProblem> {
    let shape = [left.shape()[0], w.shape()[2], right.shape()[0]];
    let operator = if dense_bytes(shape) <= memory_budget {
        LocalOperator::Dense(dense_local(left, w, right)?)
    } else {
        LocalOperator::MatrixFree {
            left: left.clone(),
            w: w.clone(),
            right: right.clone(),
        }
    };
    Ok(LocalProblem {
        shape,
        operator,
        target_shift,
    })
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub krylov_dim: usize,
    /// Budget of operator applications (inverse solves in dense mode).
    pub max_matvecs: usize,
    pub tol: f64,
    /// Absolute residual accepted in matrix-free mode, where the wanted
    /// eigenvalue is near zero.
    pub abs_tol: f64,
    /// Size of the random perturbation added to the start vector.
    pub start_noise: f64,
    /// Treat the operator as real and return a real eigenvector.
    pub real: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            krylov_dim: 30,
            max_matvecs: 300,
            tol: 1e-12,
            abs_tol: 1e-10,
            start_noise: 1e-8,
            real: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LocalSolution {
    pub eigenvalue: C64,
    /// Unit-norm eigenvector, phase-aligned with the previous tensor.
    pub vector: Vec<C64>,
    pub converged: bool,
    pub matvecs: usize,
    /// Shift actually used after any singular-factorization retries.
    pub shift: C64,
}

/// Restart count so that the first cycle plus thick restarts stay within the
/// matvec budget.
fn arnoldi_budget(krylov_dim: usize, nev: usize, max_matvecs: usize) -> (usize, usize) {
    let m = krylov_dim.min(max_matvecs).max(nev + 1);
    let keep = (nev + (m - nev) / 2).clamp(nev, m - 1);
    let restarts = max_matvecs.saturating_sub(m) / (m - keep).max(1);
    (m, restarts)
}

/// Eigenpair of the local operator closest to its target shift.
///
/// The dense path factorizes `L_l − τI` once and runs Arnoldi on the inverse;
/// a singular factorization retries with `τ` scaled by ten. The matrix-free
/// path iterates on `L_l` directly towards its rightmost eigenvalue. Among
/// near-degenerate candidates the one overlapping most with `previous` wins.
pub fn shift_invert_solve<R: Rng>(
    problem: &LocalProblem,
    previous: &[C64],
    opts: &SolveOptions,
    rng: &mut R,
) -> Result<LocalSolution> {
    let dim = problem.dimension();
    if previous.len() != dim {
        return Err(Error::dims("local start vector", &[previous.len()], &[dim]));
    }
    let pn = vec_norm(previous);
    let start: Vec<C64> = previous
        .iter()
        .map(|z| {
            let scale = if pn > 0.0 { pn } else { 1.0 };
            let kick = if opts.real {
                C64::new(rng.random_range(-1.0..1.0), 0.0)
            } else {
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            };
            z + kick * opts.start_noise * scale
        })
        .collect();
    let seed = rng.random::<u64>();

    if dim == 1 {
        let mut y = [ZERO];
        problem.apply(&[C64::new(1.0, 0.0)], &mut y)?;
        return Ok(LocalSolution {
            eigenvalue: y[0],
            vector: vec![C64::new(1.0, 0.0)],
            converged: true,
            matvecs: 1,
            shift: problem.target_shift,
        });
    }

    let (candidates, matvecs, shift) = match &problem.operator {
        LocalOperator::Dense(m) => {
            let mut tau = problem.target_shift;
            let mut lu = None;
            for _ in 0..6 {
                let mut shifted = m.clone();
                for i in 0..dim {
                    shifted[(i, i)] -= tau;
                }
                match LuFactor::new(&shifted) {
                    Ok(f) => {
                        lu = Some(f);
                        break;
                    }
                    Err(Error::Singular { .. }) => {
                        debug!("shift {tau} hits an eigenvalue, retrying with 10x");
                        tau *= 10.0;
                    }
                    Err(e) => return Err(e),
                }
            }
            let lu = lu.ok_or_else(|| Error::Eigensolver("no regular shift found".into()))?;
            let nev = 2.min(dim);
            let (krylov_dim, max_restarts) = arnoldi_budget(opts.krylov_dim, nev, opts.max_matvecs);
            let aopts = ArnoldiOptions {
                krylov_dim,
                max_restarts,
                tol: opts.tol,
                abs_tol: 0.0,
                nev,
                nconv: Some(1),
                target: Target::LargestMagnitude,
                seed,
            };
            let res = arnoldi_eigs(
                |x, y| {
                    y.copy_from_slice(x);
                    lu.solve_in_place(y);
                },
                dim,
                Some(&start),
                &aopts,
            )?;
            let cands: Vec<(C64, Vec<C64>, bool)> = res
                .pairs
                .into_iter()
                .map(|p| (tau + C64::new(1.0, 0.0) / p.value, p.vector, p.converged))
                .collect();
            (cands, res.matvecs, tau)
        }
        LocalOperator::MatrixFree { .. } => {
            let (krylov_dim, max_restarts) = arnoldi_budget(opts.krylov_dim, 1, opts.max_matvecs);
            let aopts = ArnoldiOptions {
                krylov_dim,
                max_restarts,
                tol: opts.tol,
                abs_tol: opts.abs_tol,
                nev: 1,
                nconv: None,
                target: Target::LargestReal,
                seed,
            };
            let mut failure = None;
            let res = arnoldi_eigs(
                |x, y| {
                    if let Err(e) = problem.apply(x, y) {
                        failure.get_or_insert(e);
                    }
                },
                dim,
                Some(&start),
                &aopts,
            )?;
            if let Some(e) = failure {
                return Err(e);
            }
            let cands = res
                .pairs
                .into_iter()
                .map(|p| (p.value, p.vector, p.converged))
                .collect();
            (cands, res.matvecs, problem.target_shift)
        }
    };

    // unconverged extra pairs only compete when nothing converged
    let any_converged = candidates.iter().any(|c| c.2);
    let candidates: Vec<_> = candidates
        .into_iter()
        .filter(|c| c.2 || !any_converged)
        .collect();
    let best = candidates
        .iter()
        .map(|(l, _, _)| (l - shift).norm())
        .fold(f64::INFINITY, f64::min);
    let near = 1.5 * best + 1e-12 * shift.norm().max(1.0);
    let (eigenvalue, mut vector, pair_converged) = candidates
        .into_iter()
        .filter(|(l, _, _)| (l - shift).norm() <= near)
        .max_by(|a, b| {
            vdot(&a.1, previous)
                .norm()
                .total_cmp(&vdot(&b.1, previous).norm())
        })
        .ok_or_else(|| Error::Eigensolver("Arnoldi returned no Ritz pairs".into()))?;

    let ov = vdot(&vector, previous);
    if ov.norm() > 0.0 {
        let phase = ov.conj() / ov.norm();
        vector.iter_mut().for_each(|z| *z *= phase.conj());
    }
    if opts.real {
        // a real eigenvector times a phase has Σ v² = e^{2iθ}
        let sq: C64 = vector.iter().map(|z| z * z).sum();
        if sq.norm() > 1e-3 * vec_norm(&vector).powi(2) {
            let phase = (sq / sq.norm()).sqrt();
            vector.iter_mut().for_each(|z| *z *= phase.conj());
        }
        let along: f64 = vector.iter().zip(previous).map(|(v, p)| v.re * p.re).sum();
        let sign = if along < 0.0 { -1.0 } else { 1.0 };
        vector
            .iter_mut()
            .for_each(|z| *z = C64::new(sign * z.re, 0.0));
    }
    let n = vec_norm(&vector);
    if !(n > 0.0) {
        return Err(Error::Eigensolver("eigenvector has no real part".into()));
    }
    vector.iter_mut().for_each(|z| *z /= n);
    Ok(LocalSolution {
        eigenvalue,
        vector,
        converged: pair_converged,
        matvecs,
        shift,
    })
}
