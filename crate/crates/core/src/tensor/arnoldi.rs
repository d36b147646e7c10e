//! Restarted Arnoldi iteration for a few eigenpairs of a linear map.
//!
//! The map is only ever applied to vectors, so the same routine serves dense
//! operators, LU-backed inverses and matrix-free contractions. Restarts keep
//! the wanted Ritz directions (thick restart): with `V` the current basis and
//! `Y` an orthonormal basis of the kept Ritz vectors of the projected matrix,
//! `A (V Y) = (V Y) (Y† H Y) + v_next (b Y)` is again an Arnoldi-type relation
//! and the iteration simply continues from `v_next`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{eig, qr, vdot, vec_norm, Matrix, C64, ZERO};
use crate::error::{Error, Result};

/// Which end of the spectrum the iteration converges to.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Target {
    LargestMagnitude,
    /// Rightmost eigenvalues, e.g. the slowest-decaying modes of a generator.
    LargestReal,
    ClosestTo(C64),
}

impl Target {
    fn distance(&self, z: C64) -> f64 {
        match *self {
            Target::LargestMagnitude => -z.norm(),
            Target::LargestReal => -z.re,
            Target::ClosestTo(s) => (z - s).norm(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ArnoldiOptions {
    pub krylov_dim: usize,
    pub max_restarts: usize,
    pub tol: f64,
    /// Residual floor below which a pair always counts as converged, for
    /// targets near zero where a relative tolerance is meaningless.
    pub abs_tol: f64,
    /// Number of wanted eigenpairs.
    pub nev: usize,
    /// How many of the leading pairs must meet the tolerance; all `nev` when
    /// unset. The rest are returned as they stand.
    pub nconv: Option<usize>,
    pub target: Target,
    /// Seed for the random start vector used when no start is supplied.
    pub seed: u64,
}

impl Default for ArnoldiOptions {
    fn default() -> Self {
        ArnoldiOptions {
            krylov_dim: 30,
            max_restarts: 10,
            tol: 1e-12,
            abs_tol: 0.0,
            nev: 1,
            nconv: None,
            target: Target::LargestMagnitude,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RitzPair {
    pub value: C64,
    /// Unit-norm Ritz vector.
    pub vector: Vec<C64>,
    /// Explicit residual `‖A x − θ x‖`.
    pub residual: f64,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct ArnoldiResult {
    /// Ritz pairs ordered by closeness to the target.
    pub pairs: Vec<RitzPair>,
    /// True when every returned pair met the tolerance.
    pub converged: bool,
    pub restarts: usize,
    pub matvecs: usize,
}

/// Ritz pairs of `apply` (a fixed linear map on `C^dim`) nearest the target.
///
/// A pair `(θ, x)` counts as converged once
/// `‖A x − θ x‖ ≤ max(tol · max(|θ|, tiny), abs_tol)`.
/// If the restart budget runs out the best available pairs are returned with
/// `converged = false`.
pub fn arnoldi_eigs<F>(
    mut apply: F,
    dim: usize,
    start: Option<&[C64]>,
    opts: &ArnoldiOptions,
) -> Result<ArnoldiResult>
where
    F: FnMut(&[C64], &mut [C64]),
{
    if dim == 0 {
        return Err(Error::Usage("arnoldi on an empty space".into()));
    }
    if opts.krylov_dim == 0 || opts.nev == 0 {
        return Err(Error::Usage("krylov_dim and nev must be positive".into()));
    }
    if let Some(s) = start {
        if s.len() != dim {
            return Err(Error::dims("arnoldi start vector", &[dim], &[s.len()]));
        }
    }
    let m = opts.krylov_dim.min(dim);
    let nev = opts.nev.min(m);
    let nconv = opts.nconv.unwrap_or(nev).clamp(1, nev);

    let mut v0: Vec<C64> = start.map(<[C64]>::to_vec).unwrap_or_default();
    if v0.is_empty() || vec_norm(&v0) == 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        v0 = (0..dim)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
    }
    let n0 = vec_norm(&v0);
    v0.iter_mut().for_each(|z| *z /= n0);

    // basis[j] for j <= size; h is (m + 1) × m, column-major by Arnoldi column.
    let mut basis: Vec<Vec<C64>> = vec![v0];
    let mut h = Matrix::zeros(m + 1, m);
    let mut kept = 0usize;
    let mut matvecs = 0usize;
    let mut w = vec![ZERO; dim];

    for restart in 0..=opts.max_restarts {
        let mut size = m;
        let mut invariant = false;
        for j in kept..m {
            apply(&basis[j], &mut w);
            matvecs += 1;
            let av_norm = vec_norm(&w);
            // modified Gram-Schmidt, then one re-orthogonalization pass
            for _pass in 0..2 {
                for (i, b) in basis.iter().enumerate().take(j + 1) {
                    let c = vdot(b, &w);
                    h[(i, j)] += c;
                    for (wk, bk) in w.iter_mut().zip(b) {
                        *wk -= c * bk;
                    }
                }
            }
            let beta = vec_norm(&w);
            if beta <= 1e-13 * av_norm || beta == 0.0 {
                size = j + 1;
                invariant = true;
                break;
            }
            h[(j + 1, j)] = C64::new(beta, 0.0);
            basis.push(w.iter().map(|z| z / beta).collect());
        }

        let hm = Matrix::from_fn(size, size, |i, j| h[(i, j)]);
        let (theta, y) = eig(&hm)?;
        let mut order: Vec<usize> = (0..size).collect();
        order.sort_by(|&a, &b| {
            opts.target
                .distance(theta[a])
                .total_cmp(&opts.target.distance(theta[b]))
        });
        let res_row: Vec<C64> = (0..size)
            .map(|j| if invariant { ZERO } else { h[(size, j)] })
            .collect();
        let estimate = |k: usize| -> f64 {
            (0..size)
                .map(|i| res_row[i] * y[(i, k)])
                .sum::<C64>()
                .norm()
        };
        let wanted = &order[..nev.min(size)];
        let scale = theta
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let threshold = |z: C64| (opts.tol * z.norm().max(1e-12 * scale)).max(opts.abs_tol);
        let all_small = wanted
            .iter()
            .take(nconv)
            .all(|&k| estimate(k) <= threshold(theta[k]));

        if all_small || invariant || restart == opts.max_restarts || size <= nev {
            let mut pairs = Vec::with_capacity(wanted.len());
            for &k in wanted {
                let mut x = vec![ZERO; dim];
                for (i, b) in basis.iter().enumerate().take(size) {
                    let c = y[(i, k)];
                    for (xk, bk) in x.iter_mut().zip(b) {
                        *xk += c * bk;
                    }
                }
                let nx = vec_norm(&x);
                x.iter_mut().for_each(|z| *z /= nx);
                apply(&x, &mut w);
                matvecs += 1;
                let residual = w
                    .iter()
                    .zip(&x)
                    .map(|(a, b)| (a - theta[k] * b).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                pairs.push(RitzPair {
                    value: theta[k],
                    vector: x,
                    residual,
                    converged: residual <= threshold(theta[k]),
                });
            }
            let converged = pairs.iter().take(nconv).all(|p| p.converged);
            let out_of_budget = invariant || restart == opts.max_restarts || size <= nev;
            if converged || out_of_budget {
                return Ok(ArnoldiResult {
                    pairs,
                    converged,
                    restarts: restart,
                    matvecs,
                });
            }
        }

        // thick restart on the best `keep` Ritz directions
        let keep = (nev + (m - nev) / 2).clamp(nev, m - 1);
        let ysel = Matrix::from_fn(size, keep, |i, j| y[(i, order[j])]);
        let (q, _) = qr(&ysel);
        let t = q.adjoint().matmul(&hm)?.matmul(&q)?;
        let b: Vec<C64> = (0..keep)
            .map(|j| (0..size).map(|i| res_row[i] * q[(i, j)]).sum())
            .collect();
        let mut new_basis: Vec<Vec<C64>> = Vec::with_capacity(m + 1);
        for j in 0..keep {
            let mut x = vec![ZERO; dim];
            for (i, bv) in basis.iter().enumerate().take(size) {
                let c = q[(i, j)];
                for (xk, bk) in x.iter_mut().zip(bv) {
                    *xk += c * bk;
                }
            }
            new_basis.push(x);
        }
        new_basis.push(basis.swap_remove(size));
        basis = new_basis;
        h = Matrix::zeros(m + 1, m);
        for i in 0..keep {
            for j in 0..keep {
                h[(i, j)] = t[(i, j)];
            }
        }
        for (j, bj) in b.iter().enumerate() {
            h[(keep, j)] = *bj;
        }
        kept = keep;
    }
    unreachable!("restart loop always returns")
}
