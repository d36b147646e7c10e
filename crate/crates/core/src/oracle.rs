//! Dense reference implementations for small chains.
//!
//! Everything here works with full `d^N × d^N` density matrices and the
//! column-stacked `d^{2N}` superoperator, built directly from Kronecker
//! products. None of it touches the tensor-network code, so it can serve as
//! an independent check of the MPO and the sweeps.

use crate::error::{Error, Result};
use crate::lmpo::dense_guard;
use crate::model::{lowering_jump, pauli, unvectorize, vectorize, ModelSpec, Pauli};
use crate::tensor::{eig, hermitian_eigenvalues, vec_norm, Matrix, C64, I, ONE};

#[derive(Clone, Debug)]
pub struct DenseLiouvillian {
    pub n_sites: usize,
    pub local_dim: usize,
    pub matrix: Matrix,
}

/// `I_{d^site} ⊗ op ⊗ I_{d^{n−site−1}}` with site 0 the most significant factor.
pub fn embed(op: &Matrix, site: usize, n_sites: usize) -> Matrix {
    let d = op.rows();
    let left = Matrix::identity(d.pow(site as u32));
    let right = Matrix::identity(d.pow((n_sites - site - 1) as u32));
    left.kron(op).kron(&right)
}

/// The chain Hamiltonian `Σ h Zᵢ + J Xᵢ Xᵢ₊₁ + V Xᵢ Xᵢ₊₂` as a dense matrix.
pub fn dense_hamiltonian(spec: &ModelSpec) -> Result<Matrix> {
    spec.validate()?;
    let n = spec.n_sites;
    let (x, z) = (pauli(Pauli::X), pauli(Pauli::Z));
    let dim = 2usize.pow(n as u32);
    let mut h = Matrix::zeros(dim, dim);
    let r = |c: f64| C64::new(c, 0.0);
    for i in 0..n {
        h += &embed(&z, i, n).scale(r(spec.field_h));
        if i + 1 < n {
            let xx = embed(&x, i, n).matmul(&embed(&x, i + 1, n))?;
            h += &xx.scale(r(spec.coupling_j));
        }
        if i + 2 < n {
            let xx = embed(&x, i, n).matmul(&embed(&x, i + 2, n))?;
            h += &xx.scale(r(spec.coupling_v));
        }
    }
    Ok(h)
}

/// The Lindblad superoperator in column-stacked order.
pub fn dense_liouvillian(spec: &ModelSpec) -> Result<DenseLiouvillian> {
    spec.validate()?;
    let n = spec.n_sites;
    dense_guard(n, spec.local_dim)?;
    let h = dense_hamiltonian(spec)?;
    let id = Matrix::identity(h.rows());
    let mut l = &id.kron(&h).scale(-I) + &h.transpose().kron(&id).scale(I);
    if spec.gamma > 0.0 {
        let k_local = lowering_jump(spec.gamma)?;
        let half = C64::new(-0.5, 0.0);
        for i in 0..n {
            let k = embed(&k_local, i, n);
            let kdk = k.adjoint().matmul(&k)?;
            l += &k.conj().kron(&k);
            l += &id.kron(&kdk).scale(half);
            l += &kdk.transpose().kron(&id).scale(half);
        }
    }
    Ok(DenseLiouvillian {
        n_sites: n,
        local_dim: spec.local_dim,
        matrix: l,
    })
}

/// The steady state extracted from the kernel, with diagnostics.
#[derive(Clone, Debug)]
pub struct NullSpace {
    /// Hermitized, unit-trace density matrix.
    pub rho: Matrix,
    /// Eigenvalue of smallest modulus (ideally zero).
    pub eigenvalue: C64,
    /// Second-smallest eigenvalue modulus, the dissipative gap.
    pub gap: f64,
    /// `‖ρ − ρ†‖_max` of the raw kernel vector after trace normalization.
    pub hermiticity_defect: f64,
    pub min_eigenvalue: f64,
}

/// Kernel of the Liouvillian by full eigendecomposition.
pub fn ness_null_space(l: &DenseLiouvillian) -> Result<NullSpace> {
    let (values, vectors) = eig(&l.matrix)?;
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].norm().total_cmp(&values[b].norm()));
    let gap = order
        .get(1)
        .map(|&k| values[k].norm())
        .unwrap_or(f64::INFINITY);
    if gap <= 1e-10 {
        return Err(Error::DegenerateKernel(gap));
    }
    let k0 = order[0];
    let raw = unvectorize(&vectors.column(k0))?;
    let tr = raw.trace();
    if tr.norm() < 1e-14 {
        return Err(Error::DegenerateTrace(tr.norm()));
    }
    let raw = raw.scale(ONE / tr);
    let hermiticity_defect = raw.max_abs_diff(&raw.adjoint());
    let mut rho = &raw + &raw.adjoint();
    rho = rho.scale(C64::new(0.5, 0.0));
    let tr = rho.trace();
    rho = rho.scale(ONE / tr);
    let min_eigenvalue = hermitian_eigenvalues(&rho)?[0];
    Ok(NullSpace {
        rho,
        eigenvalue: values[k0],
        gap,
        hermiticity_defect,
        min_eigenvalue,
    })
}

/// Largest time step the integrator is expected to be stable with:
/// `0.1 / max_i Σ_j |L_ij|`.
pub fn suggested_dt(l: &DenseLiouvillian) -> f64 {
    let m = &l.matrix;
    let row_max = (0..m.rows())
        .map(|i| m.row(i).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    if row_max > 0.0 {
        0.1 / row_max
    } else {
        f64::INFINITY
    }
}

/// Integrates `dρ/dt = Lρ` with classical fourth-order Runge–Kutta. The last
/// step is shortened to land exactly on `t_final`.
pub fn evolve_rk4(l: &DenseLiouvillian, rho0: &[C64], dt: f64, t_final: f64) -> Result<Vec<C64>> {
    let m = &l.matrix;
    if rho0.len() != m.cols() {
        return Err(Error::dims(
            "evolve_rk4 initial state",
            &[rho0.len()],
            &[m.cols()],
        ));
    }
    if !(dt > 0.0) || !(t_final >= 0.0) || !dt.is_finite() || !t_final.is_finite() {
        return Err(Error::Usage(format!(
            "evolve_rk4 needs dt > 0 and t_final >= 0, got {dt} and {t_final}"
        )));
    }
    let scale = vec_norm(rho0).max(f64::MIN_POSITIVE);
    let mut rho = rho0.to_vec();
    let mut t = 0.0;
    let axpy = |x: &[C64], a: C64, y: &[C64]| -> Vec<C64> {
        x.iter().zip(y).map(|(x, y)| x + a * y).collect()
    };
    while t < t_final {
        let h = dt.min(t_final - t);
        let hc = C64::new(h, 0.0);
        let k1 = m.matvec(&rho)?;
        let k2 = m.matvec(&axpy(&rho, hc * 0.5, &k1))?;
        let k3 = m.matvec(&axpy(&rho, hc * 0.5, &k2))?;
        let k4 = m.matvec(&axpy(&rho, hc, &k3))?;
        for i in 0..rho.len() {
            rho[i] += hc / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t += h;
        let norm = vec_norm(&rho);
        if !norm.is_finite() || norm > 1e6 * scale {
            return Err(Error::Unstable { t, dt });
        }
    }
    Ok(rho)
}

/// `tr(ρ O)/tr(ρ)` with the same single-site `op` placed on every listed site.
pub fn dense_observable(rho: &Matrix, op: &Matrix, sites: &[usize]) -> Result<C64> {
    let d = op.rows();
    let dim = rho.rows();
    let n = (dim as f64).log(d as f64).round() as usize;
    if !rho.is_square() || d.pow(n as u32) != dim {
        return Err(Error::dims(
            "dense_observable density matrix",
            &[rho.rows(), rho.cols()],
            &[d],
        ));
    }
    if let Some(&s) = sites.iter().find(|&&s| s >= n) {
        return Err(Error::Usage(format!("site {s} out of range for {n} sites")));
    }
    let tr = rho.trace();
    if tr.norm() < 1e-14 {
        return Err(Error::DegenerateTrace(tr.norm()));
    }
    let mut o = Matrix::identity(dim);
    for &s in sites {
        o = o.matmul(&embed(op, s, n))?;
    }
    Ok(rho.matmul(&o)?.trace() / tr)
}

/// Trace of a column-stacked density vector.
pub fn stacked_trace(v: &[C64]) -> C64 {
    let id = vectorize(&Matrix::identity((v.len() as f64).sqrt().round() as usize));
    id.iter().zip(v).map(|(a, b)| a * b).sum()
}
