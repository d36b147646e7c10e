//! Physical models and the operator-to-superoperator conventions.
//!
//! Density matrices are vectorized by stacking columns. For a single site with
//! local dimension `d`, element `ρ[r][c]` lands at the composite index
//! `Σ = c·d + r` (ket index `r` fastest), so `|X ρ Y⟩⟩ = (Yᵀ ⊗ X) |ρ⟩⟩` with
//! the left Kronecker factor acting on the slow (bra) index.
//!
//! On a chain the composite indices of all sites are concatenated with site 0
//! the most significant ("interleaved" order). The dense reference code in
//! [`crate::oracle`] instead stacks the columns of the full `d^N × d^N`
//! matrix; [`interleaved_to_stacked`] converts between the two.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Matrix, C64, I, ONE, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl FromStr for Pauli {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" | "i" => Ok(Pauli::I),
            "X" | "x" => Ok(Pauli::X),
            "Y" | "y" => Ok(Pauli::Y),
            "Z" | "z" => Ok(Pauli::Z),
            other => Err(Error::Usage(format!(
                "unknown Pauli operator '{other}' (expected one of I, X, Y, Z)"
            ))),
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Pauli::I => "I",
            Pauli::X => "X",
            Pauli::Y => "Y",
            Pauli::Z => "Z",
        };
        f.write_str(s)
    }
}

/// Pauli matrix in the basis where `Z = diag(1, −1)`.
pub fn pauli(kind: Pauli) -> Matrix {
    let (a, b, c, d) = match kind {
        Pauli::I => (ONE, ZERO, ZERO, ONE),
        Pauli::X => (ZERO, ONE, ONE, ZERO),
        Pauli::Y => (ZERO, -I, I, ZERO),
        Pauli::Z => (ONE, ZERO, ZERO, -ONE),
    };
    Matrix::from_vec(2, 2, vec![a, b, c, d]).expect("2x2")
}

/// `K = √γ (X − iY)/2 = √γ [[0, 0], [1, 0]]`, the decay channel towards the
/// `Z = −1` state.
pub fn lowering_jump(gamma: f64) -> Result<Matrix> {
    if !(gamma >= 0.0) {
        return Err(Error::Usage(format!(
            "dissipation rate must be >= 0, got {gamma}"
        )));
    }
    let mut k = Matrix::zeros(2, 2);
    k[(1, 0)] = C64::new(gamma.sqrt(), 0.0);
    Ok(k)
}

/// Superoperator of the map `ρ ↦ x ρ y`, i.e. `yᵀ ⊗ x`.
pub fn super_from_sandwich(x: &Matrix, y: &Matrix) -> Result<Matrix> {
    if !x.is_square() || !y.is_square() || x.rows() != y.rows() {
        return Err(Error::Usage(format!(
            "sandwich operands must be square and equal-sized, got {}x{} and {}x{}",
            x.rows(),
            x.cols(),
            y.rows(),
            y.cols()
        )));
    }
    Ok(y.transpose().kron(x))
}

/// Column-stacking vectorization of a square matrix.
pub fn vectorize(rho: &Matrix) -> Vec<C64> {
    let n = rho.rows();
    let mut v = Vec::with_capacity(n * n);
    for c in 0..n {
        for r in 0..n {
            v.push(rho[(r, c)]);
        }
    }
    v
}

/// Inverse of [`vectorize`].
pub fn unvectorize(v: &[C64]) -> Result<Matrix> {
    let n = (v.len() as f64).sqrt().round() as usize;
    if n * n != v.len() {
        return Err(Error::Usage(format!(
            "vector of length {} is not a vectorized square matrix",
            v.len()
        )));
    }
    Ok(Matrix::from_fn(n, n, |r, c| v[c * n + r]))
}

/// Unitary taking a vectorized `d × d` operator to its coefficients in an
/// orthonormal basis of Hermitian matrices: the diagonal units `E_jj`, then
/// `(E_jk + E_kj)/√2` and `i(E_kj − E_jk)/√2` for `j < k`. Hermitian
/// operators get real coefficients, and a Hermiticity-preserving
/// superoperator `S` becomes the real matrix `U S U†`.
pub fn hermitian_basis(d: usize) -> Matrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut basis: Vec<Matrix> = (0..d)
        .map(|j| Matrix::from_fn(d, d, |r, c| if r == j && c == j { ONE } else { ZERO }))
        .collect();
    for j in 0..d {
        for k in j + 1..d {
            basis.push(Matrix::from_fn(d, d, |r, c| {
                if (r, c) == (j, k) || (r, c) == (k, j) {
                    C64::new(s, 0.0)
                } else {
                    ZERO
                }
            }));
            basis.push(Matrix::from_fn(d, d, |r, c| match (r, c) {
                _ if (r, c) == (k, j) => C64::new(0.0, s),
                _ if (r, c) == (j, k) => C64::new(0.0, -s),
                _ => ZERO,
            }));
        }
    }
    Matrix::from_fn(d * d, d * d, |k, sigma| {
        basis[k][(sigma % d, sigma / d)].conj()
    })
}

/// Maps an index of the interleaved chain vector (site 0 most significant,
/// per-site `Σ = c·d + r`) to the column-stacked index of the full
/// `d^N × d^N` density matrix.
pub fn interleaved_to_stacked(index: usize, n_sites: usize, d: usize) -> usize {
    let p = d * d;
    let dn = d.pow(n_sites as u32);
    let (mut row, mut col) = (0usize, 0usize);
    let mut rest = index;
    let mut digits = vec![0usize; n_sites];
    for k in (0..n_sites).rev() {
        digits[k] = rest % p;
        rest /= p;
    }
    for &sigma in &digits {
        row = row * d + sigma % d;
        col = col * d + sigma / d;
    }
    col * dn + row
}

/// Reorders an interleaved chain vector into column-stacked order.
pub fn interleaved_vector_to_stacked(v: &[C64], n_sites: usize, d: usize) -> Vec<C64> {
    let mut out = vec![ZERO; v.len()];
    for (k, &z) in v.iter().enumerate() {
        out[interleaved_to_stacked(k, n_sites, d)] = z;
    }
    out
}

/// The `d^N × d^N` density matrix of an interleaved chain vector.
pub fn interleaved_to_density(v: &[C64], n_sites: usize, d: usize) -> Result<Matrix> {
    unvectorize(&interleaved_vector_to_stacked(v, n_sites, d))
}

/// A Hamiltonian term `coefficient · O₀ ⊗ O₁ ⊗ … ⊗ O_range` acting on
/// consecutive sites starting at the site it is attached to.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalTerm {
    pub range: usize,
    pub coefficient: f64,
    pub operators: Vec<Matrix>,
}

impl LocalTerm {
    pub fn new(coefficient: f64, operators: Vec<Matrix>) -> Result<Self> {
        if operators.is_empty() {
            return Err(Error::Usage(
                "a local term needs at least one operator".into(),
            ));
        }
        Ok(LocalTerm {
            range: operators.len() - 1,
            coefficient,
            operators,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JumpTerm {
    pub site: usize,
    pub operator: Matrix,
}

/// Parameters of the driven-dissipative Ising chain
/// `H = Σ h Zᵢ + J Xᵢ Xᵢ₊₁ + V Xᵢ Xᵢ₊₂` with decay `K = √γ σ⁻` on every site
/// and open boundaries.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub n_sites: usize,
    pub local_dim: usize,
    pub field_h: f64,
    pub coupling_j: f64,
    pub coupling_v: f64,
    pub gamma: f64,
}

impl ModelSpec {
    pub fn ising(n_sites: usize, h: f64, j: f64, v: f64, gamma: f64) -> Result<Self> {
        let spec = ModelSpec {
            n_sites,
            local_dim: 2,
            field_h: h,
            coupling_j: j,
            coupling_v: v,
            gamma,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.n_sites < 1 {
            problems.push(format!("n_sites must be >= 1, got {}", self.n_sites));
        }
        if self.local_dim != 2 {
            problems.push(format!(
                "the Ising chain needs local_dim = 2, got {}",
                self.local_dim
            ));
        }
        if !(self.gamma >= 0.0) {
            problems.push(format!("gamma must be >= 0, got {}", self.gamma));
        }
        for (name, x) in [
            ("h", self.field_h),
            ("J", self.coupling_j),
            ("V", self.coupling_v),
            ("gamma", self.gamma),
        ] {
            if !x.is_finite() {
                problems.push(format!("{name} must be finite, got {x}"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        ModelSpec { gamma, ..*self }
    }

    /// Largest energy scale of the model, `max(|h|, |J|, |V|, γ)`.
    pub fn energy_scale(&self) -> f64 {
        [self.field_h, self.coupling_j, self.coupling_v, self.gamma]
            .iter()
            .map(|x| x.abs())
            .fold(0.0, f64::max)
    }

    pub fn to_model(&self) -> Model {
        let n = self.n_sites;
        let (x, z) = (pauli(Pauli::X), pauli(Pauli::Z));
        let id = pauli(Pauli::I);
        let mut hamiltonian = Vec::new();
        for i in 0..n {
            if self.field_h != 0.0 {
                hamiltonian.push((i, LocalTerm::new(self.field_h, vec![z.clone()]).unwrap()));
            }
            if self.coupling_j != 0.0 && i + 1 < n {
                hamiltonian.push((
                    i,
                    LocalTerm::new(self.coupling_j, vec![x.clone(), x.clone()]).unwrap(),
                ));
            }
            if self.coupling_v != 0.0 && i + 2 < n {
                hamiltonian.push((
                    i,
                    LocalTerm::new(self.coupling_v, vec![x.clone(), id.clone(), x.clone()])
                        .unwrap(),
                ));
            }
        }
        let jumps = if self.gamma > 0.0 {
            let k = lowering_jump(self.gamma).expect("validated gamma");
            (0..n)
                .map(|site| JumpTerm {
                    site,
                    operator: k.clone(),
                })
                .collect()
        } else {
            Vec::new()
        };
        Model {
            n_sites: n,
            local_dim: self.local_dim,
            hamiltonian,
            jumps,
        }
    }
}

/// A general chain model: Hamiltonian terms attached to their first site plus
/// on-site jump operators.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub n_sites: usize,
    pub local_dim: usize,
    pub hamiltonian: Vec<(usize, LocalTerm)>,
    pub jumps: Vec<JumpTerm>,
}

impl Model {
    pub fn validate(&self) -> Result<()> {
        let d = self.local_dim;
        if self.n_sites == 0 || d < 2 {
            return Err(Error::Usage(format!(
                "model needs n_sites >= 1 and local_dim >= 2, got {} and {d}",
                self.n_sites
            )));
        }
        for (site, term) in &self.hamiltonian {
            if site + term.range >= self.n_sites {
                return Err(Error::Usage(format!(
                    "term of range {} at site {site} extends past the chain of {} sites",
                    term.range, self.n_sites
                )));
            }
            if term.operators.len() != term.range + 1
                || term
                    .operators
                    .iter()
                    .any(|o| o.rows() != d || o.cols() != d)
            {
                return Err(Error::Usage(format!(
                    "malformed Hamiltonian term at site {site}"
                )));
            }
        }
        for jump in &self.jumps {
            if jump.site >= self.n_sites || jump.operator.rows() != d || jump.operator.cols() != d {
                return Err(Error::Usage(format!(
                    "malformed jump operator at site {}",
                    jump.site
                )));
            }
            if !jump.operator.is_finite() {
                return Err(Error::Usage(format!(
                    "non-finite jump operator at site {}",
                    jump.site
                )));
            }
        }
        Ok(())
    }
}

/// A product of per-site superoperators (each `d² × d²`) on consecutive sites.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperTerm {
    pub coefficient: C64,
    pub operators: Vec<Matrix>,
}

impl SuperTerm {
    pub fn range(&self) -> usize {
        self.operators.len() - 1
    }
}

/// Lindblad dissipator of a single jump operator:
/// `K* ⊗ K − ½ I ⊗ K†K − ½ KᵀK* ⊗ I`.
pub fn dissipator(k: &Matrix) -> Matrix {
    let id = Matrix::identity(k.rows());
    let kdk = k.adjoint().matmul(k).expect("square jump operator");
    let jump = k.conj().kron(k);
    let left = id.kron(&kdk);
    let right = kdk.transpose().kron(&id);
    let mut out = jump;
    out += &left.scale(C64::new(-0.5, 0.0));
    out += &right.scale(C64::new(-0.5, 0.0));
    out
}

/// Superoperator terms whose leftmost site is `site`.
///
/// All on-site contributions (field commutator and dissipators) are summed
/// into a single range-0 term listed first; each Hamiltonian term of range
/// `r ≥ 1` contributes a ket-side string `−i c (I ⊗ Oₖ)` and a bra-side string
/// `+i c (Oₖᵀ ⊗ I)`.
pub fn local_superoperator_terms(model: &Model, site: usize) -> Result<Vec<SuperTerm>> {
    if site >= model.n_sites {
        return Err(Error::Usage(format!(
            "site {site} out of range for a chain of {} sites",
            model.n_sites
        )));
    }
    let d = model.local_dim;
    let id = Matrix::identity(d);
    let mut onsite = Matrix::zeros(d * d, d * d);
    let mut strings = Vec::new();
    for (s, term) in &model.hamiltonian {
        if *s != site || term.coefficient == 0.0 {
            continue;
        }
        let c = C64::new(term.coefficient, 0.0);
        if term.range == 0 {
            let o = &term.operators[0];
            onsite += &id.kron(o).scale(-I * c);
            onsite += &o.transpose().kron(&id).scale(I * c);
        } else if site + term.range < model.n_sites {
            strings.push(SuperTerm {
                coefficient: -I * c,
                operators: term.operators.iter().map(|o| id.kron(o)).collect(),
            });
            strings.push(SuperTerm {
                coefficient: I * c,
                operators: term
                    .operators
                    .iter()
                    .map(|o| o.transpose().kron(&id))
                    .collect(),
            });
        }
    }
    for jump in model.jumps.iter().filter(|j| j.site == site) {
        onsite += &dissipator(&jump.operator);
    }
    let mut out = Vec::with_capacity(strings.len() + 1);
    if !onsite.is_zero() {
        out.push(SuperTerm {
            coefficient: ONE,
            operators: vec![onsite],
        });
    }
    out.extend(strings);
    Ok(out)
}
