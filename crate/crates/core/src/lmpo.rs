//! The Liouvillian as a matrix product operator.
//!
//! Sums of finite-range superoperator strings are encoded by a lower-triangular
//! transfer automaton. Bond state 0 is "done" (a term has been completed to the
//! left, identities follow), the last bond state is "ready" (only identities so
//! far), and every proper prefix of a coupling string gets its own pending
//! state. Strings sharing a prefix share its states, so for the Ising chain the
//! nearest-neighbour model needs `D_W = 4` and adding next-nearest couplings
//! gives `D_W = 6`.
//!
//! Site tensors are stored as `(w_left, w_right, phys_out, phys_in)` with
//! `phys = d²`. The first site keeps only the "ready" row and the last site
//! only the "done" column.

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{hermitian_basis, local_superoperator_terms, Model, ModelSpec, SuperTerm};
use crate::mps::MpsState;
use crate::tensor::{contract, Matrix, Tensor, C64};

/// Largest chain handled by the dense test bridges.
pub const MAX_DENSE_SITES: usize = 7;
/// Element budget for dense `d^{2N} × d^{2N}` matrices (about 2 GiB).
pub const MAX_DENSE_ELEMENTS: usize = 1 << 27;

#[derive(Clone, Debug, PartialEq)]
pub struct MpoTensor {
    data: Tensor,
}

impl MpoTensor {
    pub fn from_tensor(data: Tensor) -> Result<Self> {
        let s = data.shape();
        if s.len() != 4 || s[2] != s[3] {
            return Err(Error::dims("MPO tensor must be (wl, wr, p, p)", s, &[]));
        }
        Ok(MpoTensor { data })
    }

    pub fn bond_left(&self) -> usize {
        self.data.shape()[0]
    }

    pub fn bond_right(&self) -> usize {
        self.data.shape()[1]
    }

    pub fn phys(&self) -> usize {
        self.data.shape()[2]
    }

    pub fn tensor(&self) -> &Tensor {
        &self.data
    }

    /// The `p × p` operator on the automaton transition `wl → wr`.
    pub fn block(&self, wl: usize, wr: usize) -> &[C64] {
        let p = self.phys();
        let k = (wl * self.bond_right() + wr) * p * p;
        &self.data.data()[k..k + p * p]
    }

    fn block_mut(&mut self, wl: usize, wr: usize) -> &mut [C64] {
        let p = self.phys();
        let k = (wl * self.bond_right() + wr) * p * p;
        &mut self.data.data_mut()[k..k + p * p]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LiouvillianMpo {
    tensors: Vec<MpoTensor>,
    bond_dim: usize,
    local_dim: usize,
    /// Involution on the bulk automaton states pairing each pending string
    /// with its image under `ρ → ρ†`, when the generator preserves
    /// Hermiticity and the automaton layout is known.
    conjugation: Option<Vec<usize>>,
}

impl LiouvillianMpo {
    pub fn from_model(model: &Model) -> Result<Self> {
        model.validate()?;
        let n = model.n_sites;
        let p = model.local_dim * model.local_dim;
        let per_site: Vec<Vec<SuperTerm>> = (0..n)
            .map(|s| local_superoperator_terms(model, s))
            .collect::<Result<_>>()?;

        // intern operators so that prefixes can be compared by id
        let mut ops: Vec<Matrix> = Vec::new();
        let mut intern = |m: &Matrix| -> usize {
            match ops.iter().position(|o| o == m) {
                Some(k) => k,
                None => {
                    ops.push(m.clone());
                    ops.len() - 1
                }
            }
        };
        let mut strings: Vec<(usize, C64, Vec<usize>)> = Vec::new();
        for (site, terms) in per_site.iter().enumerate() {
            for t in terms.iter().filter(|t| t.range() > 0) {
                let ids: Vec<usize> = t.operators.iter().map(&mut intern).collect();
                strings.push((site, t.coefficient, ids));
            }
        }
        let mut states: HashMap<Vec<usize>, usize> = HashMap::new();
        for (_, _, ids) in &strings {
            for len in 1..ids.len() {
                let next = states.len() + 1;
                states.entry(ids[..len].to_vec()).or_insert(next);
            }
        }
        let bond_dim = states.len() + 2;
        let (done, ready) = (0, bond_dim - 1);
        let conjugation = conjugation_pairs(&ops, &states, bond_dim);

        let identity = Matrix::identity(p);
        let mut bulk: Vec<MpoTensor> = (0..n)
            .map(|_| MpoTensor {
                data: Tensor::zeros(&[bond_dim, bond_dim, p, p]),
            })
            .collect();
        for (site, w) in bulk.iter_mut().enumerate() {
            w.block_mut(done, done).copy_from_slice(identity.data());
            w.block_mut(ready, ready).copy_from_slice(identity.data());
            for t in per_site[site].iter().filter(|t| t.range() == 0) {
                add_scaled(w.block_mut(ready, done), t.coefficient, &t.operators[0]);
            }
        }
        for (start, coefficient, ids) in &strings {
            let r = ids.len() - 1;
            let state_of = |len: usize| states[&ids[..len]];
            bulk[*start]
                .block_mut(ready, state_of(1))
                .copy_from_slice(ops[ids[0]].data());
            for j in 1..r {
                bulk[start + j]
                    .block_mut(state_of(j), state_of(j + 1))
                    .copy_from_slice(ops[ids[j]].data());
            }
            add_scaled(
                bulk[start + r].block_mut(state_of(r), done),
                *coefficient,
                &ops[ids[r]],
            );
        }

        let tensors = bulk
            .into_iter()
            .enumerate()
            .map(|(site, w)| {
                let rows: Vec<usize> = if site == 0 {
                    vec![ready]
                } else {
                    (0..bond_dim).collect()
                };
                let cols: Vec<usize> = if site == n - 1 {
                    vec![done]
                } else {
                    (0..bond_dim).collect()
                };
                slice_bonds(&w, &rows, &cols)
            })
            .collect();
        Ok(LiouvillianMpo {
            tensors,
            bond_dim,
            local_dim: model.local_dim,
            conjugation,
        })
    }

    /// Assembles an MPO directly from site tensors.
    pub fn from_tensors(tensors: Vec<MpoTensor>, local_dim: usize) -> Result<Self> {
        if tensors.is_empty() {
            return Err(Error::Usage("an MPO needs at least one site".into()));
        }
        let p = local_dim * local_dim;
        for (k, w) in tensors.iter().enumerate() {
            if w.phys() != p {
                return Err(Error::dims(
                    format!("MPO site {k} physical extent"),
                    &[w.phys()],
                    &[p],
                ));
            }
            if k > 0 && tensors[k - 1].bond_right() != w.bond_left() {
                return Err(Error::dims(
                    format!("MPO bond between sites {} and {k}", k - 1),
                    &[tensors[k - 1].bond_right()],
                    &[w.bond_left()],
                ));
            }
        }
        if tensors[0].bond_left() != 1 || tensors[tensors.len() - 1].bond_right() != 1 {
            return Err(Error::Usage("MPO boundary bonds must have extent 1".into()));
        }
        let bond_dim = tensors
            .iter()
            .map(|w| w.bond_left().max(w.bond_right()))
            .max()
            .unwrap_or(1);
        Ok(LiouvillianMpo {
            tensors,
            bond_dim,
            local_dim,
            conjugation: None,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.tensors.len()
    }

    /// `D_W`, the largest MPO bond extent.
    pub fn bond_dim(&self) -> usize {
        self.bond_dim
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn phys_dim(&self) -> usize {
        self.local_dim * self.local_dim
    }

    pub fn tensors(&self) -> &[MpoTensor] {
        &self.tensors
    }

    pub fn site(&self, k: usize) -> &MpoTensor {
        &self.tensors[k]
    }

    /// The same generator acting on coefficients in [`hermitian_basis`], with
    /// each pair of conjugate pending strings recombined into real and
    /// imaginary parts by a unitary bond gauge, so that every site tensor is
    /// real. `None` when the MPO was not built from a Hermiticity-preserving
    /// model.
    pub fn hermitian_form(&self) -> Option<LiouvillianMpo> {
        let pairs = self.conjugation.as_ref()?;
        let dw = self.bond_dim;
        let p = self.phys_dim();
        let u = hermitian_basis(self.local_dim);
        let ud = u.adjoint();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut g = Matrix::zeros(dw, dw);
        for (a, &b) in pairs.iter().enumerate() {
            match a.cmp(&b) {
                Ordering::Equal => g[(a, a)] = C64::new(1.0, 0.0),
                Ordering::Less => {
                    g[(a, a)] = C64::new(s, 0.0);
                    g[(a, b)] = C64::new(s, 0.0);
                    g[(b, a)] = C64::new(0.0, s);
                    g[(b, b)] = C64::new(0.0, -s);
                }
                Ordering::Greater => {}
            }
        }
        let g_inv = g.adjoint();
        let n = self.n_sites();
        let (done, ready) = (0, dw - 1);
        let mut tensors = Vec::with_capacity(n);
        for (k, w) in self.tensors.iter().enumerate() {
            let rows: Vec<usize> = if k == 0 {
                vec![ready]
            } else {
                (0..dw).collect()
            };
            let cols: Vec<usize> = if k == n - 1 {
                vec![done]
            } else {
                (0..dw).collect()
            };
            if w.bond_left() != rows.len() || w.bond_right() != cols.len() {
                return None;
            }
            let rotated: Vec<Matrix> = (0..rows.len() * cols.len())
                .map(|idx| {
                    let b = Matrix::from_vec(
                        p,
                        p,
                        w.block(idx / cols.len(), idx % cols.len()).to_vec(),
                    )
                    .expect("block shape");
                    u.matmul(&b)
                        .and_then(|m| m.matmul(&ud))
                        .expect("block shape")
                })
                .collect();
            let mut out = Tensor::zeros(&[rows.len(), cols.len(), p, p]);
            let scale = rotated
                .iter()
                .map(Matrix::max_abs)
                .fold(0.0, f64::max)
                .max(1.0);
            for (i, &ri) in rows.iter().enumerate() {
                for (j, &cj) in cols.iter().enumerate() {
                    let mut acc = Matrix::zeros(p, p);
                    for (a, &ra) in rows.iter().enumerate() {
                        for (b, &cb) in cols.iter().enumerate() {
                            let coef = g[(ri, ra)] * g_inv[(cb, cj)];
                            if coef != C64::new(0.0, 0.0) {
                                acc += &rotated[a * cols.len() + b].scale(coef);
                            }
                        }
                    }
                    if acc.data().iter().any(|z| z.im.abs() > 1e-12 * scale) {
                        return None;
                    }
                    let k0 = (i * cols.len() + j) * p * p;
                    for (dst, z) in out.data_mut()[k0..k0 + p * p].iter_mut().zip(acc.data()) {
                        *dst = C64::new(z.re, 0.0);
                    }
                }
            }
            tensors.push(MpoTensor { data: out });
        }
        Some(LiouvillianMpo {
            tensors,
            bond_dim: self.bond_dim,
            local_dim: self.local_dim,
            conjugation: None,
        })
    }
}

/// `Θ S Θ` for the antiunitary `Θ|ρ⟩⟩ = |ρ†⟩⟩`: entries conjugated and both
/// composite indices `Σ = c·d + r` transposed to `r·d + c`.
fn conjugate_superoperator(m: &Matrix, d: usize) -> Matrix {
    let swap = |sigma: usize| (sigma % d) * d + sigma / d;
    Matrix::from_fn(m.rows(), m.cols(), |i, j| m[(swap(i), swap(j))].conj())
}

/// Pairs automaton states whose prefixes are conjugate images of each other;
/// `done` and `ready` map to themselves.
fn conjugation_pairs(
    ops: &[Matrix],
    states: &HashMap<Vec<usize>, usize>,
    bond_dim: usize,
) -> Option<Vec<usize>> {
    let d = (ops.first().map_or(1, Matrix::rows) as f64).sqrt().round() as usize;
    let partner: Vec<Option<usize>> = ops
        .iter()
        .map(|o| {
            let c = conjugate_superoperator(o, d);
            ops.iter()
                .position(|q| q.max_abs_diff(&c) <= 1e-14 * c.max_abs().max(1.0))
        })
        .collect();
    let mut pairs: Vec<usize> = (0..bond_dim).collect();
    for (prefix, &state) in states {
        let image: Vec<usize> = prefix
            .iter()
            .map(|&id| partner[id])
            .collect::<Option<_>>()?;
        pairs[state] = *states.get(&image)?;
    }
    pairs
        .iter()
        .enumerate()
        .all(|(a, &b)| pairs[b] == a)
        .then_some(pairs)
}

fn add_scaled(dst: &mut [C64], alpha: C64, m: &Matrix) {
    for (d, s) in dst.iter_mut().zip(m.data()) {
        *d += alpha * s;
    }
}

fn slice_bonds(w: &MpoTensor, rows: &[usize], cols: &[usize]) -> MpoTensor {
    let p = w.phys();
    let mut out = Tensor::zeros(&[rows.len(), cols.len(), p, p]);
    let pp = p * p;
    for (i, &r) in rows.iter().enumerate() {
        for (j, &c) in cols.iter().enumerate() {
            let k = (i * cols.len() + j) * pp;
            out.data_mut()[k..k + pp].copy_from_slice(w.block(r, c));
        }
    }
    MpoTensor { data: out }
}

/// The Liouvillian MPO of the Ising chain described by `spec`.
pub fn build_mpo(spec: &ModelSpec) -> Result<LiouvillianMpo> {
    spec.validate()?;
    LiouvillianMpo::from_model(&spec.to_model())
}

pub(crate) fn dense_guard(n_sites: usize, local_dim: usize) -> Result<usize> {
    let dim = (local_dim * local_dim)
        .checked_pow(n_sites as u32)
        .ok_or_else(|| Error::Resource("dense dimension overflows".into()))?;
    if n_sites > MAX_DENSE_SITES || dim.saturating_mul(dim) > MAX_DENSE_ELEMENTS {
        return Err(Error::Resource(format!(
            "dense superoperator for {n_sites} sites ({dim} x {dim}) exceeds the memory guard"
        )));
    }
    Ok(dim)
}

/// Contracts every MPO bond into a dense matrix in the interleaved basis.
pub fn mpo_to_dense(mpo: &LiouvillianMpo) -> Result<Matrix> {
    let dim = dense_guard(mpo.n_sites(), mpo.local_dim())?;
    let p = mpo.phys_dim();
    let w0 = mpo.site(0).tensor();
    // acc axes: (w, out, in)
    let mut acc = w0.clone().reshape(&[w0.shape()[1], p, p])?;
    let mut block = p;
    for w in &mpo.tensors()[1..] {
        let t = contract(&acc, w.tensor(), &[(0, 0)])?; // (o, i, w', s', s)
        let t = t.permute(&[2, 0, 3, 1, 4])?; // (w', o, s', i, s)
        block *= p;
        acc = t.reshape(&[w.bond_right(), block, block])?;
    }
    debug_assert_eq!(block, dim);
    Ok(acc.into_matrix(2))
}

/// `L |ρ⟩⟩` as an MPS with bond extents multiplied by the MPO bonds. No
/// truncation and no canonicalization is performed.
pub fn apply_mpo(mpo: &LiouvillianMpo, state: &MpsState) -> Result<MpsState> {
    if mpo.n_sites() != state.n_sites() || mpo.phys_dim() != state.phys_dim() {
        return Err(Error::dims(
            "apply_mpo (sites, phys)",
            &[mpo.n_sites(), mpo.phys_dim()],
            &[state.n_sites(), state.phys_dim()],
        ));
    }
    let p = mpo.phys_dim();
    let sites = mpo
        .tensors()
        .iter()
        .zip(state.sites())
        .map(|(w, m)| {
            let (a, b) = (m.shape()[0], m.shape()[2]);
            let t = contract(w.tensor(), m, &[(3, 1)])?; // (w, w', s', a, b)
            let t = t.permute(&[3, 0, 2, 4, 1])?; // (a, w, s', b, w')
            t.reshape(&[a * w.bond_left(), p, b * w.bond_right()])
        })
        .collect::<Result<Vec<_>>>()?;
    MpsState::from_sites(sites, state.local_dim())
}

/// `⟨⟨ρ|L|ρ⟩⟩` by a left-to-right transfer contraction.
pub fn expectation_value(mpo: &LiouvillianMpo, state: &MpsState) -> Result<C64> {
    let applied = apply_mpo(mpo, state)?;
    crate::mps::overlap(state, &applied)
}
