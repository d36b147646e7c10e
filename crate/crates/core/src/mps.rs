//! Vectorized density matrices as matrix product states.
//!
//! Site tensors have shape `(D_left, d², D_right)`. States produced by the
//! canonicalizing operations are kept in mixed canonical form around
//! `center`; [`apply_mpo`](crate::lmpo::apply_mpo) returns a general,
//! non-canonical state.
//!
//! Observables are ratios against the trace functional `⟨⟨I|`, the product of
//! `vec(identity)` on every site, so they are independent of the overall
//! normalization of the state.

use std::io::{Read, Write};

use rand::Rng;

use crate::error::{Error, Result};
use crate::lmpo::dense_guard;
use crate::model::{interleaved_to_density, vectorize};
use crate::tensor::{contract, qr, svd_truncated, Matrix, Tensor, C64, ONE, ZERO};

const MAGIC: &[u8; 8] = b"NESSMPS\0";
const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MpsState {
    sites: Vec<Tensor>,
    center: usize,
    local_dim: usize,
    max_bond: usize,
    canonical: bool,
}

impl MpsState {
    /// Wraps raw site tensors. The result is not assumed to be canonical.
    pub fn from_sites(sites: Vec<Tensor>, local_dim: usize) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::Usage("an MPS needs at least one site".into()));
        }
        let p = local_dim * local_dim;
        for (k, t) in sites.iter().enumerate() {
            let s = t.shape();
            if s.len() != 3 || s[1] != p || s[0] == 0 || s[2] == 0 {
                return Err(Error::dims(
                    format!("site {k} tensor (expected physical extent {p})"),
                    s,
                    &[],
                ));
            }
            if k > 0 && sites[k - 1].shape()[2] != s[0] {
                return Err(Error::dims(
                    format!("bond between sites {} and {k}", k - 1),
                    &[sites[k - 1].shape()[2]],
                    &[s[0]],
                ));
            }
        }
        let n = sites.len();
        if sites[0].shape()[0] != 1 || sites[n - 1].shape()[2] != 1 {
            return Err(Error::Usage(
                "MPS edge sites must have unit outer bonds".into(),
            ));
        }
        let max_bond = sites.iter().map(|t| t.shape()[2]).max().unwrap_or(1);
        Ok(MpsState {
            sites,
            center: 0,
            local_dim,
            max_bond,
            canonical: false,
        })
    }

    /// Bond-1 product state with every site equal to the normalized
    /// `local_vector`; the whole state has unit euclidean norm.
    pub fn product_init(n_sites: usize, local_vector: &[C64]) -> Result<Self> {
        let p = local_vector.len();
        let d = (p as f64).sqrt().round() as usize;
        if n_sites == 0 || d * d != p || d < 2 {
            return Err(Error::Usage(format!(
                "product_init needs n_sites >= 1 and a d²-vector, got {n_sites} sites and length {p}"
            )));
        }
        let norm = crate::tensor::vec_norm(local_vector);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Usage(
                "product_init needs a nonzero finite local vector".into(),
            ));
        }
        let t = Tensor::from_vec(&[1, p, 1], local_vector.iter().map(|z| z / norm).collect())?;
        Ok(MpsState {
            sites: vec![t; n_sites],
            center: 0,
            local_dim: d,
            max_bond: 1,
            canonical: true,
        })
    }

    /// `vec(I/d)^{⊗N}` normalized to unit euclidean norm.
    pub fn maximally_mixed(n_sites: usize, local_dim: usize) -> Result<Self> {
        Self::product_init(n_sites, &vectorize(&Matrix::identity(local_dim)))
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn phys_dim(&self) -> usize {
        self.local_dim * self.local_dim
    }

    pub fn center(&self) -> usize {
        self.center
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical
    }

    /// Largest bond extent currently present.
    pub fn max_bond(&self) -> usize {
        self.max_bond
    }

    /// Extents of the `N − 1` internal bonds.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.sites.len() - 1]
            .iter()
            .map(|t| t.shape()[2])
            .collect()
    }

    pub fn sites(&self) -> &[Tensor] {
        &self.sites
    }

    pub fn site(&self, k: usize) -> &Tensor {
        &self.sites[k]
    }

    /// Replaces the center tensor, which must keep its shape.
    pub fn set_center_tensor(&mut self, t: Tensor) -> Result<()> {
        let old = &self.sites[self.center];
        if old.shape() != t.shape() {
            return Err(Error::dims(
                "center tensor replacement",
                old.shape(),
                t.shape(),
            ));
        }
        self.sites[self.center] = t;
        Ok(())
    }

    /// Euclidean norm `√⟨⟨ρ|ρ⟩⟩`.
    pub fn norm(&self) -> f64 {
        if self.canonical {
            self.sites[self.center].norm()
        } else {
            overlap(self, self)
                .map(|z| z.re.max(0.0).sqrt())
                .unwrap_or(f64::NAN)
        }
    }

    /// Rescales to unit euclidean norm and returns the previous norm.
    pub fn normalize(&mut self) -> f64 {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            let k = if self.canonical { self.center } else { 0 };
            self.sites[k].scale_in_place(C64::new(1.0 / n, 0.0));
        }
        n
    }

    pub fn scale(&mut self, alpha: C64) {
        let k = if self.canonical { self.center } else { 0 };
        self.sites[k].scale_in_place(alpha);
    }

    /// Brings the state into mixed canonical form around `center` by exact QR
    /// sweeps (no truncation) and normalizes it. Returns the norm before
    /// normalization, which this route obtains without squaring.
    pub fn canonicalize(&mut self, center: usize) -> Result<f64> {
        let n = self.n_sites();
        if center >= n {
            return Err(Error::Usage(format!(
                "center {center} out of range for {n} sites"
            )));
        }
        for k in 0..center {
            self.qr_right(k);
        }
        for k in (center + 1..n).rev() {
            self.qr_left(k);
        }
        self.center = center;
        self.canonical = true;
        self.refresh_max_bond();
        Ok(self.normalize())
    }

    /// Left-normalizes site `k` by QR and pushes `R` into site `k + 1`.
    fn qr_right(&mut self, k: usize) {
        let s = self.sites[k].shape().to_vec();
        let (q, r) = qr(&self.sites[k].to_matrix(2));
        let kept = q.cols();
        self.sites[k] = Tensor::from_vec(&[s[0], s[1], kept], q.into_data()).expect("qr shape");
        let next = &self.sites[k + 1];
        let ns = next.shape().to_vec();
        let merged = r.matmul(&next.to_matrix(1)).expect("bond match");
        self.sites[k + 1] =
            Tensor::from_vec(&[kept, ns[1], ns[2]], merged.into_data()).expect("merge shape");
    }

    /// Right-normalizes site `k` by QR of its adjoint and pushes the factor
    /// into site `k − 1`.
    fn qr_left(&mut self, k: usize) {
        let s = self.sites[k].shape().to_vec();
        let (q, r) = qr(&self.sites[k].to_matrix(1).adjoint());
        let kept = q.cols();
        self.sites[k] =
            Tensor::from_vec(&[kept, s[1], s[2]], q.adjoint().into_data()).expect("qr shape");
        let prev = &self.sites[k - 1];
        let ps = prev.shape().to_vec();
        let merged = prev.to_matrix(2).matmul(&r.adjoint()).expect("bond match");
        self.sites[k - 1] =
            Tensor::from_vec(&[ps[0], ps[1], kept], merged.into_data()).expect("merge shape");
    }

    fn refresh_max_bond(&mut self) {
        self.max_bond = self.sites.iter().map(|t| t.shape()[2]).max().unwrap_or(1);
    }

    /// Moves the orthogonality center one site by SVD, keeping at most
    /// `max_bond` singular values above `cutoff` relative to the largest.
    /// Returns the discarded weight. The state is not renormalized.
    pub fn move_center(
        &mut self,
        direction: Direction,
        max_bond: usize,
        cutoff: f64,
    ) -> Result<f64> {
        if !self.canonical {
            return Err(Error::Usage(
                "move_center needs a canonical state; call canonicalize first".into(),
            ));
        }
        let k = self.center;
        let n = self.n_sites();
        match direction {
            Direction::Right => {
                if k + 1 >= n {
                    return Err(Error::Usage(format!(
                        "cannot move the center right of site {k}"
                    )));
                }
                let s = self.sites[k].shape().to_vec();
                let svd = svd_truncated(&self.sites[k].to_matrix(2), max_bond, cutoff)?;
                let r = svd.rank();
                self.sites[k] = Tensor::from_vec(&[s[0], s[1], r], svd.u.into_data())?;
                let sv = scaled_adjoint(&svd.v, &svd.s);
                let next = &self.sites[k + 1];
                let ns = next.shape().to_vec();
                let merged = sv.matmul(&next.to_matrix(1))?;
                self.sites[k + 1] = Tensor::from_vec(&[r, ns[1], ns[2]], merged.into_data())?;
                self.center = k + 1;
                self.refresh_max_bond();
                Ok(svd.discarded_weight)
            }
            Direction::Left => {
                if k == 0 {
                    return Err(Error::Usage("cannot move the center left of site 0".into()));
                }
                let s = self.sites[k].shape().to_vec();
                let svd = svd_truncated(&self.sites[k].to_matrix(1), max_bond, cutoff)?;
                let r = svd.rank();
                self.sites[k] = Tensor::from_vec(&[r, s[1], s[2]], svd.v.adjoint().into_data())?;
                let us = Matrix::from_fn(svd.u.rows(), r, |i, j| svd.u[(i, j)] * svd.s[j]);
                let prev = &self.sites[k - 1];
                let ps = prev.shape().to_vec();
                let merged = prev.to_matrix(2).matmul(&us)?;
                self.sites[k - 1] = Tensor::from_vec(&[ps[0], ps[1], r], merged.into_data())?;
                self.center = k - 1;
                self.refresh_max_bond();
                Ok(svd.discarded_weight)
            }
        }
    }

    /// Grows every bond towards `new_max`, capped by the largest extent the
    /// chain position allows. New entries are zero plus a uniform random
    /// perturbation of magnitude at most `noise`; the state is then brought
    /// back to mixed canonical form at the same center without truncation.
    pub fn pad_bonds<R: Rng>(&mut self, new_max: usize, noise: f64, rng: &mut R) -> Result<()> {
        if new_max < self.max_bond {
            return Err(Error::Usage(format!(
                "pad_bonds cannot shrink bonds (current {}, requested {new_max})",
                self.max_bond
            )));
        }
        if !(noise >= 0.0) {
            return Err(Error::Usage(format!("noise must be >= 0, got {noise}")));
        }
        let n = self.n_sites();
        let p = self.phys_dim();
        let targets: Vec<usize> = (0..n - 1)
            .map(|b| {
                let cap = allowed_bond(p, b, n);
                new_max.min(cap).max(self.sites[b].shape()[2])
            })
            .collect();
        if targets == self.bond_dims() {
            return Ok(());
        }
        // real states stay real
        let real = self.is_real();
        let mut sites = Vec::with_capacity(n);
        for (k, old) in self.sites.iter().enumerate() {
            let dl = if k == 0 { 1 } else { targets[k - 1] };
            let dr = if k == n - 1 { 1 } else { targets[k] };
            let os = old.shape();
            let t = Tensor::from_fn(&[dl, p, dr], |idx| {
                let inside = idx[0] < os[0] && idx[2] < os[2];
                let base = if inside { old.get(idx) } else { ZERO };
                if noise > 0.0 && !inside && real {
                    base + rng.random_range(-noise..=noise)
                } else if noise > 0.0 && !inside {
                    base + C64::new(
                        rng.random_range(-noise..=noise),
                        rng.random_range(-noise..=noise),
                    ) / std::f64::consts::SQRT_2
                } else {
                    base
                }
            });
            sites.push(t);
        }
        self.sites = sites;
        let center = self.center;
        let was_canonical = self.canonical;
        if was_canonical {
            for k in 0..center {
                self.qr_right(k);
            }
            for k in (center + 1..n).rev() {
                self.qr_left(k);
            }
        }
        self.refresh_max_bond();
        Ok(())
    }

    /// Whether every entry has a vanishing imaginary part.
    pub fn is_real(&self) -> bool {
        self.sites
            .iter()
            .all(|t| t.data().iter().all(|z| z.im == 0.0))
    }

    /// The same vector expressed in another local basis: `u` (of size
    /// `d² × d²`) acts on the physical index of every site. Canonical form is
    /// kept when `u` is unitary.
    pub fn change_basis(&self, u: &Matrix) -> Result<MpsState> {
        let p = self.phys_dim();
        if u.rows() != p || u.cols() != p {
            return Err(Error::dims(
                "local basis change",
                &[u.rows(), u.cols()],
                &[p, p],
            ));
        }
        let ut = Tensor::from_matrix(u.clone());
        let sites = self
            .sites
            .iter()
            .map(|t| contract(&ut, t, &[(1, 1)])?.permute(&[1, 0, 2]))
            .collect::<Result<Vec<_>>>()?;
        Ok(MpsState {
            sites,
            ..self.clone()
        })
    }

    /// An all-real MPS for the real part of the represented vector. Site
    /// matrices `A = R + iI` become `[[R, -I], [I, R]]`, with the edges
    /// reduced to `[R, -I]` and `[R; I]`, which doubles every bond. The
    /// result is not canonical.
    pub fn real_part(&self) -> Result<MpsState> {
        let n = self.n_sites();
        if n == 1 {
            let t = &self.sites[0];
            let data = t.data().iter().map(|z| C64::new(z.re, 0.0)).collect();
            return MpsState::from_sites(vec![Tensor::from_vec(t.shape(), data)?], self.local_dim);
        }
        let sites = self
            .sites
            .iter()
            .enumerate()
            .map(|(k, t)| {
                let [dl, p, dr] = [t.shape()[0], t.shape()[1], t.shape()[2]];
                let (bl, br) = (if k == 0 { 1 } else { 2 }, if k == n - 1 { 1 } else { 2 });
                Tensor::from_fn(&[bl * dl, p, br * dr], |idx| {
                    let (i, a) = (idx[0] / dl, idx[0] % dl);
                    let (j, b) = (idx[2] / dr, idx[2] % dr);
                    let z = t.get(&[a, idx[1], b]);
                    let v = match (i, j) {
                        (0, 0) | (1, 1) => z.re,
                        (0, 1) => -z.im,
                        _ => z.im,
                    };
                    C64::new(v, 0.0)
                })
            })
            .collect();
        MpsState::from_sites(sites, self.local_dim)
    }

    /// Full contraction into the interleaved `d^{2N}` vector.
    pub fn reconstruct_dense(&self) -> Result<Vec<C64>> {
        dense_guard(self.n_sites(), self.local_dim)?;
        let mut acc = self.sites[0].clone();
        for t in &self.sites[1..] {
            let rows = acc.len() / acc.shape()[acc.rank() - 1];
            let next = contract(&acc, t, &[(acc.rank() - 1, 0)])?;
            acc = next.reshape(&[rows * t.shape()[1], t.shape()[2]])?;
        }
        Ok(acc.into_data())
    }

    /// Serializes to the versioned little-endian checkpoint container.
    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        for x in [self.n_sites(), self.local_dim, self.center, self.max_bond] {
            w.write_all(&(x as u64).to_le_bytes())?;
        }
        w.write_all(&[self.canonical as u8])?;
        for t in &self.sites {
            for &x in t.shape() {
                w.write_all(&(x as u64).to_le_bytes())?;
            }
        }
        for t in &self.sites {
            for z in t.data() {
                w.write_all(&z.re.to_le_bytes())?;
                w.write_all(&z.im.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let bad = |what: &str| Error::Format(format!("MPS container: {what}"));
        let io = |e: std::io::Error| Error::Format(format!("MPS container: {e}"));
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != MAGIC {
            return Err(bad("bad magic"));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4).map_err(io)?;
        let version = u32::from_le_bytes(b4);
        if version != VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let read_u64 = |r: &mut R| -> Result<usize> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b).map_err(io)?;
            usize::try_from(u64::from_le_bytes(b)).map_err(|_| bad("extent overflows usize"))
        };
        let n = read_u64(r)?;
        let local_dim = read_u64(r)?;
        let center = read_u64(r)?;
        let max_bond = read_u64(r)?;
        let mut flag = [0u8; 1];
        r.read_exact(&mut flag).map_err(io)?;
        if n == 0 || n > 1 << 20 || center >= n {
            return Err(bad("inconsistent header"));
        }
        let mut shapes = Vec::with_capacity(n);
        for _ in 0..n {
            let s = [read_u64(r)?, read_u64(r)?, read_u64(r)?];
            if s.iter().any(|&x| x == 0 || x > 1 << 16) {
                return Err(bad("implausible site shape"));
            }
            shapes.push(s);
        }
        let mut sites = Vec::with_capacity(n);
        for s in shapes {
            let len = s[0] * s[1] * s[2];
            let mut data = Vec::with_capacity(len);
            let mut b = [0u8; 16];
            for _ in 0..len {
                r.read_exact(&mut b).map_err(io)?;
                let re = f64::from_le_bytes(b[..8].try_into().unwrap());
                let im = f64::from_le_bytes(b[8..].try_into().unwrap());
                data.push(C64::new(re, im));
            }
            sites.push(Tensor::from_vec(&s, data)?);
        }
        let mut state = MpsState::from_sites(sites, local_dim)?;
        if state.max_bond != max_bond {
            return Err(bad("max_bond does not match the site shapes"));
        }
        state.center = center;
        state.canonical = flag[0] != 0;
        Ok(state)
    }
}

/// Largest useful extent of bond `b` (between sites `b` and `b + 1`).
pub fn allowed_bond(p: usize, b: usize, n_sites: usize) -> usize {
    let left = (b + 1) as u32;
    let right = (n_sites - 1 - b) as u32;
    p.saturating_pow(left.min(right))
}

fn scaled_adjoint(v: &Matrix, s: &[f64]) -> Matrix {
    Matrix::from_fn(v.cols(), v.rows(), |i, j| v[(j, i)].conj() * s[i])
}

fn check_pair(a: &MpsState, b: &MpsState) -> Result<()> {
    if a.n_sites() != b.n_sites() || a.phys_dim() != b.phys_dim() {
        return Err(Error::Usage(format!(
            "overlap needs matching chains, got {} sites (p = {}) and {} sites (p = {})",
            a.n_sites(),
            a.phys_dim(),
            b.n_sites(),
            b.phys_dim()
        )));
    }
    Ok(())
}

/// `⟨⟨a|b⟩⟩` by left-to-right transfer contraction.
pub fn overlap(a: &MpsState, b: &MpsState) -> Result<C64> {
    check_pair(a, b)?;
    let mut env = Tensor::from_vec(&[1, 1], vec![ONE])?;
    for (ta, tb) in a.sites().iter().zip(b.sites()) {
        let t = contract(&env, tb, &[(1, 0)])?; // (a', s, b)
        env = contract(&ta.conj(), &t, &[(0, 0), (1, 1)])?; // (a'_new, b_new)
    }
    Ok(env.data()[0])
}

/// Per-site covector of the trace functional weighted by `op`:
/// `Σ_Σ w[Σ] ρ_site[Σ] = tr(op ρ_site)`.
fn trace_weights(op: &Matrix) -> &[C64] {
    op.data()
}

fn contract_site(t: &Tensor, w: &[C64]) -> Matrix {
    let s = t.shape();
    Matrix::from_fn(s[0], s[2], |a, b| {
        let mut acc = ZERO;
        for (k, wk) in w.iter().enumerate() {
            if *wk != ZERO {
                acc += wk * t.data()[(a * s[1] + k) * s[2] + b];
            }
        }
        acc
    })
}

/// Row vectors `⟨⟨I|` contracted with sites `0..k` for every `k` and column
/// vectors contracted with sites `k..N`.
struct TraceEnvs {
    left: Vec<Vec<C64>>,
    right: Vec<Vec<C64>>,
}

impl TraceEnvs {
    fn new(state: &MpsState) -> Self {
        let n = state.n_sites();
        let w = vectorize(&Matrix::identity(state.local_dim()));
        let transfers: Vec<Matrix> = state.sites().iter().map(|t| contract_site(t, &w)).collect();
        let mut left = vec![vec![ONE]];
        for m in &transfers {
            let prev = left.last().unwrap();
            left.push(
                (0..m.cols())
                    .map(|j| (0..m.rows()).map(|i| prev[i] * m[(i, j)]).sum())
                    .collect(),
            );
        }
        let mut right = vec![vec![ONE]; n + 1];
        for k in (0..n).rev() {
            let m = &transfers[k];
            right[k] = (0..m.rows())
                .map(|i| (0..m.cols()).map(|j| m[(i, j)] * right[k + 1][j]).sum())
                .collect();
        }
        TraceEnvs { left, right }
    }

    fn trace(&self) -> C64 {
        self.right[0][0]
    }
}

fn check_trace(state: &MpsState, tr: C64) -> Result<()> {
    if tr.norm() < 1e-14 * state.norm().max(f64::MIN_POSITIVE) {
        return Err(Error::DegenerateTrace(tr.norm()));
    }
    Ok(())
}

fn check_op(state: &MpsState, op: &Matrix, site: usize) -> Result<()> {
    let d = state.local_dim();
    if op.rows() != d || op.cols() != d {
        return Err(Error::dims(
            "observable operator",
            &[op.rows(), op.cols()],
            &[d, d],
        ));
    }
    if site >= state.n_sites() {
        return Err(Error::Usage(format!(
            "site {site} out of range for {} sites",
            state.n_sites()
        )));
    }
    Ok(())
}

/// `⟨⟨I|ρ⟩⟩`, the unnormalized trace of the represented density matrix.
pub fn trace(state: &MpsState) -> C64 {
    TraceEnvs::new(state).trace()
}

/// Trace-normalized `⟨O_site⟩`.
pub fn expectation(state: &MpsState, op: &Matrix, site: usize) -> Result<C64> {
    check_op(state, op, site)?;
    let envs = TraceEnvs::new(state);
    let tr = envs.trace();
    check_trace(state, tr)?;
    let m = contract_site(state.site(site), trace_weights(op));
    Ok(sandwich(&envs.left[site], &m, &envs.right[site + 1]) / tr)
}

fn sandwich(l: &[C64], m: &Matrix, r: &[C64]) -> C64 {
    let mut acc = ZERO;
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            acc += l[i] * m[(i, j)] * r[j];
        }
    }
    acc
}

fn row_times(l: &[C64], m: &Matrix) -> Vec<C64> {
    (0..m.cols())
        .map(|j| (0..m.rows()).map(|i| l[i] * m[(i, j)]).sum())
        .collect()
}

/// Trace-normalized `⟨A_{site_a} B_{site_b}⟩` for distinct sites.
pub fn correlation(
    state: &MpsState,
    op_a: &Matrix,
    op_b: &Matrix,
    site_a: usize,
    site_b: usize,
) -> Result<C64> {
    check_op(state, op_a, site_a)?;
    check_op(state, op_b, site_b)?;
    if site_a == site_b {
        return Err(Error::Usage(format!(
            "correlation needs distinct sites, got {site_a} twice"
        )));
    }
    let ((i, oi), (j, oj)) = if site_a < site_b {
        ((site_a, op_a), (site_b, op_b))
    } else {
        ((site_b, op_b), (site_a, op_a))
    };
    let envs = TraceEnvs::new(state);
    let tr = envs.trace();
    check_trace(state, tr)?;
    let w_id = vectorize(&Matrix::identity(state.local_dim()));
    let mut row = row_times(
        &envs.left[i],
        &contract_site(state.site(i), trace_weights(oi)),
    );
    for k in i + 1..j {
        row = row_times(&row, &contract_site(state.site(k), &w_id));
    }
    let last = contract_site(state.site(j), trace_weights(oj));
    Ok(sandwich(&row, &last, &envs.right[j + 1]) / tr)
}

/// Trace-normalized reduced density matrix on one site or two adjacent sites.
/// For two sites the first listed site is the most significant factor.
pub fn reduced_density_matrix(state: &MpsState, sites: &[usize]) -> Result<Matrix> {
    let n = state.n_sites();
    let ok = match sites {
        [a] => *a < n,
        [a, b] => *b == a + 1 && *b < n,
        _ => false,
    };
    if !ok {
        return Err(Error::Usage(format!(
            "reduced_density_matrix needs one site or two adjacent sites in range, got {sites:?}"
        )));
    }
    let envs = TraceEnvs::new(state);
    let tr = envs.trace();
    check_trace(state, tr)?;
    let first = sites[0];
    let last = *sites.last().unwrap();
    let mut block = state.site(first).clone();
    for k in first + 1..=last {
        let t = contract(&block, state.site(k), &[(2, 0)])?; // (a, s1, s2, b)
        let s = t.shape().to_vec();
        block = t.reshape(&[s[0], s[1] * s[2], s[3]])?;
    }
    let s = block.shape().to_vec();
    let l = &envs.left[first];
    let r = &envs.right[last + 1];
    let v: Vec<C64> = (0..s[1])
        .map(|sig| {
            let mut acc = ZERO;
            for (a, la) in l.iter().enumerate().take(s[0]) {
                for (b, rb) in r.iter().enumerate().take(s[2]) {
                    acc += la * block.data()[(a * s[1] + sig) * s[2] + b] * rb;
                }
            }
            acc / tr
        })
        .collect();
    interleaved_to_density(&v, sites.len(), state.local_dim())
}

/// Random complex MPS with bonds capped at `bond`, for tests.
#[cfg(test)]
pub(crate) fn random_state(n: usize, bond: usize, rng: &mut impl rand::Rng) -> MpsState {
    let p = 4;
    let sites = (0..n)
        .map(|k| {
            let dl = if k == 0 {
                1
            } else {
                bond.min(allowed_bond(p, k - 1, n))
            };
            let dr = if k == n - 1 {
                1
            } else {
                bond.min(allowed_bond(p, k, n))
            };
            Tensor::from_fn(&[dl, p, dr], |_| {
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            })
        })
        .collect();
    MpsState::from_sites(sites, 2).unwrap()
}
