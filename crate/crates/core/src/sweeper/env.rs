//! Cached contractions of the MPO sandwich `⟨⟨ρ| L |ρ⟩⟩` to either side of
//! the orthogonality center.
//!
//! `left[k]` contracts sites `0..k` and `right[k]` contracts sites `k..N`;
//! both carry axes `(bra bond, MPO bond, ket bond)` on the bond to the left of
//! site `k`. The boundary entries `left[0]` and `right[N]` are `1×1×1` ones.

use crate::error::{Error, Result};
use crate::lmpo::LiouvillianMpo;
use crate::mps::MpsState;
use crate::tensor::{contract, Tensor, C64, ONE};

#[derive(Clone, Debug)]
pub struct EnvironmentCache {
    left: Vec<Option<Tensor>>,
    right: Vec<Option<Tensor>>,
}

fn boundary() -> Tensor {
    Tensor::from_vec(&[1, 1, 1], vec![ONE]).expect("scalar boundary")
}

/// `E'[b', w', b] = Σ E[a', w, a] conj(A[a', s', b']) W[w, w', s', s] A[a, s, b]`.
pub fn extend_left(env: &Tensor, a: &Tensor, w: &Tensor) -> Result<Tensor> {
    let t = contract(env, a, &[(2, 0)])?; // (a', w, s, b)
    let t = contract(&t, w, &[(1, 0), (2, 3)])?; // (a', b, w', s')
    let t = contract(&a.conj(), &t, &[(0, 0), (1, 3)])?; // (b', b, w')
    t.permute(&[0, 2, 1])
}

/// `F[a', w, a] = Σ conj(B[a', s', b']) W[w, w', s', s] B[a, s, b] F'[b', w', b]`.
pub fn extend_right(env: &Tensor, b: &Tensor, w: &Tensor) -> Result<Tensor> {
    let t = contract(b, env, &[(2, 2)])?; // (a, s, b', w')
    let t = contract(w, &t, &[(1, 3), (3, 1)])?; // (w, s', a, b')
    contract(&b.conj(), &t, &[(1, 1), (2, 3)]) // (a', w, a)
}

impl EnvironmentCache {
    /// Builds the left environments up to the center and the right ones down
    /// to it.
    pub fn new(state: &MpsState, mpo: &LiouvillianMpo) -> Result<Self> {
        let n = state.n_sites();
        if mpo.n_sites() != n || mpo.phys_dim() != state.phys_dim() {
            return Err(Error::Usage(format!(
                "environment of a {}-site state with a {}-site MPO (p = {} vs {})",
                n,
                mpo.n_sites(),
                state.phys_dim(),
                mpo.phys_dim()
            )));
        }
        let mut cache = EnvironmentCache {
            left: vec![None; n + 1],
            right: vec![None; n + 1],
        };
        cache.left[0] = Some(boundary());
        cache.right[n] = Some(boundary());
        let c = state.center();
        for k in 0..c {
            cache.update_left(state, mpo, k)?;
        }
        for k in (c + 1..n).rev() {
            cache.update_right(state, mpo, k)?;
        }
        Ok(cache)
    }

    /// Recomputes `left[k + 1]` from `left[k]` and site `k`.
    pub fn update_left(&mut self, state: &MpsState, mpo: &LiouvillianMpo, k: usize) -> Result<()> {
        let prev = self.left[k]
            .as_ref()
            .ok_or_else(|| Error::Usage(format!("left environment {k} is not available")))?;
        let next = extend_left(prev, state.site(k), mpo.site(k).tensor())?;
        self.left[k + 1] = Some(next);
        Ok(())
    }

    /// Recomputes `right[k]` from `right[k + 1]` and site `k`.
    pub fn update_right(&mut self, state: &MpsState, mpo: &LiouvillianMpo, k: usize) -> Result<()> {
        let prev = self.right[k + 1]
            .as_ref()
            .ok_or_else(|| Error::Usage(format!("right environment {} is not available", k + 1)))?;
        let next = extend_right(prev, state.site(k), mpo.site(k).tensor())?;
        self.right[k] = Some(next);
        Ok(())
    }

    pub fn left(&self, k: usize) -> Option<&Tensor> {
        self.left.get(k).and_then(Option::as_ref)
    }

    pub fn right(&self, k: usize) -> Option<&Tensor> {
        self.right.get(k).and_then(Option::as_ref)
    }

    /// The pair of environments around site `k`.
    pub fn around(&self, k: usize) -> Result<(&Tensor, &Tensor)> {
        match (self.left(k), self.right(k + 1)) {
            (Some(l), Some(r)) => Ok((l, r)),
            _ => Err(Error::Usage(format!(
                "environments around site {k} are not current"
            ))),
        }
    }

    /// `⟨⟨ρ|L|ρ⟩⟩` closed at site `k` through the stored environments.
    pub fn sandwich(&self, state: &MpsState, mpo: &LiouvillianMpo, k: usize) -> Result<C64> {
        let (l, r) = self.around(k)?;
        let closed = extend_left(l, state.site(k), mpo.site(k).tensor())?;
        let t = contract(&closed, r, &[(0, 0), (1, 1), (2, 2)])?;
        Ok(t.data()[0])
    }
}
