//! Builds the Liouvillian MPO and checks it against the dense generator.

use ness::lmpo::{build_mpo, mpo_to_dense};
use ness::model::{interleaved_to_stacked, ModelSpec};
use ness::oracle::dense_liouvillian;

fn main() -> ness::Result<()> {
    for v in [0.0, 0.5] {
        let spec = ModelSpec::ising(4, 0.8, 1.0, v, 0.6)?;
        let mpo = build_mpo(&spec)?;
        let contracted = mpo_to_dense(&mpo)?;
        let dense = dense_liouvillian(&spec)?.matrix;
        let n = spec.n_sites;
        let mut worst: f64 = 0.0;
        for i in 0..contracted.rows() {
            for j in 0..contracted.cols() {
                let d = dense[(
                    interleaved_to_stacked(i, n, 2),
                    interleaved_to_stacked(j, n, 2),
                )];
                worst = worst.max((contracted[(i, j)] - d).norm());
            }
        }
        let real = mpo.hermitian_form().is_some();
        println!("V = {v}: bond dimension {}, max |MPO - dense| = {worst:.1e}, real Hermitian form: {real}", mpo.bond_dim());
    }
    Ok(())
}
