//! Shift-and-invert Arnoldi on a non-Hermitian operator: the eigenvalue
//! closest to zero of a single-site Liouvillian.

use ness::lmpo::{build_mpo, mpo_to_dense};
use ness::model::ModelSpec;
use ness::tensor::{arnoldi_eigs, ArnoldiOptions, LuFactor, Target, C64};

fn main() -> ness::Result<()> {
    let spec = ModelSpec::ising(2, 1.0, 1.0, 0.0, 0.5)?;
    let l = mpo_to_dense(&build_mpo(&spec)?)?;
    let tau = C64::new(1e-6, 0.0);
    let mut shifted = l.clone();
    for i in 0..l.rows() {
        shifted[(i, i)] -= tau;
    }
    let lu = LuFactor::new(&shifted)?;
    let opts = ArnoldiOptions {
        nev: 3,
        target: Target::LargestMagnitude,
        ..Default::default()
    };
    let res = arnoldi_eigs(
        |x, y| {
            y.copy_from_slice(x);
            lu.solve_in_place(y);
        },
        l.rows(),
        None,
        &opts,
    )?;
    for p in &res.pairs {
        let lambda = tau + C64::new(1.0, 0.0) / p.value;
        println!(
            "lambda = {:+.6e} {:+.6e}i (residual {:.1e})",
            lambda.re, lambda.im, p.residual
        );
    }
    println!("{} operator applications", res.matvecs);
    Ok(())
}
