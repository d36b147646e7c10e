//! Exact steady state of a short chain, by null space and by time evolution.

use ness::model::{pauli, vectorize, ModelSpec, Pauli};
use ness::oracle::{
    dense_liouvillian, dense_observable, evolve_rk4, ness_null_space, suggested_dt,
};
use ness::tensor::{Matrix, C64};

fn main() -> ness::Result<()> {
    let spec = ModelSpec::ising(4, -1.0, 1.0, 0.0, 1.0)?;
    let l = dense_liouvillian(&spec)?;
    let ness = ness_null_space(&l)?;
    println!(
        "kernel eigenvalue {:.2e}, dissipative gap {:.4}",
        ness.eigenvalue.norm(),
        ness.gap
    );

    // all spins up, then relax for a long time
    let dim = 1 << spec.n_sites;
    let mut up = Matrix::zeros(dim, dim);
    up[(0, 0)] = C64::new(1.0, 0.0);
    let t = 40.0 / spec.gamma;
    let late = ness::model::unvectorize(&evolve_rk4(&l, &vectorize(&up), suggested_dt(&l), t)?)?;

    let x = pauli(Pauli::X);
    for m in 0..spec.n_sites - 1 {
        let a = dense_observable(&ness.rho, &x, &[m, m + 1])?.re;
        let b = dense_observable(&late, &x, &[m, m + 1])?.re;
        println!("<X{m} X{}>  null space {a:+.8}  evolved {b:+.8}", m + 1);
    }
    Ok(())
}
