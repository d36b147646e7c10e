//! Weak dissipation: the decay rate is annealed down from ten times its
//! target, and the result is compared with the exact null vector.

use ness::model::{pauli, ModelSpec, Pauli};
use ness::mps::expectation;
use ness::oracle::{dense_liouvillian, dense_observable, ness_null_space};
use ness::sweeper::{Solver, SweepSchedule};

fn main() -> ness::Result<()> {
    let spec = ModelSpec::ising(5, 1.0, 1.0, 0.0, 0.1)?;
    let schedule = SweepSchedule {
        d_max: 32,
        ..Default::default()
    };
    let mut solver = Solver::new(&spec, &schedule)?;
    while solver.status().is_none() {
        let k = solver.sweeps_done();
        let gamma = solver.gamma_for(k);
        solver.step()?;
        let r = solver.records().last().expect("one record per sweep");
        println!(
            "sweep {k:2}: gamma = {gamma:.4}, residual = {:.2e}",
            r.global_residual
        );
    }
    let (state, report) = solver.finish();
    println!(
        "{} (target gamma from sweep {:?})",
        report.status, report.gamma_target_reached_at
    );

    let exact = ness_null_space(&dense_liouvillian(&spec)?)?.rho;
    let z = pauli(Pauli::Z);
    for m in 0..spec.n_sites {
        let a = expectation(&state, &z, m)?.re;
        let b = dense_observable(&exact, &z, &[m])?.re;
        println!("<Z{m}> = {a:+.8} (exact {b:+.8})");
    }
    Ok(())
}
