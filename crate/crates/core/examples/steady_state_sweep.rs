//! Variational steady state of a 10-site chain with convergence diagnostics.

use ness::model::{pauli, ModelSpec, Pauli};
use ness::mps::correlation;
use ness::sweeper::{run, SweepSchedule};

fn main() -> ness::Result<()> {
    let spec = ModelSpec::ising(10, -1.0, 1.0, 0.0, 1.0)?;
    let schedule = SweepSchedule {
        d_max: 12,
        observable_tol: 1e-5,
        ..Default::default()
    };
    let (state, report) = run(&spec, &schedule)?;
    for r in &report.records {
        println!(
            "sweep {:2} {:?}: D = {:2}, gamma = {:.3}, residual = {:.2e}",
            r.sweep, r.phase, r.bond_dim, r.gamma, r.global_residual
        );
    }
    println!("{} after {} sweeps", report.status, report.sweeps());
    let x = pauli(Pauli::X);
    for m in 0..spec.n_sites - 1 {
        println!(
            "<X{m} X{}> = {:+.6}",
            m + 1,
            correlation(&state, &x, &x, m, m + 1)?.re
        );
    }
    Ok(())
}
