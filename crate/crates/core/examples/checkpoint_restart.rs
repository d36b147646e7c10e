//! Interrupting a run and resuming it from its checkpoint reproduces the
//! uninterrupted run bit for bit.

use ness::model::ModelSpec;
use ness::sweeper::{run, Solver, SweepSchedule};

fn main() -> ness::Result<()> {
    let spec = ModelSpec::ising(6, 0.5, 1.0, 0.3, 0.8)?;
    let schedule = SweepSchedule {
        d_max: 12,
        max_sweeps: 12,
        ..Default::default()
    };
    let path = std::env::temp_dir().join(format!("ness_example_{}.ckpt", std::process::id()));

    let mut solver = Solver::new(&spec, &schedule)?.with_checkpoint(&path);
    for _ in 0..4 {
        solver.step()?;
    }
    drop(solver);
    println!("stopped after 4 sweeps, checkpoint at {}", path.display());

    let (resumed, a) = Solver::resume(&path)?.run()?;
    let (straight, b) = run(&spec, &schedule)?;
    let same = resumed == straight && a.final_residual.to_bits() == b.final_residual.to_bits();
    println!(
        "{} sweeps, residual {:.3e}, identical to the uninterrupted run: {same}",
        a.sweeps(),
        a.final_residual
    );
    std::fs::remove_file(&path).ok();
    Ok(())
}
