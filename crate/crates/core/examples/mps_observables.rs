//! Observables and reduced density matrices of a vectorized MPS.

use ness::model::{pauli, Pauli};
use ness::mps::{correlation, expectation, reduced_density_matrix, trace, Direction, MpsState};
use ness::tensor::{hermitian_eigenvalues, C64};

fn main() -> ness::Result<()> {
    // |+><+| on every site: <X> = 1, <Z> = 0
    let half = C64::new(0.5, 0.0);
    let mut state = MpsState::product_init(5, &[half, half, half, half])?;
    state.canonicalize(0)?;
    state.move_center(Direction::Right, 4, 1e-12)?;
    let (x, z) = (pauli(Pauli::X), pauli(Pauli::Z));
    println!("tr = {:.3}", trace(&state).re);
    println!(
        "<X2> = {:.3}, <Z2> = {:.3}",
        expectation(&state, &x, 2)?.re,
        expectation(&state, &z, 2)?.re
    );
    println!("<X0 X4> = {:.3}", correlation(&state, &x, &x, 0, 4)?.re);
    let rdm = reduced_density_matrix(&state, &[1, 2])?;
    println!("two-site RDM spectrum {:?}", hermitian_eigenvalues(&rdm)?);
    Ok(())
}
