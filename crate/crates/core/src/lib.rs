//! Nonequilibrium steady states of driven-dissipative quantum chains.
//!
//! The density matrix of an `N`-site chain is vectorized into a matrix product
//! state, the Lindblad generator becomes a matrix product operator, and
//! single-site sweeps drive the state towards the null vector of the
//! Liouvillian. Each local problem is solved by shift-and-invert Arnoldi,
//! with bond dimension grown and dissipation annealed along the sweeps.
//!
//! ```no_run
//! use ness::{model::ModelSpec, sweeper::{run, SweepSchedule}};
//!
//! let spec = ModelSpec::ising(6, -1.0, 1.0, 0.0, 1.0)?;
//! let (state, report) = run(&spec, &SweepSchedule::default())?;
//! let xx = ness::mps::correlation(&state, &ness::model::pauli(ness::model::Pauli::X),
//!     &ness::model::pauli(ness::model::Pauli::X), 2, 3)?;
//! println!("{:?} <X2 X3> = {:.6}", report.status, xx.re);
//! # Ok::<(), ness::Error>(())
//! ```

// `!(x > 0.0)` is how inputs are checked so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod lmpo;
pub mod model;
pub mod mps;
pub mod oracle;
pub mod sweeper;
pub mod tensor;

pub use error::{Error, Result};
