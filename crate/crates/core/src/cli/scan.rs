//! Executing scan points and collecting their result rows.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::mpsc;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Observable, RunConfig};
use crate::error::{Error, Result};
use crate::lmpo::dense_guard;
use crate::model::{pauli, ModelSpec};
use crate::mps::{correlation, expectation, MpsState};
use crate::oracle::{dense_liouvillian, embed, ness_null_space};
use crate::sweeper::{ConvergenceReport, Solver};
use crate::tensor::{Matrix, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableValue {
    pub name: String,
    pub re: f64,
    pub im: f64,
}

impl ObservableValue {
    fn new(o: &Observable, z: C64) -> Self {
        ObservableValue {
            name: o.to_string(),
            re: z.re,
            im: z.im,
        }
    }

    pub fn value(&self) -> C64 {
        C64::new(self.re, self.im)
    }
}

/// Dense-oracle comparison of one scan point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub oracle: Vec<ObservableValue>,
    pub max_abs_error: Option<f64>,
    /// Why the comparison could not be made, e.g. a chain too long for the
    /// dense reference.
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub index: usize,
    pub model: ModelSpec,
    pub observables: Vec<ObservableValue>,
    pub residual: Option<f64>,
    pub sweeps: usize,
    /// Terminal solver status, or `failed`.
    pub status: String,
    pub error: Option<String>,
    pub report: Option<ConvergenceReport>,
    pub verification: Option<Verification>,
}

impl PointResult {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

/// `⟨O⟩` of every configured observable on `state`.
pub fn measure(state: &MpsState, observables: &[Observable]) -> Result<Vec<C64>> {
    observables
        .iter()
        .map(|o| match o.factors.as_slice() {
            [(p, s)] => expectation(state, &pauli(*p), *s),
            [(pa, a), (pb, b)] => correlation(state, &pauli(*pa), &pauli(*pb), *a, *b),
            _ => Err(Error::Usage(format!("unsupported observable {o}"))),
        })
        .collect()
}

fn dense_value(rho: &Matrix, o: &Observable, n: usize) -> Result<C64> {
    let mut op = Matrix::identity(rho.rows());
    for &(p, s) in &o.factors {
        op = op.matmul(&embed(&pauli(p), s, n))?;
    }
    Ok(rho.matmul(&op)?.trace() / rho.trace())
}

/// Compares measured values against the exact steady state.
pub fn verify(spec: &ModelSpec, observables: &[Observable], measured: &[C64]) -> Verification {
    let attempt = || -> Result<Vec<C64>> {
        dense_guard(spec.n_sites, spec.local_dim)?;
        let rho = ness_null_space(&dense_liouvillian(spec)?)?.rho;
        observables
            .iter()
            .map(|o| dense_value(&rho, o, spec.n_sites))
            .collect()
    };
    match attempt() {
        Ok(exact) => {
            let max_abs_error = measured
                .iter()
                .zip(&exact)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            Verification {
                oracle: observables
                    .iter()
                    .zip(&exact)
                    .map(|(o, z)| ObservableValue::new(o, *z))
                    .collect(),
                max_abs_error: (!measured.is_empty()).then_some(max_abs_error),
                error: None,
            }
        }
        Err(e) => Verification {
            oracle: Vec::new(),
            max_abs_error: None,
            error: Some(e.to_string()),
        },
    }
}

/// Checkpoint path of scan point `index`.
pub fn checkpoint_path(config: &RunConfig, index: usize) -> PathBuf {
    config
        .out
        .join("checkpoints")
        .join(format!("point_{index:04}.ckpt"))
}

fn build_solver(
    config: &RunConfig,
    index: usize,
    spec: &ModelSpec,
    warm: Option<&MpsState>,
) -> Result<Solver> {
    let path = checkpoint_path(config, index);
    if config.resume && path.exists() {
        let solver = Solver::resume(&path)?;
        if solver.spec() != spec || solver.schedule() != &config.schedule {
            return Err(Error::Usage(format!(
                "checkpoint {} belongs to a different configuration",
                path.display()
            )));
        }
        info!("point {index}: resuming from {}", path.display());
        return Ok(solver);
    }
    let solver = match warm {
        Some(state) => Solver::warm_start(spec, &config.schedule, state)?,
        None => Solver::new(spec, &config.schedule)?,
    };
    Ok(if config.checkpoint {
        std::fs::create_dir_all(path.parent().expect("checkpoint directory"))
            .map_err(|e| Error::io(&path, e))?;
        solver.with_checkpoint(path)
    } else {
        solver
    })
}

/// Solves one scan point. Failures are recorded in the row.
pub fn solve_point(
    config: &RunConfig,
    index: usize,
    spec: &ModelSpec,
    warm: Option<&MpsState>,
) -> (PointResult, Option<MpsState>) {
    let outcome = build_solver(config, index, spec, warm)
        .and_then(Solver::run)
        .and_then(|(state, report)| {
            let values = measure(&state, &config.observables)?;
            Ok((state, report, values))
        });
    match outcome {
        Ok((state, report, values)) => {
            let verification = config
                .verify
                .then(|| verify(spec, &config.observables, &values));
            let row = PointResult {
                index,
                model: *spec,
                observables: config
                    .observables
                    .iter()
                    .zip(&values)
                    .map(|(o, z)| ObservableValue::new(o, *z))
                    .collect(),
                residual: Some(report.final_residual),
                sweeps: report.sweeps(),
                status: report.status.to_string(),
                error: None,
                report: Some(report),
                verification,
            };
            (row, Some(state))
        }
        Err(e) => {
            warn!("point {index} failed: {e}");
            let row = PointResult {
                index,
                model: *spec,
                observables: Vec::new(),
                residual: None,
                sweeps: 0,
                status: "failed".into(),
                error: Some(e.to_string()),
                report: None,
                verification: None,
            };
            (row, None)
        }
    }
}

/// Runs every point of `config`, handing each row to `emit` in scan order as
/// soon as it and all earlier rows are available.
///
/// With warm starts the points run one after another, each starting from the
/// last successful state. Otherwise they are distributed over the rayon pool.
pub fn run_scan(
    config: &RunConfig,
    mut emit: impl FnMut(&PointResult) -> Result<()>,
) -> Result<Vec<PointResult>> {
    let points = config.points();
    let mut rows = Vec::with_capacity(points.len());
    if config.warm_start || points.len() == 1 {
        let mut previous: Option<MpsState> = None;
        for (i, spec) in points.iter().enumerate() {
            let (row, state) = solve_point(config, i, spec, previous.as_ref());
            emit(&row)?;
            rows.push(row);
            if state.is_some() {
                previous = state;
            }
        }
        return Ok(rows);
    }

    let (tx, rx) = mpsc::channel();
    std::thread::scope(|scope| -> Result<()> {
        scope.spawn(|| {
            points
                .par_iter()
                .enumerate()
                .for_each_with(tx, |tx, (i, spec)| {
                    let (row, _) = solve_point(config, i, spec, None);
                    // the receiver only disappears when emitting already failed
                    let _ = tx.send(row);
                });
        });
        let mut pending = BTreeMap::new();
        for row in rx {
            pending.insert(row.index, row);
            while let Some(row) = pending.remove(&rows.len()) {
                emit(&row)?;
                rows.push(row);
            }
        }
        Ok(())
    })?;
    Ok(rows)
}
