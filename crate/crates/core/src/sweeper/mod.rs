//! Variational sweeps towards the null vector of the Liouvillian.
//!
//! A run has two phases. During annealing the bond dimension stays at
//! `d_start`, the decay rate starts at `gamma_start_factor` times its target
//! and shrinks geometrically each sweep, and local solves get only a handful
//! of Arnoldi steps. Refinement then pads the bonds by `d_step` per sweep up to
//! `d_max` with a much larger Arnoldi budget. Every sweep is followed by an
//! exact evaluation of `‖L ρ‖ / ‖ρ‖` against the target Liouvillian.

mod checkpoint;
mod env;
mod local;
#[cfg(test)]
mod tests;

use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{debug, info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use env::{extend_left, extend_right, EnvironmentCache};
pub use local::{
    assemble_local, dense_bytes, shift_invert_solve, LocalOperator, LocalProblem, LocalSolution,
    SolveOptions,
};

use crate::error::{Error, Result};
use crate::lmpo::{apply_mpo, build_mpo, LiouvillianMpo};
use crate::model::{hermitian_basis, pauli, ModelSpec, Pauli};
use crate::mps::{allowed_bond, correlation, expectation, trace, Direction, MpsState};
use crate::tensor::{Matrix, Tensor, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSchedule {
    pub d_start: usize,
    pub d_max: usize,
    pub d_step: usize,
    pub gamma_start_factor: f64,
    pub gamma_decay: f64,
    /// Operator applications per local solve while annealing.
    pub phase1_arnoldi_iters: usize,
    /// Operator applications per local solve while refining.
    pub phase2_arnoldi_iters: usize,
    pub phase1_sweeps: usize,
    pub max_sweeps: usize,
    pub residual_tol: f64,
    pub observable_tol: f64,
    /// Observable change that ends annealing early once γ is at target.
    pub phase1_tol: f64,
    pub krylov_dim: usize,
    /// Relative singular-value cutoff used when moving the center.
    pub cutoff: f64,
    /// Magnitude of the random entries added when bonds are padded.
    pub noise: f64,
    pub seed: u64,
    /// Largest dense local operator, in MiB, before switching to matrix-free
    /// Arnoldi.
    pub memory_budget_mb: usize,
    /// Sweep in an orthonormal basis of Hermitian operators, where the MPO
    /// and the state are real and `ρ = ρ†` holds exactly at every step.
    pub hermitian_basis: bool,
}

impl Default for SweepSchedule {
    fn default() -> Self {
        SweepSchedule {
            d_start: 8,
            d_max: 32,
            d_step: 4,
            gamma_start_factor: 10.0,
            gamma_decay: 0.8,
            phase1_arnoldi_iters: 8,
            phase2_arnoldi_iters: 300,
            phase1_sweeps: 30,
            max_sweeps: 60,
            residual_tol: 1e-8,
            observable_tol: 1e-7,
            phase1_tol: 1e-4,
            krylov_dim: 30,
            cutoff: 1e-12,
            noise: 1e-8,
            seed: 0,
            memory_budget_mb: 32,
            hermitian_basis: true,
        }
    }
}

impl SweepSchedule {
    pub fn validate(&self) -> Result<()> {
        let mut p = Vec::new();
        if self.d_start < 1 {
            p.push("d_start must be >= 1".to_string());
        }
        if self.d_start > self.d_max {
            p.push(format!(
                "d_start ({}) must not exceed d_max ({})",
                self.d_start, self.d_max
            ));
        }
        if self.d_step < 1 {
            p.push("d_step must be >= 1".to_string());
        }
        if !(self.gamma_start_factor >= 1.0) || !self.gamma_start_factor.is_finite() {
            p.push(format!(
                "gamma_start_factor must be >= 1, got {}",
                self.gamma_start_factor
            ));
        }
        if !(self.gamma_decay > 0.0 && self.gamma_decay <= 1.0) {
            p.push(format!(
                "gamma_decay must lie in (0, 1], got {}",
                self.gamma_decay
            ));
        }
        if self.phase1_arnoldi_iters < 2 || self.phase2_arnoldi_iters < 2 {
            p.push("Arnoldi iteration budgets must be >= 2".to_string());
        }
        if self.krylov_dim < 3 {
            p.push(format!("krylov_dim must be >= 3, got {}", self.krylov_dim));
        }
        if self.max_sweeps < 1 {
            p.push("max_sweeps must be >= 1".to_string());
        }
        for (name, x) in [
            ("residual_tol", self.residual_tol),
            ("observable_tol", self.observable_tol),
            ("phase1_tol", self.phase1_tol),
        ] {
            if !(x > 0.0) || !x.is_finite() {
                p.push(format!("{name} must be positive, got {x}"));
            }
        }
        if !(self.cutoff >= 0.0 && self.cutoff < 1.0) {
            p.push(format!("cutoff must lie in [0, 1), got {}", self.cutoff));
        }
        if !(self.noise >= 0.0) || !self.noise.is_finite() {
            p.push(format!("noise must be >= 0, got {}", self.noise));
        }
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(p))
        }
    }

    /// `max(γ, γ · gamma_start_factor · gamma_decay^sweep)`.
    pub fn gamma_at(&self, sweep: usize, target: f64) -> f64 {
        let g = target
            * self.gamma_start_factor
            * self.gamma_decay.powi(sweep.min(i32::MAX as usize) as i32);
        g.max(target)
    }

    /// Largest bond dimension that is useful for `n_sites`, capped by `d_max`.
    pub fn effective_d_max(&self, n_sites: usize, local_dim: usize) -> usize {
        let p = local_dim * local_dim;
        let cap = (0..n_sites.saturating_sub(1))
            .map(|b| allowed_bond(p, b, n_sites))
            .max()
            .unwrap_or(1);
        self.d_max.min(cap).max(1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Annealing,
    Refinement,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// Residual below tolerance and observables stationary.
    Converged,
    /// Observables stationary at the largest bond dimension while the
    /// residual is limited by truncation.
    Stationary,
    MaxSweeps,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Converged => "converged",
            Status::Stationary => "stationary",
            Status::MaxSweeps => "max_sweeps",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub sweep: usize,
    pub phase: Phase,
    pub bond_dim: usize,
    pub gamma: f64,
    /// Smallest `|λ|` among the local solves of this sweep.
    pub min_abs_eigenvalue: Option<f64>,
    /// Largest `|λ|` among the local solves of this sweep.
    pub max_abs_eigenvalue: Option<f64>,
    pub global_residual: f64,
    /// Largest change of a tracked observable since the previous sweep.
    pub observable_change: Option<f64>,
    pub discarded_weight: f64,
    pub unconverged_solves: usize,
    pub failed_solves: usize,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub records: Vec<SweepRecord>,
    pub status: Status,
    pub final_residual: f64,
    /// First sweep whose γ equalled the target.
    pub gamma_target_reached_at: Option<usize>,
}

impl ConvergenceReport {
    pub fn sweeps(&self) -> usize {
        self.records.len()
    }

    pub fn wall_time_s(&self) -> f64 {
        self.records.iter().map(|r| r.wall_time_s).sum()
    }
}

/// `‖L|ρ⟩⟩‖ / ‖|ρ⟩⟩‖`, contracted exactly.
pub fn global_residual(state: &MpsState, mpo: &LiouvillianMpo) -> Result<f64> {
    // QR canonicalization yields the norm directly; squaring via an overlap
    // would put the floor at √ε.
    let num = apply_mpo(mpo, state)?.canonicalize(0)?;
    let den = state.clone().canonicalize(0)?;
    if !(den > 0.0) {
        return Err(Error::Usage("residual of a zero state".into()));
    }
    Ok(num / den)
}

/// The diagnostics followed between sweeps: `⟨Zᵢ⟩` on every site and
/// `⟨Xᵢ Xᵢ₊₁⟩` on every bond.
pub fn tracked_observables(state: &MpsState) -> Result<Vec<C64>> {
    let (x, z) = (pauli(Pauli::X), pauli(Pauli::Z));
    let n = state.n_sites();
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        out.push(expectation(state, &z, i)?);
    }
    for i in 0..n.saturating_sub(1) {
        out.push(correlation(state, &x, &x, i, i + 1)?);
    }
    Ok(out)
}

/// Single-site sweep engine holding the state, the MPO and the schedule
/// position.
pub struct Solver {
    spec: ModelSpec,
    schedule: SweepSchedule,
    state: MpsState,
    target_mpo: LiouvillianMpo,
    /// Local change of basis from vectorized operators to the working
    /// coordinates, when sweeping in the Hermitian basis.
    basis: Option<Matrix>,
    sweep: usize,
    phase: Phase,
    phase1_done: usize,
    bond_dim: usize,
    annealing: bool,
    previous_observables: Option<Vec<C64>>,
    records: Vec<SweepRecord>,
    status: Option<Status>,
    checkpoint: Option<PathBuf>,
}

impl Solver {
    /// Starts from the maximally mixed product state.
    pub fn new(spec: &ModelSpec, schedule: &SweepSchedule) -> Result<Self> {
        spec.validate()?;
        schedule.validate()?;
        let (target_mpo, basis) = working_mpo(spec, schedule.hermitian_basis)?;
        let state = to_working(
            &MpsState::maximally_mixed(spec.n_sites, spec.local_dim)?,
            basis.as_ref(),
        )?;
        let d_eff = schedule.effective_d_max(spec.n_sites, spec.local_dim);
        Ok(Solver {
            spec: *spec,
            schedule: schedule.clone(),
            state,
            target_mpo,
            basis,
            sweep: 0,
            phase: Phase::Annealing,
            phase1_done: 0,
            bond_dim: schedule.d_start.min(d_eff),
            annealing: true,
            previous_observables: None,
            records: Vec::new(),
            status: None,
            checkpoint: None,
        })
    }

    /// Starts from a nearby solution, e.g. the previous point of a scan. The
    /// state is padded or truncated to a bond dimension within
    /// `[d_start, d_max]`, annealing is skipped and refinement begins at once.
    pub fn warm_start(
        spec: &ModelSpec,
        schedule: &SweepSchedule,
        initial: &MpsState,
    ) -> Result<Self> {
        let mut solver = Solver::new(spec, schedule)?;
        if initial.n_sites() != spec.n_sites || initial.local_dim() != spec.local_dim {
            return Err(Error::Usage(format!(
                "warm start state has {} sites (d = {}), the model {} (d = {})",
                initial.n_sites(),
                initial.local_dim(),
                spec.n_sites,
                spec.local_dim
            )));
        }
        let d_eff = schedule.effective_d_max(spec.n_sites, spec.local_dim);
        let bond = initial.max_bond().clamp(schedule.d_start.min(d_eff), d_eff);
        let mut state = to_working(initial, solver.basis.as_ref())?;
        state.canonicalize(0)?;
        if state.max_bond() > bond {
            for _ in 0..spec.n_sites - 1 {
                state.move_center(Direction::Right, bond, schedule.cutoff)?;
            }
            for _ in 0..spec.n_sites - 1 {
                state.move_center(Direction::Left, bond, schedule.cutoff)?;
            }
            state.normalize();
        }
        solver.state = state;
        solver.bond_dim = bond;
        solver.phase = Phase::Refinement;
        solver.annealing = false;
        Ok(solver)
    }

    /// Writes a checkpoint to `path` after every sweep.
    pub fn with_checkpoint(mut self, path: impl Into<PathBuf>) -> Self {
        self.checkpoint = Some(path.into());
        self
    }

    /// The current state in the vectorized-operator basis.
    pub fn state(&self) -> MpsState {
        match &self.basis {
            Some(u) => self
                .state
                .change_basis(&u.adjoint())
                .expect("basis matches the state"),
            None => self.state.clone(),
        }
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn schedule(&self) -> &SweepSchedule {
        &self.schedule
    }

    pub fn records(&self) -> &[SweepRecord] {
        &self.records
    }

    pub fn status(&self) -> Option<Status> {
        self.status
    }

    pub fn sweeps_done(&self) -> usize {
        self.sweep
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn bond_dim(&self) -> usize {
        self.bond_dim
    }

    /// Decay rate used in sweep `k`.
    pub fn gamma_for(&self, k: usize) -> f64 {
        if self.annealing {
            self.schedule.gamma_at(k, self.spec.gamma)
        } else {
            self.spec.gamma
        }
    }

    /// Runs sweeps until a terminal status is reached.
    pub fn run(mut self) -> Result<(MpsState, ConvergenceReport)> {
        while self.status.is_none() {
            self.step()?;
        }
        Ok(self.finish())
    }

    pub fn finish(self) -> (MpsState, ConvergenceReport) {
        let final_residual = self
            .records
            .last()
            .map(|r| r.global_residual)
            .unwrap_or(f64::NAN);
        let gamma_target_reached_at = self
            .records
            .iter()
            .find(|r| r.gamma == self.spec.gamma)
            .map(|r| r.sweep);
        let state = self.state();
        let report = ConvergenceReport {
            records: self.records,
            status: self.status.unwrap_or(Status::MaxSweeps),
            final_residual,
            gamma_target_reached_at,
        };
        (state, report)
    }

    /// One full left-to-right and right-to-left pass followed by the
    /// convergence checks. Returns the terminal status once reached.
    pub fn step(&mut self) -> Result<Option<Status>> {
        if self.status.is_some() {
            return Ok(self.status);
        }
        let t0 = Instant::now();
        let k = self.sweep;
        let n = self.spec.n_sites;
        let d_eff = self.schedule.effective_d_max(n, self.spec.local_dim);
        let mut rng = ChaCha8Rng::seed_from_u64(self.schedule.seed);
        rng.set_stream(k as u64);

        if self.phase == Phase::Refinement && self.bond_dim < d_eff && !self.records.is_empty() {
            self.bond_dim = (self.bond_dim + self.schedule.d_step).min(d_eff);
        }
        if !self.state.is_canonical() || self.state.center() != 0 {
            self.state.canonicalize(0)?;
        }
        let target_bond = self.bond_dim.max(self.state.max_bond());
        self.state
            .pad_bonds(target_bond, self.schedule.noise, &mut rng)?;
        self.state.normalize();

        let gamma = self.gamma_for(k);
        let spec = self.spec.with_gamma(gamma);
        let mpo = if gamma == self.spec.gamma {
            self.target_mpo.clone()
        } else {
            working_mpo(&spec, self.basis.is_some())?.0
        };
        let budget = match self.phase {
            Phase::Annealing => self.schedule.phase1_arnoldi_iters,
            Phase::Refinement => self.schedule.phase2_arnoldi_iters,
        };
        let scale = spec.energy_scale().max(f64::MIN_POSITIVE);
        let tau = C64::new(1e-6 * scale, 0.0);
        let opts = SolveOptions {
            krylov_dim: self.schedule.krylov_dim,
            max_matvecs: budget,
            tol: 1e-12,
            abs_tol: 0.1 * self.schedule.residual_tol * scale,
            start_noise: 1e-8,
            real: self.basis.is_some(),
        };
        let memory = self.schedule.memory_budget_mb.saturating_mul(1 << 20);

        let mut envs = EnvironmentCache::new(&self.state, &mpo)?;
        let plan: Vec<(usize, Option<Direction>)> = if n == 1 {
            vec![(0, None)]
        } else {
            (0..n - 1)
                .map(|s| (s, Some(Direction::Right)))
                .chain((1..n).rev().map(|s| (s, Some(Direction::Left))))
                .collect()
        };
        let mut min_lambda = f64::INFINITY;
        let mut max_lambda = f64::NEG_INFINITY;
        let (mut unconverged, mut failed) = (0usize, 0usize);
        let mut discarded = 0.0;
        for (site, dir) in plan {
            let (l, r) = envs.around(site)?;
            let problem = assemble_local(l, mpo.site(site).tensor(), r, tau, memory)?;
            let shape = problem.shape;
            match shift_invert_solve(&problem, self.state.site(site).data(), &opts, &mut rng) {
                Ok(sol) => {
                    min_lambda = min_lambda.min(sol.eigenvalue.norm());
                    max_lambda = max_lambda.max(sol.eigenvalue.norm());
                    if !sol.converged {
                        unconverged += 1;
                    }
                    debug!(
                        "sweep {k} site {site}: lambda = {:.3e}, matvecs {}, converged {}",
                        sol.eigenvalue, sol.matvecs, sol.converged
                    );
                    self.state
                        .set_center_tensor(Tensor::from_vec(&shape, sol.vector)?)?;
                }
                Err(e) => {
                    warn!("sweep {k} site {site}: local solve failed ({e}); keeping the previous tensor");
                    failed += 1;
                }
            }
            self.state.normalize();
            match dir {
                Some(Direction::Right) => {
                    discarded += self.state.move_center(
                        Direction::Right,
                        self.bond_dim,
                        self.schedule.cutoff,
                    )?;
                    self.state.normalize();
                    envs.update_left(&self.state, &mpo, site)?;
                }
                Some(Direction::Left) => {
                    discarded += self.state.move_center(
                        Direction::Left,
                        self.bond_dim,
                        self.schedule.cutoff,
                    )?;
                    self.state.normalize();
                    envs.update_right(&self.state, &mpo, site)?;
                }
                None => {}
            }
        }

        let residual = global_residual(&self.state, &self.target_mpo)?;
        let observables = tracked_observables(&self.state()).ok();
        let change = match (&observables, &self.previous_observables) {
            (Some(new), Some(old)) if new.len() == old.len() => new
                .iter()
                .zip(old)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max),
            _ => f64::INFINITY,
        };
        let previous_residual = self.records.last().map(|r| r.global_residual);
        let record = SweepRecord {
            sweep: k,
            phase: self.phase,
            bond_dim: self.state.max_bond(),
            gamma,
            min_abs_eigenvalue: min_lambda.is_finite().then_some(min_lambda),
            max_abs_eigenvalue: max_lambda.is_finite().then_some(max_lambda),
            global_residual: residual,
            observable_change: change.is_finite().then_some(change),
            discarded_weight: discarded,
            unconverged_solves: unconverged,
            failed_solves: failed,
            wall_time_s: t0.elapsed().as_secs_f64(),
        };
        info!(
            "sweep {k} ({:?}): D = {}, gamma = {gamma:.4}, residual = {residual:.3e}, change = {change:.3e}",
            self.phase, record.bond_dim
        );
        self.records.push(record);
        self.previous_observables = observables;
        self.sweep += 1;

        let at_target = gamma == self.spec.gamma;
        if self.phase == Phase::Annealing {
            self.phase1_done += 1;
            if (at_target && change < self.schedule.phase1_tol)
                || self.phase1_done >= self.schedule.phase1_sweeps
            {
                self.phase = Phase::Refinement;
            }
        }
        let stationary = at_target && change < self.schedule.observable_tol;
        let stagnant = previous_residual.is_some_and(|p| residual > 0.5 * p);
        if stationary && residual < self.schedule.residual_tol {
            self.status = Some(Status::Converged);
        } else if stationary
            && stagnant
            && self.phase == Phase::Refinement
            && self.bond_dim >= d_eff
        {
            self.status = Some(Status::Stationary);
        } else if self.sweep >= self.schedule.max_sweeps {
            self.status = Some(Status::MaxSweeps);
        }
        if let Some(path) = &self.checkpoint {
            self.save_checkpoint(path)?;
        }
        Ok(self.status)
    }

    /// Persists the state and schedule position so that [`Solver::resume`]
    /// continues with the next sweep.
    pub fn save_checkpoint(&self, path: &Path) -> Result<()> {
        checkpoint::save(self, path)
    }

    pub fn resume(path: &Path) -> Result<Self> {
        checkpoint::load(path)
    }
}

/// The Liouvillian MPO in the working basis, and that basis if it is the
/// Hermitian one.
fn working_mpo(spec: &ModelSpec, hermitian: bool) -> Result<(LiouvillianMpo, Option<Matrix>)> {
    let mpo = build_mpo(spec)?;
    if hermitian {
        if let Some(real) = mpo.hermitian_form() {
            return Ok((real, Some(hermitian_basis(spec.local_dim))));
        }
        warn!("Liouvillian has no real Hermitian-basis form; sweeping in the complex basis");
    }
    Ok((mpo, None))
}

/// Expresses `state` in the working basis. In the Hermitian basis the global
/// phase is fixed by a positive trace and any residual imaginary part is
/// dropped, which doubles the bonds when it is present.
fn to_working(state: &MpsState, basis: Option<&Matrix>) -> Result<MpsState> {
    let Some(u) = basis else {
        return Ok(state.clone());
    };
    let mut out = state.change_basis(u)?;
    let tr = trace(state);
    if tr.norm() > 0.0 {
        out.scale(tr.conj() / tr.norm());
    }
    if !out.is_real() {
        out = out.real_part()?;
    }
    Ok(out)
}

/// Solves for the steady state of `spec` from the maximally mixed state.
pub fn run(spec: &ModelSpec, schedule: &SweepSchedule) -> Result<(MpsState, ConvergenceReport)> {
    Solver::new(spec, schedule)?.run()
}
