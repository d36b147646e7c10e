//! Checkpoint container: `NESSCKPT`, a little-endian `u32` version, a `u64`
//! header length, a JSON header with the schedule position, then the MPS in
//! its own binary container, stored in the working basis of the schedule.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Phase, Solver, Status, SweepRecord, SweepSchedule};
use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::mps::MpsState;
use crate::tensor::C64;

const MAGIC: &[u8; 8] = b"NESSCKPT";
const VERSION: u32 = 2;

#[derive(Serialize, Deserialize)]
struct Header {
    spec: ModelSpec,
    schedule: SweepSchedule,
    sweep: usize,
    phase: Phase,
    phase1_done: usize,
    bond_dim: usize,
    annealing: bool,
    previous_observables: Option<Vec<C64>>,
    records: Vec<SweepRecord>,
    status: Option<Status>,
}

pub(super) fn save(solver: &Solver, path: &Path) -> Result<()> {
    let header = Header {
        spec: solver.spec,
        schedule: solver.schedule.clone(),
        sweep: solver.sweep,
        phase: solver.phase,
        phase1_done: solver.phase1_done,
        bond_dim: solver.bond_dim,
        annealing: solver.annealing,
        previous_observables: solver.previous_observables.clone(),
        records: solver.records.clone(),
        status: solver.status,
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::Format(e.to_string()))?;
    // write next to the target and rename so a crash never leaves a torn file
    let tmp = path.with_extension("tmp");
    let write = || -> std::io::Result<()> {
        let mut w = BufWriter::new(fs::File::create(&tmp)?);
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(json.len() as u64).to_le_bytes())?;
        w.write_all(&json)?;
        solver.state.write_to(&mut w)?;
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| Error::io(path, e))
}

pub(super) fn load(path: &Path) -> Result<Solver> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let bad = |what: String| Error::Format(format!("checkpoint {}: {what}", path.display()));
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|e| bad(e.to_string()))?;
    if &magic != MAGIC {
        return Err(bad("not a checkpoint file".into()));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4).map_err(|e| bad(e.to_string()))?;
    let version = u32::from_le_bytes(b4);
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8).map_err(|e| bad(e.to_string()))?;
    let len = u64::from_le_bytes(b8);
    if len > 1 << 30 {
        return Err(bad("implausible header length".into()));
    }
    let mut json = vec![0u8; len as usize];
    r.read_exact(&mut json).map_err(|e| bad(e.to_string()))?;
    let h: Header = serde_json::from_slice(&json).map_err(|e| bad(e.to_string()))?;
    let state = MpsState::read_from(&mut r)?;
    h.spec.validate()?;
    h.schedule.validate()?;
    if state.n_sites() != h.spec.n_sites {
        return Err(bad("state and model disagree on the chain length".into()));
    }
    let (target_mpo, basis) = super::working_mpo(&h.spec, h.schedule.hermitian_basis)?;
    Ok(Solver {
        target_mpo,
        basis,
        spec: h.spec,
        schedule: h.schedule,
        state,
        sweep: h.sweep,
        phase: h.phase,
        phase1_done: h.phase1_done,
        bond_dim: h.bond_dim,
        annealing: h.annealing,
        previous_observables: h.previous_observables,
        records: h.records,
        status: h.status,
        checkpoint: Some(path.to_path_buf()),
    })
}
