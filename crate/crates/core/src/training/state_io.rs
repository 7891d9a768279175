//! Training-state files, used to resume interrupted runs.
//!
//! ```text
//! "NCTRAIN1"  model section
//! u8 has_adam [u8 phase, adam blob]
//! u64 steps_done, u64 stale_evals, u8 stopped_early
//! u8 has_best [f64 score, u64 step, model section]
//! u64 records, per record: u64 epoch, u8 phase, f64 objective, u8 has_ndcg, f64 ndcg, f64 seconds
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::models::{read_model, write_model};
use crate::numerics::blob::{self, read_reals, read_u64, read_u8, write_reals, write_u64};
use crate::scalar::Scalar;
use crate::training::{Best, EpochRecord, Phase, TrainState};

const STATE_MAGIC: &[u8; 8] = b"NCTRAIN1";

fn phase_from(code: u8) -> Result<Phase> {
    Phase::from_code(code).ok_or_else(|| Error::Checkpoint(format!("unknown phase code {code}")))
}

pub fn write_state<T: Scalar>(w: &mut impl Write, state: &TrainState<T>) -> Result<()> {
    w.write_all(STATE_MAGIC)?;
    write_model(w, &state.model)?;
    match (&state.adam, state.adam_phase) {
        (Some(adam), Some(phase)) => {
            w.write_all(&[1, phase.code()])?;
            blob::write_adam(w, adam)?;
        }
        _ => w.write_all(&[0])?,
    }
    write_u64(w, state.steps_done as u64)?;
    write_u64(w, state.stale_evals as u64)?;
    w.write_all(&[state.stopped_early as u8])?;
    match &state.best {
        Some(b) => {
            w.write_all(&[1])?;
            write_reals(w, &[b.score])?;
            write_u64(w, b.step as u64)?;
            write_model(w, &b.model)?;
        }
        None => w.write_all(&[0])?,
    }
    write_u64(w, state.records.len() as u64)?;
    for r in &state.records {
        write_u64(w, r.epoch as u64)?;
        w.write_all(&[r.phase.code()])?;
        write_reals(w, &[r.objective])?;
        w.write_all(&[r.val_ndcg.is_some() as u8])?;
        write_reals(w, &[r.val_ndcg.unwrap_or(0.0), r.seconds])?;
    }
    Ok(())
}

pub fn read_state<T: Scalar>(r: &mut impl Read) -> Result<TrainState<T>> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != STATE_MAGIC {
        return Err(Error::Checkpoint("not a training-state file (bad magic)".into()));
    }
    let model = read_model(r)?;
    let (adam, adam_phase) = if read_u8(r)? != 0 {
        let phase = phase_from(read_u8(r)?)?;
        (Some(blob::read_adam(r)?), Some(phase))
    } else {
        (None, None)
    };
    let steps_done = read_u64(r)? as usize;
    let stale_evals = read_u64(r)? as usize;
    let stopped_early = read_u8(r)? != 0;
    let best = if read_u8(r)? != 0 {
        let score = read_reals::<f64>(r, 1)?[0];
        let step = read_u64(r)? as usize;
        Some(Best {
            score,
            step,
            model: read_model(r)?,
        })
    } else {
        None
    };
    let n = read_u64(r)?;
    if n > 1 << 24 {
        return Err(Error::Checkpoint(format!("implausible record count {n}")));
    }
    let mut records = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let epoch = read_u64(r)? as usize;
        let phase = phase_from(read_u8(r)?)?;
        let objective = read_reals::<f64>(r, 1)?[0];
        let has = read_u8(r)? != 0;
        let rest = read_reals::<f64>(r, 2)?;
        records.push(EpochRecord {
            epoch,
            phase,
            objective,
            val_ndcg: has.then_some(rest[0]),
            seconds: rest[1],
        });
    }
    Ok(TrainState {
        model,
        adam,
        adam_phase,
        steps_done,
        best,
        stale_evals,
        stopped_early,
        records,
    })
}

pub fn save_state<T: Scalar>(path: &Path, state: &TrainState<T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_state(&mut w, state)?;
    w.flush()?;
    Ok(())
}

pub fn load_state<T: Scalar>(path: &Path) -> Result<TrainState<T>> {
    read_state(&mut BufReader::new(File::open(path)?))
}
