//! Raw Brownian-path dumps for cross-implementation comparisons.
//!
//! Layout, all little-endian: a 32-byte header of `n_modes: u64`,
//! `n_steps: u64`, `dt: f64`, `seed: u64`, followed by the increments as
//! row-major f64 (step-major, mode-minor). The substream index is not part
//! of the format; paths read back carry sample_index 0.

use std::io::{Read, Write};

use stochwave_core::noise::BrownianPath;

#[derive(Debug, thiserror::Error)]
pub enum DumpError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] stochwave_core::Error),
    #[error("dump payload is truncated: expected {expected} increment bytes, got {got}")]
    Truncated { expected: usize, got: usize },
}

pub fn write_path(mut w: impl Write, path: &BrownianPath) -> Result<(), DumpError> {
    w.write_all(&(path.n_modes() as u64).to_le_bytes())?;
    w.write_all(&(path.n_steps() as u64).to_le_bytes())?;
    w.write_all(&path.dt().to_le_bytes())?;
    w.write_all(&path.seed().to_le_bytes())?;
    for &x in path.increments() {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_path(mut r: impl Read) -> Result<BrownianPath, DumpError> {
    let mut word = [0u8; 8];
    let mut next = |r: &mut dyn Read| -> Result<[u8; 8], DumpError> {
        r.read_exact(&mut word)?;
        Ok(word)
    };
    let n_modes = u64::from_le_bytes(next(&mut r)?) as usize;
    let n_steps = u64::from_le_bytes(next(&mut r)?) as usize;
    let dt = f64::from_le_bytes(next(&mut r)?);
    let seed = u64::from_le_bytes(next(&mut r)?);

    let expected = n_modes
        .checked_mul(n_steps)
        .and_then(|n| n.checked_mul(8))
        .ok_or(DumpError::Truncated { expected: usize::MAX, got: 0 })?;
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    if payload.len() != expected {
        return Err(DumpError::Truncated { expected, got: payload.len() });
    }
    let increments: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok(BrownianPath::from_raw(n_modes, dt, seed, 0, increments)?)
}
