//! Binary policy checkpoints.
//!
//! Layout (little endian): the 9-byte magic `SHIREPOL1`, `u32` input size,
//! `u32` action count, `u32` hidden-layer count followed by one `u32` per
//! hidden layer, `u64` parameter count, then the parameters as `f64`.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::{ActorCriticParams, NetShape};

pub const MAGIC: &[u8; 9] = b"SHIREPOL1";

pub fn encode(params: &ActorCriticParams) -> Vec<u8> {
    let shape = params.shape();
    let mut out = Vec::with_capacity(64 + params.len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(shape.obs_dim as u32).to_le_bytes());
    out.extend_from_slice(&(shape.n_actions as u32).to_le_bytes());
    out.extend_from_slice(&(shape.hidden.len() as u32).to_le_bytes());
    for &h in &shape.hidden {
        out.extend_from_slice(&(h as u32).to_le_bytes());
    }
    out.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for v in params.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Checkpoint("checkpoint is truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode(bytes: &[u8]) -> Result<ActorCriticParams> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(MAGIC.len()).ok() != Some(MAGIC.as_slice()) {
        return Err(Error::Checkpoint("not a policy checkpoint (bad magic)".into()));
    }
    let obs_dim = r.u32()?;
    let n_actions = r.u32()?;
    let layers = r.u32()?;
    if layers > 64 {
        return Err(Error::Checkpoint(format!("implausible hidden layer count {layers}")));
    }
    let hidden = (0..layers).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
    let shape = NetShape::new(obs_dim, n_actions, &hidden).map_err(|e| Error::Checkpoint(e.to_string()))?;
    let expected = ActorCriticParams::zeros(shape.clone()).len();
    let count = r.u64()?;
    if count != expected as u64 {
        return Err(Error::Checkpoint(format!(
            "checkpoint holds {count} parameters but its shape needs {expected}"
        )));
    }
    let raw = r.take(expected * 8)?.to_vec();
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint("trailing bytes after parameters".into()));
    }
    let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    ActorCriticParams::from_flat(shape, data).map_err(|e| Error::Checkpoint(e.to_string()))
}

pub fn save_checkpoint(params: &ActorCriticParams, path: &Path) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode(params))?;
    f.sync_all()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<ActorCriticParams> {
    decode(&fs::read(path)?)
}

/// Load a checkpoint and check it fits an environment's input and action sizes.
pub fn load_for_env(path: &Path, env: &str) -> Result<ActorCriticParams> {
    let params = load_checkpoint(path)?;
    let spec = crate::envs::env_spec(env)?;
    let shape = params.shape();
    if shape.obs_dim != spec.feature_dim || shape.n_actions != spec.n_actions {
        return Err(Error::Checkpoint(format!(
            "checkpoint has {} inputs and {} actions; env `{env}` needs {} and {}",
            shape.obs_dim, shape.n_actions, spec.feature_dim, spec.n_actions
        )));
    }
    Ok(params)
}
