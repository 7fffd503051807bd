//! Weight checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic    8 bytes  "RISAECKP"
//! version  u32      1
//! cfg_len  u32      length of the system config JSON that follows
//! cfg      cfg_len bytes of UTF-8 JSON
//! nets     u32      number of networks (encoder, RIS 1, RIS 2, decoder)
//! per network:
//!   arrays u32      number of arrays, parameters first, then running stats,
//!                   in layer order
//!   per array: len u64, then len f64 values
//! ```

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use risae_core::autoencoder::{Autoencoder, SystemConfig};
use sha2::{Digest, Sha256};

use crate::error::{self, HarnessError, Result};

pub const MAGIC: &[u8; 8] = b"RISAECKP";
pub const VERSION: u32 = 1;

pub fn encode(ae: &Autoencoder) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let cfg = serde_json::to_vec(&ae.config).expect("config serializes");
    out.extend_from_slice(&(cfg.len() as u32).to_le_bytes());
    out.extend_from_slice(&cfg);
    let nets = ae.networks();
    out.extend_from_slice(&(nets.len() as u32).to_le_bytes());
    for net in nets {
        let arrays = net.state_vectors();
        out.extend_from_slice(&(arrays.len() as u32).to_le_bytes());
        for a in arrays {
            out.extend_from_slice(&(a.len() as u64).to_le_bytes());
            for v in a {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(format!("truncated at byte {}", self.pos)),
        }
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> std::result::Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode(bytes: &[u8]) -> std::result::Result<Autoencoder, String> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err("not a checkpoint (bad magic)".into());
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let cfg_len = r.u32()? as usize;
    let cfg: SystemConfig =
        serde_json::from_slice(r.take(cfg_len)?).map_err(|e| format!("system config: {e}"))?;
    // weights are overwritten below; the seed only fills the shapes
    let mut ae = Autoencoder::new(cfg, &mut ChaCha8Rng::seed_from_u64(0))
        .map_err(|e| format!("system config: {e}"))?;
    let nets = r.u32()? as usize;
    if nets != 4 {
        return Err(format!("expected 4 networks, found {nets}"));
    }
    for (i, net) in ae.networks_mut().into_iter().enumerate() {
        let count = r.u32()? as usize;
        let mut arrays = Vec::with_capacity(count.min(64));
        for _ in 0..count {
            let len = r.u64()? as usize;
            let raw = r.take(len.checked_mul(8).ok_or("array length overflow")?)?;
            arrays.push(
                raw.chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                    .collect::<Vec<f64>>(),
            );
        }
        net.load_state(&arrays)
            .map_err(|e| format!("network {i}: {e}"))?;
    }
    if r.pos != bytes.len() {
        return Err(format!("{} trailing bytes", bytes.len() - r.pos));
    }
    Ok(ae)
}

pub fn save(ae: &Autoencoder, path: &Path) -> Result<String> {
    let bytes = encode(ae);
    error::write(path, &bytes)?;
    Ok(sha256_hex(&bytes))
}

/// The checkpoint and the SHA-256 of its bytes.
pub fn load(path: &Path) -> Result<(Autoencoder, String)> {
    if !path.exists() {
        return Err(HarnessError::MissingCheckpoint {
            path: path.to_path_buf(),
        });
    }
    let bytes = error::read(path)?;
    let ae = decode(&bytes).map_err(|r| HarnessError::format("checkpoint", path, r))?;
    Ok((ae, sha256_hex(&bytes)))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
