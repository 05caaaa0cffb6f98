//! Model checkpoints.
//!
//! Binary, little-endian:
//!
//! ```text
//! magic "BLSM" (4) | version u16 = 1 |
//! input_dim u32 | hidden_size u32 | num_bilstm_layers u32 |
//! num_classes u32 | seq_len u32 |
//! all parameter tensors as f64, canonical order (see ParamSet::tensors) |
//! feature normalization: mean (input_dim f64) | scale (input_dim f64)
//! ```
//!
//! Tensor shapes follow from the config, so no per-tensor headers are
//! needed. Save then load round-trips bitwise.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::FeatureStats;

use super::model::{Model, ModelConfig, ParamSet};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"BLSM";
pub const CHECKPOINT_VERSION: u16 = 1;

/// A trained model plus the feature statistics it was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: Model,
    pub stats: FeatureStats,
}

pub fn save_checkpoint(path: &Path, model: &Model, stats: &FeatureStats) -> Result<()> {
    if stats.dim() != model.config.input_dim {
        return Err(Error::ShapeMismatch(format!(
            "normalization stats have dim {}, model expects {}",
            stats.dim(),
            model.config.input_dim
        )));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);

    w.write_all(&CHECKPOINT_MAGIC).map_err(io_err)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes()).map_err(io_err)?;
    let cfg = &model.config;
    for field in [
        cfg.input_dim,
        cfg.hidden_size,
        cfg.num_bilstm_layers,
        cfg.num_classes,
        cfg.seq_len,
    ] {
        w.write_all(&(field as u32).to_le_bytes()).map_err(io_err)?;
    }
    for tensor in model.params.tensors() {
        for &v in tensor {
            w.write_all(&v.to_le_bytes()).map_err(io_err)?;
        }
    }
    for vec in [&stats.mean, &stats.scale] {
        for &v in vec {
            w.write_all(&v.to_le_bytes()).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);

    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic, path)?;
    if magic != CHECKPOINT_MAGIC {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            expected: CHECKPOINT_MAGIC,
            found: magic,
        });
    }
    let mut version = [0u8; 2];
    read_exact(&mut r, &mut version, path)?;
    let version = u16::from_le_bytes(version);
    if version != CHECKPOINT_VERSION {
        return Err(Error::UnsupportedVersion {
            path: path.to_path_buf(),
            found: version,
            supported: CHECKPOINT_VERSION,
        });
    }

    let mut fields = [0usize; 5];
    for f in &mut fields {
        let mut buf = [0u8; 4];
        read_exact(&mut r, &mut buf, path)?;
        *f = u32::from_le_bytes(buf) as usize;
    }
    let config = ModelConfig {
        input_dim: fields[0],
        hidden_size: fields[1],
        num_bilstm_layers: fields[2],
        num_classes: fields[3],
        seq_len: fields[4],
    };
    config.validate()?;

    let mut params = ParamSet::zeros(&config);
    for tensor in params.tensors_mut() {
        for v in tensor {
            *v = read_f64(&mut r, path)?;
        }
    }
    let mut stats = FeatureStats::identity(config.input_dim);
    for v in stats.mean.iter_mut().chain(stats.scale.iter_mut()) {
        *v = read_f64(&mut r, path)?;
    }

    if params.tensors().iter().any(|t| t.iter().any(|v| !v.is_finite())) {
        return Err(Error::NonFinite(format!(
            "checkpoint {} contains non-finite parameters",
            path.display()
        )));
    }

    Ok(Checkpoint {
        model: Model { config, params },
        stats,
    })
}

fn read_exact(r: &mut impl Read, buf: &mut [u8], path: &Path) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Truncated {
                path: path.to_path_buf(),
                expected: buf.len() as u64,
                found: 0,
            }
        } else {
            Error::io(path, e)
        }
    })
}

fn read_f64(r: &mut impl Read, path: &Path) -> Result<f64> {
    let mut buf = [0u8; 8];
    read_exact(r, &mut buf, path)?;
    Ok(f64::from_le_bytes(buf))
}
