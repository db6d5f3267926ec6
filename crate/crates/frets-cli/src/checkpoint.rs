//! Single-file checkpoint container.
//!
//! Layout: an ASCII magic line, one line of JSON header (config, scaler,
//! channel names, training summary and the block table), then the raw
//! parameter data as little-endian `f64` in the documented block order
//! (see `FreTsParams::named_blocks`). Reload is bit-exact; identical runs
//! produce byte-identical files because every header field is deterministic.

use std::path::Path;

use serde::{Deserialize, Serialize};

use frets_core::model::{init_params, FreTsParams, ModelConfig};
use frets_core::train::MinMaxScaler;
use frets_core::{Error, Result};

use crate::config::RunConfig;

const MAGIC: &str = "FRETS-CKPT v1";

/// Deterministic summary of a finished run (no wall-clock values).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub epochs_run: usize,
    pub best_epoch: Option<usize>,
    pub best_val_mae: Option<f64>,
    pub best_val_rmse: Option<f64>,
    pub final_train_loss: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub run_config: RunConfig,
    pub model_config: ModelConfig,
    pub channel_names: Vec<String>,
    pub scaler: MinMaxScaler,
    pub training: TrainingSummary,
    pub params: FreTsParams,
}

#[derive(Serialize, Deserialize)]
struct Header {
    format_version: u32,
    run_config: RunConfig,
    model_config: ModelConfig,
    channel_names: Vec<String>,
    scaler: MinMaxScaler,
    training: TrainingSummary,
    blocks: Vec<BlockInfo>,
}

#[derive(Serialize, Deserialize)]
struct BlockInfo {
    name: String,
    shape: Vec<usize>,
}

/// Serialize to `path` atomically (write a sibling temp file, then rename),
/// so a failed run never leaves a partial checkpoint behind.
pub fn save(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let blocks: Vec<BlockInfo> = ckpt
        .params
        .named_blocks()
        .iter()
        .map(|(name, t)| BlockInfo {
            name: name.clone(),
            shape: t.shape().to_vec(),
        })
        .collect();
    let header = Header {
        format_version: 1,
        run_config: ckpt.run_config.clone(),
        model_config: ckpt.model_config.clone(),
        channel_names: ckpt.channel_names.clone(),
        scaler: ckpt.scaler.clone(),
        training: ckpt.training.clone(),
        blocks,
    };

    let mut bytes = Vec::new();
    bytes.extend_from_slice(MAGIC.as_bytes());
    bytes.push(b'\n');
    let header_json =
        serde_json::to_string(&header).map_err(|e| Error::Checkpoint(format!("header encode: {e}")))?;
    bytes.extend_from_slice(header_json.as_bytes());
    bytes.push(b'\n');
    for (_, block) in ckpt.params.named_blocks() {
        for v in block.data() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }

    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, &bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::Checkpoint(format!("cannot read {}: {e}", path.display())))?;

    let magic_end = find_newline(&bytes, 0)?;
    if &bytes[..magic_end] != MAGIC.as_bytes() {
        return Err(Error::Checkpoint(format!(
            "{} is not a checkpoint (bad magic)",
            path.display()
        )));
    }
    let header_end = find_newline(&bytes, magic_end + 1)?;
    let header: Header = serde_json::from_slice(&bytes[magic_end + 1..header_end])
        .map_err(|e| Error::Checkpoint(format!("header decode: {e}")))?;
    if header.format_version != 1 {
        return Err(Error::Checkpoint(format!(
            "unsupported checkpoint format version {}",
            header.format_version
        )));
    }

    // Rebuild the parameter structure from the stored model config, then
    // fill every block from the raw section.
    let mut params = init_params(&header.model_config)?.zeros_like();
    let mut offset = header_end + 1;
    {
        let mut blocks = params.named_blocks_mut();
        if blocks.len() != header.blocks.len() {
            return Err(Error::Checkpoint(format!(
                "block table lists {} blocks, model structure has {}",
                header.blocks.len(),
                blocks.len()
            )));
        }
        for (info, (name, block)) in header.blocks.iter().zip(blocks.iter_mut()) {
            if &info.name != name || info.shape != block.shape() {
                return Err(Error::Checkpoint(format!(
                    "block mismatch: file has {} {:?}, model expects {} {:?}",
                    info.name,
                    info.shape,
                    name,
                    block.shape()
                )));
            }
            let need = block.numel() * 8;
            if offset + need > bytes.len() {
                return Err(Error::Checkpoint(format!("truncated data in block {name}")));
            }
            for (v, chunk) in block.data_mut().iter_mut().zip(bytes[offset..offset + need].chunks_exact(8)) {
                *v = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
            }
            offset += need;
        }
    }
    if offset != bytes.len() {
        return Err(Error::Checkpoint(format!(
            "{} trailing bytes after parameter blocks",
            bytes.len() - offset
        )));
    }

    Ok(Checkpoint {
        run_config: header.run_config,
        model_config: header.model_config,
        channel_names: header.channel_names,
        scaler: header.scaler,
        training: header.training,
        params,
    })
}

fn find_newline(bytes: &[u8], from: usize) -> Result<usize> {
    bytes[from..]
        .iter()
        .position(|&b| b == b'\n')
        .map(|p| from + p)
        .ok_or_else(|| Error::Checkpoint("missing header terminator".into()))
}
