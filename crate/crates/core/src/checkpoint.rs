//! Checkpoint directories: `model.json` (metadata plus the weight index) and
//! `weights.bin` (raw little-endian `f32` arrays).

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{read_weights, write_weights, Model, Real, WeightEntry};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;
pub const MODEL_FILE: &str = "model.json";
pub const WEIGHTS_FILE: &str = "weights.bin";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckpointKind {
    Analog,
    Digital,
}

#[derive(Serialize, Deserialize)]
struct Envelope<M> {
    format_version: u32,
    kind: CheckpointKind,
    #[serde(flatten)]
    meta: M,
    weights: Vec<WeightEntry>,
}

pub fn save<T: Real, M: Serialize>(
    dir: &Path,
    kind: CheckpointKind,
    meta: &M,
    model: &mut impl Model<T>,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let weights = write_weights(model, &dir.join(WEIGHTS_FILE))?;
    let env = Envelope { format_version: CHECKPOINT_FORMAT_VERSION, kind, meta, weights };
    let path = dir.join(MODEL_FILE);
    fs::write(&path, serde_json::to_string_pretty(&env)? + "\n").map_err(|e| Error::io(&path, e))
}

/// Reads the metadata; `build` constructs an empty model from it, which then receives the weights.
pub fn load<T: Real, M: DeserializeOwned, N: Model<T>>(
    dir: &Path,
    kind: CheckpointKind,
    build: impl FnOnce(&M) -> Result<N>,
) -> Result<(M, N)> {
    let path = dir.join(MODEL_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let env: Envelope<M> = serde_json::from_str(&text)?;
    if env.format_version != CHECKPOINT_FORMAT_VERSION {
        return Err(Error::Format { path, message: format!("unsupported format_version {}", env.format_version) });
    }
    if env.kind != kind {
        return Err(Error::Format { path, message: format!("expected a {kind:?} checkpoint, found {:?}", env.kind) });
    }
    let mut model = build(&env.meta)?;
    read_weights(&mut model, &dir.join(WEIGHTS_FILE), &env.weights)?;
    Ok((env.meta, model))
}

/// Peeks at the kind of a checkpoint directory without loading weights.
pub fn kind_of(dir: &Path) -> Result<CheckpointKind> {
    #[derive(Deserialize)]
    struct Head {
        kind: CheckpointKind,
    }
    let path = dir.join(MODEL_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str::<Head>(&text)?.kind)
}
