//! Raw weight files: little-endian `f32` arrays concatenated in index order,
//! described by a names/shapes/offsets index stored alongside in JSON.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::tensor::Real;
use super::Model;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightEntry {
    pub name: String,
    pub shape: [usize; 2],
    /// Offset into the weight file, in `f32` elements.
    pub offset: usize,
}

/// Every parameter (trainable or not) by name, in visiting order.
pub fn snapshot<T: Real>(model: &mut impl Model<T>) -> Vec<(String, Array2<T>)> {
    let mut out = Vec::new();
    model.visit_params(&mut |name, p| out.push((name.to_string(), p.value.clone())));
    out
}

pub fn write_weights<T: Real>(model: &mut impl Model<T>, path: &Path) -> Result<Vec<WeightEntry>> {
    let mut bytes = Vec::new();
    let mut index = Vec::new();
    let mut offset = 0;
    for (name, value) in snapshot(model) {
        let (r, c) = value.dim();
        for v in value.iter() {
            bytes.extend_from_slice(&(v.f64() as f32).to_le_bytes());
        }
        index.push(WeightEntry { name, shape: [r, c], offset });
        offset += r * c;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    Ok(index)
}

/// Loads values into an already-built model; every model parameter must be present with a matching shape.
pub fn read_weights<T: Real>(model: &mut impl Model<T>, path: &Path, index: &[WeightEntry]) -> Result<()> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let by_name: HashMap<&str, &WeightEntry> = index.iter().map(|e| (e.name.as_str(), e)).collect();
    let mut problem: Option<String> = None;
    model.visit_params(&mut |name, p| {
        if problem.is_some() {
            return;
        }
        let Some(entry) = by_name.get(name) else {
            problem = Some(format!("missing weight `{name}`"));
            return;
        };
        if entry.shape != [p.value.nrows(), p.value.ncols()] {
            problem = Some(format!("weight `{name}` has shape {:?}, model expects {:?}", entry.shape, p.value.dim()));
            return;
        }
        let len = entry.shape[0] * entry.shape[1];
        let end = (entry.offset + len) * 4;
        if end > bytes.len() {
            problem = Some(format!("weight `{name}` runs past the end of the file"));
            return;
        }
        for (k, v) in p.value.iter_mut().enumerate() {
            let at = (entry.offset + k) * 4;
            *v = T::of(f32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as f64);
        }
    });
    match problem {
        Some(message) => Err(Error::Format { path: path.into(), message }),
        None => Ok(()),
    }
}
