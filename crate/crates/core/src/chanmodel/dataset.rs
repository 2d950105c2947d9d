//! Dataset containers and their on-disk format.
//!
//! A split directory holds `manifest.json` plus `h_d.bin` and `h_u.bin`:
//! complex64 values stored as interleaved little-endian `f32` (re, im),
//! row-major over `[sample][delay_tap][antenna]`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::geometry::{generate_sample, CMatrix, ChannelSample, GeometryConfig};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, tag};

pub const DATASET_FORMAT_VERSION: u32 = 1;
pub const ARRAY_DTYPE: &str = "complex64 as interleaved little-endian IEEE-754 single-precision real,imag";
pub const ARRAY_LAYOUT: &str = "row-major [sample][delay_tap][antenna]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub n_c: usize,
    pub n_t: usize,
    pub count: usize,
    pub split: Split,
    pub global_seed: u64,
    pub geometry: GeometryConfig,
    pub dtype: String,
    pub layout: String,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub samples: Vec<ChannelSample>,
    pub manifest: Manifest,
}

/// Per-sample seed: a hash of the global seed, the split and the sample index.
pub fn sample_seed(global_seed: u64, split: Split, sample_id: u64) -> u64 {
    derive_seed(&[global_seed, tag(split.as_str()), sample_id])
}

impl Dataset {
    /// Generates one split in memory.
    pub fn generate(
        geometry: &GeometryConfig,
        n_c: usize,
        n_t: usize,
        count: usize,
        split: Split,
        global_seed: u64,
    ) -> Result<Self> {
        if count < 1 {
            return Err(Error::config(format!("{} count must be at least 1", split.as_str())));
        }
        let samples = (0..count as u64)
            .map(|id| {
                let seed = sample_seed(global_seed, split, id);
                generate_sample(geometry, n_c, n_t, seed).map(|s| ChannelSample { sample_id: id, ..s })
            })
            .collect::<Result<Vec<_>>>()?;
        let manifest = Manifest {
            format_version: DATASET_FORMAT_VERSION,
            n_c,
            n_t,
            count,
            split,
            global_seed,
            geometry: geometry.clone(),
            dtype: ARRAY_DTYPE.into(),
            layout: ARRAY_LAYOUT.into(),
        };
        Ok(Self { samples, manifest })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_c(&self) -> usize {
        self.manifest.n_c
    }

    pub fn n_t(&self) -> usize {
        self.manifest.n_t
    }

    /// Sample ids must be `0..len` in order and every matrix must match the manifest shape.
    pub fn validate(&self) -> Result<()> {
        if self.manifest.count != self.samples.len() {
            return Err(Error::shape(format!(
                "manifest count {} but {} samples",
                self.manifest.count,
                self.samples.len()
            )));
        }
        let shape = [self.manifest.n_c, self.manifest.n_t];
        for (i, s) in self.samples.iter().enumerate() {
            if s.sample_id != i as u64 {
                return Err(Error::shape(format!("sample at position {i} has id {}", s.sample_id)));
            }
            if s.h_d.shape() != shape || s.h_u.shape() != shape {
                return Err(Error::shape(format!("sample {i} does not match manifest shape {shape:?}")));
            }
        }
        Ok(())
    }

    /// Writes `manifest.json`, `h_d.bin` and `h_u.bin` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        self.validate()?;
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let manifest_path = dir.join("manifest.json");
        let json = serde_json::to_string_pretty(&self.manifest)?;
        fs::write(&manifest_path, json + "\n").map_err(|e| Error::io(&manifest_path, e))?;
        write_array(&dir.join("h_d.bin"), self.samples.iter().map(|s| &s.h_d))?;
        write_array(&dir.join("h_u.bin"), self.samples.iter().map(|s| &s.h_u))?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let manifest_path = dir.join("manifest.json");
        let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        let manifest: Manifest = serde_json::from_str(&text)?;
        if manifest.format_version != DATASET_FORMAT_VERSION {
            return Err(Error::Format {
                path: manifest_path,
                message: format!("unsupported format_version {}", manifest.format_version),
            });
        }
        let h_d = read_array(&dir.join("h_d.bin"), &manifest)?;
        let h_u = read_array(&dir.join("h_u.bin"), &manifest)?;
        let samples = h_d
            .into_iter()
            .zip(h_u)
            .enumerate()
            .map(|(i, (h_d, h_u))| ChannelSample {
                h_d,
                h_u,
                sample_id: i as u64,
                seed: sample_seed(manifest.global_seed, manifest.split, i as u64),
            })
            .collect();
        let ds = Self { samples, manifest };
        ds.validate()?;
        Ok(ds)
    }

    /// Round-trips every matrix through single precision, matching what `load` returns.
    pub fn quantize_to_storage(&mut self) {
        let q = |z: &mut Complex64| *z = Complex64::new(z.re as f32 as f64, z.im as f32 as f64);
        for s in &mut self.samples {
            s.h_d.iter_mut().for_each(q);
            s.h_u.iter_mut().for_each(q);
        }
    }
}

fn write_array<'a>(path: &Path, mats: impl Iterator<Item = &'a CMatrix>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for m in mats {
        for z in m.iter() {
            w.write_all(&(z.re as f32).to_le_bytes()).map_err(|e| Error::io(path, e))?;
            w.write_all(&(z.im as f32).to_le_bytes()).map_err(|e| Error::io(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_array(path: &Path, manifest: &Manifest) -> Result<Vec<CMatrix>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let per = manifest.n_c * manifest.n_t;
    let expected = manifest.count * per * 8;
    if bytes.len() != expected {
        return Err(Error::Format {
            path: PathBuf::from(path),
            message: format!("expected {expected} bytes, found {}", bytes.len()),
        });
    }
    let value = |i: usize| f32::from_le_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap()) as f64;
    Ok((0..manifest.count)
        .map(|s| {
            Array2::from_shape_fn((manifest.n_c, manifest.n_t), |(r, c)| {
                let k = 2 * (s * per + r * manifest.n_t + c);
                Complex64::new(value(k), value(k + 1))
            })
        })
        .collect())
}

/// Paths of the two splits under a dataset root.
pub fn split_dir(root: &Path, split: Split) -> PathBuf {
    root.join(split.as_str())
}

/// Generates both splits and writes them under `root/train` and `root/test`.
pub fn generate_dataset(
    geometry: &GeometryConfig,
    n_c: usize,
    n_t: usize,
    n_train: usize,
    n_test: usize,
    global_seed: u64,
    root: &Path,
) -> Result<(Dataset, Dataset)> {
    let mut train = Dataset::generate(geometry, n_c, n_t, n_train, Split::Train, global_seed)?;
    let mut test = Dataset::generate(geometry, n_c, n_t, n_test, Split::Test, global_seed)?;
    train.save(&split_dir(root, Split::Train))?;
    test.save(&split_dir(root, Split::Test))?;
    train.quantize_to_storage();
    test.quantize_to_storage();
    Ok((train, test))
}

/// Element-wise mean of the downlink channels: the average-CSI fallback.
pub fn mean_channel(dataset: &Dataset) -> Result<CMatrix> {
    let first = dataset.samples.first().ok_or_else(|| Error::Empty("dataset has no samples".into()))?;
    let mut acc = Array2::<Complex64>::zeros(first.h_d.raw_dim());
    for s in &dataset.samples {
        acc += &s.h_d;
    }
    Ok(acc / Complex64::new(dataset.len() as f64, 0.0))
}
