//! Run configuration: one TOML file describing the system, geometry, model
//! specs, training hyperparameters, evaluation grid, paths and seed.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analog::{spec_for_overhead, AnalogModelSpec};
use crate::backbone::BackboneSpec;
use crate::chanmodel::GeometryConfig;
use crate::digital::{DigitalModelSpec, DEFAULT_ALPHABET_BOUND};
use crate::error::{Error, Result};
use crate::eval::SweepGrid;
use crate::linkphys::{n_f_for_rho, SystemConfig};
use crate::training::Hyper;

pub const RUN_CONFIG_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub n_c: usize,
    pub n_t: usize,
    pub rho_grid: Vec<f64>,
    pub snr_fb_grid_db: Vec<f64>,
    pub snr_dl_db: f64,
    /// η in the feedback capacity.
    pub capacity_efficiency: f64,
    pub subcarrier_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub n_train: usize,
    pub n_test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalogSection {
    /// Encoder widths per strided layer; a short list repeats its last entry.
    pub widths: Vec<usize>,
    pub decoder_residual_blocks: usize,
    pub hyper: Hyper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DigitalSection {
    pub widths: Vec<usize>,
    pub decoder_residual_blocks: usize,
    pub latent_channels: usize,
    pub quantizer_step: f64,
    pub lambda_grid: Vec<f64>,
    #[serde(default = "default_bound")]
    pub alphabet_bound: i32,
    pub hyper: Hyper,
}

fn default_bound() -> i32 {
    DEFAULT_ALPHABET_BOUND
}

/// Output locations, relative to the run's output root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    pub data: PathBuf,
    pub checkpoints: PathBuf,
    pub reports: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub format_version: u32,
    /// Dataset, training and evaluation seed.
    pub seed: u64,
    pub system: SystemSection,
    pub geometry: GeometryConfig,
    pub dataset: DatasetSection,
    pub analog: AnalogSection,
    pub digital: DigitalSection,
    pub paths: PathsSection,
}

fn key_err(key: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("`{key}`: {msg}"))
}

fn positive_grid(key: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(key_err(key, "must not be empty"));
    }
    if let Some(v) = grid.iter().find(|v| !v.is_finite()) {
        return Err(key_err(key, format!("non-finite entry {v}")));
    }
    Ok(())
}

fn hyper_check(key: &str, h: &Hyper) -> Result<()> {
    h.validate().map_err(|e| key_err(key, e))
}

impl RunConfig {
    /// Desk-scale profile: 64 subcarriers, 8 antennas, 5000/1000 samples.
    pub fn desk() -> Self {
        let hyper = Hyper { lr: 2e-3, batch: 10, epochs: 20, seed: 3, ..Hyper::default() };
        Self {
            format_version: RUN_CONFIG_FORMAT_VERSION,
            seed: 1,
            system: SystemSection {
                n_c: 64,
                n_t: 8,
                rho_grid: vec![1.0 / 32.0, 1.0 / 16.0, 0.125, 0.25, 0.5, 1.0],
                snr_fb_grid_db: vec![5.0, 10.0, 20.0],
                snr_dl_db: 10.0,
                capacity_efficiency: 1.0,
                subcarrier_seed: 0,
            },
            geometry: GeometryConfig::default(),
            dataset: DatasetSection { n_train: 5000, n_test: 1000 },
            analog: AnalogSection { widths: vec![16, 128], decoder_residual_blocks: 2, hyper: hyper.clone() },
            digital: DigitalSection {
                widths: vec![16, 128],
                decoder_residual_blocks: 2,
                latent_channels: 8,
                quantizer_step: 1.0,
                lambda_grid: vec![3e-3, 3e-4, 3e-5],
                alphabet_bound: DEFAULT_ALPHABET_BOUND,
                hyper,
            },
            paths: PathsSection { data: "data".into(), checkpoints: "checkpoints".into(), reports: "reports".into() },
        }
    }

    /// Reference scale: 256 subcarriers, 32 antennas, 256-wide convolutions,
    /// 80000/20000 samples, batch 100.
    pub fn paper() -> Self {
        let mut c = Self::desk();
        c.system.n_c = 256;
        c.system.n_t = 32;
        c.system.rho_grid = vec![1.0 / 64.0, 1.0 / 32.0, 1.0 / 16.0, 0.125, 0.25, 0.5];
        c.system.snr_fb_grid_db = vec![0.0, 5.0, 10.0, 20.0];
        c.geometry.max_delay_taps = 32;
        c.dataset = DatasetSection { n_train: 80_000, n_test: 20_000 };
        let hyper = Hyper { lr: 1e-3, batch: 100, epochs: 100, ..c.analog.hyper.clone() };
        c.analog.widths = vec![256];
        c.analog.hyper = hyper.clone();
        c.digital.widths = vec![256];
        c.digital.latent_channels = 16;
        c.digital.hyper = hyper;
        c
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_string() + &span_hint(&e, text)))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != RUN_CONFIG_FORMAT_VERSION {
            return Err(key_err(
                "format_version",
                format!("unsupported version {} (expected {RUN_CONFIG_FORMAT_VERSION})", self.format_version),
            ));
        }
        let s = &self.system;
        if s.n_c == 0 {
            return Err(key_err("system.n_c", "must be positive"));
        }
        if s.n_t == 0 {
            return Err(key_err("system.n_t", "must be positive"));
        }
        positive_grid("system.rho_grid", &s.rho_grid)?;
        for &rho in &s.rho_grid {
            n_f_for_rho(s.n_c, rho).map_err(|e| key_err("system.rho_grid", e))?;
        }
        positive_grid("system.snr_fb_grid_db", &s.snr_fb_grid_db)?;
        if !s.snr_dl_db.is_finite() {
            return Err(key_err("system.snr_dl_db", "must be finite"));
        }
        if !(s.capacity_efficiency > 0.0 && s.capacity_efficiency <= 1.0) {
            return Err(key_err("system.capacity_efficiency", "must lie in (0, 1]"));
        }
        self.geometry.validate().map_err(|e| key_err("geometry", e))?;
        if s.n_c < self.geometry.max_delay_taps {
            return Err(key_err("geometry.max_delay_taps", format!("exceeds system.n_c = {}", s.n_c)));
        }
        if self.dataset.n_train == 0 {
            return Err(key_err("dataset.n_train", "must be at least 1"));
        }
        if self.dataset.n_test == 0 {
            return Err(key_err("dataset.n_test", "must be at least 1"));
        }
        if self.analog.widths.is_empty() || self.analog.widths.contains(&0) {
            return Err(key_err("analog.widths", "must be a non-empty list of positive widths"));
        }
        hyper_check("analog.hyper", &self.analog.hyper)?;
        if self.digital.widths.is_empty() || self.digital.widths.contains(&0) {
            return Err(key_err("digital.widths", "must be a non-empty list of positive widths"));
        }
        positive_grid("digital.lambda_grid", &self.digital.lambda_grid)?;
        hyper_check("digital.hyper", &self.digital.hyper)?;
        for &l in &self.digital.lambda_grid {
            self.digital_spec(l).map_err(|e| key_err("digital", e))?;
        }
        for &rho in &s.rho_grid {
            self.analog_spec(rho).map_err(|e| key_err("analog", e))?;
        }
        let p = &self.paths;
        let distinct: BTreeSet<&Path> = [p.data.as_path(), p.checkpoints.as_path(), p.reports.as_path()].into();
        if distinct.len() != 3 {
            return Err(key_err("paths", "data, checkpoints and reports must be distinct"));
        }
        Ok(())
    }

    pub fn system_config(&self, rho: f64, snr_fb_db: f64) -> Result<SystemConfig> {
        let s = &self.system;
        let mut c = SystemConfig::with_rho(s.n_c, s.n_t, rho, snr_fb_db, s.snr_dl_db)?;
        c.subcarrier_seed = s.subcarrier_seed;
        c.capacity_efficiency = s.capacity_efficiency;
        Ok(c)
    }

    pub fn analog_spec(&self, rho: f64) -> Result<AnalogModelSpec> {
        let mut spec = spec_for_overhead(self.system.n_c, self.system.n_t, rho)?.with_widths(&self.analog.widths);
        spec.backbone.decoder_residual_blocks = self.analog.decoder_residual_blocks;
        spec.validate()?;
        Ok(spec)
    }

    pub fn digital_spec(&self, lambda: f64) -> Result<DigitalModelSpec> {
        let d = &self.digital;
        let mut backbone = BackboneSpec::default_for(self.system.n_c, self.system.n_t, 1).with_widths(&d.widths);
        backbone.decoder_residual_blocks = d.decoder_residual_blocks;
        let spec = DigitalModelSpec {
            backbone,
            latent_channels: d.latent_channels,
            quantizer_step: d.quantizer_step,
            lambda,
            alphabet_bound: d.alphabet_bound,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn sweep_grid(&self) -> SweepGrid {
        SweepGrid {
            rho: self.system.rho_grid.clone(),
            snr_fb_db: self.system.snr_fb_grid_db.clone(),
            snr_dl_db: self.system.snr_dl_db,
            subcarrier_seed: self.system.subcarrier_seed,
            capacity_efficiency: self.system.capacity_efficiency,
        }
    }
}

fn span_hint(e: &toml::de::Error, text: &str) -> String {
    match e.span() {
        Some(span) => {
            let line = text[..span.start.min(text.len())].lines().count().max(1);
            format!(" (line {line})")
        }
        None => String::new(),
    }
}

/// Checkpoint directory name: `{scheme}[_rho{…}][_snr{…}][_lam{…}]`. Analog
/// checkpoints carry ρ and SNR; digital ones only λ, since their training
/// does not see the feedback link.
pub fn checkpoint_name(
    scheme: crate::linkphys::Scheme,
    rho: Option<f64>,
    snr_fb_db: Option<f64>,
    lambda: Option<f64>,
) -> String {
    let mut name = scheme.to_string();
    if let Some(r) = rho {
        name += &format!("_rho{r}");
    }
    if let Some(s) = snr_fb_db {
        name += &format!("_snr{s}");
    }
    if let Some(l) = lambda {
        name += &format!("_lam{l}");
    }
    name
}
