use serde::{Deserialize, Serialize};

use crate::backbone::BackboneSpec;
use crate::error::{Error, Result};
use crate::linkphys::n_f_for_rho;

/// Channel count of the strided convolutions in the reference architecture.
pub const REFERENCE_WIDTH: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalogModelSpec {
    pub n_f: usize,
    pub rho: f64,
    /// Real features out of the encoder; always `2 · n_f`.
    pub feature_count: usize,
    pub backbone: BackboneSpec,
}

impl AnalogModelSpec {
    pub fn n_c(&self) -> usize {
        self.backbone.n_c
    }

    pub fn n_t(&self) -> usize {
        self.backbone.n_t
    }

    pub fn validate(&self) -> Result<()> {
        self.backbone.validate()?;
        if self.feature_count != 2 * self.n_f {
            return Err(Error::config(format!(
                "feature_count {} must equal 2·n_f = {}",
                self.feature_count,
                2 * self.n_f
            )));
        }
        if self.n_f < 1 || self.n_f > self.n_c() {
            return Err(Error::config(format!("n_f = {} out of range for n_c = {}", self.n_f, self.n_c())));
        }
        Ok(())
    }

    /// Same layout with other convolution widths (see [`BackboneSpec::with_widths`]).
    pub fn with_widths(mut self, widths: &[usize]) -> Self {
        self.backbone = self.backbone.with_widths(widths);
        self
    }
}

/// Architecture for a feedback overhead: the reference strided stack, with the
/// final projection sized to exactly `2 · n_f` features.
pub fn spec_for_overhead(n_c: usize, n_t: usize, rho: f64) -> Result<AnalogModelSpec> {
    let n_f = n_f_for_rho(n_c, rho)?;
    let backbone = BackboneSpec::default_for(n_c, n_t, REFERENCE_WIDTH);
    backbone.validate()?;
    let spec = AnalogModelSpec { n_f, rho: n_f as f64 / n_c as f64, feature_count: 2 * n_f, backbone };
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_count_tracks_overhead() {
        assert_eq!(spec_for_overhead(256, 32, 0.25).unwrap().feature_count, 128);
        assert_eq!(spec_for_overhead(64, 8, 1.0).unwrap().feature_count, 128);
        assert_eq!(spec_for_overhead(64, 8, 0.25).unwrap().feature_count, 32);
        assert_eq!(spec_for_overhead(64, 8, 0.25).unwrap(), spec_for_overhead(64, 8, 0.25).unwrap());
    }

    #[test]
    fn too_small_overhead_names_the_minimum() {
        let err = spec_for_overhead(64, 8, 0.001).unwrap_err().to_string();
        assert!(err.contains("0.015625"), "{err}");
    }

    #[test]
    fn reference_layers_use_256_kernels() {
        let s = spec_for_overhead(256, 32, 0.2).unwrap();
        assert!(s.backbone.encoder_layers.iter().all(|l| l.channels == 256));
        assert_eq!(s.backbone.encoder_layers[0].kernel, 9);
        let w = s.clone().with_widths(&[16, 128]).backbone;
        assert_eq!((w.encoder_layers[0].channels, w.encoder_layers[1].channels), (16, 128));
    }
}
