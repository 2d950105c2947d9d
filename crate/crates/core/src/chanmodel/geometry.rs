//! Clustered multipath generator for paired FDD downlink/uplink channels.
//!
//! Each sample holds `n_clusters` scattering clusters. A cluster has a mean
//! departure angle drawn uniformly in `±cluster_sector_deg`, and
//! `rays_per_cluster` rays spread uniformly within `±angle_spread_deg` of it.
//! Every ray contributes a complex gain at each delay tap below
//! `max_delay_taps`, and tap `l` carries expected power proportional to
//! `exp(-l / delay_decay)`. A deterministic line-of-sight ray sits at tap 0
//! and carries `los_power_fraction` of the expected energy.
//!
//! The uplink shares angles and tap powers with the downlink. When
//! `ul_dl_phase_decorrelation` is set, every scattered ray gain keeps its
//! magnitude but has its phase redrawn for the uplink.
//!
//! Samples are scaled so that `‖H‖_F² = N_c`, i.e. the frequency-domain rows
//! have unit average squared norm.

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from;

pub type CMatrix = Array2<Complex64>;

/// Paired downlink/uplink channel in the angular-delay domain.
/// Rows are delay taps, columns are BS antennas.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSample {
    pub h_d: CMatrix,
    pub h_u: CMatrix,
    pub sample_id: u64,
    pub seed: u64,
}

impl ChannelSample {
    pub fn n_c(&self) -> usize {
        self.h_d.nrows()
    }

    pub fn n_t(&self) -> usize {
        self.h_d.ncols()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub n_clusters: usize,
    pub rays_per_cluster: usize,
    /// Number of leading delay taps that carry energy.
    pub max_delay_taps: usize,
    /// Exponential power-delay constant, in taps.
    pub delay_decay: f64,
    pub angle_spread_deg: f64,
    pub los_power_fraction: f64,
    pub antenna_spacing_wavelengths: f64,
    pub ul_dl_phase_decorrelation: bool,
    #[serde(default = "default_sector")]
    pub cluster_sector_deg: f64,
    #[serde(default = "default_los_angle")]
    pub los_angle_deg: f64,
}

fn default_sector() -> f64 {
    60.0
}

fn default_los_angle() -> f64 {
    20.0
}

impl Default for GeometryConfig {
    /// Desk-scale indoor profile.
    fn default() -> Self {
        Self {
            n_clusters: 2,
            rays_per_cluster: 8,
            max_delay_taps: 16,
            delay_decay: 0.35,
            angle_spread_deg: 3.0,
            los_power_fraction: 0.4,
            antenna_spacing_wavelengths: 0.5,
            ul_dl_phase_decorrelation: true,
            cluster_sector_deg: default_sector(),
            los_angle_deg: default_los_angle(),
        }
    }
}

impl GeometryConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, why: &str| Err(Error::config(format!("geometry.{key}: {why}")));
        if self.n_clusters < 1 {
            return bad("n_clusters", "must be at least 1");
        }
        if self.rays_per_cluster < 1 {
            return bad("rays_per_cluster", "must be at least 1");
        }
        if self.max_delay_taps < 1 {
            return bad("max_delay_taps", "must be at least 1");
        }
        if !(self.delay_decay > 0.0 && self.delay_decay.is_finite()) {
            return bad("delay_decay", "must be positive");
        }
        if !(self.angle_spread_deg >= 0.0 && self.angle_spread_deg.is_finite()) {
            return bad("angle_spread_deg", "must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.los_power_fraction) {
            return bad("los_power_fraction", "must lie in [0, 1]");
        }
        if !(self.antenna_spacing_wavelengths > 0.0 && self.antenna_spacing_wavelengths.is_finite()) {
            return bad("antenna_spacing_wavelengths", "must be positive");
        }
        if !(self.cluster_sector_deg >= 0.0 && self.cluster_sector_deg <= 90.0) {
            return bad("cluster_sector_deg", "must lie in [0, 90]");
        }
        if !self.los_angle_deg.is_finite() {
            return bad("los_angle_deg", "must be finite");
        }
        Ok(())
    }

    /// Expected fraction of sample energy per delay tap (length `max_delay_taps`).
    pub fn tap_power_profile(&self) -> Vec<f64> {
        let scatter = self.scatter_weights();
        scatter
            .iter()
            .enumerate()
            .map(|(l, w)| {
                let los = if l == 0 { self.los_power_fraction } else { 0.0 };
                los + (1.0 - self.los_power_fraction) * w
            })
            .collect()
    }

    /// Normalized exponential power-delay profile of the scattered energy.
    fn scatter_weights(&self) -> Vec<f64> {
        let raw: Vec<f64> = (0..self.max_delay_taps).map(|l| (-(l as f64) / self.delay_decay).exp()).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / total).collect()
    }
}

/// ULA response `exp(j 2π d n sin θ)` for `n = 0..n_t`.
pub fn steering_vector(n_t: usize, spacing: f64, angle_rad: f64) -> Vec<Complex64> {
    let phase = 2.0 * std::f64::consts::PI * spacing * angle_rad.sin();
    (0..n_t).map(|n| Complex64::from_polar(1.0, phase * n as f64)).collect()
}

/// Deterministic line-of-sight component before per-sample normalization.
pub fn los_component(geometry: &GeometryConfig, n_c: usize, n_t: usize) -> CMatrix {
    let mut h = Array2::zeros((n_c, n_t));
    if geometry.los_power_fraction > 0.0 && n_c > 0 {
        let amp = (n_c as f64 * geometry.los_power_fraction / n_t as f64).sqrt();
        let a = steering_vector(n_t, geometry.antenna_spacing_wavelengths, geometry.los_angle_deg.to_radians());
        for (t, v) in a.into_iter().enumerate() {
            h[[0, t]] = v * amp;
        }
    }
    h
}

fn normalize(h: &mut CMatrix) {
    let energy: f64 = h.iter().map(|z| z.norm_sqr()).sum();
    if energy > 0.0 {
        let s = (h.nrows() as f64 / energy).sqrt();
        h.mapv_inplace(|z| z * s);
    }
}

/// Draws one paired channel realization. Pure function of its arguments.
pub fn generate_sample(geometry: &GeometryConfig, n_c: usize, n_t: usize, seed: u64) -> Result<ChannelSample> {
    geometry.validate()?;
    if n_t < 1 {
        return Err(Error::config("n_t must be at least 1"));
    }
    if n_c < geometry.max_delay_taps {
        return Err(Error::config(format!(
            "n_c = {n_c} is smaller than geometry.max_delay_taps = {}",
            geometry.max_delay_taps
        )));
    }
    let mut rng = rng_from(seed);
    let n_rays = geometry.n_clusters * geometry.rays_per_cluster;
    let sector = geometry.cluster_sector_deg.to_radians();
    let spread = geometry.angle_spread_deg.to_radians();

    let mut steering = Vec::with_capacity(n_rays);
    for _ in 0..geometry.n_clusters {
        let center = rng.random_range(-1.0..=1.0) * sector;
        for _ in 0..geometry.rays_per_cluster {
            let offset = rng.random_range(-1.0..=1.0) * spread;
            steering.push(steering_vector(n_t, geometry.antenna_spacing_wavelengths, center + offset));
        }
    }

    let los = los_component(geometry, n_c, n_t);
    let mut h_d = los.clone();
    let mut h_u = los;
    let scatter = 1.0 - geometry.los_power_fraction;
    let weights = geometry.scatter_weights();
    for (l, w) in weights.iter().enumerate() {
        // per-ray variance so that the tap row has expected energy n_c * scatter * w
        let sigma = (n_c as f64 * scatter * w / (n_t * n_rays) as f64).sqrt();
        for a in &steering {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            let g = Complex64::new(re, im) * (sigma * std::f64::consts::FRAC_1_SQRT_2);
            let g_u = if geometry.ul_dl_phase_decorrelation {
                Complex64::from_polar(g.norm(), rng.random_range(0.0..std::f64::consts::TAU))
            } else {
                g
            };
            for (t, &v) in a.iter().enumerate() {
                h_d[[l, t]] += g * v;
                h_u[[l, t]] += g_u * v;
            }
        }
    }
    normalize(&mut h_d);
    normalize(&mut h_u);
    Ok(ChannelSample { h_d, h_u, sample_id: 0, seed })
}
