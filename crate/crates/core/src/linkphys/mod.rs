//! Feedback-link physics shared by both codecs and the evaluation harness.

mod config;
mod feedback;
mod metrics;

use serde::{Deserialize, Serialize};

use crate::chanmodel::CMatrix;

pub use config::{db_to_linear, linear_to_db, n_f_for_rho, noise_variance, SystemConfig};
pub use feedback::{
    apply_feedback_channel, apply_feedback_channel_backward, complex_noise, feedback_taps, mean_power, mrc_backward,
    mrc_combine, normalize_power, normalize_power_backward, select_subcarriers, simo_channel, ChannelOutput,
    FeedbackFrame,
};
pub use metrics::{downlink_rate, downlink_rate_grad, feedback_capacity, nmse, nmse_linear, nmse_to_db, NMSE_FLOOR_DB};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Analog,
    Digital,
    Perfect,
    Average,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Analog => "analog",
            Scheme::Digital => "digital",
            Scheme::Perfect => "perfect",
            Scheme::Average => "average",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scheme {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "analog" => Ok(Scheme::Analog),
            "digital" => Ok(Scheme::Digital),
            "perfect" => Ok(Scheme::Perfect),
            "average" => Ok(Scheme::Average),
            other => Err(crate::Error::Config(format!("unknown scheme `{other}`"))),
        }
    }
}

/// CSI estimate held by the BS after one feedback event (angular-delay domain).
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    pub h_d_hat: CMatrix,
    pub scheme: Scheme,
    pub failed: bool,
}
