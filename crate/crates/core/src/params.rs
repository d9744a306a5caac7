//! Pipeline parameters and their defaults.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Every tunable constant of depth completion and transmission refinement.
///
/// Serialized field names double as config-file keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineParams {
    /// Photo-consistency bound on the RGB distance between stereo matches.
    pub epsilon: f64,
    /// Target superpixel count.
    #[serde(rename = "K_hat")]
    pub k_hat: usize,
    /// SLIC compactness, also used for the matching weight `m^2 / S^2`.
    pub m: f64,
    /// Minimum number of valid pixels for a reliable superpixel.
    #[serde(rename = "P")]
    pub min_valid: usize,
    /// Minimum valid fraction for a reliable superpixel.
    #[serde(rename = "lambda")]
    pub valid_fraction: f64,
    pub ransac_max_iters: usize,
    /// Confidence of having drawn one all-inlier sample.
    pub ransac_p: f64,
    /// Inlier threshold as a fraction of the superpixel's median depth.
    pub theta_factor: f64,
    /// Deviation from the plane, meters, beyond which a valid depth is replaced.
    pub theta_hat: f64,
    /// Lower bound on completed depth, meters.
    pub depth_floor: f64,
    /// Guided filter window radius, pixels.
    pub gf_radius: usize,
    /// Guided filter regularization.
    pub gf_mu: f64,
}

pub const DEFAULT_EPSILON: f64 = 12.0 / 255.0;
pub const DEFAULT_K_HAT: usize = 2048;
pub const DEFAULT_M: f64 = 10.0;
pub const DEFAULT_MIN_VALID: usize = 20;
pub const DEFAULT_VALID_FRACTION: f64 = 0.6;
pub const DEFAULT_RANSAC_MAX_ITERS: usize = 2000;
pub const DEFAULT_RANSAC_P: f64 = 0.99;
pub const DEFAULT_THETA_FACTOR: f64 = 0.01;
pub const DEFAULT_THETA_HAT: f64 = 50.0;
pub const DEFAULT_DEPTH_FLOOR: f64 = 0.1;
pub const DEFAULT_GF_RADIUS: usize = 20;
pub const DEFAULT_GF_MU: f64 = 1e-3;

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            epsilon: DEFAULT_EPSILON,
            k_hat: DEFAULT_K_HAT,
            m: DEFAULT_M,
            min_valid: DEFAULT_MIN_VALID,
            valid_fraction: DEFAULT_VALID_FRACTION,
            ransac_max_iters: DEFAULT_RANSAC_MAX_ITERS,
            ransac_p: DEFAULT_RANSAC_P,
            theta_factor: DEFAULT_THETA_FACTOR,
            theta_hat: DEFAULT_THETA_HAT,
            depth_floor: DEFAULT_DEPTH_FLOOR,
            gf_radius: DEFAULT_GF_RADIUS,
            gf_mu: DEFAULT_GF_MU,
        }
    }
}

impl PipelineParams {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(Error::invalid(msg)) };
        check(self.epsilon >= 0.0 && self.epsilon.is_finite(), "epsilon must be a finite value >= 0")?;
        check(self.k_hat >= 1, "K_hat must be at least 1")?;
        check(self.m > 0.0 && self.m.is_finite(), "m must be positive")?;
        check(self.min_valid >= 1, "P must be at least 1")?;
        check(
            self.valid_fraction > 0.0 && self.valid_fraction < 1.0,
            "lambda must lie in (0, 1)",
        )?;
        check(self.ransac_max_iters >= 1, "ransac_max_iters must be at least 1")?;
        check(self.ransac_p > 0.0 && self.ransac_p < 1.0, "ransac_p must lie in (0, 1)")?;
        check(self.theta_factor > 0.0 && self.theta_factor.is_finite(), "theta_factor must be positive")?;
        check(self.theta_hat > 0.0, "theta_hat must be positive")?;
        check(self.depth_floor > 0.0 && self.depth_floor.is_finite(), "depth_floor must be positive")?;
        check(self.gf_radius >= 1, "gf_radius must be at least 1")?;
        check(self.gf_mu > 0.0 && self.gf_mu.is_finite(), "gf_mu must be positive")?;
        Ok(())
    }

    pub fn guided(&self) -> GuidedFilterParams {
        GuidedFilterParams {
            radius: self.gf_radius,
            mu: self.gf_mu,
        }
    }

    /// SHA-256 over the canonical JSON encoding, hex encoded.
    pub fn sha256(&self) -> String {
        let json = serde_json::to_vec(self).expect("params serialize");
        hex::encode(Sha256::digest(&json))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidedFilterParams {
    pub radius: usize,
    pub mu: f64,
}

impl Default for GuidedFilterParams {
    fn default() -> Self {
        GuidedFilterParams {
            radius: DEFAULT_GF_RADIUS,
            mu: DEFAULT_GF_MU,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_keys_follow_the_documented_names() {
        let p: PipelineParams = toml::from_str("K_hat = 512\nlambda = 0.5\nP = 10\n").unwrap();
        assert_eq!(p.k_hat, 512);
        assert_eq!(p.valid_fraction, 0.5);
        assert_eq!(p.min_valid, 10);
        assert_eq!(p.theta_hat, 50.0);
        assert!(toml::from_str::<PipelineParams>("bogus = 1").is_err());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = PipelineParams::default();
        let mut b = a.clone();
        assert_eq!(a.sha256(), b.sha256());
        b.gf_mu = 2e-3;
        assert_ne!(a.sha256(), b.sha256());
    }

    #[test]
    fn validation() {
        assert!(PipelineParams::default().validate().is_ok());
        let bad = PipelineParams {
            valid_fraction: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
