use asj_core::matching::MatchParams;
use asj_core::scale::DetectParams;
use serde::{Deserialize, Serialize};

/// Detector and matcher settings shared by every subcommand.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub epsilon: f64,
    pub tau: f64,
    pub local_radius: usize,
    pub seed_radius_max: usize,
    pub patch_size: usize,
    pub ratio: f64,
    /// Longest branch scanned; the image diagonal when absent.
    pub max_scale: Option<f64>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let d = DetectParams::default();
        let m = MatchParams::default();
        Self {
            epsilon: d.epsilon,
            tau: d.tau,
            local_radius: d.local_radius,
            seed_radius_max: d.seed_radius_max,
            patch_size: m.patch_size,
            ratio: m.ratio,
            max_scale: None,
            seed: 0,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("{0} must be a positive finite number, got {1}")]
    NotPositive(&'static str, f64),
    #[error("local radius must be 3, 5 or 7, got {0}")]
    LocalRadius(usize),
    #[error("seed radius max {0} is below the minimum seed radius {1}")]
    SeedRadius(usize, usize),
    #[error("patch size must be odd and at least 3, got {0}")]
    PatchSize(usize),
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, v) in [("epsilon", self.epsilon), ("tau", self.tau), ("ratio", self.ratio)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::NotPositive(name, v));
            }
        }
        if let Some(m) = self.max_scale {
            if !(m > 0.0 && m.is_finite()) {
                return Err(ConfigError::NotPositive("max scale", m));
            }
        }
        if ![3, 5, 7].contains(&self.local_radius) {
            return Err(ConfigError::LocalRadius(self.local_radius));
        }
        let min = DetectParams::default().seed_radius_min;
        if self.seed_radius_max < min {
            return Err(ConfigError::SeedRadius(self.seed_radius_max, min));
        }
        if self.patch_size < 3 || self.patch_size % 2 == 0 {
            return Err(ConfigError::PatchSize(self.patch_size));
        }
        Ok(())
    }

    pub fn detect_params(&self) -> DetectParams {
        DetectParams {
            epsilon: self.epsilon,
            tau: self.tau,
            local_radius: self.local_radius,
            seed_radius_max: self.seed_radius_max,
            max_scale: self.max_scale,
            ..DetectParams::default()
        }
    }

    pub fn match_params(&self) -> MatchParams {
        MatchParams { patch_size: self.patch_size, ratio: self.ratio, ..MatchParams::default() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        assert_eq!(RunConfig::default().validate(), Ok(()));
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            RunConfig { epsilon: 0.0, ..Default::default() },
            RunConfig { tau: f64::NAN, ..Default::default() },
            RunConfig { local_radius: 4, ..Default::default() },
            RunConfig { seed_radius_max: 2, ..Default::default() },
            RunConfig { patch_size: 32, ..Default::default() },
            RunConfig { max_scale: Some(-1.0), ..Default::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }
}
