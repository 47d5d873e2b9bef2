use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Control-zone geometry, horizon, and actuation limits shared by every
/// module.
///
/// Positions are longitudinal; the ramp and the highway lane use aligned
/// coordinates, so candidate positions are valid in both (a fixed
/// `lane_offset` is applied where lanes differ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZoneConfig {
    /// Sampling period in seconds.
    pub dt: f64,
    /// Horizon step count T; steps run 0..=T.
    pub horizon_steps: usize,
    /// Merging-candidate positions in meters, strictly increasing, equally
    /// spaced.
    pub candidate_positions: Vec<f64>,
    /// Required time headway delta in seconds between the merge and any HDV
    /// arrival at the chosen candidate.
    pub headway_delta: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub u_min: f64,
    pub u_max: f64,
    /// Miscoverage level for conformal calibration.
    pub epsilon: f64,
    /// Merge-speed search resolution in m/s.
    pub merge_speed_step: f64,
}

impl Default for ZoneConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            horizon_steps: 120,
            candidate_positions: uniform_candidates(100.0, 10.0, 10),
            headway_delta: 1.0,
            v_min: 5.0,
            v_max: 35.0,
            u_min: -3.0,
            u_max: 3.0,
            epsilon: 0.1,
            merge_speed_step: 0.25,
        }
    }
}

/// Candidates at `start + spacing * l` for l in 0..count.
pub fn uniform_candidates(start: f64, spacing: f64, count: usize) -> Vec<f64> {
    (0..count).map(|l| start + spacing * l as f64).collect()
}

impl ZoneConfig {
    pub fn num_candidates(&self) -> usize {
        self.candidate_positions.len()
    }

    /// Episode length in seconds.
    pub fn horizon_seconds(&self) -> f64 {
        self.horizon_steps as f64 * self.dt
    }

    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return err(format!("dt: must be > 0, got {}", self.dt));
        }
        if self.horizon_steps == 0 {
            return err("horizon_steps: must be >= 1".into());
        }
        if self.candidate_positions.is_empty() {
            return err("candidate_positions: must be non-empty".into());
        }
        if self.candidate_positions.iter().any(|p| !p.is_finite()) {
            return err("candidate_positions: entries must be finite".into());
        }
        let n = self.candidate_positions.len();
        if n > 1 {
            let spacing = self.candidate_positions[1] - self.candidate_positions[0];
            if spacing <= 0.0 {
                return err("candidate_positions: must be strictly increasing".into());
            }
            for i in 1..n {
                let gap = self.candidate_positions[i] - self.candidate_positions[i - 1];
                if (gap - spacing).abs() > 1e-9 * spacing.max(1.0) {
                    return err(format!(
                        "candidate_positions: spacing not constant at index {i}"
                    ));
                }
            }
        }
        if !(self.headway_delta.is_finite() && self.headway_delta >= 0.0) {
            return err(format!(
                "headway_delta: must be >= 0, got {}",
                self.headway_delta
            ));
        }
        if !(self.v_min > 0.0 && self.v_min <= self.v_max && self.v_max.is_finite()) {
            return err(format!(
                "v_min/v_max: need 0 < v_min <= v_max, got {}..{}",
                self.v_min, self.v_max
            ));
        }
        if !(self.u_min < 0.0 && 0.0 < self.u_max) {
            return err(format!(
                "u_min/u_max: need u_min < 0 < u_max, got {}..{}",
                self.u_min, self.u_max
            ));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return err(format!("epsilon: must be in (0,1), got {}", self.epsilon));
        }
        if !(self.merge_speed_step.is_finite() && self.merge_speed_step > 0.0) {
            return err(format!(
                "merge_speed_step: must be > 0, got {}",
                self.merge_speed_step
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        let cfg = ZoneConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.num_candidates(), 10);
        assert_eq!(cfg.candidate_positions[0], 100.0);
        assert_eq!(cfg.candidate_positions[9], 190.0);
    }

    #[test]
    fn uneven_spacing_rejected() {
        let cfg = ZoneConfig {
            candidate_positions: vec![100.0, 110.0, 125.0],
            ..ZoneConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn epsilon_bounds_rejected() {
        for eps in [0.0, 1.0, -0.2, 1.5] {
            let cfg = ZoneConfig {
                epsilon: eps,
                ..ZoneConfig::default()
            };
            assert!(cfg.validate().is_err(), "epsilon {eps} accepted");
        }
    }
}
