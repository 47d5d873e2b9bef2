use crate::state::VehicleState;
use serde::{Deserialize, Serialize};

/// Hard acceleration limits for simulated human drivers, m/s^2. Wider than
/// the merging vehicle's own limits so that emergency braking is possible.
pub const U_MIN_HDV: f64 = -6.0;
pub const U_MAX_HDV: f64 = 3.0;

/// Per-driver car-following parameters. The `idm_*` fields are the usual
/// Intelligent Driver Model constants; `rho`/`alpha` shape the courtesy
/// deceleration a driver applies when the merging vehicle draws level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriverParams {
    /// Desired free-flow speed, m/s.
    pub idm_v0: f64,
    /// Desired time headway, s.
    pub idm_t: f64,
    /// Jam distance, m.
    pub idm_s0: f64,
    /// Maximum acceleration, m/s^2.
    pub idm_a: f64,
    /// Comfortable deceleration, m/s^2.
    pub idm_b: f64,
    /// Courtesy yielding strength, m/s^2 at zero longitudinal offset.
    pub rho: f64,
    /// Courtesy kernel width parameter, 1/m^2.
    pub alpha: f64,
    /// Standard deviation of the white acceleration noise, m/s^2.
    pub noise_std: f64,
}

impl Default for DriverParams {
    fn default() -> Self {
        DriverParams {
            idm_v0: 30.0,
            idm_t: 1.5,
            idm_s0: 2.0,
            idm_a: 1.5,
            idm_b: 2.0,
            rho: 1.0,
            alpha: 0.005,
            noise_std: 0.1,
        }
    }
}

impl DriverParams {
    pub fn validate(&self) -> crate::Result<()> {
        let pos = [
            ("idm_v0", self.idm_v0),
            ("idm_t", self.idm_t),
            ("idm_s0", self.idm_s0),
            ("idm_a", self.idm_a),
            ("idm_b", self.idm_b),
        ];
        for (name, v) in pos {
            if !v.is_finite() || v <= 0.0 {
                return Err(crate::Error::InvalidConfig(format!(
                    "{name}: must be finite and > 0, got {v}"
                )));
            }
        }
        let nonneg = [
            ("rho", self.rho),
            ("alpha", self.alpha),
            ("noise_std", self.noise_std),
        ];
        for (name, v) in nonneg {
            if !v.is_finite() || v < 0.0 {
                return Err(crate::Error::InvalidConfig(format!(
                    "{name}: must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Car-following acceleration toward the vehicle directly ahead in the same
/// lane, clamped to the driver limits. A non-positive gap means the vehicles
/// already overlap; the model responds with full braking.
pub fn idm_accel(own: &VehicleState, leader: Option<&VehicleState>, p: &DriverParams) -> f64 {
    let v = own.speed;
    let free = 1.0 - (v / p.idm_v0).powi(4);
    let raw = match leader {
        None => p.idm_a * free,
        Some(lead) => {
            let gap = lead.position - own.position;
            if gap <= 0.0 {
                return U_MIN_HDV;
            }
            let dv = v - lead.speed;
            let s_star = p.idm_s0 + v * p.idm_t + v * dv / (2.0 * (p.idm_a * p.idm_b).sqrt());
            p.idm_a * (free - (s_star / gap).powi(2))
        }
    };
    raw.clamp(U_MIN_HDV, U_MAX_HDV)
}

/// Courtesy deceleration magnitude as a function of the longitudinal offset
/// to the merging vehicle. Peaks at `rho` when the offset is zero and decays
/// as a Gaussian in the offset.
pub fn altruism_decrement(delta_p: f64, rho: f64, alpha: f64) -> f64 {
    rho * (-alpha * delta_p * delta_p).exp()
}
