use super::idm::DriverParams;
use crate::state::VehicleState;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Ranges from which initial conditions and driver parameters are drawn.
/// All `(lo, hi)` pairs are inclusive; a zero-width pair pins the value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioTemplate {
    pub num_hdvs: usize,
    /// Initial position of the front-most highway vehicle, m.
    pub lead_position: (f64, f64),
    /// Bumper-to-bumper spacing between successive highway vehicles, m.
    pub initial_gap: (f64, f64),
    /// Initial highway speeds, m/s.
    pub initial_speed: (f64, f64),
    /// Desired free-flow speed range (per driver), m/s.
    pub desired_speed: (f64, f64),
    /// Courtesy strength range (per driver).
    pub altruism: (f64, f64),
    pub alpha: f64,
    pub idm_t: f64,
    pub idm_s0: f64,
    pub idm_a: f64,
    pub idm_b: f64,
    pub noise_std: f64,
    /// Smallest admissible sampled spacing; guards against spawning
    /// vehicles inside each other's crumple zones.
    pub min_initial_gap: f64,
    /// Ramp vehicle initial position, m.
    pub cav_position: (f64, f64),
    /// Ramp vehicle initial speed, m/s.
    pub cav_speed: (f64, f64),
}

impl Default for ScenarioTemplate {
    fn default() -> Self {
        ScenarioTemplate {
            num_hdvs: 3,
            lead_position: (-40.0, 0.0),
            initial_gap: (15.0, 40.0),
            initial_speed: (24.0, 32.0),
            desired_speed: (25.0, 35.0),
            altruism: (0.0, 2.0),
            alpha: 0.005,
            idm_t: 1.5,
            idm_s0: 2.0,
            idm_a: 1.5,
            idm_b: 2.0,
            noise_std: 0.1,
            min_initial_gap: 10.0,
            cav_position: (-10.0, 10.0),
            cav_speed: (20.0, 28.0),
        }
    }
}

fn check_range(name: &str, (lo, hi): (f64, f64)) -> crate::Result<()> {
    if !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(crate::Error::InvalidConfig(format!(
            "{name}: expected finite lo <= hi, got ({lo}, {hi})"
        )));
    }
    Ok(())
}

impl ScenarioTemplate {
    pub fn validate(&self) -> crate::Result<()> {
        check_range("lead_position", self.lead_position)?;
        check_range("initial_gap", self.initial_gap)?;
        check_range("initial_speed", self.initial_speed)?;
        check_range("desired_speed", self.desired_speed)?;
        check_range("altruism", self.altruism)?;
        check_range("cav_position", self.cav_position)?;
        check_range("cav_speed", self.cav_speed)?;
        if self.initial_speed.0 <= 0.0 {
            return Err(crate::Error::InvalidConfig(format!(
                "initial_speed: must be > 0, got {}",
                self.initial_speed.0
            )));
        }
        if self.desired_speed.0 <= 0.0 {
            return Err(crate::Error::InvalidConfig(format!(
                "desired_speed: must be > 0, got {}",
                self.desired_speed.0
            )));
        }
        if self.cav_speed.0 <= 0.0 {
            return Err(crate::Error::InvalidConfig(format!(
                "cav_speed: must be > 0, got {}",
                self.cav_speed.0
            )));
        }
        if self.altruism.0 < 0.0 {
            return Err(crate::Error::InvalidConfig(format!(
                "altruism: must be >= 0, got {}",
                self.altruism.0
            )));
        }
        if self.initial_gap.0 < self.min_initial_gap {
            return Err(crate::Error::InvalidConfig(format!(
                "initial_gap: lower bound {} below min_initial_gap {}",
                self.initial_gap.0, self.min_initial_gap
            )));
        }
        let scalar = DriverParams {
            idm_v0: self.desired_speed.0,
            idm_t: self.idm_t,
            idm_s0: self.idm_s0,
            idm_a: self.idm_a,
            idm_b: self.idm_b,
            rho: self.altruism.0,
            alpha: self.alpha,
            noise_std: self.noise_std,
        };
        scalar.validate()
    }
}

/// One concrete draw from a template: initial states plus per-driver
/// parameters. Index 0 is the front-most highway vehicle; each subsequent
/// index follows the previous one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub hdvs: Vec<(VehicleState, DriverParams)>,
    pub cav: VehicleState,
    pub seed: u64,
}

fn draw(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..=hi)
    }
}

/// Draws a scenario. The same `(seed, template)` pair always produces the
/// identical scenario, bit for bit.
pub fn sample_scenario(seed: u64, template: &ScenarioTemplate) -> crate::Result<Scenario> {
    template.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hdvs = Vec::with_capacity(template.num_hdvs);
    let mut position = draw(&mut rng, template.lead_position);
    for i in 0..template.num_hdvs {
        if i > 0 {
            position -= draw(&mut rng, template.initial_gap);
        }
        let state = VehicleState {
            position,
            speed: draw(&mut rng, template.initial_speed),
        };
        let params = DriverParams {
            idm_v0: draw(&mut rng, template.desired_speed),
            idm_t: template.idm_t,
            idm_s0: template.idm_s0,
            idm_a: template.idm_a,
            idm_b: template.idm_b,
            rho: draw(&mut rng, template.altruism),
            alpha: template.alpha,
            noise_std: template.noise_std,
        };
        hdvs.push((state, params));
    }
    let cav = VehicleState {
        position: draw(&mut rng, template.cav_position),
        speed: draw(&mut rng, template.cav_speed),
    };
    Ok(Scenario { hdvs, cav, seed })
}
