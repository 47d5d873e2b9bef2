//! Highway-vehicle simulation: car-following dynamics, scenario sampling,
//! and closed rollouts that produce the observation/arrival records the
//! rest of the pipeline consumes.

mod idm;
mod scenario;
mod sim;

pub use idm::{altruism_decrement, idm_accel, DriverParams, U_MAX_HDV, U_MIN_HDV};
pub use scenario::{sample_scenario, Scenario, ScenarioTemplate};
pub use sim::{rollout, CavPolicy, ConstantSpeed, ScenarioTrace, SPEED_FLOOR};
