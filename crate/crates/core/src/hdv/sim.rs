use super::idm::{altruism_decrement, idm_accel, DriverParams, U_MAX_HDV, U_MIN_HDV};
use super::scenario::Scenario;
use crate::arrival::{arrival_times_from_positions, ArrivalTimes};
use crate::state::{Observation, VehicleState};
use crate::zone::ZoneConfig;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Simulated drivers never reverse or stop dead; speeds are floored here,
/// which keeps every position series strictly increasing.
pub const SPEED_FLOOR: f64 = 0.1;

/// Longitudinal controller for the ramp vehicle during a rollout. Called
/// once per step with the current ramp state and the per-vehicle highway
/// observations for that instant; returns a commanded acceleration (clamped
/// to the configured actuator limits by the simulator).
pub trait CavPolicy {
    fn control(&mut self, step: usize, cav: &VehicleState, observations: &[Observation]) -> f64;
}

/// Holds the initial ramp speed. Used for data generation, where the ramp
/// vehicle should perturb the highway without reacting to it.
pub struct ConstantSpeed;

impl CavPolicy for ConstantSpeed {
    fn control(&mut self, _step: usize, _cav: &VehicleState, _obs: &[Observation]) -> f64 {
        0.0
    }
}

/// Complete record of one rollout: states, applied accelerations, the
/// observation rows each highway vehicle generated, and the extracted
/// candidate-point arrival times. `collision` flags a rollout that was cut
/// short because a following gap closed to zero; such traces hold fewer
/// than `horizon_steps + 1` samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioTrace {
    pub config: ZoneConfig,
    pub seed: u64,
    pub noise_seed: u64,
    pub hdv_params: Vec<DriverParams>,
    /// `[vehicle][step]`, front-most vehicle first.
    pub hdv_states: Vec<Vec<VehicleState>>,
    /// Applied accelerations, one fewer entry than states.
    pub hdv_accels: Vec<Vec<f64>>,
    pub observations: Vec<Vec<Observation>>,
    pub arrivals: Vec<ArrivalTimes>,
    pub cav_states: Option<Vec<VehicleState>>,
    pub cav_accels: Option<Vec<f64>>,
    pub collision: bool,
}

impl ScenarioTrace {
    /// Number of recorded state samples per vehicle.
    pub fn num_samples(&self) -> usize {
        self.hdv_states.first().map_or(0, Vec::len)
    }

    /// Observation sequence and arrival labels for one highway vehicle.
    pub fn trajectory(&self, n: usize) -> crate::state::HdvTrajectory {
        crate::state::HdvTrajectory {
            observations: self.observations[n].clone(),
            arrivals: self.arrivals[n].clone(),
        }
    }
}

fn observation_row(hdvs: &[VehicleState], cav: Option<&VehicleState>) -> Vec<Observation> {
    (0..hdvs.len())
        .map(|i| {
            let leader = if i > 0 { Some(hdvs[i - 1]) } else { None };
            let follower = hdvs.get(i + 1).copied();
            Observation::with_sentinels(leader, hdvs[i], follower, cav.copied())
        })
        .collect()
}

/// Advances one vehicle through a step of length `dt` under acceleration
/// `u`, flooring the resulting speed at `floor`. Returns the new state and
/// the acceleration actually applied after flooring.
fn integrate(state: &VehicleState, u: f64, dt: f64, floor: f64) -> (VehicleState, f64) {
    let mut u_eff = u;
    let mut v_new = state.speed + u * dt;
    if v_new < floor {
        u_eff = (floor - state.speed) / dt;
        v_new = floor;
    }
    let p_new = state.position + state.speed * dt + 0.5 * u_eff * dt * dt;
    (
        VehicleState {
            position: p_new,
            speed: v_new,
        },
        u_eff,
    )
}

/// Runs a scenario forward to the horizon. With `policy = None` no ramp
/// vehicle exists: courtesy terms vanish and observations carry the absent
/// sentinel. All randomness comes from `noise_seed`; the same inputs always
/// reproduce the identical trace.
pub fn rollout(
    scenario: &Scenario,
    mut policy: Option<&mut dyn CavPolicy>,
    config: &ZoneConfig,
    noise_seed: u64,
) -> ScenarioTrace {
    let n = scenario.hdvs.len();
    let has_cav = policy.is_some();
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);

    let mut states: Vec<VehicleState> = scenario.hdvs.iter().map(|(s, _)| *s).collect();
    let params: Vec<DriverParams> = scenario.hdvs.iter().map(|(_, p)| *p).collect();
    let mut cav = scenario.cav;

    let mut hdv_states: Vec<Vec<VehicleState>> = vec![Vec::new(); n];
    let mut hdv_accels: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut observations: Vec<Vec<Observation>> = vec![Vec::new(); n];
    let mut cav_states: Vec<VehicleState> = Vec::new();
    let mut cav_accels: Vec<f64> = Vec::new();
    let mut collision = false;

    for step in 0..=config.horizon_steps {
        for i in 0..n {
            hdv_states[i].push(states[i]);
        }
        if has_cav {
            cav_states.push(cav);
        }
        let obs_row = observation_row(&states, has_cav.then_some(&cav));
        for (i, o) in obs_row.iter().enumerate() {
            observations[i].push(*o);
        }
        if (1..n).any(|i| states[i - 1].position - states[i].position <= 0.0) {
            collision = true;
            break;
        }
        if step == config.horizon_steps {
            break;
        }

        let u_cav = policy.as_mut().map(|p| {
            p.control(step, &cav, &obs_row)
                .clamp(config.u_min, config.u_max)
        });

        for i in 0..n {
            // One draw per vehicle per step regardless of noise_std, so
            // traces with different parameters stay sample-aligned.
            let w: f64 = rng.sample::<f64, _>(StandardNormal) * params[i].noise_std;
            // All vehicles advance from the recorded pre-step states.
            let cur = hdv_states[i][step];
            let leader = (i > 0).then(|| hdv_states[i - 1][step]);
            let mut u = idm_accel(&cur, leader.as_ref(), &params[i]);
            if has_cav {
                let dp = cav.position - cur.position;
                u -= altruism_decrement(dp, params[i].rho, params[i].alpha);
            }
            u = (u + w).clamp(U_MIN_HDV, U_MAX_HDV);
            let (next, u_eff) = integrate(&cur, u, config.dt, SPEED_FLOOR);
            states[i] = next;
            hdv_accels[i].push(u_eff);
        }
        if let Some(u) = u_cav {
            let (next, u_eff) = integrate(&cav, u, config.dt, 0.0);
            cav = next;
            cav_accels.push(u_eff);
        }
    }

    let t0 = 0.0;
    let arrivals = hdv_states
        .iter()
        .map(|series| {
            let positions: Vec<f64> = series.iter().map(|s| s.position).collect();
            arrival_times_from_positions(&positions, config, 0.0, t0)
                .expect("floored speeds keep positions strictly increasing")
        })
        .collect();

    ScenarioTrace {
        config: config.clone(),
        seed: scenario.seed,
        noise_seed,
        hdv_params: params,
        hdv_states,
        hdv_accels,
        observations,
        arrivals,
        cav_states: has_cav.then_some(cav_states),
        cav_accels: has_cav.then_some(cav_accels),
        collision,
    }
}
