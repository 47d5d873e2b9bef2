use super::{fnv1a, Predictor, PredictorSession};
use crate::arrival::CrossingTracker;
use crate::state::{Observation, VehicleState};
use crate::zone::ZoneConfig;

/// Constant-speed extrapolation of the latest observed state: distance to
/// each candidate divided by current speed. Candidates at or behind the
/// vehicle report `now`. Stateless beyond the latest sample; the session
/// wrapper layers recorded crossings on top.
pub fn physics_predict(latest: &VehicleState, config: &ZoneConfig, now: f64) -> Vec<f64> {
    config
        .candidate_positions
        .iter()
        .map(|&target| {
            let d = target - latest.position;
            if d <= 0.0 {
                now
            } else {
                now + d / latest.speed
            }
        })
        .collect()
}

/// Memoryless baseline predictor.
pub struct PhysicsPredictor {
    pub config: ZoneConfig,
}

impl PhysicsPredictor {
    pub fn new(config: ZoneConfig) -> crate::Result<Self> {
        config.validate()?;
        Ok(PhysicsPredictor { config })
    }
}

struct PhysicsSession<'a> {
    config: &'a ZoneConfig,
    tracker: CrossingTracker,
    latest: Option<VehicleState>,
    steps: usize,
}

impl PredictorSession for PhysicsSession<'_> {
    fn observe(&mut self, obs: &Observation) {
        let t = self.steps as f64 * self.config.dt;
        self.tracker.observe(t, obs.own.position);
        self.latest = Some(obs.own);
        self.steps += 1;
    }

    fn predict(&self, now: f64) -> Vec<f64> {
        let latest = self
            .latest
            .expect("predict requires at least one observation");
        let mut mu = physics_predict(&latest, self.config, now);
        for (m, actual) in mu.iter_mut().zip(self.tracker.crossings()) {
            if let Some(t) = actual {
                *m = *t;
            }
        }
        mu
    }

    fn crossings(&self) -> &[Option<f64>] {
        self.tracker.crossings()
    }
}

impl Predictor for PhysicsPredictor {
    fn session(&self, _subject: usize) -> Box<dyn PredictorSession + '_> {
        Box::new(PhysicsSession {
            config: &self.config,
            tracker: CrossingTracker::new(self.config.candidate_positions.clone()),
            latest: None,
            steps: 0,
        })
    }

    fn num_candidates(&self) -> usize {
        self.config.num_candidates()
    }

    fn fingerprint(&self) -> u64 {
        fnv1a(
            std::iter::once(0x7068_7973u64).chain(
                self.config
                    .candidate_positions
                    .iter()
                    .map(|p| p.to_bits())
                    .chain([self.config.dt.to_bits()]),
            ),
        )
    }
}
