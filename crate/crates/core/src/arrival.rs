//! Ground-truth arrival-time extraction: when does a vehicle's position
//! series cross each merging candidate?

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::zone::ZoneConfig;

/// Per-candidate crossing times in seconds; `None` means the candidate was
/// never reached within the horizon.
///
/// Finite entries are non-decreasing in the candidate index: candidates are
/// ordered by position and non-stopping vehicles pass them in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalTimes {
    pub times: Vec<Option<f64>>,
}

impl ArrivalTimes {
    pub fn get(&self, l: usize) -> Option<f64> {
        self.times.get(l).copied().flatten()
    }
}

/// Incremental crossing detector used both for batch extraction and by
/// online consumers (predictor sessions, the closed loop).
///
/// Crossing times are linearly interpolated between consecutive samples. A
/// target already behind the vehicle at the first sample is recorded at that
/// sample's time.
#[derive(Debug, Clone)]
pub struct CrossingTracker {
    targets: Vec<f64>,
    crossed: Vec<Option<f64>>,
    next: usize,
    prev: Option<(f64, f64)>,
}

impl CrossingTracker {
    pub fn new(targets: Vec<f64>) -> Self {
        let n = targets.len();
        Self {
            targets,
            crossed: vec![None; n],
            next: 0,
            prev: None,
        }
    }

    pub fn observe(&mut self, time: f64, position: f64) {
        while self.next < self.targets.len() && position >= self.targets[self.next] {
            let target = self.targets[self.next];
            let t = match self.prev {
                Some((pt, pp)) if pp < target => {
                    time + (time - pt) * (target - position) / (position - pp)
                }
                _ => time,
            };
            self.crossed[self.next] = Some(t);
            self.next += 1;
        }
        self.prev = Some((time, position));
    }

    pub fn crossings(&self) -> &[Option<f64>] {
        &self.crossed
    }

    pub fn into_arrivals(self) -> ArrivalTimes {
        ArrivalTimes {
            times: self.crossed,
        }
    }
}

/// Crossing time of every candidate for a position series sampled at
/// `config.dt`, the first sample taken at `start_time`. `lane_offset` is
/// added to candidate positions to express them in the series' lane
/// coordinate.
pub fn arrival_times_from_positions(
    positions: &[f64],
    config: &ZoneConfig,
    lane_offset: f64,
    start_time: f64,
) -> Result<ArrivalTimes> {
    for (i, w) in positions.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::NonMonotonePositions { index: i + 1 });
        }
    }
    let targets: Vec<f64> = config
        .candidate_positions
        .iter()
        .map(|p| p + lane_offset)
        .collect();
    let mut tracker = CrossingTracker::new(targets);
    for (i, &p) in positions.iter().enumerate() {
        tracker.observe(start_time + i as f64 * config.dt, p);
    }
    Ok(tracker.into_arrivals())
}
