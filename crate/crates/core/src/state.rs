use serde::{Deserialize, Serialize};

use crate::arrival::ArrivalTimes;

/// Longitudinal state of one vehicle, measured from the control-zone entry of
/// its own lane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub position: f64,
    pub speed: f64,
}

impl VehicleState {
    pub fn new(position: f64, speed: f64) -> Self {
        Self { position, speed }
    }
}

/// Offset used for the pseudo-vehicle substituted when a neighbor is absent.
pub const SENTINEL_OFFSET: f64 = 1000.0;

/// What one HDV (and, through the coordinator, the CAV) sees at one step:
/// its leader, itself, its follower, and the CAV.
///
/// Missing neighbors are materialized as sentinel pseudo-vehicles placed
/// `SENTINEL_OFFSET` ahead/behind at the vehicle's own speed, so the
/// observation dimension is always 8.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub leader: VehicleState,
    pub own: VehicleState,
    pub follower: VehicleState,
    pub cav: VehicleState,
}

impl Observation {
    pub fn with_sentinels(
        leader: Option<VehicleState>,
        own: VehicleState,
        follower: Option<VehicleState>,
        cav: Option<VehicleState>,
    ) -> Self {
        let ahead = VehicleState::new(own.position + SENTINEL_OFFSET, own.speed);
        let behind = VehicleState::new(own.position - SENTINEL_OFFSET, own.speed);
        Self {
            leader: leader.unwrap_or(ahead),
            own,
            follower: follower.unwrap_or(behind),
            cav: cav.unwrap_or(ahead),
        }
    }
}

/// One HDV's episode as a prediction data point: the observation series it
/// generated and the ground-truth candidate arrival times extracted from its
/// position series.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HdvTrajectory {
    pub observations: Vec<Observation>,
    pub arrivals: ArrivalTimes,
}
