//! Merge planning: forbidden arrival windows and minimum-time search.
//!
//! All times here are relative to the planning instant (T = 0 is "now"),
//! matching the cubic's shifted frame. Callers with absolute arrival
//! predictions subtract the current time before planning.
//!
//! The search discretizes T at the control resolution dt and merge speed at
//! 0.25 m/s. Because each candidate's constraint set is a union of open
//! intervals, the optimum lies either on the T grid or just past an
//! interval's upper endpoint; endpoint candidates are nudged by dt/1000 so
//! the non-strict surrogate acceptance and the strict oracle acceptance
//! agree at grid resolution.

use crate::cubic::{solve_boundary_coeffs, trajectory_extremes, CubicCoeffs};
use crate::state::VehicleState;
use crate::zone::ZoneConfig;

/// One planned merge: cubic, its boundary data, and the worst-case slack
/// against every arrival window at the planning instant.
#[derive(Debug, Clone, PartialEq)]
pub struct MergePlan {
    pub psi: CubicCoeffs,
    /// Seconds from the planning instant to the merge.
    pub merge_time: f64,
    /// Speed at the merge point, m/s.
    pub merge_speed: f64,
    /// Candidate slot index.
    pub candidate: usize,
    /// min over vehicles of |arrival − merge_time| − (δ + bound); +inf when
    /// nothing constrains the slot.
    pub margin: f64,
}

/// Per-candidate merged open intervals of forbidden merge times.
#[derive(Debug, Clone, PartialEq)]
pub struct ForbiddenSet {
    pub per_candidate: Vec<Vec<(f64, f64)>>,
}

impl ForbiddenSet {
    /// Strict-interior membership: endpoints themselves are allowed.
    pub fn contains(&self, candidate: usize, t: f64) -> bool {
        self.per_candidate[candidate]
            .iter()
            .any(|&(lo, hi)| t > lo && t < hi)
    }
}

/// (center, radius) pairs per candidate per vehicle. A non-finite radius
/// forbids the whole axis; a non-finite center with finite radius
/// constrains nothing.
fn exclusions(
    predictions: &[Vec<f64>],
    settled: &[Vec<bool>],
    table_row: &[f64],
    delta: f64,
) -> Vec<Vec<(f64, f64)>> {
    let num_l = table_row.len();
    assert_eq!(predictions.len(), settled.len());
    for (p, s) in predictions.iter().zip(settled) {
        assert_eq!(p.len(), num_l);
        assert_eq!(s.len(), num_l);
    }
    (0..num_l)
        .map(|l| {
            predictions
                .iter()
                .zip(settled)
                .map(|(p, s)| {
                    // a settled crossing is certain: no conformal inflation
                    let c = if s[l] { 0.0 } else { table_row[l] };
                    (p[l], delta + c)
                })
                .collect()
        })
        .collect()
}

/// Worst slack of merge time `t` against one candidate's exclusions.
fn margin_at(excl: &[(f64, f64)], t: f64) -> f64 {
    let mut m = f64::INFINITY;
    for &(center, radius) in excl {
        if !radius.is_finite() {
            return f64::NEG_INFINITY;
        }
        if !center.is_finite() {
            continue;
        }
        m = m.min((t - center).abs() - radius);
    }
    m
}

/// Forbidden merge windows per candidate: the union over vehicles of the
/// open intervals (μ − δ − C, μ + δ + C), merged. An unbounded cell
/// forbids the candidate's whole axis.
///
/// `settled[n][l]` marks vehicle n as already past candidate l; its
/// prediction is then an observed fact and contributes with C = 0.
pub fn forbidden_intervals(
    predictions: &[Vec<f64>],
    settled: &[Vec<bool>],
    table_row: &[f64],
    delta: f64,
) -> ForbiddenSet {
    let excl = exclusions(predictions, settled, table_row, delta);
    let per_candidate = excl
        .iter()
        .map(|list| {
            let mut ivals: Vec<(f64, f64)> = Vec::new();
            for &(center, radius) in list {
                if !radius.is_finite() {
                    return vec![(f64::NEG_INFINITY, f64::INFINITY)];
                }
                if !center.is_finite() {
                    continue;
                }
                ivals.push((center - radius, center + radius));
            }
            ivals.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut merged: Vec<(f64, f64)> = Vec::new();
            for (lo, hi) in ivals {
                match merged.last_mut() {
                    // open intervals that merely touch stay separate: the
                    // shared endpoint itself is a legal merge time
                    Some(last) if lo < last.1 => last.1 = last.1.max(hi),
                    _ => merged.push((lo, hi)),
                }
            }
            merged
        })
        .collect();
    ForbiddenSet { per_candidate }
}

/// True iff the boundary-matching cubic keeps speed within
/// [v_min, v_max] and acceleration within [u_min, u_max] over the whole
/// plan, decided from the closed-form extremes.
pub fn kinematic_feasible(v0: f64, p_m: f64, t_m: f64, v_m: f64, config: &ZoneConfig) -> bool {
    let Ok(psi) = solve_boundary_coeffs(v0, p_m, v_m, t_m, config.dt) else {
        return false;
    };
    let ext = trajectory_extremes(&psi, t_m);
    ext.v_lo >= config.v_min
        && ext.v_hi <= config.v_max
        && ext.u_lo >= config.u_min
        && ext.u_hi <= config.u_max
}

/// Candidate merge times for one slot: the dt grid from the kinematic
/// lower bound d/v_max to the horizon, plus every exclusion's upper
/// endpoint nudged past the open boundary.
fn merge_time_candidates(d: f64, excl: &[(f64, f64)], config: &ZoneConfig) -> Vec<f64> {
    let lb = (d / config.v_max).max(config.dt);
    let k_min = ((lb / config.dt) - 1e-9).ceil() as usize;
    let mut ts: Vec<f64> = (k_min..=config.horizon_steps)
        .map(|k| k as f64 * config.dt)
        .collect();
    let nudge = config.dt * 1e-3;
    for &(center, radius) in excl {
        if center.is_finite() && radius.is_finite() {
            let t = center + radius + nudge;
            if t >= config.dt && t <= config.horizon_seconds() {
                ts.push(t);
            }
        }
    }
    ts.sort_by(f64::total_cmp);
    ts
}

/// Shared minimum-time search. `strict` selects the oracle acceptance
/// margin > 0 (true arrivals, Problem 1) over the surrogate margin ≥ 0.
fn search(
    cav: &VehicleState,
    excl: &[Vec<(f64, f64)>],
    strict: bool,
    config: &ZoneConfig,
) -> Option<MergePlan> {
    let mut best: Option<MergePlan> = None;
    for (l, excl_l) in excl.iter().enumerate() {
        let d = config.candidate_positions[l] - cav.position;
        if d <= 0.0 {
            continue;
        }
        'time: for t_m in merge_time_candidates(d, excl_l, config) {
            let margin = margin_at(excl_l, t_m);
            let ok = if strict { margin > 0.0 } else { margin >= 0.0 };
            if !ok {
                continue;
            }
            let mut v = config.v_max;
            while v >= config.v_min - 1e-12 {
                if kinematic_feasible(cav.speed, d, t_m, v, config) {
                    let psi = solve_boundary_coeffs(cav.speed, d, v, t_m, config.dt)
                        .expect("feasible plan must solve");
                    let plan = MergePlan {
                        psi,
                        merge_time: t_m,
                        merge_speed: v,
                        candidate: l,
                        margin,
                    };
                    let better = match &best {
                        None => true,
                        Some(b) => (t_m, -margin, l) < (b.merge_time, -b.margin, b.candidate),
                    };
                    if better {
                        best = Some(plan);
                    }
                    // further T at this candidate can only be worse
                    break 'time;
                }
                v -= config.merge_speed_step;
            }
        }
    }
    best
}

/// Problem 2: minimize the merge time subject to the conformal surrogate
/// constraint |μ − T| ≥ δ + C for every vehicle, plus exact kinematic
/// limits. Arrival predictions are relative to the planning instant.
/// Returns `None` when no slot admits a certified plan; the caller falls
/// back to holding off and re-planning.
pub fn solve_problem2(
    cav: &VehicleState,
    predictions: &[Vec<f64>],
    settled: &[Vec<bool>],
    table_row: &[f64],
    config: &ZoneConfig,
) -> Option<MergePlan> {
    let excl = exclusions(predictions, settled, table_row, config.headway_delta);
    search(cav, &excl, false, config)
}

/// Problem 1 with clairvoyant arrivals: strict headway |τ − T| > δ and no
/// conformal inflation. Arrival times are relative to the planning
/// instant, `+inf` for vehicles that never reach a candidate.
pub fn solve_problem1_oracle(
    cav: &VehicleState,
    true_arrivals: &[Vec<f64>],
    config: &ZoneConfig,
) -> Option<MergePlan> {
    let num_l = config.num_candidates();
    let excl: Vec<Vec<(f64, f64)>> = (0..num_l)
        .map(|l| {
            true_arrivals
                .iter()
                .map(|taus| (taus[l], config.headway_delta))
                .collect()
        })
        .collect();
    search(cav, &excl, true, config)
}
