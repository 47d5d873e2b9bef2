//! Receding-horizon closed loop: observe, predict, re-plan, apply one
//! control step, repeat; plus the seeded Monte-Carlo batch harness.
//!
//! The controller never touches ground truth. It sees exactly what a
//! roadside unit would broadcast: per-step observations of the highway
//! vehicles. Ground-truth arrival times enter only the post-run audit and
//! the clairvoyant oracle baseline.

use crate::arrival::ArrivalTimes;
use crate::conformal::ConformalTable;
use crate::cubic::eval_trajectory;
use crate::hdv::{
    rollout, sample_scenario, CavPolicy, ConstantSpeed, Scenario, ScenarioTemplate, ScenarioTrace,
};
use crate::planner::{solve_problem1_oracle, solve_problem2, MergePlan};
use crate::predictor::{Predictor, PredictorSession};
use crate::state::{Observation, VehicleState};
use crate::zone::ZoneConfig;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Keeps the closed-loop noise stream distinct from the data-generation
/// stream at equal seeds ("noise" in ASCII).
const NOISE_SALT: u64 = 0x6e6f_6973_65;

/// Who supplies arrival times to the planner.
pub enum PlannerMode<'a> {
    /// Black-box predictor plus its calibration table (Problem 2).
    Conformal {
        predictor: &'a dyn Predictor,
        table: &'a ConformalTable,
    },
    /// Clairvoyant arrival times with strict headway (Problem 1).
    /// Evaluation-only; the times are absolute episode seconds.
    Oracle { arrivals: &'a [ArrivalTimes] },
}

/// Outcome of one episode. `plans` holds the plan (or infeasibility) of
/// every planning step up to the merge; times are absolute seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub merged: bool,
    /// First recorded sample at or past the merge point.
    pub merge_step: Option<usize>,
    pub candidate: Option<usize>,
    pub merge_time: Option<f64>,
    pub merge_speed: Option<f64>,
    /// |merge_time − τ_n| per highway vehicle at the executed candidate;
    /// None for vehicles that never reach it within the horizon.
    pub realized_headways: Vec<Option<f64>>,
    /// Some realized headway is at or under δ.
    pub violation: bool,
    pub plans: Vec<Option<MergePlan>>,
    pub collision: bool,
    pub trace: ScenarioTrace,
}

impl RunResult {
    pub fn feasible_timeline(&self) -> Vec<bool> {
        self.plans.iter().map(Option::is_some).collect()
    }

    pub fn infeasible_steps(&self) -> usize {
        self.plans.iter().filter(|p| p.is_none()).count()
    }

    /// Worst margin among the plans that were actually executed.
    pub fn min_margin(&self) -> Option<f64> {
        self.plans
            .iter()
            .flatten()
            .map(|p| p.margin)
            .min_by(f64::total_cmp)
    }
}

enum ModeState<'a> {
    Conformal {
        sessions: Vec<Box<dyn PredictorSession + 'a>>,
        table: &'a ConformalTable,
    },
    /// Absolute arrival seconds, +inf for "never".
    Oracle { arrivals: Vec<Vec<f64>> },
}

struct ClosedLoopPolicy<'a> {
    mode: ModeState<'a>,
    config: &'a ZoneConfig,
    plans: Vec<Option<MergePlan>>,
    /// State at the previous planning step and that plan's target, used
    /// to notice the merge-point crossing at the next call.
    prev: Option<(VehicleState, Option<(usize, f64)>)>,
    /// Terminal plan plus the step it was certified at. Within the last
    /// step before arrival the leftover distance is below one step's
    /// travel, so re-solving on the dt grid would always reject the slot;
    /// the certified plan is executed to completion instead.
    committed: Option<(MergePlan, usize)>,
    merged: bool,
}

impl CavPolicy for ClosedLoopPolicy<'_> {
    fn control(&mut self, step: usize, cav: &VehicleState, observations: &[Observation]) -> f64 {
        if self.merged {
            return 0.0;
        }
        if let Some((prev, Some((_, target)))) = &self.prev {
            if prev.position < *target && cav.position >= *target {
                // crossed during the last integration step; hold speed,
                // the exact event is reconstructed after the rollout
                self.merged = true;
                return 0.0;
            }
        }
        if let Some((plan, at)) = &self.committed {
            let elapsed = (step - at) as f64 * self.config.dt;
            let u = eval_trajectory(&plan.psi, elapsed.min(plan.merge_time)).2;
            let mut shifted = plan.clone();
            shifted.merge_time = (plan.merge_time - elapsed).max(0.0);
            self.prev = Some((
                *cav,
                Some((
                    plan.candidate,
                    self.config.candidate_positions[plan.candidate],
                )),
            ));
            self.plans.push(Some(shifted));
            return u;
        }
        let now = step as f64 * self.config.dt;
        let plan = match &mut self.mode {
            ModeState::Conformal { sessions, table } => {
                let mut predictions = Vec::with_capacity(sessions.len());
                let mut settled = Vec::with_capacity(sessions.len());
                for (session, obs) in sessions.iter_mut().zip(observations) {
                    session.observe(obs);
                    let rel: Vec<f64> = session
                        .predict(now)
                        .into_iter()
                        .map(|mu| mu - now)
                        .collect();
                    predictions.push(rel);
                    settled.push(session.crossings().iter().map(Option::is_some).collect());
                }
                solve_problem2(
                    cav,
                    &predictions,
                    &settled,
                    &table.bounds[step],
                    self.config,
                )
            }
            ModeState::Oracle { arrivals } => {
                let rel: Vec<Vec<f64>> = arrivals
                    .iter()
                    .map(|row| row.iter().map(|tau| tau - now).collect())
                    .collect();
                solve_problem1_oracle(cav, &rel, self.config)
            }
        };
        let u = match &plan {
            Some(p) => {
                if p.merge_time <= self.config.dt + 1e-9 {
                    self.committed = Some((p.clone(), step));
                }
                eval_trajectory(&p.psi, 0.0).2
            }
            // no certified slot: comfortable hold-off, never below v_min
            None => (self.config.u_min / 2.0).max((self.config.v_min - cav.speed) / self.config.dt),
        };
        self.prev = Some((
            *cav,
            plan.as_ref()
                .map(|p| (p.candidate, self.config.candidate_positions[p.candidate])),
        ));
        self.plans.push(plan);
        u
    }
}

fn validate_mode(
    mode: &PlannerMode,
    scenario: &Scenario,
    config: &ZoneConfig,
) -> crate::Result<()> {
    match mode {
        PlannerMode::Conformal { predictor, table } => {
            if table.predictor_fingerprint != predictor.fingerprint() {
                return Err(crate::Error::TableMismatch(format!(
                    "table built for predictor {:#018x}, got {:#018x}",
                    table.predictor_fingerprint,
                    predictor.fingerprint()
                )));
            }
            if table.num_steps() != config.horizon_steps + 1
                || table.num_candidates() != config.num_candidates()
            {
                return Err(crate::Error::TableMismatch(format!(
                    "table shape {}x{} does not fit horizon {} with {} candidates",
                    table.num_steps(),
                    table.num_candidates(),
                    config.horizon_steps + 1,
                    config.num_candidates()
                )));
            }
            Ok(())
        }
        PlannerMode::Oracle { arrivals } => {
            if arrivals.len() != scenario.hdvs.len() {
                return Err(crate::Error::InvalidConfig(format!(
                    "oracle arrivals cover {} vehicles, scenario has {}",
                    arrivals.len(),
                    scenario.hdvs.len()
                )));
            }
            Ok(())
        }
    }
}

/// Runs one episode. Deterministic: the scenario seed fixes both the
/// initial conditions (already drawn) and the driver noise stream.
pub fn run_closed_loop(
    scenario: &Scenario,
    mode: PlannerMode,
    config: &ZoneConfig,
) -> crate::Result<RunResult> {
    config.validate()?;
    validate_mode(&mode, scenario, config)?;
    let mode_state = match mode {
        PlannerMode::Conformal { predictor, table } => ModeState::Conformal {
            sessions: (0..scenario.hdvs.len())
                .map(|i| predictor.session(i))
                .collect(),
            table,
        },
        PlannerMode::Oracle { arrivals } => ModeState::Oracle {
            arrivals: arrivals
                .iter()
                .map(|a| a.times.iter().map(|t| t.unwrap_or(f64::INFINITY)).collect())
                .collect(),
        },
    };
    let mut policy = ClosedLoopPolicy {
        mode: mode_state,
        config,
        plans: Vec::new(),
        prev: None,
        committed: None,
        merged: false,
    };
    let trace = rollout(
        scenario,
        Some(&mut policy),
        config,
        scenario.seed ^ NOISE_SALT,
    );
    let plans = policy.plans;

    // Reconstruct the merge from the recorded states so a crossing during
    // the final integration step (which the policy never sees) counts too.
    let cav_states = trace
        .cav_states
        .as_ref()
        .expect("policy implies ramp vehicle");
    let mut merge: Option<(usize, usize, f64, f64)> = None;
    for k in 1..cav_states.len() {
        let Some(Some(plan)) = plans.get(k - 1) else {
            continue;
        };
        let target = config.candidate_positions[plan.candidate];
        let (a, b) = (cav_states[k - 1], cav_states[k]);
        if a.position < target && b.position >= target {
            let frac = (target - a.position) / (b.position - a.position);
            merge = Some((
                k,
                plan.candidate,
                (k as f64 - 1.0 + frac) * config.dt,
                a.speed + frac * (b.speed - a.speed),
            ));
            break;
        }
    }

    let (realized_headways, violation) = match merge {
        Some((_, l, t_m, _)) => {
            let headways: Vec<Option<f64>> = trace
                .arrivals
                .iter()
                .map(|a| a.get(l).map(|tau| (t_m - tau).abs()))
                .collect();
            let violation = headways
                .iter()
                .flatten()
                .any(|h| *h <= config.headway_delta);
            (headways, violation)
        }
        None => (vec![None; scenario.hdvs.len()], false),
    };

    Ok(RunResult {
        merged: merge.is_some(),
        merge_step: merge.map(|m| m.0),
        candidate: merge.map(|m| m.1),
        merge_time: merge.map(|m| m.2),
        merge_speed: merge.map(|m| m.3),
        realized_headways,
        violation,
        plans,
        collision: trace.collision,
        trace,
    })
}

/// True arrival times for the oracle baseline, taken from a pre-run in
/// which the ramp vehicle cruises at its initial speed. With courteous
/// drivers the oracle episode's own interaction can shift the realized
/// times slightly; the oracle is a reference envelope, not a theorem.
pub fn oracle_arrivals(scenario: &Scenario, config: &ZoneConfig) -> Vec<ArrivalTimes> {
    rollout(
        scenario,
        Some(&mut ConstantSpeed),
        config,
        scenario.seed ^ NOISE_SALT,
    )
    .arrivals
}

/// One row of the batch report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub merged: bool,
    pub merge_time: Option<f64>,
    pub merge_speed: Option<f64>,
    pub candidate: Option<usize>,
    pub violation: bool,
    pub min_headway: Option<f64>,
    pub min_margin: Option<f64>,
    pub infeasible_steps: usize,
    pub planning_steps: usize,
    pub collision: bool,
    pub oracle_merged: bool,
    pub oracle_merge_time: Option<f64>,
}

/// Aggregates over seeded episodes. Rates over merged episodes use the
/// merged count as denominator; `matched_*` means cover the seeds where
/// both the conformal controller and the oracle merged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub num_runs: usize,
    pub merged_count: usize,
    pub merge_rate: f64,
    pub violation_count: usize,
    pub violation_rate: f64,
    pub mean_merge_time: f64,
    pub p50_merge_time: f64,
    pub p90_merge_time: f64,
    pub infeasible_step_rate: f64,
    pub collision_count: usize,
    pub oracle_merged_count: usize,
    pub matched_count: usize,
    pub matched_oracle_mean: f64,
    pub matched_conformal_mean: f64,
    pub runs: Vec<RunSummary>,
}

fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let idx = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[idx - 1]
}

fn summarize(seed: u64, conformal: &RunResult, oracle: &RunResult) -> RunSummary {
    RunSummary {
        seed,
        merged: conformal.merged,
        merge_time: conformal.merge_time,
        merge_speed: conformal.merge_speed,
        candidate: conformal.candidate,
        violation: conformal.violation,
        min_headway: conformal
            .realized_headways
            .iter()
            .flatten()
            .copied()
            .min_by(f64::total_cmp),
        min_margin: conformal.min_margin(),
        infeasible_steps: conformal.infeasible_steps(),
        planning_steps: conformal.plans.len(),
        collision: conformal.collision,
        oracle_merged: oracle.merged,
        oracle_merge_time: oracle.merge_time,
    }
}

/// Runs every seed through the conformal controller and the matched
/// oracle, in parallel; the report is assembled in seed order and is a
/// pure function of (seeds, template, predictor, table, config).
pub fn batch_evaluate(
    template: &ScenarioTemplate,
    seeds: &[u64],
    predictor: &dyn Predictor,
    table: &ConformalTable,
    config: &ZoneConfig,
) -> crate::Result<BatchReport> {
    if seeds.is_empty() {
        return Err(crate::Error::EmptyDataset("batch needs at least one seed"));
    }
    let runs: Vec<RunSummary> = seeds
        .par_iter()
        .map(|&seed| {
            let scenario = sample_scenario(seed, template)?;
            let conformal = run_closed_loop(
                &scenario,
                PlannerMode::Conformal { predictor, table },
                config,
            )?;
            let arrivals = oracle_arrivals(&scenario, config);
            let oracle = run_closed_loop(
                &scenario,
                PlannerMode::Oracle {
                    arrivals: &arrivals,
                },
                config,
            )?;
            Ok(summarize(seed, &conformal, &oracle))
        })
        .collect::<crate::Result<_>>()?;

    let merged_count = runs.iter().filter(|r| r.merged).count();
    let violation_count = runs.iter().filter(|r| r.violation).count();
    let mut times: Vec<f64> = runs.iter().filter_map(|r| r.merge_time).collect();
    times.sort_by(f64::total_cmp);
    let planning_steps: usize = runs.iter().map(|r| r.planning_steps).sum();
    let infeasible_steps: usize = runs.iter().map(|r| r.infeasible_steps).sum();
    let matched: Vec<(f64, f64)> = runs
        .iter()
        .filter_map(|r| Some((r.oracle_merge_time?, r.merge_time?)))
        .collect();
    let mean = |xs: &[f64]| {
        if xs.is_empty() {
            f64::NAN
        } else {
            xs.iter().sum::<f64>() / xs.len() as f64
        }
    };
    Ok(BatchReport {
        num_runs: runs.len(),
        merged_count,
        merge_rate: merged_count as f64 / runs.len() as f64,
        violation_count,
        violation_rate: if merged_count == 0 {
            0.0
        } else {
            violation_count as f64 / merged_count as f64
        },
        mean_merge_time: mean(&times),
        p50_merge_time: nearest_rank(&times, 0.5),
        p90_merge_time: nearest_rank(&times, 0.9),
        infeasible_step_rate: if planning_steps == 0 {
            0.0
        } else {
            infeasible_steps as f64 / planning_steps as f64
        },
        collision_count: runs.iter().filter(|r| r.collision).count(),
        oracle_merged_count: runs.iter().filter(|r| r.oracle_merged).count(),
        matched_count: matched.len(),
        matched_oracle_mean: mean(&matched.iter().map(|m| m.0).collect::<Vec<_>>()),
        matched_conformal_mean: mean(&matched.iter().map(|m| m.1).collect::<Vec<_>>()),
        runs,
    })
}
