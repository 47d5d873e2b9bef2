//! Nonconformity scores and table construction.

use rayon::prelude::*;

use super::{conformal_bound, ConformalTable};
use crate::predictor::Predictor;
use crate::state::HdvTrajectory;
use crate::zone::ZoneConfig;
use crate::{Error, Result};

fn check_lengths(trajs: &[HdvTrajectory], config: &ZoneConfig) -> Result<()> {
    let want = config.horizon_steps + 1;
    for (i, traj) in trajs.iter().enumerate() {
        if traj.observations.len() != want {
            return Err(Error::InvalidConfig(format!(
                "trajectory {i} has {} observations, expected {want}",
                traj.observations.len()
            )));
        }
    }
    Ok(())
}

/// Causally sweeps a session over every trajectory and records the decoded
/// arrival times: result[k][t][l] is trajectory k's prediction for
/// candidate l given the first t+1 observations. Trajectories are
/// processed in parallel; each session is internally sequential.
pub fn predictions_matrix(
    trajs: &[HdvTrajectory],
    predictor: &dyn Predictor,
    config: &ZoneConfig,
) -> Vec<Vec<Vec<f64>>> {
    trajs
        .par_iter()
        .enumerate()
        .map(|(k, traj)| {
            let mut session = predictor.session(k);
            let mut rows = Vec::with_capacity(traj.observations.len());
            for (t, obs) in traj.observations.iter().enumerate() {
                session.observe(obs);
                rows.push(session.predict(t as f64 * config.dt));
            }
            rows
        })
        .collect()
}

/// Calibration residuals r_k = |τ_k − μ_k(t)| for one (step, candidate)
/// cell. Trajectories whose vehicle never reaches the candidate carry no
/// ground truth and are skipped; an empty cell is an error.
pub fn nonconformity_scores(
    calib: &[HdvTrajectory],
    predictor: &dyn Predictor,
    t: usize,
    l: usize,
    config: &ZoneConfig,
) -> Result<Vec<f64>> {
    check_lengths(calib, config)?;
    let mut scores = Vec::new();
    for (k, traj) in calib.iter().enumerate() {
        let Some(tau) = traj.arrivals.get(l) else {
            continue;
        };
        let mut session = predictor.session(k);
        for obs in &traj.observations[..=t] {
            session.observe(obs);
        }
        let mu = session.predict(t as f64 * config.dt)[l];
        scores.push((tau - mu).abs());
    }
    if scores.is_empty() {
        return Err(Error::EmptyDataset(
            "no calibration trajectory reaches the candidate",
        ));
    }
    Ok(scores)
}

/// Builds the full bound table for `predictor` at the config's ε.
///
/// Every cell needs at least one contributing trajectory; the per-cell
/// calibration count is recorded alongside the bound.
pub fn build_table(
    calib: &[HdvTrajectory],
    predictor: &dyn Predictor,
    config: &ZoneConfig,
) -> Result<ConformalTable> {
    config.validate()?;
    if calib.is_empty() {
        return Err(Error::EmptyDataset("calibration set"));
    }
    check_lengths(calib, config)?;
    if predictor.num_candidates() != config.num_candidates() {
        return Err(Error::InvalidConfig(format!(
            "predictor emits {} candidates, zone has {}",
            predictor.num_candidates(),
            config.num_candidates()
        )));
    }

    let matrix = predictions_matrix(calib, predictor, config);
    let steps = config.horizon_steps + 1;
    let num_l = config.num_candidates();

    let rows: Vec<Result<(Vec<f64>, Vec<usize>)>> = (0..steps)
        .into_par_iter()
        .map(|t| {
            let mut bounds = Vec::with_capacity(num_l);
            let mut counts = Vec::with_capacity(num_l);
            for l in 0..num_l {
                let scores: Vec<f64> = calib
                    .iter()
                    .enumerate()
                    .filter_map(|(k, traj)| {
                        traj.arrivals
                            .get(l)
                            .map(|tau| (tau - matrix[k][t][l]).abs())
                    })
                    .collect();
                if scores.is_empty() {
                    return Err(Error::EmptyDataset(
                        "no calibration trajectory reaches the candidate",
                    ));
                }
                bounds.push(conformal_bound(&scores, config.epsilon));
                counts.push(scores.len());
            }
            Ok((bounds, counts))
        })
        .collect();

    let mut bounds = Vec::with_capacity(steps);
    let mut k_per_cell = Vec::with_capacity(steps);
    for row in rows {
        let (b, k) = row?;
        bounds.push(b);
        k_per_cell.push(k);
    }
    Ok(ConformalTable {
        bounds,
        epsilon: config.epsilon,
        k_per_cell,
        predictor_fingerprint: predictor.fingerprint(),
        monotonized: false,
    })
}
