//! Held-out evaluation of a calibrated table: does the conformal range
//! actually contain the true arrival as often as promised, and do the
//! residuals shrink as evidence accumulates?

use serde::{Deserialize, Serialize};

use super::{predictions_matrix, ConformalTable};
use crate::predictor::Predictor;
use crate::state::HdvTrajectory;
use crate::stats::{binomial_se, spearman};
use crate::zone::ZoneConfig;
use crate::{Error, Result};

/// Hit counter with a derived rate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RateAgg {
    pub hits: usize,
    pub total: usize,
}

impl RateAgg {
    pub fn rate(&self) -> f64 {
        if self.total == 0 {
            return f64::NAN;
        }
        self.hits as f64 / self.total as f64
    }

    fn add(&mut self, hit: bool) {
        self.hits += hit as usize;
        self.total += 1;
    }
}

/// Per-(step, candidate) tally. `crossed` counts trajectories whose
/// vehicle had already passed the candidate at that step; their score is
/// identically zero, so they can only ever hit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub hits: usize,
    pub total: usize,
    pub crossed: usize,
}

impl CellStats {
    pub fn rate(&self) -> f64 {
        if self.total == 0 {
            return f64::NAN;
        }
        self.hits as f64 / self.total as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub pooled: RateAgg,
    /// Half-width of the 95% normal-approximation interval on the pooled
    /// rate, treating triples as independent (they are not quite; the
    /// per-cell view is the honest granularity).
    pub pooled_ci95: f64,
    pub per_t: Vec<RateAgg>,
    pub per_l: Vec<RateAgg>,
    pub cells: Vec<Vec<CellStats>>,
}

/// Empirical coverage of `table` on held-out trajectories: the fraction of
/// (trajectory, step, candidate) triples whose true arrival falls inside
/// the closed interval [μ−C, μ+C]. Triples without ground truth (vehicle
/// never reaches the candidate) are excluded.
pub fn evaluate_coverage(
    test: &[HdvTrajectory],
    predictor: &dyn Predictor,
    table: &ConformalTable,
    config: &ZoneConfig,
) -> Result<CoverageReport> {
    if test.is_empty() {
        return Err(Error::EmptyDataset("coverage test set"));
    }
    if table.predictor_fingerprint != predictor.fingerprint() {
        return Err(Error::TableMismatch(format!(
            "table was calibrated for predictor {:#x}, got {:#x}",
            table.predictor_fingerprint,
            predictor.fingerprint()
        )));
    }
    let steps = config.horizon_steps + 1;
    let num_l = config.num_candidates();
    if table.num_steps() != steps || table.num_candidates() != num_l {
        return Err(Error::TableMismatch(format!(
            "table is {}x{}, zone needs {steps}x{num_l}",
            table.num_steps(),
            table.num_candidates()
        )));
    }

    let matrix = predictions_matrix(test, predictor, config);
    let mut pooled = RateAgg::default();
    let mut per_t = vec![RateAgg::default(); steps];
    let mut per_l = vec![RateAgg::default(); num_l];
    let mut cells = vec![vec![CellStats::default(); num_l]; steps];

    for (k, traj) in test.iter().enumerate() {
        for t in 0..steps {
            let now = t as f64 * config.dt;
            for l in 0..num_l {
                let Some(tau) = traj.arrivals.get(l) else {
                    continue;
                };
                let mu = matrix[k][t][l];
                let hit = (tau - mu).abs() <= table.bounds[t][l];
                pooled.add(hit);
                per_t[t].add(hit);
                per_l[l].add(hit);
                let cell = &mut cells[t][l];
                cell.hits += hit as usize;
                cell.total += 1;
                cell.crossed += (tau <= now) as usize;
            }
        }
    }

    let pooled_ci95 = 1.96 * binomial_se(pooled.rate(), pooled.total);
    Ok(CoverageReport {
        pooled,
        pooled_ci95,
        per_t,
        per_l,
        cells,
    })
}

/// Trend of the mean residual over time for one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShrinkageRow {
    pub candidate: usize,
    /// Mean |τ − μ(t)| across trajectories, indexed by step.
    pub mean_scores: Vec<f64>,
    /// Spearman correlation of the means against step index.
    pub rho: f64,
    pub p_value: f64,
}

/// Per-candidate residual trend. A predictor that actually uses its
/// accumulating observations shows a negative trend: late predictions are
/// better, and settled crossings contribute exact zeros.
pub fn shrinkage_report(
    test: &[HdvTrajectory],
    predictor: &dyn Predictor,
    config: &ZoneConfig,
) -> Result<Vec<ShrinkageRow>> {
    if test.is_empty() {
        return Err(Error::EmptyDataset("shrinkage test set"));
    }
    let matrix = predictions_matrix(test, predictor, config);
    let steps = config.horizon_steps + 1;
    let num_l = config.num_candidates();
    let mut rows = Vec::with_capacity(num_l);
    for l in 0..num_l {
        let mut means = Vec::with_capacity(steps);
        for t in 0..steps {
            let mut sum = 0.0;
            let mut n = 0usize;
            for (k, traj) in test.iter().enumerate() {
                if let Some(tau) = traj.arrivals.get(l) {
                    sum += (tau - matrix[k][t][l]).abs();
                    n += 1;
                }
            }
            if n > 0 {
                means.push(sum / n as f64);
            }
        }
        let ts: Vec<f64> = (0..means.len()).map(|t| t as f64).collect();
        let (rho, p_value) = spearman(&ts, &means);
        rows.push(ShrinkageRow {
            candidate: l,
            mean_scores: means,
            rho,
            p_value,
        });
    }
    Ok(rows)
}
