//! Split conformal calibration of arrival-time predictions.
//!
//! For every (control step, merging candidate) cell we hold out the
//! calibration residuals |τ − μ| and take their ⌈(K+1)(1−ε)⌉-th order
//! statistic as the bound C. The resulting closed interval [μ−C, μ+C]
//! contains the true arrival with probability at least 1−ε, regardless of
//! how good the underlying predictor is; a bad predictor just pays with a
//! wide interval.

mod coverage;
mod io;
mod scores;

pub use coverage::{
    evaluate_coverage, shrinkage_report, CellStats, CoverageReport, RateAgg, ShrinkageRow,
};
pub use io::{load_table, save_table};
pub use scores::{build_table, nonconformity_scores, predictions_matrix};

/// Calibration bounds for one predictor: `bounds[t][l]` is C for control
/// step t and candidate l, `+inf` when the quantile falls beyond the
/// calibration sample. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalTable {
    /// Bound in seconds per `[step][candidate]`.
    pub bounds: Vec<Vec<f64>>,
    /// Miscoverage level the bounds were built for.
    pub epsilon: f64,
    /// Count of calibration trajectories contributing to each cell; varies
    /// because a trajectory only scores candidates it actually reaches.
    pub k_per_cell: Vec<Vec<usize>>,
    /// Fingerprint of the predictor the table calibrates.
    pub predictor_fingerprint: u64,
    /// Set when the columns were replaced by their running minima.
    pub monotonized: bool,
}

impl ConformalTable {
    pub fn num_steps(&self) -> usize {
        self.bounds.len()
    }

    pub fn num_candidates(&self) -> usize {
        self.bounds.first().map_or(0, Vec::len)
    }

    /// Bounds for all candidates at one control step.
    pub fn row(&self, t: usize) -> &[f64] {
        &self.bounds[t]
    }
}

/// 1-based order-statistic index q = ⌈(K+1)(1−ε)⌉, or `None` when the
/// quantile lies beyond the sample (q > K, bound +inf).
///
/// The product is snapped to the nearest integer before taking the
/// ceiling: (K+1)(1−ε) is often an exact integer mathematically (K=9,
/// ε=0.1 gives 9) while the float product lands a few ulps above, and a
/// naive ceiling would silently shift the quantile by one.
pub fn quantile_index(k: usize, epsilon: f64) -> Option<usize> {
    assert!(k >= 1, "quantile of an empty sample");
    assert!(
        epsilon > 0.0 && epsilon < 1.0,
        "miscoverage must lie in (0,1)"
    );
    let x = (k as f64 + 1.0) * (1.0 - epsilon);
    let snapped = x.round();
    let q = if (x - snapped).abs() <= 1e-9 * (k as f64 + 1.0) {
        snapped
    } else {
        x.ceil()
    };
    let q = (q as usize).max(1);
    (q <= k).then_some(q)
}

/// The conformal bound for one cell: q-th smallest score, +inf if the
/// quantile index exceeds the sample size.
pub fn conformal_bound(scores: &[f64], epsilon: f64) -> f64 {
    match quantile_index(scores.len(), epsilon) {
        None => f64::INFINITY,
        Some(q) => {
            let mut s = scores.to_vec();
            let (_, qth, _) = s.select_nth_unstable_by(q - 1, f64::total_cmp);
            *qth
        }
    }
}

/// Closed interval [μ−C, μ+C]; an infinite bound covers the whole line.
pub fn conformal_range(mu: f64, bound: f64) -> (f64, f64) {
    debug_assert!(bound >= 0.0);
    (mu - bound, mu + bound)
}

/// Per-candidate running minimum forward in time.
///
/// The result is non-increasing in t, which is what keeps a once-feasible
/// merge plan feasible at every later replan. The marginal per-step
/// guarantee then holds only at each minimum's originating step, so the
/// flag is recorded rather than hidden.
pub fn monotonize(table: &ConformalTable) -> ConformalTable {
    let mut out = table.clone();
    out.monotonized = true;
    for l in 0..out.num_candidates() {
        let mut run = f64::INFINITY;
        for row in &mut out.bounds {
            run = run.min(row[l]);
            row[l] = run;
        }
    }
    out
}
