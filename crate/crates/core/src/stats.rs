//! Small statistical helpers shared by the evaluation paths.

use statrs::distribution::{ContinuousCDF, StudentsT};

/// Ranks with ties replaced by the average of the tied positions.
fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).expect("rank of NaN"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        // positions i..=j (0-based) share the average 1-based rank
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Spearman rank correlation with a two-sided Student-t p-value.
///
/// Degenerate inputs (fewer than three points, or a constant series) give
/// (0, 1): no evidence of a trend either way.
pub fn spearman(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 3 {
        return (0.0, 1.0);
    }
    let rho = match pearson(&average_ranks(xs), &average_ranks(ys)) {
        Some(r) => r,
        None => return (0.0, 1.0),
    };
    // t-approximation for the null distribution; clamp keeps the map to t
    // finite when the ranks correlate perfectly.
    let r = rho.clamp(-(1.0 - 1e-12), 1.0 - 1e-12);
    let df = (n - 2) as f64;
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("valid dof");
    let p = 2.0 * dist.cdf(-t.abs());
    (rho, p.min(1.0))
}

/// Standard error of a binomial proportion p estimated from n draws.
pub fn binomial_se(p: f64, n: usize) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    (p * (1.0 - p) / n as f64).sqrt()
}
