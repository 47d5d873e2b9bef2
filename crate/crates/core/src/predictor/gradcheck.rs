use super::net::NetParams;
use super::train::{dataset_loss, sequence_grads};
use crate::state::HdvTrajectory;
use crate::zone::ZoneConfig;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Flat index where the maximum occurred.
    pub argmax: usize,
    pub checked: usize,
}

/// Mean-loss gradient over a minibatch, flattened in canonical parameter
/// order. Shares its backward pass with the trainer, so checking it checks
/// training.
pub(crate) fn analytic_batch_grads(
    params: &NetParams,
    minibatch: &[HdvTrajectory],
    config: &ZoneConfig,
) -> Vec<f64> {
    let mut grads = NetParams::zeros(params.num_heads());
    let mut terms = 0usize;
    for traj in minibatch {
        let (_, n) = sequence_grads(params, traj, config, &mut grads);
        terms += n;
    }
    let scale = if terms == 0 { 0.0 } else { 1.0 / terms as f64 };
    grads.to_flat().into_iter().map(|g| g * scale).collect()
}

// Steps much above this run into saturation walls in the gate
// nonlinearities (the h^2 truncation model stops holding); much below,
// loss rounding dominates the quotient.
const FD_STEP: f64 = 1e-5;
// The difference quotient carries a few 1e-9 of loss-cancellation noise at
// this step size, so relative comparison is only meaningful for gradients
// comfortably above that; below the floor the comparison would measure
// rounding, not gradient correctness.
const DENOM_FLOOR: f64 = 3e-5;

/// Central-difference audit of the training gradient on `probes` randomly
/// chosen parameters (at least 100, at most the parameter count). Returns
/// the worst relative disagreement.
pub fn check_gradients(
    params: &NetParams,
    minibatch: &[HdvTrajectory],
    config: &ZoneConfig,
    probes: usize,
    seed: u64,
) -> GradCheckReport {
    let analytic = analytic_batch_grads(params, minibatch, config);
    let count = params.param_count();
    let wanted = probes.max(100).min(count);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let indices = rand::seq::index::sample(&mut rng, count, wanted);

    let flat = params.to_flat();
    let mut scratch = params.clone();
    let mut max_rel = 0.0;
    let mut argmax = 0;
    for idx in indices {
        let mut probe = flat.clone();
        probe[idx] = flat[idx] + FD_STEP;
        scratch.load_flat(&probe);
        let up = dataset_loss(&scratch, minibatch, config);
        probe[idx] = flat[idx] - FD_STEP;
        scratch.load_flat(&probe);
        let down = dataset_loss(&scratch, minibatch, config);
        let numeric = (up - down) / (2.0 * FD_STEP);
        let rel = (analytic[idx] - numeric).abs()
            / analytic[idx].abs().max(numeric.abs()).max(DENOM_FLOOR);
        if rel > max_rel {
            max_rel = rel;
            argmax = idx;
        }
    }
    GradCheckReport {
        max_rel_error: max_rel,
        argmax,
        checked: wanted,
    }
}
